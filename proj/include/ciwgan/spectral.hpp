// Copyright 2026 The ciwgan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Short-time band energy measurements used as acoustic proxies.

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ciwgan/audio.hpp"
#include "ciwgan/errors.hpp"

namespace ciwgan {

struct FrameSpec {
  std::size_t window = 256;  // samples per frame (Hann)
  std::size_t hop = 128;
};

struct BandFrames {
  std::vector<double> band;   // energy inside [lo, hi] per frame
  std::vector<double> total;  // energy over all positive frequencies per frame
};

/// Hann-windowed power spectra summed inside and outside the band. The last
/// frame is zero-padded when the clip length is not a multiple of the hop.
inline BandFrames band_energies(const AudioClip& clip, double lo_hz, double hi_hz, const FrameSpec& fs = {}) {
  if (clip.samples.empty()) throw ValidationError("band energy: empty clip");
  if (clip.rate <= 0) throw ValidationError("band energy: rate must be positive");
  if (!(lo_hz >= 0 && lo_hz < hi_hz && hi_hz <= clip.rate / 2.0))
    throw ValidationError("band energy: need 0 <= lo < hi <= rate/2");
  if (fs.window < 2 || fs.hop == 0) throw ValidationError("band energy: window >= 2 and hop >= 1 required");

  const std::size_t n = clip.size(), W = fs.window;
  const std::size_t frames = n <= W ? 1 : (n - W + fs.hop - 1) / fs.hop + 1;
  std::vector<float> hann(W);
  for (std::size_t i = 0; i < W; ++i)
    hann[i] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(W)));

  Eigen::FFT<float> fft;
  std::vector<float> buf(W);
  std::vector<std::complex<float>> spec;
  BandFrames out;
  out.band.resize(frames);
  out.total.resize(frames);
  const double bin_hz = static_cast<double>(clip.rate) / static_cast<double>(W);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * fs.hop;
    for (std::size_t i = 0; i < W; ++i) buf[i] = start + i < n ? clip.samples[start + i] * hann[i] : 0.0f;
    fft.fwd(spec, buf);
    double band = 0, total = 0;
    for (std::size_t k = 1; k <= W / 2; ++k) {
      const double p = std::norm(spec[k]);
      total += p;
      const double hz = static_cast<double>(k) * bin_hz;
      if (hz >= lo_hz && hz <= hi_hz) band += p;
    }
    out.band[f] = band;
    out.total[f] = total;
  }
  return out;
}

/// Per-frame share of energy in [lo, hi]. Silent frames have ratio 0.
inline std::vector<double> band_energy_ratio(const AudioClip& clip, double lo_hz, double hi_hz, const FrameSpec& fs = {}) {
  const auto e = band_energies(clip, lo_hz, hi_hz, fs);
  std::vector<double> r(e.band.size(), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i)
    if (e.total[i] > 0) r[i] = std::clamp(e.band[i] / e.total[i], 0.0, 1.0);
  return r;
}

struct OnsetSpec {
  double lo_hz = 4000, hi_hz = 8000;
  double silence_fraction = 0.01;  // frames below this share of the loudest frame are silent
  double onset_fraction = 0.25;    // leading share of the non-silent region
  FrameSpec frames;
};

/// Energy-weighted band ratio over the first `onset_fraction` of the frames
/// between the first and last non-silent frame. 0 for a silent clip.
inline double onset_band_ratio(const AudioClip& clip, const OnsetSpec& spec = {}) {
  const auto e = band_energies(clip, spec.lo_hz, spec.hi_hz, spec.frames);
  const double peak = *std::max_element(e.total.begin(), e.total.end());
  if (!(peak > 0)) return 0.0;
  std::size_t first = e.total.size(), last = 0;
  for (std::size_t i = 0; i < e.total.size(); ++i)
    if (e.total[i] >= spec.silence_fraction * peak) {
      first = std::min(first, i);
      last = i;
    }
  const std::size_t region = last - first + 1;
  const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(spec.onset_fraction * static_cast<double>(region))));
  double band = 0, total = 0;
  for (std::size_t i = first; i < first + take; ++i) {
    band += e.band[i];
    total += e.total[i];
  }
  return total > 0 ? band / total : 0.0;
}

}  // namespace ciwgan
