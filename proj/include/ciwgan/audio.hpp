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

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ciwgan/errors.hpp"

namespace ciwgan {

inline constexpr int kDefaultRate = 16000;

/// Mono waveform with samples in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int rate = kDefaultRate;
  std::string source_id;
  std::optional<std::string> word;

  std::size_t size() const noexcept { return samples.size(); }
  double seconds() const { return static_cast<double>(samples.size()) / rate; }

  void validate() const {
    if (rate <= 0) throw ValidationError("AudioClip '" + source_id + "': rate must be positive");
    for (float v : samples)
      if (!(std::abs(v) <= 1.0f)) throw ValidationError("AudioClip '" + source_id + "': sample outside [-1, 1]");
  }
};

/// 64-bit FNV-1a over raw bytes.
inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

/// Content hash of the sample values (rate and ids excluded).
inline std::string content_hash(const AudioClip& clip) {
  return hex64(fnv1a(clip.samples.data(), clip.samples.size() * sizeof(float)));
}

}  // namespace ciwgan
