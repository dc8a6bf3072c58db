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

// RIFF/WAVE PCM16 mono reader and writer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ciwgan/audio.hpp"
#include "ciwgan/errors.hpp"

namespace ciwgan {

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

/// Float sample to PCM16 with rounding and saturation.
inline std::int16_t to_pcm16(float v) {
  const long q = std::lround(static_cast<double>(v) * 32768.0);
  return static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
}

inline float from_pcm16(std::int16_t v) { return static_cast<float>(v) / 32768.0f; }

/// Decodes a PCM16 mono WAV image held in memory.
inline AudioClip decode_wav(const std::vector<unsigned char>& bytes, const std::string& name = "<memory>") {
  auto fail = [&](const std::string& why) { return IoError("wav '" + name + "': " + why); };
  if (bytes.size() < 12 || std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE")
    throw fail("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + 4));
    std::size_t size = detail::read_u32(&bytes[pos + 4]);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      if (id != "data") throw fail("truncated '" + id + "' chunk");
      size = bytes.size() - body;  // tolerate writers that leave the data size unpatched
    }
    if (id == "fmt ") {
      if (size < 16) throw fail("fmt chunk too short");
      format = detail::read_u16(&bytes[body]);
      channels = detail::read_u16(&bytes[body + 2]);
      rate = detail::read_u32(&bytes[body + 4]);
      bits = detail::read_u16(&bytes[body + 14]);
      if (format == 0xFFFE && size >= 26) format = detail::read_u16(&bytes[body + 24]);  // WAVE_FORMAT_EXTENSIBLE
      have_fmt = true;
    } else if (id == "data") {
      data = &bytes[body];
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (format != 1) throw fail("codec " + std::to_string(format) + " is not PCM");
  if (channels != 1) throw fail(std::to_string(channels) + " channels; mono required");
  if (bits != 16) throw fail(std::to_string(bits) + "-bit samples; 16-bit required");
  if (rate == 0) throw fail("zero sample rate");
  if (!data) throw fail("missing data chunk");

  AudioClip clip;
  clip.rate = static_cast<int>(rate);
  clip.source_id = name;
  clip.samples.resize(data_size / 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    clip.samples[i] = from_pcm16(static_cast<std::int16_t>(detail::read_u16(data + 2 * i)));
  return clip;
}

/// Encodes a clip as a 44-byte-header PCM16 mono WAV image.
inline std::string encode_wav(const AudioClip& clip) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(clip.rate));
  detail::put_u32(out, static_cast<std::uint32_t>(clip.rate) * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out += "data";
  detail::put_u32(out, data_bytes);
  for (float v : clip.samples) detail::put_u16(out, static_cast<std::uint16_t>(to_pcm16(v)));
  return out;
}

inline AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

inline void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  if (clip.rate <= 0) throw ValidationError("write_wav: rate must be positive");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  const auto bytes = encode_wav(clip);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace ciwgan
