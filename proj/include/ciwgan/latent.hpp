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

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ciwgan/errors.hpp"
#include "ciwgan/rng.hpp"
#include "ciwgan/tensor.hpp"

namespace ciwgan {

enum class CodeKind { one_hot, binary };

inline std::string to_string(CodeKind k) { return k == CodeKind::one_hot ? "one_hot" : "binary"; }

inline CodeKind parse_code_kind(const std::string& s) {
  if (s == "one_hot" || s == "ciwgan") return CodeKind::one_hot;
  if (s == "binary" || s == "fiwgan") return CodeKind::binary;
  throw ValidationError("code kind must be 'one_hot' or 'binary', got '" + s + "'");
}

/// Latent space layout: a code block c (one-hot over k classes, or n
/// feature bits) followed by uniform noise z.
struct LatentSpec {
  CodeKind kind = CodeKind::one_hot;
  std::size_t code_size = 8;   // k for one_hot, n for binary
  std::size_t noise_dim = 90;
  double train_scale = 1.0;
  double marginal_scale = 3.0;

  static LatentSpec one_hot(std::size_t k, std::size_t noise_dim = 90) {
    LatentSpec s;
    s.kind = CodeKind::one_hot;
    s.code_size = k;
    s.noise_dim = noise_dim;
    s.validate();
    return s;
  }
  static LatentSpec binary(std::size_t n, std::size_t noise_dim = 90) {
    LatentSpec s;
    s.kind = CodeKind::binary;
    s.code_size = n;
    s.noise_dim = noise_dim;
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == CodeKind::one_hot && code_size < 2) throw ValidationError("one_hot code needs k >= 2");
    if (kind == CodeKind::binary && code_size < 1) throw ValidationError("binary code needs n >= 1");
    if (kind == CodeKind::binary && code_size > 30) throw ValidationError("binary code supports at most 30 bits");
    if (noise_dim == 0) throw ValidationError("noise_dim must be positive");
    if (!(train_scale > 0)) throw ValidationError("train_scale must be positive");
  }

  std::size_t code_dim() const noexcept { return code_size; }
  std::size_t latent_dim() const noexcept { return code_size + noise_dim; }
  /// Number of distinct hard codes: k, or 2^n.
  std::size_t num_codes() const noexcept {
    return kind == CodeKind::one_hot ? code_size : (std::size_t{1} << code_size);
  }
  /// Recorded in fingerprints; the code block comes first.
  std::string layout() const {
    return "latent=[code:" + to_string(kind) + "(" + std::to_string(code_size) + ")|noise:" + std::to_string(noise_dim) + "]";
  }
};

/// A hard code. For binary codes the index packs bits with phi_1 as the most
/// significant bit, so the bit string reads phi_1 phi_2 ... phi_n.
struct HardCode {
  CodeKind kind = CodeKind::one_hot;
  std::size_t width = 0;   // k or n
  std::size_t index = 0;

  bool bit(std::size_t i) const { return (index >> (width - 1 - i)) & 1u; }

  std::string to_string() const {
    if (kind == CodeKind::one_hot) return std::to_string(index);
    std::string s(width, '0');
    for (std::size_t i = 0; i < width; ++i) s[i] = bit(i) ? '1' : '0';
    return s;
  }

  friend bool operator==(const HardCode&, const HardCode&) = default;
  friend auto operator<=>(const HardCode& a, const HardCode& b) { return a.index <=> b.index; }
};

inline HardCode parse_hard_code(const LatentSpec& spec, const std::string& s) {
  HardCode c{spec.kind, spec.code_size, 0};
  if (spec.kind == CodeKind::one_hot) {
    std::size_t pos = 0;
    c.index = std::stoul(s, &pos);
    if (pos != s.size() || c.index >= spec.code_size) throw ValidationError("bad class code '" + s + "'");
  } else {
    if (s.size() != spec.code_size) throw ValidationError("bit code '" + s + "' has wrong width");
    for (char ch : s) {
      if (ch != '0' && ch != '1') throw ValidationError("bit code '" + s + "' is not binary");
      c.index = (c.index << 1) | static_cast<std::size_t>(ch == '1');
    }
  }
  return c;
}

inline std::vector<HardCode> enumerate_codes(const LatentSpec& spec) {
  std::vector<HardCode> out;
  for (std::size_t i = 0; i < spec.num_codes(); ++i) out.push_back({spec.kind, spec.code_size, i});
  return out;
}

/// Code block for a hard code with active entries at `scale`.
inline std::vector<float> code_values(const HardCode& code, double scale) {
  std::vector<float> c(code.width, 0.0f);
  if (code.kind == CodeKind::one_hot) {
    c.at(code.index) = static_cast<float>(scale);
  } else {
    for (std::size_t i = 0; i < code.width; ++i) c[i] = code.bit(i) ? static_cast<float>(scale) : 0.0f;
  }
  return c;
}

struct LatentVector {
  std::vector<float> z;
  std::vector<float> c;

  /// Network input order: code block first, then noise.
  std::vector<float> concat() const {
    std::vector<float> v = c;
    v.insert(v.end(), z.begin(), z.end());
    return v;
  }
};

inline std::vector<float> sample_noise(const LatentSpec& spec, Rng& rng) {
  std::vector<float> z(spec.noise_dim);
  for (auto& v : z) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return z;
}

inline HardCode sample_code(const LatentSpec& spec, Rng& rng) {
  HardCode code{spec.kind, spec.code_size, 0};
  if (spec.kind == CodeKind::one_hot) {
    code.index = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(spec.code_size) - 1));
  } else {
    for (std::size_t i = 0; i < spec.code_size; ++i) code.index = (code.index << 1) | static_cast<std::size_t>(rng.bernoulli());
  }
  return code;
}

/// z ~ U[-1,1]^noise_dim; one-hot class uniform over k or i.i.d. fair bits,
/// scaled by train_scale.
inline LatentVector sample_latent(const LatentSpec& spec, Rng& rng, HardCode* code_out = nullptr) {
  spec.validate();
  const HardCode code = sample_code(spec, rng);
  LatentVector lv{sample_noise(spec, rng), code_values(code, spec.train_scale)};
  if (code_out) *code_out = code;
  return lv;
}

/// Stacks latent vectors into a [B, latent_dim] network input.
inline Tensor latent_batch(const std::vector<LatentVector>& latents) {
  if (latents.empty()) throw ValidationError("latent_batch: empty batch");
  const std::size_t d = latents.front().c.size() + latents.front().z.size();
  Tensor t({latents.size(), d});
  for (std::size_t b = 0; b < latents.size(); ++b) {
    auto v = latents[b].concat();
    if (v.size() != d) throw ShapeError("latent_batch", "latent_dim", d, v.size());
    std::copy(v.begin(), v.end(), t.data() + b * d);
  }
  return t;
}

/// Argmax class for one-hot posteriors; per-bit threshold for binary
/// posteriors, with probability exactly 0.5 decoded as 1.
inline HardCode decode_hard(CodeKind kind, std::span<const double> posterior) {
  if (posterior.empty()) throw ValidationError("decode_hard: empty posterior");
  HardCode code{kind, posterior.size(), 0};
  if (kind == CodeKind::one_hot) {
    code.index = static_cast<std::size_t>(std::max_element(posterior.begin(), posterior.end()) - posterior.begin());
  } else {
    for (double p : posterior) code.index = (code.index << 1) | static_cast<std::size_t>(p >= 0.5);
  }
  return code;
}

}  // namespace ciwgan
