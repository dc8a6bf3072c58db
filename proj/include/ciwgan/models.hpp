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

// Generator, Wasserstein critic and Q-network in the WaveGAN layout:
// stride-4 kernel-25 (transposed) convolutions between a length-16 seed and
// the slice length. The Q-network is a separate copy of the critic body with
// a code-sized head.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ciwgan/audio.hpp"
#include "ciwgan/errors.hpp"
#include "ciwgan/latent.hpp"
#include "ciwgan/network.hpp"
#include "ciwgan/ops.hpp"
#include "ciwgan/rng.hpp"

namespace ciwgan {

struct ArchitectureConfig {
  std::size_t slice_len = 16384;
  std::size_t model_dim = 64;   // WaveGAN "d"; channel widths are multiples of it
  std::size_t kernel = 25;
  std::size_t stride = 4;
  std::size_t seed_len = 16;
  std::size_t phase_shuffle = 2;
  double slope = 0.2;

  static ArchitectureConfig paper_scale() { return {}; }
  static ArchitectureConfig desk_scale() {
    ArchitectureConfig a;
    a.slice_len = 4096;
    a.model_dim = 4;
    return a;
  }

  /// Number of stride-`stride` stages between seed_len and slice_len.
  std::size_t stages() const {
    if (seed_len == 0 || stride < 2) throw ValidationError("architecture: seed_len > 0 and stride >= 2 required");
    std::size_t n = 0, len = seed_len;
    while (len < slice_len) {
      len *= stride;
      ++n;
    }
    if (len != slice_len || n == 0)
      throw ValidationError("architecture: slice_len " + std::to_string(slice_len) + " is not seed_len * stride^n");
    return n;
  }

  /// Symmetric padding; transposed layers add output padding so each stage
  /// scales the length by exactly `stride`.
  ConvGeometry geometry() const {
    if (kernel < stride) throw ValidationError("architecture: kernel must be >= stride");
    ConvGeometry g;
    g.stride = stride;
    g.padding = (kernel - stride + 1) / 2;             // conv: L -> L / stride
    g.output_padding = 2 * g.padding + stride - kernel;  // transpose: L -> L * stride
    return g;
  }

  std::string describe() const {
    return "slice=" + std::to_string(slice_len) + ",d=" + std::to_string(model_dim) + ",k=" + std::to_string(kernel) +
           ",s=" + std::to_string(stride) + ",ps=" + std::to_string(phase_shuffle);
  }
};

namespace detail {

template <class Real>
void glorot_uniform(BasicTensor<Real>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.values()) v = static_cast<Real>(rng.uniform(-limit, limit));
}

inline Layer<float> make_dense(std::string name, std::size_t in, std::size_t out, Rng& rng) {
  Layer<float> l;
  l.kind = LayerKind::dense;
  l.name = std::move(name);
  l.weight = Tensor({in, out});
  l.bias = Tensor({out});
  glorot_uniform(l.weight, in, out, rng);
  return l;
}

inline Layer<float> make_conv(std::string name, LayerKind kind, std::size_t cin, std::size_t cout, std::size_t k,
                              const ConvGeometry& g, Rng& rng) {
  Layer<float> l;
  l.kind = kind;
  l.name = std::move(name);
  l.geometry = g;
  l.weight = kind == LayerKind::conv1d ? Tensor({cout, cin, k}) : Tensor({cin, cout, k});
  l.bias = Tensor({cout});
  glorot_uniform(l.weight, cin * k, cout * k, rng);
  return l;
}

inline Layer<float> make_simple(std::string name, LayerKind kind) {
  Layer<float> l;
  l.kind = kind;
  l.name = std::move(name);
  return l;
}

}  // namespace detail

/// latent [B, code+noise] -> dense -> [8d or 16d, 16] -> (relu, convT)* -> tanh -> [B, 1, slice_len].
inline Network<float> make_generator(const LatentSpec& spec, const ArchitectureConfig& arch, Rng& rng) {
  spec.validate();
  const std::size_t n = arch.stages();
  const std::size_t c0 = arch.model_dim << (n - 1);
  std::vector<Layer<float>> layers;
  layers.push_back(detail::make_dense("project", spec.latent_dim(), c0 * arch.seed_len, rng));
  auto reshape = detail::make_simple("seed", LayerKind::reshape);
  reshape.target = {c0, arch.seed_len};
  layers.push_back(std::move(reshape));
  layers.push_back(detail::make_simple("project_relu", LayerKind::relu));
  std::size_t cin = c0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool last = i + 1 == n;
    const std::size_t cout = last ? 1 : cin / 2;
    layers.push_back(detail::make_conv("upconv" + std::to_string(i), LayerKind::conv1d_transpose, cin, cout, arch.kernel,
                                       arch.geometry(), rng));
    layers.push_back(detail::make_simple((last ? "out_tanh" : "upconv" + std::to_string(i) + "_relu"),
                                         last ? LayerKind::tanh : LayerKind::relu));
    cin = cout;
  }
  return Network<float>("generator", {spec.latent_dim()}, std::move(layers));
}

/// [B, 1, slice_len] -> (conv, leaky relu, phase shuffle)* -> flatten -> dense(head_width).
inline Network<float> make_critic_body(std::string name, const ArchitectureConfig& arch, std::size_t head_width, Rng& rng) {
  const std::size_t n = arch.stages();
  std::vector<Layer<float>> layers;
  std::size_t cin = 1, cout = arch.model_dim;
  for (std::size_t i = 0; i < n; ++i) {
    layers.push_back(detail::make_conv("conv" + std::to_string(i), LayerKind::conv1d, cin, cout, arch.kernel,
                                       arch.geometry(), rng));
    auto act = detail::make_simple("conv" + std::to_string(i) + "_lrelu", LayerKind::leaky_relu);
    act.slope = arch.slope;
    layers.push_back(std::move(act));
    if (i + 1 < n && arch.phase_shuffle > 0) {
      auto ps = detail::make_simple("conv" + std::to_string(i) + "_shuffle", LayerKind::phase_shuffle);
      ps.shuffle = arch.phase_shuffle;
      layers.push_back(std::move(ps));
    }
    cin = cout;
    cout *= 2;
  }
  auto flat = detail::make_simple("flatten", LayerKind::reshape);
  flat.target = {cin * arch.seed_len};
  layers.push_back(std::move(flat));
  layers.push_back(detail::make_dense("head", cin * arch.seed_len, head_width, rng));
  return Network<float>(std::move(name), {1, arch.slice_len}, std::move(layers));
}

inline Network<float> make_discriminator(const ArchitectureConfig& arch, Rng& rng) {
  return make_critic_body("discriminator", arch, 1, rng);
}

inline Network<float> make_q_network(const LatentSpec& spec, const ArchitectureConfig& arch, Rng& rng) {
  return make_critic_body("qnetwork", arch, spec.code_dim(), rng);
}

/// Critic with one dense layer: score = <w, clip> + bias.
template <class Real = float>
Network<Real> make_linear_critic(std::span<const Real> weights, Real bias = 0) {
  Layer<Real> flat;
  flat.kind = LayerKind::reshape;
  flat.name = "flatten";
  flat.target = {weights.size()};
  Layer<Real> head;
  head.kind = LayerKind::dense;
  head.name = "head";
  head.weight = BasicTensor<Real>({weights.size(), 1}, std::vector<Real>(weights.begin(), weights.end()));
  head.bias = BasicTensor<Real>({1}, std::vector<Real>{bias});
  return Network<Real>("discriminator", {1, weights.size()}, {flat, head});
}

/// Clip length a generator produces.
template <class Real>
std::size_t generator_output_length(const Network<Real>& G) {
  return G.output_shape().back();
}

/// G(z, c) for a single latent vector.
inline AudioClip generate(const Network<float>& G, const LatentVector& latent, int rate = kDefaultRate) {
  const auto v = latent.concat();
  if (v.size() != G.input_shape().at(0)) throw ShapeError("generate", "latent_dim", G.input_shape().at(0), v.size());
  const auto out = G.forward(Tensor({1, v.size()}, v));
  out.check_finite("generate");
  return AudioClip{out.storage(), rate, {}, {}};
}

/// Batched generation: [B, latent_dim] -> [B, 1, slice_len].
inline Tensor generate_batch(const Network<float>& G, const Tensor& latents) { return G.forward(latents); }

inline Tensor clips_to_batch(std::span<const AudioClip> clips) {
  if (clips.empty()) throw ValidationError("clips_to_batch: no clips");
  const std::size_t L = clips.front().size();
  Tensor t({clips.size(), 1, L});
  for (std::size_t b = 0; b < clips.size(); ++b) {
    if (clips[b].size() != L) throw ShapeError("clips_to_batch", "length", L, clips[b].size());
    std::copy(clips[b].samples.begin(), clips[b].samples.end(), t.data() + b * L);
  }
  return t;
}

inline void check_clip_length(const char* op, const Network<float>& net, const AudioClip& clip) {
  if (clip.size() != net.input_shape().back()) throw ShapeError(op, "clip length", net.input_shape().back(), clip.size());
}

/// Unbounded critic score.
inline double discriminate(const Network<float>& D, const AudioClip& clip) {
  check_clip_length("discriminate", D, clip);
  return D.forward(Tensor({1, 1, clip.size()}, clip.samples))[0];
}

/// Converts head logits to a posterior: softmax for one-hot codes, independent
/// sigmoids for binary codes.
template <class Real>
BasicTensor<Real> code_posterior(CodeKind kind, const BasicTensor<Real>& logits) {
  return kind == CodeKind::one_hot ? softmax(logits) : sigmoid(logits);
}

inline std::vector<double> q_forward(const Network<float>& Q, CodeKind kind, const AudioClip& clip) {
  check_clip_length("q_forward", Q, clip);
  const auto post = code_posterior(kind, Q.forward(Tensor({1, 1, clip.size()}, clip.samples)));
  return {post.values().begin(), post.values().end()};
}

}  // namespace ciwgan
