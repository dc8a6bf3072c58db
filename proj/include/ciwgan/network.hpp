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

// Sequential network over the primitives in ops.hpp, with an explicit
// backward pass and the second-order pass needed by the gradient penalty.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ciwgan/errors.hpp"
#include "ciwgan/ops.hpp"
#include "ciwgan/rng.hpp"
#include "ciwgan/tensor.hpp"

namespace ciwgan {

enum class LayerKind { dense, conv1d, conv1d_transpose, relu, leaky_relu, tanh, reshape, phase_shuffle };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::conv1d_transpose: return "conv1d_transpose";
    case LayerKind::relu: return "relu";
    case LayerKind::leaky_relu: return "leaky_relu";
    case LayerKind::tanh: return "tanh";
    case LayerKind::reshape: return "reshape";
    case LayerKind::phase_shuffle: return "phase_shuffle";
  }
  return "?";
}

template <class Real>
struct Layer {
  LayerKind kind = LayerKind::relu;
  std::string name;
  ConvGeometry geometry;      // conv layers
  double slope = 0.2;         // leaky_relu
  std::size_t shuffle = 0;    // phase_shuffle radius
  Shape target;               // reshape: per-example shape
  BasicTensor<Real> weight;   // dense [F,G]; conv1d [Cout,Cin,K]; conv1d_transpose [Cin,Cout,K]
  BasicTensor<Real> bias;

  bool has_params() const {
    return kind == LayerKind::dense || kind == LayerKind::conv1d || kind == LayerKind::conv1d_transpose;
  }

  /// Geometry-only description, used in architecture fingerprints.
  std::string describe() const {
    std::string s = to_string(kind);
    switch (kind) {
      case LayerKind::dense:
        s += "(" + std::to_string(weight.dim(0)) + "->" + std::to_string(weight.dim(1)) + ")";
        break;
      case LayerKind::conv1d:
      case LayerKind::conv1d_transpose: {
        const bool t = kind == LayerKind::conv1d_transpose;
        s += "(" + std::to_string(weight.dim(t ? 0 : 1)) + "->" + std::to_string(weight.dim(t ? 1 : 0)) +
             ",k" + std::to_string(weight.dim(2)) + ",s" + std::to_string(geometry.stride) + ",p" +
             std::to_string(geometry.padding) + ",op" + std::to_string(geometry.output_padding) + ")";
        break;
      }
      case LayerKind::leaky_relu: s += "(" + std::to_string(slope) + ")"; break;
      case LayerKind::reshape: s += shape_string(target); break;
      case LayerKind::phase_shuffle: s += "(" + std::to_string(shuffle) + ")"; break;
      default: break;
    }
    return s;
  }

  template <class To>
  Layer<To> cast() const {
    Layer<To> out;
    out.kind = kind;
    out.name = name;
    out.geometry = geometry;
    out.slope = slope;
    out.shuffle = shuffle;
    out.target = target;
    out.weight = weight.template cast<To>();
    out.bias = bias.template cast<To>();
    return out;
  }
};

/// Per-call record of a forward pass: the input to every layer plus the
/// phase-shuffle offsets that were drawn.
template <class Real>
struct ForwardTrace {
  std::vector<BasicTensor<Real>> inputs;  // inputs[l] feeds layer l; back() is the network output
  std::vector<std::vector<int>> shifts;   // per layer (empty for non-shuffle layers)
};

template <class Real>
class Network {
 public:
  Network() = default;
  Network(std::string name, Shape input_shape, std::vector<Layer<Real>> layers)
      : name_(std::move(name)), input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    output_shape_ = infer_shapes();
  }

  const std::string& name() const noexcept { return name_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const noexcept { return output_shape_; }
  const std::vector<Layer<Real>>& layers() const noexcept { return layers_; }
  std::vector<Layer<Real>>& layers() noexcept { return layers_; }

  /// Layer-by-layer geometry, one entry per layer.
  std::vector<std::string> fingerprint_parts() const {
    std::vector<std::string> parts;
    for (const auto& l : layers_) parts.push_back(l.describe());
    return parts;
  }
  std::string fingerprint() const {
    std::string s = name_ + "<" + shape_string(input_shape_) + ">";
    for (const auto& p : fingerprint_parts()) s += "|" + p;
    return s;
  }

  /// All trainable tensors in a fixed order (weight then bias per layer).
  std::vector<BasicTensor<Real>*> params() {
    std::vector<BasicTensor<Real>*> out;
    for (auto& l : layers_)
      if (l.has_params()) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
      }
    return out;
  }
  std::vector<const BasicTensor<Real>*> params() const {
    std::vector<const BasicTensor<Real>*> out;
    for (const auto& l : layers_)
      if (l.has_params()) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
      }
    return out;
  }
  /// Names matching params(), e.g. "conv2.weight".
  std::vector<std::string> param_names() const {
    std::vector<std::string> out;
    for (const auto& l : layers_)
      if (l.has_params()) {
        out.push_back(l.name + ".weight");
        out.push_back(l.name + ".bias");
      }
    return out;
  }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : params()) n += p->size();
    return n;
  }
  void zero_grad() {
    for (auto* p : params()) {
      p->ensure_grad();
      p->zero_grad();
    }
  }

  /// Runs the network on a batch [B, input_shape...]. Phase shuffle layers
  /// draw offsets from `shuffle_rng` when given and are the identity
  /// otherwise (evaluation mode).
  BasicTensor<Real> forward(const BasicTensor<Real>& x, ForwardTrace<Real>* trace = nullptr,
                            Rng* shuffle_rng = nullptr) const {
    check_input(x);
    if (trace) {
      trace->inputs.clear();
      trace->shifts.assign(layers_.size(), {});
    }
    BasicTensor<Real> a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      std::vector<int> shifts;
      if (layer.kind == LayerKind::phase_shuffle) {
        shifts = shuffle_rng ? draw_phase_shifts(a.dim(0), layer.shuffle, *shuffle_rng) : std::vector<int>(a.dim(0), 0);
      }
      BasicTensor<Real> next = apply(layer, a, shifts, /*with_bias=*/true);
      if (trace) {
        trace->inputs.push_back(std::move(a));
        trace->shifts[l] = std::move(shifts);
      }
      a = std::move(next);
    }
    if (trace) trace->inputs.push_back(a);
    return a;
  }

  /// Reverse pass. Returns the gradient with respect to the network input.
  /// Parameter gradients are accumulated when `param_grads` is set; each
  /// layer's incoming gradient is stored in `layer_grads` when non-null
  /// (layer_grads[l] = dOut/d inputs[l], layer_grads.back() = grad_out).
  BasicTensor<Real> backward(const ForwardTrace<Real>& trace, const BasicTensor<Real>& grad_out, bool param_grads,
                             std::vector<BasicTensor<Real>>* layer_grads = nullptr) {
    if (trace.inputs.size() != layers_.size() + 1) throw ShapeError("backward", "trace does not match network");
    if (grad_out.shape() != trace.inputs.back().shape())
      throw ShapeError("backward", "grad_out " + shape_string(grad_out.shape()));
    if (layer_grads) layer_grads->assign(layers_.size() + 1, {});
    BasicTensor<Real> g = grad_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      auto& layer = layers_[l];
      const auto& in = trace.inputs[l];
      BasicTensor<Real> gin;
      Real* gw = nullptr;
      Real* gb = nullptr;
      if (param_grads && layer.has_params()) {
        gw = layer.weight.ensure_grad().data();
        gb = layer.bias.ensure_grad().data();
      }
      switch (layer.kind) {
        case LayerKind::dense: dense_backward(in, layer.weight, g, &gin, gw, gb); break;
        case LayerKind::conv1d: conv1d_backward(in, layer.weight, g, layer.geometry, &gin, gw, gb); break;
        case LayerKind::conv1d_transpose:
          conv1d_transpose_backward(in, layer.weight, g, layer.geometry, &gin, gw, gb);
          break;
        case LayerKind::relu: gin = relu_backward(in, g); break;
        case LayerKind::leaky_relu: gin = leaky_relu_backward(in, g, static_cast<Real>(layer.slope)); break;
        case LayerKind::tanh: gin = tanh_backward(trace.inputs[l + 1], g); break;
        case LayerKind::reshape:
          gin = g;
          gin.reshape(in.shape());
          break;
        case LayerKind::phase_shuffle: gin = apply_phase_shift_adjoint(g, std::span<const int>(trace.shifts[l])); break;
      }
      if (layer_grads) (*layer_grads)[l + 1] = std::move(g);
      g = std::move(gin);
    }
    if (layer_grads) (*layer_grads)[0] = g;
    return g;
  }

  /// Second-order pass for penalties on the input gradient.
  ///
  /// Given a forward trace, the per-layer gradients from backward(), and
  /// `input_adjoint` = dP/d(grad wrt input), accumulates dP/dparams into the
  /// parameter gradients. Curvature of the activations is ignored, which is
  /// exact almost everywhere for piecewise-linear networks (the critic).
  void accumulate_input_gradient_adjoint(const ForwardTrace<Real>& trace,
                                         const std::vector<BasicTensor<Real>>& layer_grads,
                                         const BasicTensor<Real>& input_adjoint) {
    BasicTensor<Real> r = input_adjoint;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& layer = layers_[l];
      const auto& gout = layer_grads[l + 1];
      switch (layer.kind) {
        case LayerKind::dense:
          dense_backward(r, layer.weight, gout, nullptr, layer.weight.ensure_grad().data(), nullptr);
          break;
        case LayerKind::conv1d:
          conv1d_backward(r, layer.weight, gout, layer.geometry, nullptr, layer.weight.ensure_grad().data(), nullptr);
          break;
        case LayerKind::conv1d_transpose:
          conv1d_transpose_backward(r, layer.weight, gout, layer.geometry, nullptr, layer.weight.ensure_grad().data(),
                                    nullptr);
          break;
        default: break;
      }
      if (l + 1 < layers_.size()) r = tangent(layer, trace.inputs[l], trace.inputs[l + 1], r, trace.shifts[l]);
    }
  }

  template <class To>
  Network<To> cast() const {
    std::vector<Layer<To>> layers;
    for (const auto& l : layers_) layers.push_back(l.template cast<To>());
    return Network<To>(name_, input_shape_, std::move(layers));
  }

 private:
  void check_input(const BasicTensor<Real>& x) const {
    if (x.rank() != input_shape_.size() + 1) throw ShapeError(name_ + " input", "rank", input_shape_.size() + 1, x.rank());
    for (std::size_t i = 0; i < input_shape_.size(); ++i)
      if (x.dim(i + 1) != input_shape_[i])
        throw ShapeError(name_ + " input", "axis " + std::to_string(i + 1), input_shape_[i], x.dim(i + 1));
  }

  // Forward of one layer. `with_bias` = false gives the linear part only.
  static BasicTensor<Real> apply(const Layer<Real>& layer, const BasicTensor<Real>& a, const std::vector<int>& shifts,
                                 bool with_bias) {
    const std::span<const Real> bias = with_bias ? layer.bias.values() : std::span<const Real>{};
    switch (layer.kind) {
      case LayerKind::dense: return dense(a, layer.weight, bias);
      case LayerKind::conv1d: return conv1d(a, layer.weight, layer.geometry, bias);
      case LayerKind::conv1d_transpose: return conv1d_transpose(a, layer.weight, layer.geometry, bias);
      case LayerKind::relu: return relu(a);
      case LayerKind::leaky_relu: return leaky_relu(a, static_cast<Real>(layer.slope));
      case LayerKind::tanh: return ciwgan::tanh(a);
      case LayerKind::reshape: {
        BasicTensor<Real> out = a;
        Shape s{a.dim(0)};
        s.insert(s.end(), layer.target.begin(), layer.target.end());
        out.reshape(std::move(s));
        return out;
      }
      case LayerKind::phase_shuffle: return apply_phase_shift(a, std::span<const int>(shifts));
    }
    throw ValidationError("unknown layer kind");
  }

  // Jacobian-vector product of one layer at the traced point.
  static BasicTensor<Real> tangent(const Layer<Real>& layer, const BasicTensor<Real>& in, const BasicTensor<Real>& out,
                                   const BasicTensor<Real>& r, const std::vector<int>& shifts) {
    switch (layer.kind) {
      case LayerKind::relu: return relu_backward(in, r);
      case LayerKind::leaky_relu: return leaky_relu_backward(in, r, static_cast<Real>(layer.slope));
      case LayerKind::tanh: return tanh_backward(out, r);
      default: return apply(layer, r, shifts, /*with_bias=*/false);
    }
  }

  Shape infer_shapes() const {
    Shape s = input_shape_;
    for (const auto& l : layers_) {
      const std::string where = name_ + "." + l.name;
      switch (l.kind) {
        case LayerKind::dense:
          if (s.size() != 1) throw ShapeError(where, "dense expects a flat input, got " + shape_string(s));
          if (l.weight.rank() != 2 || l.weight.dim(0) != s[0]) throw ShapeError(where, "features", s[0], l.weight.dim(0));
          if (l.bias.size() != l.weight.dim(1)) throw ShapeError(where, "bias", l.weight.dim(1), l.bias.size());
          s = {l.weight.dim(1)};
          break;
        case LayerKind::conv1d:
          if (s.size() != 2) throw ShapeError(where, "conv1d expects [C,L], got " + shape_string(s));
          if (l.weight.rank() != 3 || l.weight.dim(1) != s[0]) throw ShapeError(where, "in_channels", s[0], l.weight.dim(1));
          if (l.bias.size() != l.weight.dim(0)) throw ShapeError(where, "bias", l.weight.dim(0), l.bias.size());
          s = {l.weight.dim(0), conv1d_output_length(s[1], l.weight.dim(2), l.geometry)};
          break;
        case LayerKind::conv1d_transpose:
          if (s.size() != 2) throw ShapeError(where, "conv1d_transpose expects [C,L], got " + shape_string(s));
          if (l.weight.rank() != 3 || l.weight.dim(0) != s[0]) throw ShapeError(where, "in_channels", s[0], l.weight.dim(0));
          if (l.bias.size() != l.weight.dim(1)) throw ShapeError(where, "bias", l.weight.dim(1), l.bias.size());
          s = {l.weight.dim(1), conv1d_transpose_output_length(s[1], l.weight.dim(2), l.geometry)};
          break;
        case LayerKind::reshape:
          if (shape_size(l.target) != shape_size(s)) throw ShapeError(where, "reshape size", shape_size(s), shape_size(l.target));
          s = l.target;
          break;
        case LayerKind::phase_shuffle:
          if (s.size() != 2 || l.shuffle >= s[1]) throw ShapeError(where, "phase shuffle radius must be < length");
          break;
        default: break;
      }
    }
    return s;
  }

  std::string name_;
  Shape input_shape_;
  Shape output_shape_;
  std::vector<Layer<Real>> layers_;
};

}  // namespace ciwgan
