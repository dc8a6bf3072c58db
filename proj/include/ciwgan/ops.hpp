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

// Differentiable primitives. Each forward has a hand-written backward; the
// convolutions lower to GEMM through im2col with the batch folded into the
// column dimension.

#include <Eigen/Core>
#include <cmath>
#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <type_traits>
#include <vector>

#include "ciwgan/errors.hpp"
#include "ciwgan/rng.hpp"
#include "ciwgan/tensor.hpp"

namespace ciwgan {

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
  /// Extra samples appended to a transposed convolution's output so that
  /// odd kernels can upsample by exactly `stride`. Must be < stride.
  std::size_t output_padding = 0;

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

inline std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const ConvGeometry& g) {
  if (g.stride == 0) throw ShapeError("conv1d", "stride must be positive");
  if (kernel == 0 || kernel > length + 2 * g.padding)
    throw ShapeError("conv1d", "kernel", length + 2 * g.padding, kernel);
  return (length + 2 * g.padding - kernel) / g.stride + 1;
}

inline std::size_t conv1d_transpose_output_length(std::size_t length, std::size_t kernel, const ConvGeometry& g) {
  if (g.stride == 0) throw ShapeError("conv1d_transpose", "stride must be positive");
  if (g.output_padding >= g.stride)
    throw ShapeError("conv1d_transpose", "output_padding must be smaller than stride");
  if (length == 0) throw ShapeError("conv1d_transpose", "length", 1, 0);
  const std::size_t full = (length - 1) * g.stride + kernel + g.output_padding;
  if (full <= 2 * g.padding) throw ShapeError("conv1d_transpose", "padding consumes the whole output");
  return full - 2 * g.padding;
}

namespace detail {

template <class Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MapMat = Eigen::Map<RowMat<Real>>;
template <class Real>
using ConstMapMat = Eigen::Map<const RowMat<Real>>;

// Output positions t in [lo, hi) read x[t*stride + k - padding] inside [0, length).
inline void valid_range(std::size_t k, std::size_t length, const ConvGeometry& g, std::size_t out_len, std::size_t& lo,
                        std::size_t& hi) {
  const auto s = static_cast<std::ptrdiff_t>(g.stride);
  const auto off = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(g.padding);
  // smallest t with t*s + off >= 0
  const std::ptrdiff_t first = off >= 0 ? 0 : (-off + s - 1) / s;
  // smallest t with t*s + off >= length
  const std::ptrdiff_t end_raw = static_cast<std::ptrdiff_t>(length) - off;
  const std::ptrdiff_t end = end_raw <= 0 ? 0 : (end_raw + s - 1) / s;
  lo = static_cast<std::size_t>(std::min<std::ptrdiff_t>(first, static_cast<std::ptrdiff_t>(out_len)));
  hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(end, static_cast<std::ptrdiff_t>(lo), static_cast<std::ptrdiff_t>(out_len)));
}

// Floor division for a possibly negative offset.
inline std::ptrdiff_t floor_div(std::ptrdiff_t a, std::ptrdiff_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

/// Uninitialized scratch storage.
template <class Real>
class Scratch {
 public:
  explicit Scratch(std::size_t n) : p_(new Real[n]) {}
  Real* data() noexcept { return p_.get(); }
  const Real* data() const noexcept { return p_.get(); }

 private:
  std::unique_ptr<Real[]> p_;
};

// cols[(c*K + k), (b*out_len + t)] = x[b, c, t*stride + k - padding]
// Each row is deinterleaved into its stride phases first so that every tap
// becomes a contiguous copy.
template <class Real>
void im2col(const Real* x, std::size_t batch, std::size_t channels, std::size_t length, std::size_t kernel,
            const ConvGeometry& g, std::size_t out_len, Real* cols) {
  const std::size_t ncols = batch * out_len, s = g.stride, plen = (length + s - 1) / s;
  Scratch<Real> phases(s * plen);
  std::vector<std::size_t> lo(kernel), hi(kernel);
  std::vector<std::ptrdiff_t> start(kernel);
  for (std::size_t k = 0; k < kernel; ++k) {
    valid_range(k, length, g, out_len, lo[k], hi[k]);
    const auto off = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(g.padding);
    const auto q = floor_div(off, static_cast<std::ptrdiff_t>(s));
    start[k] = static_cast<std::ptrdiff_t>((off - q * static_cast<std::ptrdiff_t>(s)) * static_cast<std::ptrdiff_t>(plen)) + q;
  }
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t b = 0; b < batch; ++b) {
      const Real* src = x + (b * channels + c) * length;
      for (std::size_t r = 0; r < s; ++r) {
        Real* ph = phases.data() + r * plen;
        for (std::size_t u = 0, i = r; i < length; ++u, i += s) ph[u] = src[i];
      }
      for (std::size_t k = 0; k < kernel; ++k) {
        Real* dst = cols + (c * kernel + k) * ncols + b * out_len;
        if (lo[k] > 0) std::fill(dst, dst + lo[k], Real(0));
        if (hi[k] > lo[k]) std::copy_n(phases.data() + start[k] + static_cast<std::ptrdiff_t>(lo[k]), hi[k] - lo[k], dst + lo[k]);
        if (hi[k] < out_len) std::fill(dst + hi[k], dst + out_len, Real(0));
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into x (which is not cleared).
template <class Real>
void col2im_add(const Real* cols, std::size_t batch, std::size_t channels, std::size_t length, std::size_t kernel,
                const ConvGeometry& g, std::size_t out_len, Real* x) {
  const std::size_t ncols = batch * out_len, s = g.stride, plen = (length + s - 1) / s;
  Scratch<Real> phases(s * plen);
  std::vector<std::size_t> lo(kernel), hi(kernel);
  std::vector<std::ptrdiff_t> start(kernel);
  for (std::size_t k = 0; k < kernel; ++k) {
    valid_range(k, length, g, out_len, lo[k], hi[k]);
    const auto off = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(g.padding);
    const auto q = floor_div(off, static_cast<std::ptrdiff_t>(s));
    start[k] = static_cast<std::ptrdiff_t>((off - q * static_cast<std::ptrdiff_t>(s)) * static_cast<std::ptrdiff_t>(plen)) + q;
  }
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t b = 0; b < batch; ++b) {
      std::fill(phases.data(), phases.data() + s * plen, Real(0));
      for (std::size_t k = 0; k < kernel; ++k) {
        const Real* src = cols + (c * kernel + k) * ncols + b * out_len;
        if (hi[k] <= lo[k]) continue;
        Real* ph = phases.data() + start[k] + static_cast<std::ptrdiff_t>(lo[k]);
        for (std::size_t t = 0, n = hi[k] - lo[k]; t < n; ++t) ph[t] += src[lo[k] + t];
      }
      Real* dst = x + (b * channels + c) * length;
      for (std::size_t r = 0; r < s; ++r) {
        const Real* ph = phases.data() + r * plen;
        for (std::size_t u = 0, i = r; i < length; ++u, i += s) dst[i] += ph[u];
      }
    }
  }
}

// [B, C, L] <-> [C, B*L]
template <class Real>
void batch_to_channel_major(const Real* x, std::size_t batch, std::size_t channels, std::size_t length, Real* out) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      std::copy_n(x + (b * channels + c) * length, length, out + c * batch * length + b * length);
}

template <class Real>
void channel_major_to_batch(const Real* x, std::size_t batch, std::size_t channels, std::size_t length, Real* out) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      std::copy_n(x + c * batch * length + b * length, length, out + (b * channels + c) * length);
}

template <class Real>
void add_channel_bias(BasicTensor<Real>& y, std::span<const Real> bias) {
  if (bias.empty()) return;
  const std::size_t B = y.dim(0), C = y.dim(1), L = y.dim(2);
  if (bias.size() != C) throw ShapeError("bias", "channels", C, bias.size());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      Real* p = y.data() + (b * C + c) * L;
      for (std::size_t t = 0; t < L; ++t) p[t] += bias[c];
    }
}

template <class Real>
void accumulate_channel_bias_grad(const BasicTensor<Real>& gy, Real* grad_bias) {
  const std::size_t B = gy.dim(0), C = gy.dim(1), L = gy.dim(2);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const Real* p = gy.data() + (b * C + c) * L;
      Real s = 0;
      for (std::size_t t = 0; t < L; ++t) s += p[t];
      grad_bias[c] += s;
    }
}

}  // namespace detail

/// 1D cross-correlation. input [B,Cin,L], kernel [Cout,Cin,K] -> [B,Cout,Lout].
template <class Real>
BasicTensor<Real> conv1d(const BasicTensor<Real>& input, const BasicTensor<Real>& kernel, const ConvGeometry& g,
                         std::span<const Real> bias = {}) {
  require_rank("conv1d input", input.shape(), 3);
  require_rank("conv1d kernel", kernel.shape(), 3);
  const std::size_t B = input.dim(0), Cin = input.dim(1), L = input.dim(2);
  const std::size_t Cout = kernel.dim(0), K = kernel.dim(2);
  if (kernel.dim(1) != Cin) throw ShapeError("conv1d", "in_channels", kernel.dim(1), Cin);
  const std::size_t Lout = conv1d_output_length(L, K, g);

  detail::Scratch<Real> cols(Cin * K * B * Lout);
  detail::im2col(input.data(), B, Cin, L, K, g, Lout, cols.data());
  detail::Scratch<Real> ymat(Cout * B * Lout);
  detail::MapMat<Real>(ymat.data(), Cout, B * Lout).noalias() =
      detail::ConstMapMat<Real>(kernel.data(), Cout, Cin * K) * detail::ConstMapMat<Real>(cols.data(), Cin * K, B * Lout);
  BasicTensor<Real> out({B, Cout, Lout});
  detail::channel_major_to_batch(ymat.data(), B, Cout, Lout, out.data());
  detail::add_channel_bias(out, bias);
  return out;
}

/// Backward of conv1d. `grad_input` is overwritten when non-null; kernel and
/// bias gradients are accumulated into the given buffers when non-null.
template <class Real>
void conv1d_backward(const BasicTensor<Real>& input, const BasicTensor<Real>& kernel, const BasicTensor<Real>& grad_out,
                     const ConvGeometry& g, BasicTensor<std::type_identity_t<Real>>* grad_input, std::type_identity_t<Real>* grad_kernel,
                     std::type_identity_t<Real>* grad_bias) {
  const std::size_t B = input.dim(0), Cin = input.dim(1), L = input.dim(2);
  const std::size_t Cout = kernel.dim(0), K = kernel.dim(2);
  const std::size_t Lout = conv1d_output_length(L, K, g);
  if (grad_out.shape() != Shape{B, Cout, Lout}) throw ShapeError("conv1d_backward", "grad_out " + shape_string(grad_out.shape()));

  detail::Scratch<Real> gmat(Cout * B * Lout);
  detail::batch_to_channel_major(grad_out.data(), B, Cout, Lout, gmat.data());
  detail::ConstMapMat<Real> G(gmat.data(), Cout, B * Lout);
  detail::ConstMapMat<Real> W(kernel.data(), Cout, Cin * K);

  if (grad_kernel) {
    detail::Scratch<Real> cols(Cin * K * B * Lout);
    detail::im2col(input.data(), B, Cin, L, K, g, Lout, cols.data());
    detail::MapMat<Real>(grad_kernel, Cout, Cin * K).noalias() +=
        G * detail::ConstMapMat<Real>(cols.data(), Cin * K, B * Lout).transpose();
  }
  if (grad_bias) detail::accumulate_channel_bias_grad(grad_out, grad_bias);
  if (grad_input) {
    detail::Scratch<Real> dcols(Cin * K * B * Lout);
    detail::MapMat<Real>(dcols.data(), Cin * K, B * Lout).noalias() = W.transpose() * G;
    *grad_input = BasicTensor<Real>({B, Cin, L});
    detail::col2im_add(dcols.data(), B, Cin, L, K, g, Lout, grad_input->data());
  }
}

/// 1D transposed convolution (the adjoint of conv1d with matching geometry).
/// input [B,Cin,L], kernel [Cin,Cout,K] -> [B,Cout,(L-1)*stride - 2*padding + K + output_padding].
template <class Real>
BasicTensor<Real> conv1d_transpose(const BasicTensor<Real>& input, const BasicTensor<Real>& kernel,
                                   const ConvGeometry& g, std::span<const Real> bias = {}) {
  require_rank("conv1d_transpose input", input.shape(), 3);
  require_rank("conv1d_transpose kernel", kernel.shape(), 3);
  const std::size_t B = input.dim(0), Cin = input.dim(1), L = input.dim(2);
  const std::size_t Cout = kernel.dim(1), K = kernel.dim(2);
  if (kernel.dim(0) != Cin) throw ShapeError("conv1d_transpose", "in_channels", kernel.dim(0), Cin);
  const std::size_t Lout = conv1d_transpose_output_length(L, K, g);

  detail::Scratch<Real> xmat(Cin * B * L);
  detail::batch_to_channel_major(input.data(), B, Cin, L, xmat.data());
  detail::Scratch<Real> cols(Cout * K * B * L);
  detail::MapMat<Real>(cols.data(), Cout * K, B * L).noalias() =
      detail::ConstMapMat<Real>(kernel.data(), Cin, Cout * K).transpose() *
      detail::ConstMapMat<Real>(xmat.data(), Cin, B * L);
  BasicTensor<Real> out({B, Cout, Lout});
  detail::col2im_add(cols.data(), B, Cout, Lout, K, g, L, out.data());
  detail::add_channel_bias(out, bias);
  return out;
}

template <class Real>
void conv1d_transpose_backward(const BasicTensor<Real>& input, const BasicTensor<Real>& kernel,
                               const BasicTensor<Real>& grad_out, const ConvGeometry& g,
                               BasicTensor<std::type_identity_t<Real>>* grad_input, std::type_identity_t<Real>* grad_kernel,
                     std::type_identity_t<Real>* grad_bias) {
  const std::size_t B = input.dim(0), Cin = input.dim(1), L = input.dim(2);
  const std::size_t Cout = kernel.dim(1), K = kernel.dim(2);
  const std::size_t Lout = conv1d_transpose_output_length(L, K, g);
  if (grad_out.shape() != Shape{B, Cout, Lout})
    throw ShapeError("conv1d_transpose_backward", "grad_out " + shape_string(grad_out.shape()));

  detail::Scratch<Real> cols(Cout * K * B * L);
  detail::im2col(grad_out.data(), B, Cout, Lout, K, g, L, cols.data());
  detail::ConstMapMat<Real> C(cols.data(), Cout * K, B * L);
  detail::ConstMapMat<Real> W(kernel.data(), Cin, Cout * K);

  if (grad_kernel) {
    detail::Scratch<Real> xmat(Cin * B * L);
    detail::batch_to_channel_major(input.data(), B, Cin, L, xmat.data());
    detail::MapMat<Real>(grad_kernel, Cin, Cout * K).noalias() +=
        detail::ConstMapMat<Real>(xmat.data(), Cin, B * L) * C.transpose();
  }
  if (grad_bias) detail::accumulate_channel_bias_grad(grad_out, grad_bias);
  if (grad_input) {
    detail::Scratch<Real> gmat(Cin * B * L);
    detail::MapMat<Real>(gmat.data(), Cin, B * L).noalias() = W * C;
    *grad_input = BasicTensor<Real>({B, Cin, L});
    detail::channel_major_to_batch(gmat.data(), B, Cin, L, grad_input->data());
  }
}

/// Affine map. input [B,F], weights [F,G], bias [G] (may be empty) -> [B,G].
template <class Real>
BasicTensor<Real> dense(const BasicTensor<Real>& input, const BasicTensor<Real>& weights,
                        std::span<const Real> bias = {}) {
  require_rank("dense input", input.shape(), 2);
  require_rank("dense weights", weights.shape(), 2);
  const std::size_t B = input.dim(0), F = input.dim(1), G = weights.dim(1);
  if (weights.dim(0) != F) throw ShapeError("dense", "features", weights.dim(0), F);
  if (!bias.empty() && bias.size() != G) throw ShapeError("dense", "bias", G, bias.size());
  BasicTensor<Real> out({B, G});
  detail::MapMat<Real> Y(out.data(), B, G);
  Y.noalias() = detail::ConstMapMat<Real>(input.data(), B, F) * detail::ConstMapMat<Real>(weights.data(), F, G);
  if (!bias.empty())
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < G; ++j) Y(b, j) += bias[j];
  return out;
}

template <class Real>
void dense_backward(const BasicTensor<Real>& input, const BasicTensor<Real>& weights, const BasicTensor<Real>& grad_out,
                    BasicTensor<std::type_identity_t<Real>>* grad_input, std::type_identity_t<Real>* grad_weights,
                    std::type_identity_t<Real>* grad_bias) {
  const std::size_t B = input.dim(0), F = input.dim(1), G = weights.dim(1);
  if (grad_out.shape() != Shape{B, G}) throw ShapeError("dense_backward", "grad_out " + shape_string(grad_out.shape()));
  detail::ConstMapMat<Real> X(input.data(), B, F), W(weights.data(), F, G), GY(grad_out.data(), B, G);
  if (grad_weights) detail::MapMat<Real>(grad_weights, F, G).noalias() += X.transpose() * GY;
  if (grad_bias)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t j = 0; j < G; ++j) grad_bias[j] += GY(b, j);
  if (grad_input) {
    *grad_input = BasicTensor<Real>({B, F});
    detail::MapMat<Real>(grad_input->data(), B, F).noalias() = GY * W.transpose();
  }
}

// Elementwise activations. Backward functions take whichever of input or
// output makes the derivative cheapest.

template <class Real, class F>
BasicTensor<Real> map_values(const BasicTensor<Real>& x, F f) {
  BasicTensor<Real> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return y;
}

template <class Real>
BasicTensor<Real> relu(const BasicTensor<Real>& x) {
  return map_values(x, [](Real v) { return v > Real(0) ? v : Real(0); });
}

template <class Real>
BasicTensor<Real> relu_backward(const BasicTensor<Real>& input, const BasicTensor<Real>& grad_out) {
  BasicTensor<Real> g(input.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = input[i] > Real(0) ? grad_out[i] : Real(0);
  return g;
}

template <class Real>
BasicTensor<Real> leaky_relu(const BasicTensor<Real>& x, Real slope) {
  return map_values(x, [slope](Real v) { return v > Real(0) ? v : slope * v; });
}

template <class Real>
BasicTensor<Real> leaky_relu_backward(const BasicTensor<Real>& input, const BasicTensor<Real>& grad_out, Real slope) {
  BasicTensor<Real> g(input.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = input[i] > Real(0) ? grad_out[i] : slope * grad_out[i];
  return g;
}

template <class Real>
BasicTensor<Real> tanh(const BasicTensor<Real>& x) {
  return map_values(x, [](Real v) { return std::tanh(v); });
}

template <class Real>
BasicTensor<Real> tanh_backward(const BasicTensor<Real>& output, const BasicTensor<Real>& grad_out) {
  BasicTensor<Real> g(output.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * (Real(1) - output[i] * output[i]);
  return g;
}

template <class Real>
Real sigmoid(Real v) {
  if (v >= Real(0)) return Real(1) / (Real(1) + std::exp(-v));
  const Real e = std::exp(v);
  return e / (Real(1) + e);
}

template <class Real>
BasicTensor<Real> sigmoid(const BasicTensor<Real>& x) {
  return map_values(x, [](Real v) { return sigmoid(v); });
}

template <class Real>
BasicTensor<Real> sigmoid_backward(const BasicTensor<Real>& output, const BasicTensor<Real>& grad_out) {
  BasicTensor<Real> g(output.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * output[i] * (Real(1) - output[i]);
  return g;
}

/// Softmax over the last axis, max-subtracted.
template <class Real>
BasicTensor<Real> softmax(const BasicTensor<Real>& x) {
  if (x.rank() == 0 || x.shape().back() == 0) throw ShapeError("softmax", "last axis is empty");
  const std::size_t n = x.shape().back(), rows = x.size() / n;
  BasicTensor<Real> y(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = x.data() + r * n;
    Real* out = y.data() + r * n;
    const Real m = *std::max_element(in, in + n);
    Real s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (out[i] = std::exp(in[i] - m));
    for (std::size_t i = 0; i < n; ++i) out[i] /= s;
  }
  return y;
}

template <class Real>
BasicTensor<Real> softmax_backward(const BasicTensor<Real>& output, const BasicTensor<Real>& grad_out) {
  const std::size_t n = output.shape().back(), rows = output.size() / n;
  BasicTensor<Real> g(output.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* y = output.data() + r * n;
    const Real* gy = grad_out.data() + r * n;
    Real s = 0;
    for (std::size_t i = 0; i < n; ++i) s += gy[i] * y[i];
    for (std::size_t i = 0; i < n; ++i) g[r * n + i] = y[i] * (gy[i] - s);
  }
  return g;
}

/// Source index for a time shift with single-bounce reflection at both ends.
inline std::size_t reflected_source(std::ptrdiff_t t, std::ptrdiff_t shift, std::ptrdiff_t length) {
  std::ptrdiff_t i = t - shift;
  if (i < 0) i = -i;
  if (i >= length) i = 2 * (length - 1) - i;
  return static_cast<std::size_t>(i);
}

/// Shifts each example by its own offset: out[b,c,t] = in[b,c,t - shift[b]],
/// reflecting at the boundaries. |shift| must be < length.
template <class Real>
BasicTensor<Real> apply_phase_shift(const BasicTensor<Real>& x, std::span<const int> shifts) {
  require_rank("phase_shuffle", x.shape(), 3);
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  if (shifts.size() != B) throw ShapeError("phase_shuffle", "batch", B, shifts.size());
  BasicTensor<Real> y(x.shape());
  for (std::size_t b = 0; b < B; ++b) {
    const std::ptrdiff_t s = shifts[b];
    if (static_cast<std::size_t>(std::abs(s)) >= L) throw ShapeError("phase_shuffle", "shift", L - 1, std::abs(s));
    for (std::size_t c = 0; c < C; ++c) {
      const Real* in = x.data() + (b * C + c) * L;
      Real* out = y.data() + (b * C + c) * L;
      for (std::size_t t = 0; t < L; ++t)
        out[t] = in[reflected_source(static_cast<std::ptrdiff_t>(t), s, static_cast<std::ptrdiff_t>(L))];
    }
  }
  return y;
}

/// Adjoint of apply_phase_shift (gradient scatter).
template <class Real>
BasicTensor<Real> apply_phase_shift_adjoint(const BasicTensor<Real>& grad_out, std::span<const int> shifts) {
  const std::size_t B = grad_out.dim(0), C = grad_out.dim(1), L = grad_out.dim(2);
  BasicTensor<Real> g(grad_out.shape());
  for (std::size_t b = 0; b < B; ++b) {
    const std::ptrdiff_t s = shifts[b];
    for (std::size_t c = 0; c < C; ++c) {
      const Real* gy = grad_out.data() + (b * C + c) * L;
      Real* gx = g.data() + (b * C + c) * L;
      for (std::size_t t = 0; t < L; ++t)
        gx[reflected_source(static_cast<std::ptrdiff_t>(t), s, static_cast<std::ptrdiff_t>(L))] += gy[t];
    }
  }
  return g;
}

/// Draws one shift per example, uniform on [-n, n].
inline std::vector<int> draw_phase_shifts(std::size_t batch, std::size_t n, Rng& rng) {
  std::vector<int> shifts(batch, 0);
  if (n == 0) return shifts;
  for (auto& s : shifts) s = static_cast<int>(rng.uniform_int(-static_cast<std::int64_t>(n), static_cast<std::int64_t>(n)));
  return shifts;
}

/// WaveGAN phase shuffle. n = 0 is the identity.
template <class Real>
BasicTensor<Real> phase_shuffle(const BasicTensor<Real>& x, std::size_t n, Rng& rng, std::vector<int>* shifts_out = nullptr) {
  require_rank("phase_shuffle", x.shape(), 3);
  if (n >= x.dim(2)) throw ShapeError("phase_shuffle", "n must be smaller than length");
  auto shifts = draw_phase_shifts(x.dim(0), n, rng);
  auto y = apply_phase_shift(x, std::span<const int>(shifts));
  if (shifts_out) *shifts_out = std::move(shifts);
  return y;
}

}  // namespace ciwgan
