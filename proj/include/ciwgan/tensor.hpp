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
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ciwgan/errors.hpp"

namespace ciwgan {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major tensor with an optional gradient accumulator of the same
/// shape. Audio-shaped data uses [batch, channels, length].
template <class Real>
class BasicTensor {
 public:
  using value_type = Real;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, Real fill = Real(0))
      : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}
  BasicTensor(Shape shape, std::vector<Real> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_))
      throw ShapeError("Tensor", "value count", shape_size(shape_), values_.size());
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  Real* data() noexcept { return values_.data(); }
  const Real* data() const noexcept { return values_.data(); }
  std::span<Real> values() noexcept { return values_; }
  std::span<const Real> values() const noexcept { return values_; }
  std::vector<Real>& storage() noexcept { return values_; }
  const std::vector<Real>& storage() const noexcept { return values_; }

  Real& operator[](std::size_t i) noexcept { return values_[i]; }
  const Real& operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Element of a rank-3 tensor.
  Real& at(std::size_t b, std::size_t c, std::size_t t) { return values_[(b * shape_[1] + c) * shape_[2] + t]; }
  const Real& at(std::size_t b, std::size_t c, std::size_t t) const {
    return values_[(b * shape_[1] + c) * shape_[2] + t];
  }

  /// Reinterprets the extents; the value count must not change.
  void reshape(Shape shape) {
    if (shape_size(shape) != values_.size()) throw ShapeError("reshape", "value count", values_.size(), shape_size(shape));
    shape_ = std::move(shape);
    if (!grad_.empty()) grad_.resize(values_.size());
  }

  bool has_grad() const noexcept { return !grad_.empty(); }
  std::span<Real> grad() noexcept { return grad_; }
  std::span<const Real> grad() const noexcept { return grad_; }
  /// Allocates the gradient accumulator (zeroed) if it is missing.
  std::span<Real> ensure_grad() {
    if (grad_.size() != values_.size()) grad_.assign(values_.size(), Real(0));
    return grad_;
  }
  void zero_grad() { std::fill(grad_.begin(), grad_.end(), Real(0)); }
  void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

  void fill(Real v) { std::fill(values_.begin(), values_.end(), v); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](Real v) { return std::isfinite(v); });
  }
  void check_finite(const std::string& what) const {
    if (!all_finite()) throw NumericalError(what + ": non-finite value");
  }

  template <class To>
  BasicTensor<To> cast() const {
    BasicTensor<To> out(shape_);
    std::transform(values_.begin(), values_.end(), out.data(), [](Real v) { return static_cast<To>(v); });
    return out;
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Shape shape_;
  std::vector<Real> values_;
  std::vector<Real> grad_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <class Real>
Real dot(const BasicTensor<Real>& a, const BasicTensor<Real>& b) {
  if (a.size() != b.size()) throw ShapeError("dot", "value count", a.size(), b.size());
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void require_rank(const char* op, const Shape& shape, std::size_t rank) {
  if (shape.size() != rank) throw ShapeError(op, "rank", rank, shape.size());
}

}  // namespace ciwgan
