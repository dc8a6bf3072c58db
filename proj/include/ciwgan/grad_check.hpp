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
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "ciwgan/errors.hpp"
#include "ciwgan/rng.hpp"
#include "ciwgan/tensor.hpp"

namespace ciwgan {

/// Scalar function evaluated in 64-bit. When `grad` is non-null the function
/// must also write the analytic gradient (same shape as the point) into it.
using ScalarFunction = std::function<double(const TensorD& point, TensorD* grad)>;

/// Max over the checked coordinates of
///   |analytic - central difference| / max(1, |central difference|).
/// `coords` selects a subset of coordinates; empty means all of them.
inline double grad_check(const ScalarFunction& f, const TensorD& point, double eps,
                         std::span<const std::size_t> coords = {}) {
  TensorD analytic(point.shape());
  const double f0 = f(point, &analytic);
  if (!std::isfinite(f0) || !analytic.all_finite()) throw NumericalError("grad_check: non-finite evaluation");

  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(point.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }
  TensorD probe = point;
  double worst = 0.0;
  for (std::size_t i : coords) {
    const double x0 = probe[i];
    probe[i] = x0 + eps;
    const double fp = f(probe, nullptr);
    probe[i] = x0 - eps;
    const double fm = f(probe, nullptr);
    probe[i] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw NumericalError("grad_check: non-finite evaluation");
    const double fd = (fp - fm) / (2.0 * eps);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

/// `count` distinct coordinates drawn without replacement from [0, size).
inline std::vector<std::size_t> sample_coordinates(std::size_t size, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  count = std::min(count, size);
  for (std::size_t i = 0; i < count; ++i)
    std::swap(idx[i], idx[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(size - 1)))]);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace ciwgan
