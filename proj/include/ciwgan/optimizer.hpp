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
#include <vector>

#include "ciwgan/errors.hpp"
#include "ciwgan/tensor.hpp"

namespace ciwgan {

struct AdamHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer with bias correction. Moments are kept per
/// parameter tensor in the order the parameters are passed.
template <class Real>
struct OptimizerState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<std::vector<Real>> first;
  std::vector<std::vector<Real>> second;
};

/// One update using each parameter's gradient accumulator.
/// Parameters without a gradient accumulator are left untouched.
template <class Real>
void optimizer_step(const std::vector<BasicTensor<Real>*>& params, OptimizerState<Real>& state) {
  if (state.first.empty()) {
    for (const auto* p : params) {
      state.first.emplace_back(p->size(), Real(0));
      state.second.emplace_back(p->size(), Real(0));
    }
  }
  if (state.first.size() != params.size()) throw ShapeError("optimizer_step", "parameter count", state.first.size(), params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    if (state.first[i].size() != params[i]->size())
      throw ShapeError("optimizer_step", "parameter " + std::to_string(i), state.first[i].size(), params[i]->size());

  ++state.step;
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  const Real step_size = static_cast<Real>(h.learning_rate / correction1);
  const Real b1 = static_cast<Real>(h.beta1), b2 = static_cast<Real>(h.beta2);
  const Real eps = static_cast<Real>(h.epsilon);
  const Real inv_sqrt_c2 = static_cast<Real>(1.0 / std::sqrt(correction2));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    if (!p->has_grad()) continue;
    auto g = p->grad();
    auto& m = state.first[i];
    auto& v = state.second[i];
    Real* w = p->data();
    for (std::size_t j = 0; j < m.size(); ++j) {
      m[j] = b1 * m[j] + (Real(1) - b1) * g[j];
      v[j] = b2 * v[j] + (Real(1) - b2) * g[j] * g[j];
      w[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_c2 + eps);
    }
  }
}

}  // namespace ciwgan
