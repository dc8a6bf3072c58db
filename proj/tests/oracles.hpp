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

// Oracles and helpers shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ciwgan/models.hpp"

namespace ciwgan::testing {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Dataset {
  std::vector<int> y;
  std::vector<std::vector<double>> x;
  std::vector<std::string> names;
};

inline Dataset simulate(std::size_t n, const std::vector<double>& beta, std::mt19937_64& gen, bool binary_x) {
  Dataset d;
  const std::size_t p = beta.size() - 1;
  d.x.assign(p, std::vector<double>(n));
  for (std::size_t j = 0; j < p; ++j) d.names.push_back("x" + std::to_string(j + 1));
  std::normal_distribution<double> nd;
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> u;
  for (std::size_t i = 0; i < n; ++i) {
    double eta = beta[0];
    for (std::size_t j = 0; j < p; ++j) {
      d.x[j][i] = binary_x ? (coin(gen) ? 1.0 : 0.0) : nd(gen);
      eta += beta[j + 1] * d.x[j][i];
    }
    d.y.push_back(u(gen) < sigmoid(eta) ? 1 : 0);
  }
  return d;
}

// Independent oracle: coarse grid search, then coordinate-wise Newton
// refinement of the plain negative log-likelihood.
inline std::vector<double> oracle_logistic(const Dataset& d) {
  const std::size_t p = d.x.size() + 1, n = d.y.size();
  auto nll = [&](const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double eta = b[0];
      for (std::size_t j = 1; j < p; ++j) eta += b[j] * d.x[j - 1][i];
      s += std::log1p(std::exp(-std::abs(eta))) + std::max(eta, 0.0) - d.y[i] * eta;
    }
    return s;
  };
  std::vector<double> best(p, 0.0), cur(p, 0.0);
  double best_v = nll(best);
  const std::vector<double> grid{-3, -2, -1, -0.5, 0, 0.5, 1, 2, 3};
  std::size_t combos = 1;
  for (std::size_t j = 0; j < p; ++j) combos *= grid.size();
  for (std::size_t c = 0; c < combos; ++c) {
    std::size_t r = c;
    for (std::size_t j = 0; j < p; ++j) cur[j] = grid[r % grid.size()], r /= grid.size();
    const double v = nll(cur);
    if (v < best_v) best_v = v, best = cur;
  }
  // Cyclic one-coordinate Newton steps until every partial derivative vanishes.
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double worst = 0;
    for (std::size_t j = 0; j < p; ++j) {
      double g = 0, h = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double eta = best[0];
        for (std::size_t k = 1; k < p; ++k) eta += best[k] * d.x[k - 1][i];
        const double xj = j == 0 ? 1.0 : d.x[j - 1][i], mu = sigmoid(eta);
        g += (mu - d.y[i]) * xj;
        h += mu * (1 - mu) * xj * xj;
      }
      worst = std::max(worst, std::abs(g));
      best[j] -= g / h;
    }
    if (worst < 1e-10) break;
  }
  return best;
}


// Flattened view of every parameter of a double network.
inline TensorD gather(Network<double>& net) {
  std::vector<double> v;
  for (auto* p : net.params()) v.insert(v.end(), p->values().begin(), p->values().end());
  return TensorD({v.size()}, v);
}

inline void scatter(Network<double>& net, const TensorD& flat) {
  std::size_t o = 0;
  for (auto* p : net.params())
    for (auto& x : p->values()) x = flat[o++];
}

inline TensorD gather_grad(Network<double>& net) {
  std::vector<double> v;
  for (auto* p : net.params()) v.insert(v.end(), p->grad().begin(), p->grad().end());
  return TensorD({v.size()}, v);
}

inline TensorD random_latents(const LatentSpec& spec, std::size_t batch, Rng& rng, std::vector<HardCode>* codes) {
  std::vector<LatentVector> lv;
  codes->resize(batch);
  for (std::size_t b = 0; b < batch; ++b) lv.push_back(sample_latent(spec, rng, &(*codes)[b]));
  return latent_batch(lv).cast<double>();
}

// Random evaluation point: initial biases are exactly zero, which puts some
// pre-activations on the leaky ReLU kink.
inline void jitter(Network<double>& net, Rng& rng, double scale = 0.05) {
  for (auto* p : net.params())
    for (auto& v : p->values()) v += scale * rng.normal();
}

inline ArchitectureConfig tiny_arch() {
  ArchitectureConfig a;
  a.slice_len = 256;
  a.model_dim = 2;
  a.kernel = 9;
  return a;
}

}  // namespace ciwgan::testing
