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

// Wasserstein critic loss with gradient penalty, and the code-recovery
// (mutual information) loss shared by the generator and Q-network.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ciwgan/errors.hpp"
#include "ciwgan/latent.hpp"
#include "ciwgan/models.hpp"
#include "ciwgan/network.hpp"
#include "ciwgan/rng.hpp"
#include "ciwgan/tensor.hpp"

namespace ciwgan {

inline constexpr double kPosteriorClamp = 1e-7;

template <class Real>
BasicTensor<Real> mix_batches(const BasicTensor<Real>& real, const BasicTensor<Real>& fake, std::span<const double> eps) {
  BasicTensor<Real> out(real.shape());
  const std::size_t per = real.size() / real.dim(0);
  for (std::size_t b = 0; b < real.dim(0); ++b) {
    const Real e = static_cast<Real>(eps[b]);
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) out[i] = e * real[i] + (Real(1) - e) * fake[i];
  }
  return out;
}

/// Mean over the batch of (||grad_x D(x_hat)||_2 - 1)^2 at
/// x_hat = eps * real + (1 - eps) * fake, eps ~ U[0,1] per example.
///
/// When `param_weight` is non-zero, `param_weight * dP/dtheta` is accumulated
/// into D's parameter gradients. `shuffle_rng` drives phase shuffle (may be
/// null for evaluation-mode critics). `eps_override` fixes the mixing weights.
template <class Real>
double gradient_penalty(Network<Real>& D, const BasicTensor<Real>& real, const BasicTensor<Real>& fake, Rng& rng,
                        Real param_weight = Real(0), Rng* shuffle_rng = nullptr,
                        std::span<const double> eps_override = {}) {
  if (real.shape() != fake.shape()) throw ShapeError("gradient_penalty", "real/fake batch " + shape_string(real.shape()) + " vs " + shape_string(fake.shape()));
  const std::size_t B = real.dim(0);
  std::vector<double> eps(B);
  if (eps_override.empty()) {
    for (auto& e : eps) e = rng.uniform();
  } else {
    if (eps_override.size() != B) throw ShapeError("gradient_penalty", "eps", B, eps_override.size());
    std::copy(eps_override.begin(), eps_override.end(), eps.begin());
  }
  const auto x_hat = mix_batches(real, fake, eps);

  ForwardTrace<Real> trace;
  const auto score = D.forward(x_hat, &trace, shuffle_rng);
  std::vector<BasicTensor<Real>> layer_grads;
  const auto gx = D.backward(trace, BasicTensor<Real>(score.shape(), Real(1)), /*param_grads=*/false, &layer_grads);

  const std::size_t per = gx.size() / B;
  double penalty = 0.0;
  BasicTensor<Real> adjoint(gx.shape());
  for (std::size_t b = 0; b < B; ++b) {
    double sq = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) sq += static_cast<double>(gx[i]) * static_cast<double>(gx[i]);
    const double norm = std::sqrt(sq);
    penalty += (norm - 1.0) * (norm - 1.0);
    if (norm > 0.0) {
      const double coef = static_cast<double>(param_weight) * 2.0 * (norm - 1.0) / (norm * static_cast<double>(B));
      for (std::size_t i = b * per; i < (b + 1) * per; ++i) adjoint[i] = static_cast<Real>(coef * gx[i]);
    }
  }
  penalty /= static_cast<double>(B);
  if (!std::isfinite(penalty)) throw NumericalError("gradient_penalty: non-finite input gradient");
  if (param_weight != Real(0)) D.accumulate_input_gradient_adjoint(trace, layer_grads, adjoint);
  return penalty;
}

struct CriticLoss {
  double total = 0;        // wasserstein + lambda * penalty
  double wasserstein = 0;  // mean D(fake) - mean D(real)
  double penalty = 0;      // unweighted gradient penalty
};

/// Critic objective. Zeroes D's gradients, then accumulates d(total)/dtheta.
template <class Real>
CriticLoss d_loss(Network<Real>& D, const BasicTensor<Real>& real, const BasicTensor<Real>& fake, double lambda, Rng& rng,
                  Rng* shuffle_rng = nullptr) {
  if (real.shape() != fake.shape()) throw ShapeError("d_loss", "real/fake batch " + shape_string(real.shape()) + " vs " + shape_string(fake.shape()));
  const std::size_t B = real.dim(0);
  D.zero_grad();
  CriticLoss out;

  ForwardTrace<Real> tr_real, tr_fake;
  const auto s_real = D.forward(real, &tr_real, shuffle_rng);
  const auto s_fake = D.forward(fake, &tr_fake, shuffle_rng);
  double mean_real = 0, mean_fake = 0;
  for (std::size_t b = 0; b < B; ++b) {
    mean_real += s_real[b];
    mean_fake += s_fake[b];
  }
  mean_real /= static_cast<double>(B);
  mean_fake /= static_cast<double>(B);
  out.wasserstein = mean_fake - mean_real;
  D.backward(tr_real, BasicTensor<Real>(s_real.shape(), static_cast<Real>(-1.0 / static_cast<double>(B))), true);
  D.backward(tr_fake, BasicTensor<Real>(s_fake.shape(), static_cast<Real>(1.0 / static_cast<double>(B))), true);

  if (lambda != 0.0) {
    out.penalty = gradient_penalty(D, real, fake, rng, static_cast<Real>(lambda), shuffle_rng);
  } else {
    // Still consume the mixing draws so the rng stream does not depend on lambda.
    for (std::size_t b = 0; b < B; ++b) (void)rng.uniform();
  }
  out.total = out.wasserstein + lambda * out.penalty;
  if (!std::isfinite(out.total)) throw NumericalError("d_loss: non-finite loss (wasserstein=" + std::to_string(out.wasserstein) + ", penalty=" + std::to_string(out.penalty) + ")");
  return out;
}

/// Cross-entropy between codes and posteriors [B, width], averaged over the
/// batch. One-hot: categorical CE. Binary: sum over bits of binary CE.
/// Probabilities are clamped at `clamp` inside the logarithm.
template <class Real>
double code_cross_entropy(CodeKind kind, const BasicTensor<Real>& posterior, std::span<const HardCode> codes,
                          double clamp = kPosteriorClamp) {
  const std::size_t B = posterior.dim(0), W = posterior.dim(1);
  if (codes.size() != B) throw ShapeError("code_cross_entropy", "batch", B, codes.size());
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const Real* p = posterior.data() + b * W;
    if (kind == CodeKind::one_hot) {
      total -= std::log(std::max(static_cast<double>(p[codes[b].index]), clamp));
    } else {
      for (std::size_t i = 0; i < W; ++i) {
        const double pi = p[i];
        total -= codes[b].bit(i) ? std::log(std::max(pi, clamp)) : std::log(std::max(1.0 - pi, clamp));
      }
    }
  }
  return total / static_cast<double>(B);
}

/// Code-recovery loss of Q on generated audio. Accumulates Q's parameter
/// gradients (after zeroing) and returns the gradient with respect to the
/// audio so it can be pushed into the generator.
template <class Real>
double q_loss(Network<Real>& Q, CodeKind kind, const BasicTensor<Real>& generated, std::span<const HardCode> codes,
              BasicTensor<Real>* input_grad, bool param_grads = true, Rng* shuffle_rng = nullptr) {
  const std::size_t B = generated.dim(0);
  if (codes.size() != B) throw ShapeError("q_loss", "batch", B, codes.size());
  if (param_grads) Q.zero_grad();
  ForwardTrace<Real> trace;
  const auto logits = Q.forward(generated, &trace, shuffle_rng);
  const auto post = code_posterior(kind, logits);
  const double value = code_cross_entropy(kind, post, codes);
  if (!std::isfinite(value)) throw NumericalError("q_loss: non-finite loss");

  // d(-log p)/dlogit = p - y for both heads; clamped terms contribute nothing.
  const std::size_t W = logits.dim(1);
  BasicTensor<Real> g(logits.shape());
  const double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < W; ++i) {
      const double p = post[b * W + i];
      double y;
      bool clamped;
      if (kind == CodeKind::one_hot) {
        y = codes[b].index == i ? 1.0 : 0.0;
        clamped = post[b * W + codes[b].index] < kPosteriorClamp;
      } else {
        y = codes[b].bit(i) ? 1.0 : 0.0;
        clamped = (y == 1.0 ? p : 1.0 - p) < kPosteriorClamp;
      }
      g[b * W + i] = clamped ? Real(0) : static_cast<Real>((p - y) * inv_b);
    }
  }
  auto gx = Q.backward(trace, g, param_grads);
  if (input_grad) *input_grad = std::move(gx);
  return value;
}

}  // namespace ciwgan
