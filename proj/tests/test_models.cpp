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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ciwgan/grad_check.hpp"
#include "ciwgan/losses.hpp"
#include "ciwgan/models.hpp"
#include "oracles.hpp"

using namespace ciwgan;
using namespace ciwgan::testing;

TEST(Architecture, ShapeChainAtBothScales) {
  Rng rng(1);
  const auto spec = LatentSpec::one_hot(8);
  const auto paper = make_generator(spec, ArchitectureConfig::paper_scale(), rng);
  EXPECT_EQ(paper.output_shape(), (Shape{1, 16384}));
  EXPECT_EQ(make_discriminator(ArchitectureConfig::paper_scale(), rng).output_shape(), (Shape{1}));
  const auto desk = make_generator(spec, ArchitectureConfig::desk_scale(), rng);
  LatentVector lv{sample_noise(spec, rng), code_values(HardCode{CodeKind::one_hot, 8, 2}, 1.0)};
  const auto clip = generate(desk, lv);
  EXPECT_EQ(clip.size(), 4096u);
  EXPECT_EQ(clip.rate, 16000);
  for (float s : clip.samples) EXPECT_LE(std::abs(s), 1.0f);
}

TEST(Architecture, DeskParameterCountsAndGeometry) {
  Rng rng(2);
  const auto arch = ArchitectureConfig::desk_scale();
  const auto spec = LatentSpec::one_hot(4);
  EXPECT_EQ(arch.stages(), 4u);
  const auto g = arch.geometry();
  EXPECT_EQ(g.padding, 11u);
  EXPECT_EQ(g.output_padding, 1u);
  // dense 94 -> 32*16, then 32->16->8->4->1 transposed convolutions of width 25.
  const std::size_t g_params = 94 * 512 + 512 + (32 * 16 + 16 * 8 + 8 * 4 + 4 * 1) * 25 + 16 + 8 + 4 + 1;
  EXPECT_EQ(make_generator(spec, arch, rng).parameter_count(), g_params);
  const std::size_t body = (1 * 4 + 4 * 8 + 8 * 16 + 16 * 32) * 25 + 4 + 8 + 16 + 32;
  EXPECT_EQ(make_discriminator(arch, rng).parameter_count(), body + 512 + 1);
  EXPECT_EQ(make_q_network(spec, arch, rng).parameter_count(), body + 512 * 4 + 4);
  ArchitectureConfig bad = arch;
  bad.slice_len = 5000;
  EXPECT_THROW(bad.stages(), ValidationError);
}

TEST(Latent, CodeCapacity) {
  EXPECT_EQ(enumerate_codes(LatentSpec::binary(3)).size(), 8u);
  EXPECT_EQ(enumerate_codes(LatentSpec::binary(9)).size(), 512u);
  EXPECT_EQ(enumerate_codes(LatentSpec::one_hot(8)).size(), 8u);
  const auto spec = LatentSpec::binary(3);
  const auto c = parse_hard_code(spec, "011");
  EXPECT_EQ(code_values(c, 3.0), (std::vector<float>{0, 3, 3}));
  EXPECT_EQ(c.to_string(), "011");
  EXPECT_THROW(parse_hard_code(spec, "01"), ValidationError);
}

TEST(Latent, SamplingAndDecoding) {
  Rng rng(3);
  const auto spec = LatentSpec::binary(4);
  for (int i = 0; i < 50; ++i) {
    HardCode code;
    const auto lv = sample_latent(spec, rng, &code);
    EXPECT_EQ(lv.z.size(), 90u);
    for (float z : lv.z) EXPECT_LE(std::abs(z), 1.0f);
    std::vector<double> post(lv.c.begin(), lv.c.end());
    EXPECT_EQ(decode_hard(spec.kind, post), code);
  }
  const std::vector<double> half{0.5, 0.49};
  EXPECT_EQ(decode_hard(CodeKind::binary, half).to_string(), "10");
}

TEST(Losses, GradientPenaltyClosedForm) {
  Rng rng(4);
  for (double g : {0.3, 1.0, 2.5}) {
    std::vector<double> w(64);
    for (auto& v : w) v = rng.normal();
    const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    for (auto& v : w) v *= g / norm;
    auto D = make_linear_critic<double>(w, 0.7);
    TensorD real({3, 1, 64}), fake({3, 1, 64});
    for (auto& v : real.values()) v = rng.normal();
    for (auto& v : fake.values()) v = rng.normal();
    const double p = gradient_penalty(D, real, fake, rng);
    EXPECT_NEAR(p, (g - 1) * (g - 1), g == 1.0 ? 1e-10 : 1e-8);
  }
}

TEST(Losses, CriticLossOnLinearCritic) {
  Rng rng(5);
  std::vector<double> w(32);
  for (auto& v : w) v = rng.normal();
  auto D = make_linear_critic<double>(w, -0.2);
  TensorD real({1, 1, 32}), fake({1, 1, 32});
  for (auto& v : real.values()) v = rng.normal();
  for (auto& v : fake.values()) v = rng.normal();
  double expected = 0;
  for (std::size_t i = 0; i < 32; ++i) expected += w[i] * (fake[i] - real[i]);
  Rng r0(1), r1(1), r2(1);
  const auto plain = d_loss(D, real, fake, 0.0, r0);
  EXPECT_NEAR(plain.total, expected, 1e-12);
  EXPECT_EQ(plain.total, plain.wasserstein);
  const auto l1 = d_loss(D, real, fake, 1.0, r1), l2 = d_loss(D, real, fake, 2.0, r2);
  EXPECT_NEAR(l2.total - l2.wasserstein, 2 * (l1.total - l1.wasserstein), 1e-12);

  TensorD same({2, 1, 32});
  for (auto& v : same.values()) v = rng.normal();
  Rng r3(2);
  EXPECT_NEAR(d_loss(D, same, same, 0.0, r3).total, 0.0, 1e-15);
}

TEST(Losses, CodeCrossEntropyValues) {
  const std::vector<HardCode> codes{{CodeKind::binary, 3, 0b101}};
  EXPECT_NEAR(code_cross_entropy(CodeKind::binary, TensorD({1, 3}, {0.5, 0.5, 0.5}), codes), 3 * std::log(2.0), 1e-15);
  const std::vector<HardCode> one{{CodeKind::one_hot, 3, 1}};
  EXPECT_LT(code_cross_entropy(CodeKind::one_hot, TensorD({1, 3}, {0, 1, 0}), one), 1e-7);
  EXPECT_NEAR(code_cross_entropy(CodeKind::one_hot, TensorD({1, 3}, {0.2, 0, 0.8}), one), -std::log(kPosteriorClamp), 1e-9);

  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    TensorD post({2, 4});
    std::vector<HardCode> c(2);
    double direct = 0;
    for (std::size_t b = 0; b < 2; ++b) {
      c[b] = {CodeKind::binary, 4, static_cast<std::size_t>(rng.uniform_int(0, 15))};
      for (std::size_t i = 0; i < 4; ++i) {
        post[b * 4 + i] = rng.uniform(0.01, 0.99);
        direct -= c[b].bit(i) ? std::log(post[b * 4 + i]) : std::log(1 - post[b * 4 + i]);
      }
    }
    EXPECT_NEAR(code_cross_entropy(CodeKind::binary, post, c), direct / 2, 1e-7);
  }
}

TEST(Losses, QLossAtMaximalUncertainty) {
  Rng rng(7);
  const auto spec = LatentSpec::binary(3);
  auto Q = make_q_network(spec, tiny_arch(), rng);
  auto& head = Q.layers().back();
  head.weight.fill(0);
  head.bias.fill(0);
  Tensor audio({2, 1, 256});
  for (auto& v : audio.values()) v = static_cast<float>(rng.uniform(-1, 1));
  const std::vector<HardCode> codes{{CodeKind::binary, 3, 5}, {CodeKind::binary, 3, 2}};
  Tensor gx;
  EXPECT_NEAR(q_loss(Q, spec.kind, audio, codes, &gx), 3 * std::log(2.0), 1e-6);
  EXPECT_EQ(gx.shape(), audio.shape());
}

TEST(GradCheck, GeneratorCriticStack) {
  Rng rng(8);
  const auto spec = LatentSpec::one_hot(3, 5);
  auto G = make_generator(spec, tiny_arch(), rng).cast<double>();
  auto D = make_discriminator(tiny_arch(), rng).cast<double>();
  for (int point = 0; point < 10; ++point) {
    std::vector<HardCode> codes;
    const auto z = random_latents(spec, 2, rng, &codes);
    jitter(G, rng);
    jitter(D, rng);
    const ScalarFunction wrt_g = [&](const TensorD& theta, TensorD* grad) {
      scatter(G, theta);
      ForwardTrace<double> tg, td;
      const auto s = D.forward(G.forward(z, &tg), &td);
      if (grad) {
        G.zero_grad();
        const auto gx = D.backward(td, TensorD(s.shape(), 1.0), false);
        G.backward(tg, gx, true);
        *grad = gather_grad(G);
      }
      return s[0] + s[1];
    };
    const auto theta = gather(G);
    const auto coords = sample_coordinates(theta.size(), 40, rng);
    EXPECT_LT(grad_check(wrt_g, theta, 1e-6, coords), 1e-3) << "point " << point;
  }
}

TEST(GradCheck, GeneratorQStack) {
  Rng rng(9);
  const auto spec = LatentSpec::binary(2, 5);
  auto G = make_generator(spec, tiny_arch(), rng).cast<double>();
  auto Q = make_q_network(spec, tiny_arch(), rng).cast<double>();
  for (int point = 0; point < 10; ++point) {
    std::vector<HardCode> codes;
    const auto z = random_latents(spec, 2, rng, &codes);
    jitter(G, rng);
    jitter(Q, rng);
    const ScalarFunction wrt_g = [&](const TensorD& theta, TensorD* grad) {
      scatter(G, theta);
      ForwardTrace<double> tg;
      const auto audio = G.forward(z, &tg);
      TensorD gx;
      const double loss = q_loss(Q, spec.kind, audio, codes, grad ? &gx : nullptr, false);
      if (grad) {
        G.zero_grad();
        G.backward(tg, gx, true);
        *grad = gather_grad(G);
      }
      return loss;
    };
    const ScalarFunction wrt_q = [&](const TensorD& theta, TensorD* grad) {
      scatter(Q, theta);
      const auto audio = G.forward(z);
      const double loss = q_loss<double>(Q, spec.kind, audio, codes, nullptr, grad != nullptr);
      if (grad) *grad = gather_grad(Q);
      return loss;
    };
    const auto tg = gather(G), tq = gather(Q);
    EXPECT_LT(grad_check(wrt_g, tg, 1e-6, sample_coordinates(tg.size(), 40, rng)), 1e-3) << "point " << point;
    EXPECT_LT(grad_check(wrt_q, tq, 1e-6, sample_coordinates(tq.size(), 40, rng)), 1e-3) << "point " << point;
  }
}

TEST(GradCheck, PenaltyParameterGradient) {
  Rng rng(10);
  auto D = make_discriminator(tiny_arch(), rng).cast<double>();
  TensorD real({2, 1, 256}), fake({2, 1, 256});
  for (auto& v : real.values()) v = rng.uniform(-1, 1);
  for (auto& v : fake.values()) v = rng.uniform(-1, 1);
  const std::vector<double> eps{0.3, 0.8};
  const ScalarFunction f = [&](const TensorD& theta, TensorD* grad) {
    scatter(D, theta);
    if (grad) D.zero_grad();
    const double p = gradient_penalty(D, real, fake, rng, grad ? 1.0 : 0.0, nullptr, eps);
    if (grad) *grad = gather_grad(D);
    return p;
  };
  const auto theta = gather(D);
  EXPECT_LT(grad_check(f, theta, 1e-6, sample_coordinates(theta.size(), 60, rng)), 1e-4);
}
