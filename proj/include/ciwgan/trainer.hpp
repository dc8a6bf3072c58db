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

// Training loop: n_critic critic updates with gradient penalty, then a joint
// generator + Q-network update on the adversarial and code-recovery losses.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ciwgan/checkpoint.hpp"
#include "ciwgan/corpus.hpp"
#include "ciwgan/errors.hpp"
#include "ciwgan/latent.hpp"
#include "ciwgan/losses.hpp"
#include "ciwgan/models.hpp"
#include "ciwgan/optimizer.hpp"
#include "ciwgan/rng.hpp"

namespace ciwgan {

struct TrainConfig {
  LatentSpec latent = LatentSpec::one_hot(4);
  ArchitectureConfig arch = ArchitectureConfig::desk_scale();
  std::size_t batch = 16;
  std::uint64_t steps = 1000;
  std::size_t n_critic = 5;
  double gp_weight = 10.0;
  double q_weight = 1.0;
  AdamHyper adam;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 0;  // 0: final checkpoint only
  std::uint64_t log_every = 1;
  bool record_wall_time = true;  // false writes 0 in the seconds column

  /// Desk runs are a few thousand steps, so the step size is doubled.
  static TrainConfig desk(const LatentSpec& latent) {
    TrainConfig c;
    c.latent = latent;
    c.adam.learning_rate = 2e-4;
    return c;
  }
  static TrainConfig paper(const LatentSpec& latent) {
    TrainConfig c;
    c.latent = latent;
    c.arch = ArchitectureConfig::paper_scale();
    c.batch = 64;
    return c;
  }

  void validate() const {
    latent.validate();
    (void)arch.stages();
    if (batch == 0) throw ValidationError("train: batch must be positive");
    if (n_critic == 0) throw ValidationError("train: n_critic must be positive");
    if (log_every == 0) throw ValidationError("train: log_every must be positive");
    if (!(gp_weight >= 0)) throw ValidationError("train: gp_weight must be >= 0");
    if (!(q_weight >= 0)) throw ValidationError("train: q_weight must be >= 0");
    if (!(adam.learning_rate >= 0)) throw ValidationError("train: learning_rate must be >= 0");
    if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1))
      throw ValidationError("train: Adam betas must lie in [0, 1)");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"latent", to_json(c.latent)},
          {"architecture", to_json(c.arch)},
          {"batch", c.batch},
          {"steps", c.steps},
          {"n_critic", c.n_critic},
          {"gp_weight", c.gp_weight},
          {"q_weight", c.q_weight},
          {"adam", {{"learning_rate", c.adam.learning_rate}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"log_every", c.log_every},
          {"record_wall_time", c.record_wall_time}};
}

/// Missing keys keep the values already in `base`.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  static const std::set<std::string> known{"latent", "architecture", "batch", "steps", "n_critic", "gp_weight",
                                           "q_weight", "adam", "seed", "checkpoint_every", "log_every",
                                           "record_wall_time"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ValidationError("train config: unknown key '" + k + "'");
  try {
    if (j.contains("latent")) {
      auto merged = to_json(base.latent);
      merged.update(j.at("latent"));
      base.latent = latent_from_json(merged);
    }
    if (j.contains("architecture")) {
      auto merged = to_json(base.arch);
      merged.update(j.at("architecture"));
      base.arch = arch_from_json(merged);
    }
    base.batch = j.value("batch", base.batch);
    base.steps = j.value("steps", base.steps);
    base.n_critic = j.value("n_critic", base.n_critic);
    base.gp_weight = j.value("gp_weight", base.gp_weight);
    base.q_weight = j.value("q_weight", base.q_weight);
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      base.adam.learning_rate = a.value("learning_rate", base.adam.learning_rate);
      base.adam.beta1 = a.value("beta1", base.adam.beta1);
      base.adam.beta2 = a.value("beta2", base.adam.beta2);
      base.adam.epsilon = a.value("epsilon", base.adam.epsilon);
    }
    base.seed = j.value("seed", base.seed);
    base.checkpoint_every = j.value("checkpoint_every", base.checkpoint_every);
    base.log_every = j.value("log_every", base.log_every);
    base.record_wall_time = j.value("record_wall_time", base.record_wall_time);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  base.validate();
  return base;
}

/// Uniform sampling with replacement from the training split only.
class BatchSampler {
 public:
  BatchSampler(const std::vector<Token>& tokens, std::size_t slice_len) : slice_len_(slice_len) {
    assert_no_leakage(tokens);
    for (const auto& t : tokens) {
      if (t.split != Split::train) {
        test_hashes_.insert(t.hash);
        continue;
      }
      if (t.clip.size() != slice_len)
        throw ValidationError("train: token '" + t.id + "' has " + std::to_string(t.clip.size()) +
                              " samples, model slice length is " + std::to_string(slice_len));
      clips_.push_back(&t.clip.samples);
      hashes_.push_back(t.hash);
    }
    if (clips_.empty()) throw ValidationError("train: corpus has no training tokens");
  }

  std::size_t size() const noexcept { return clips_.size(); }

  Tensor sample(std::size_t batch, Rng& rng) const {
    Tensor t({batch, 1, slice_len_});
    for (std::size_t b = 0; b < batch; ++b) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(clips_.size()) - 1));
      if (test_hashes_.count(hashes_[i])) throw ValidationError("train: held-out token reached a training batch");
      std::copy(clips_[i]->begin(), clips_[i]->end(), t.data() + b * slice_len_);
    }
    return t;
  }

 private:
  std::size_t slice_len_;
  std::vector<const std::vector<float>*> clips_;
  std::vector<std::string> hashes_;
  std::set<std::string> test_hashes_;
};

struct TrainLogRecord {
  std::uint64_t step = 0;
  double d_loss = 0, g_loss = 0, q_loss = 0, gp = 0;
  double seconds = 0;
};

inline std::string csv_header() { return "step,d_loss,g_loss,q_loss,gp,seconds\n"; }

inline std::string to_csv(const TrainLogRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%.9g,%.9g,%.9g,%.9g,%.3f\n", static_cast<unsigned long long>(r.step), r.d_loss,
                r.g_loss, r.q_loss, r.gp, r.seconds);
  return buf;
}

struct TrainState {
  ModelSet models;
  OptimizerState<float> opt_g, opt_d, opt_q;
  std::uint64_t step = 0;
  Rng data_rng, latent_rng, penalty_rng, shuffle_rng;
  std::uint64_t real_batches = 0, latent_batches = 0;
};

/// Independent streams derived from the run seed: model init, data order,
/// latent draws, penalty mixing weights, phase shuffle.
inline TrainState init_train_state(const TrainConfig& config) {
  config.validate();
  Rng master(config.seed);
  Rng init = master.fork();
  TrainState s{ModelSet::create(config.latent, config.arch, init), {}, {}, {}, 0,
               master.fork(), master.fork(), master.fork(), master.fork()};
  s.opt_g.hyper = s.opt_d.hyper = s.opt_q.hyper = config.adam;
  return s;
}

namespace detail {

inline void require_finite_grads(Network<float>& net, const char* what) {
  for (auto* p : net.params())
    for (float g : p->grad())
      if (!std::isfinite(g)) throw NumericalError(std::string(what) + ": non-finite gradient in " + net.name());
}

inline Tensor latent_tensor(const LatentSpec& spec, std::size_t batch, Rng& rng, std::vector<HardCode>* codes) {
  std::vector<LatentVector> lv;
  lv.reserve(batch);
  if (codes) codes->resize(batch);
  for (std::size_t b = 0; b < batch; ++b) lv.push_back(sample_latent(spec, rng, codes ? &(*codes)[b] : nullptr));
  return latent_batch(lv);
}

}  // namespace detail

/// One global step. Nothing is updated if any loss or gradient of the step's
/// final phase is non-finite; a failing critic phase leaves earlier critic
/// updates of the same step in place.
inline TrainLogRecord train_step(TrainState& s, const TrainConfig& config, const BatchSampler& data) {
  auto& m = s.models;
  const std::size_t B = config.batch;
  TrainLogRecord rec;

  for (std::size_t i = 0; i < config.n_critic; ++i) {
    const Tensor real = data.sample(B, s.data_rng);
    ++s.real_batches;
    const Tensor fake = m.G.forward(detail::latent_tensor(config.latent, B, s.latent_rng, nullptr));
    ++s.latent_batches;
    const auto loss = d_loss(m.D, real, fake, config.gp_weight, s.penalty_rng, &s.shuffle_rng);
    detail::require_finite_grads(m.D, "critic step");
    optimizer_step(m.D.params(), s.opt_d);
    rec.d_loss = loss.total;
    rec.gp = loss.penalty;
  }

  std::vector<HardCode> codes;
  const Tensor latents = detail::latent_tensor(config.latent, B, s.latent_rng, &codes);
  ++s.latent_batches;
  ForwardTrace<float> g_trace, d_trace;
  const Tensor fake = m.G.forward(latents, &g_trace);
  const Tensor score = m.D.forward(fake, &d_trace, &s.shuffle_rng);
  double adv = 0;
  for (std::size_t b = 0; b < B; ++b) adv -= score[b];
  adv /= static_cast<double>(B);
  Tensor grad_fake = m.D.backward(d_trace, Tensor(score.shape(), static_cast<float>(-1.0 / static_cast<double>(B))), false);

  Tensor q_grad;
  rec.q_loss = q_loss(m.Q, config.latent.kind, fake, codes, &q_grad, true, &s.shuffle_rng);
  const float qw = static_cast<float>(config.q_weight);
  for (std::size_t i = 0; i < grad_fake.size(); ++i) grad_fake[i] += qw * q_grad[i];
  rec.g_loss = adv + config.q_weight * rec.q_loss;
  if (!std::isfinite(rec.g_loss)) throw NumericalError("generator step: non-finite loss");

  m.G.zero_grad();
  m.G.backward(g_trace, grad_fake, true);
  detail::require_finite_grads(m.G, "generator step");
  detail::require_finite_grads(m.Q, "q step");
  optimizer_step(m.G.params(), s.opt_g);
  optimizer_step(m.Q.params(), s.opt_q);

  rec.step = ++s.step;
  return rec;
}

inline std::string checkpoint_name(std::uint64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%08llu", static_cast<unsigned long long>(step));
  return buf;
}

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::vector<TrainLogRecord> log;
};

using StepCallback = std::function<void(const TrainLogRecord&, TrainState&)>;

/// Runs config.steps steps, writing train_log.csv and checkpoints under
/// `out_dir`. A checkpoint is always written at the last step (step 0 when
/// steps is 0).
inline TrainResult train(const TrainConfig& config, const std::vector<Token>& corpus, const std::filesystem::path& out_dir,
                         const StepCallback& on_step = {}) {
  config.validate();
  const BatchSampler data(corpus, config.arch.slice_len);
  TrainState state = init_train_state(config);
  std::filesystem::create_directories(out_dir);
  std::ofstream log(out_dir / "train_log.csv", std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write '" + (out_dir / "train_log.csv").string() + "'");
  log << csv_header();

  TrainResult result;
  const nlohmann::json extra{{"train_config", to_json(config)}, {"sample_rate", corpus.front().clip.rate}};
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::path last_ckpt;
  for (std::uint64_t i = 0; i < config.steps; ++i) {
    TrainLogRecord rec = train_step(state, config, data);
    if (config.record_wall_time) rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rec.step % config.log_every == 0 || rec.step == config.steps) {
      log << to_csv(rec);
      log.flush();
      result.log.push_back(rec);
    }
    if (config.checkpoint_every && rec.step % config.checkpoint_every == 0) {
      last_ckpt = out_dir / checkpoint_name(rec.step);
      save_checkpoint(last_ckpt, state.models, rec.step, extra);
    }
    if (on_step) on_step(rec, state);
  }
  if (last_ckpt.empty() || config.steps % config.checkpoint_every != 0) {
    last_ckpt = out_dir / checkpoint_name(state.step);
    save_checkpoint(last_ckpt, state.models, state.step, extra);
  }
  result.final_checkpoint = last_ckpt;
  return result;
}

}  // namespace ciwgan
