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

#include <filesystem>
#include <fstream>

#include "ciwgan/trainer.hpp"

using namespace ciwgan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ciwgan_train_" + name);
  fs::remove_all(p);
  return p;
}

TrainConfig small_config(std::uint64_t steps) {
  TrainConfig c = TrainConfig::desk(LatentSpec::binary(2, 8));
  c.arch.slice_len = 1024;
  c.arch.model_dim = 2;
  c.batch = 4;
  c.steps = steps;
  c.seed = 42;
  c.record_wall_time = false;
  return c;
}

std::vector<Token> small_corpus(std::size_t slice_len = 1024) {
  Rng rng(1);
  auto tokens = make_toy_corpus(2, 10, slice_len, rng);
  Rng split(2);
  split_corpus(tokens, 0.2, split);
  return tokens;
}

std::vector<std::vector<float>> snapshot(const ModelSet& m) {
  std::vector<std::vector<float>> out;
  for (const auto* net : {&m.G, &m.D, &m.Q})
    for (auto* p : net->params()) out.push_back(p->storage());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(3);
  auto m = ModelSet::create(LatentSpec::one_hot(4), ArchitectureConfig::desk_scale(), rng);
  const auto dir = temp_dir("ckpt");
  save_checkpoint(dir, m, 17, {{"note", "x"}});
  auto loaded = load_checkpoint(dir);
  EXPECT_EQ(loaded.step, 17u);
  EXPECT_EQ(loaded.manifest.at("extra").at("note"), "x");
  EXPECT_EQ(loaded.models.latent.layout(), m.latent.layout());
  EXPECT_EQ(snapshot(loaded.models), snapshot(m));
  LatentVector lv{sample_noise(m.latent, rng), code_values(HardCode{CodeKind::one_hot, 4, 1}, 1.0)};
  EXPECT_EQ(generate(loaded.models.G, lv).samples, generate(m.G, lv).samples);
  fs::remove_all(dir);
}

TEST(Checkpoint, DamageIsReported) {
  Rng rng(4);
  auto m = ModelSet::create(LatentSpec::binary(3), ArchitectureConfig::desk_scale(), rng);
  const auto dir = temp_dir("damaged");
  save_checkpoint(dir, m, 0);
  EXPECT_THROW(load_checkpoint(dir / "missing"), IoError);

  write_f32_le(dir / "qnetwork.head.bias.f32", std::vector<float>{1.0f});
  EXPECT_THROW(load_checkpoint(dir), IoError);
  save_checkpoint(dir, m, 0);

  auto j = nlohmann::json::parse(read_text(dir / "manifest.json"));
  j["fingerprints"]["generator"] = "something else";
  write_text(dir / "manifest.json", j.dump());
  EXPECT_THROW(load_checkpoint(dir), IoError);

  write_text(dir / "manifest.json", "{ not json");
  EXPECT_THROW(load_checkpoint(dir), IoError);
  fs::remove_all(dir);
}

TEST(TrainConfigJson, RoundTripAndValidation) {
  const auto c = small_config(7);
  const auto back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(train_config_from_json({{"stepz", 3}}), ValidationError);
  EXPECT_THROW(train_config_from_json({{"batch", 0}}), ValidationError);
  EXPECT_THROW(train_config_from_json({{"adam", {{"beta1", 1.0}}}}), ValidationError);
  EXPECT_THROW(train_config_from_json({{"architecture", {{"slice_len", 1000}}}}), ValidationError);
  EXPECT_THROW(train_config_from_json({{"batch", "many"}}), ValidationError);
  const auto paper = TrainConfig::paper(LatentSpec::binary(9));
  EXPECT_EQ(paper.batch, 64u);
  EXPECT_EQ(paper.arch.slice_len, 16384u);
  EXPECT_EQ(paper.latent.num_codes(), 512u);
}

TEST(TrainStep, ScheduleArithmeticAndFiniteLosses) {
  const auto cfg = small_config(1);
  const auto corpus = small_corpus();
  BatchSampler data(corpus, cfg.arch.slice_len);
  auto st = init_train_state(cfg);
  const auto rec = train_step(st, cfg, data);
  EXPECT_EQ(rec.step, 1u);
  EXPECT_EQ(st.real_batches, 5u);
  EXPECT_EQ(st.latent_batches, 6u);
  EXPECT_TRUE(std::isfinite(rec.d_loss) && std::isfinite(rec.g_loss) && std::isfinite(rec.q_loss));
  EXPECT_GE(rec.q_loss, 0.0);
  EXPECT_GE(rec.gp, 0.0);
}

TEST(TrainStep, ZeroLearningRateLeavesParameters) {
  auto cfg = small_config(1);
  cfg.adam.learning_rate = 0;
  const auto corpus = small_corpus();
  BatchSampler data(corpus, cfg.arch.slice_len);
  auto st = init_train_state(cfg);
  const auto before = snapshot(st.models);
  const auto rec = train_step(st, cfg, data);
  EXPECT_EQ(snapshot(st.models), before);
  EXPECT_TRUE(std::isfinite(rec.g_loss));
}

TEST(TrainStep, SameSeedSameRun) {
  const auto cfg = small_config(3);
  const auto corpus = small_corpus();
  BatchSampler data(corpus, cfg.arch.slice_len);
  auto a = init_train_state(cfg), b = init_train_state(cfg);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(to_csv(train_step(a, cfg, data)), to_csv(train_step(b, cfg, data)));
  EXPECT_EQ(snapshot(a.models), snapshot(b.models));
  auto other = cfg;
  other.seed = 43;
  auto c = init_train_state(other);
  EXPECT_NE(snapshot(c.models), snapshot(init_train_state(cfg).models));
}

TEST(TrainStep, ZeroSumAdversarialTerm) {
  // With q_weight 0 the generator loss is -mean D(fake), the negated fake term of the critic.
  auto cfg = small_config(1);
  cfg.q_weight = 0;
  cfg.arch.phase_shuffle = 0;
  cfg.adam.learning_rate = 0;
  const auto corpus = small_corpus();
  BatchSampler data(corpus, cfg.arch.slice_len);
  auto st = init_train_state(cfg);
  Rng latent_copy = st.latent_rng;
  for (std::size_t i = 0; i < cfg.n_critic; ++i) (void)detail::latent_tensor(cfg.latent, cfg.batch, latent_copy, nullptr);
  const Tensor fake = st.models.G.forward(detail::latent_tensor(cfg.latent, cfg.batch, latent_copy, nullptr));
  const Tensor scores = st.models.D.forward(fake);
  double mean_fake = 0;
  for (std::size_t b = 0; b < cfg.batch; ++b) mean_fake += scores[b];
  mean_fake /= static_cast<double>(cfg.batch);
  const auto rec = train_step(st, cfg, data);
  EXPECT_NEAR(rec.g_loss, -mean_fake, 1e-6);
}

TEST(BatchSampler, NeverServesHeldOutTokens) {
  auto corpus = small_corpus();
  std::set<std::string> train_audio;
  for (const auto& t : corpus)
    if (t.split == Split::train) train_audio.insert(content_hash(t.clip));
  BatchSampler data(corpus, 1024);
  EXPECT_EQ(data.size(), 16u);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto batch = data.sample(4, rng);
    for (std::size_t b = 0; b < 4; ++b) {
      AudioClip c;
      c.samples.assign(batch.data() + b * 1024, batch.data() + (b + 1) * 1024);
      EXPECT_TRUE(train_audio.count(content_hash(c)));
    }
  }
  EXPECT_THROW(BatchSampler(corpus, 4096), ValidationError);
  auto leaked = corpus;
  for (auto& t : leaked)
    if (t.split == Split::test) {
      t.hash = leaked.front().hash;
      break;
    }
  EXPECT_THROW(BatchSampler(leaked, 1024), ValidationError);
}

TEST(Train, ZeroStepsWritesInitialCheckpoint) {
  const auto dir = temp_dir("zero");
  const auto cfg = small_config(0);
  const auto res = train(cfg, small_corpus(), dir);
  EXPECT_EQ(res.final_checkpoint.filename(), "ckpt_00000000");
  std::size_t ckpts = 0;
  for (const auto& e : fs::directory_iterator(dir)) ckpts += e.path().filename().string().rfind("ckpt_", 0) == 0;
  EXPECT_EQ(ckpts, 1u);
  auto loaded = load_checkpoint(res.final_checkpoint);
  auto init = init_train_state(cfg);
  EXPECT_EQ(snapshot(loaded.models), snapshot(init.models));
  EXPECT_EQ(slurp(dir / "train_log.csv"), csv_header());
  fs::remove_all(dir);
}

TEST(Train, CadenceLogsAndReproducibility) {
  auto cfg = small_config(4);
  cfg.checkpoint_every = 2;
  const auto corpus = small_corpus();
  const auto a = temp_dir("run_a"), b = temp_dir("run_b");
  const auto ra = train(cfg, corpus, a);
  train(cfg, corpus, b);
  EXPECT_TRUE(fs::exists(a / "ckpt_00000002" / "manifest.json"));
  EXPECT_EQ(ra.final_checkpoint, a / "ckpt_00000004");
  EXPECT_EQ(ra.log.size(), 4u);
  const auto log = slurp(a / "train_log.csv");
  EXPECT_EQ(log, slurp(b / "train_log.csv"));
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 5);
  EXPECT_NE(log.find(",0.000\n"), std::string::npos);
  for (const auto& e : fs::directory_iterator(a / "ckpt_00000004"))
    EXPECT_EQ(slurp(e.path()), slurp(b / "ckpt_00000004" / e.path().filename())) << e.path();

  cfg.steps = 3;
  cfg.checkpoint_every = 2;
  const auto c = temp_dir("run_c");
  EXPECT_EQ(train(cfg, corpus, c).final_checkpoint, c / "ckpt_00000003");
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}
