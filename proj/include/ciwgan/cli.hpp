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

// Command-line front end. run_cli parses argv, dispatches to the pipeline and
// maps errors to exit codes.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ciwgan/pipeline.hpp"

namespace ciwgan::cli {

enum ExitCode : int { ok = 0, validation = 2, numerical = 3, io = 4, internal = 1 };

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline std::vector<std::size_t> parse_indices(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.front() == '-') throw ValidationError("'" + item + "' is not a bit index");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError("empty bit list '" + s + "'");
  return out;
}

inline double parse_number(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw ValidationError(std::string(what) + ": '" + s + "' is not a number");
  return v;
}

/// "one_hot:8" or "binary:3".
inline nlohmann::json parse_latent_flag(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ValidationError("--latent expects KIND:SIZE, got '" + s + "'");
  const auto kind = parse_code_kind(s.substr(0, colon));
  const auto size = static_cast<std::size_t>(parse_number(s.substr(colon + 1), "--latent size"));
  return {{"kind", to_string(kind)}, {"code_size", size}};
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"ciwgan: categorical and featural InfoWaveGAN on raw audio"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pipeline::kCodeVersion);

  pipeline::PrepareOptions prep;
  std::vector<std::size_t> toy;
  std::string prep_out, prep_dir;
  auto* c_prep = app.add_subcommand("prepare", "Slice, split and store a corpus");
  c_prep->add_option("--toy", toy, "Synthetic corpus: CLASSES TOKENS_PER_CLASS")->expected(2);
  c_prep->add_option("--corpus-dir", prep_dir, "Directory of word/token.wav files");
  c_prep->add_option("--slice-len", prep.slice_len, "Samples per slice")->capture_default_str();
  c_prep->add_option("--rate", prep.rate, "Sample rate in Hz")->capture_default_str();
  c_prep->add_option("--test-fraction", prep.test_fraction, "Held-out fraction per word")->capture_default_str();
  c_prep->add_option("--seed", prep.seed, "Seed")->capture_default_str();
  c_prep->add_option("--overlength", prep.overlength, "strict or center_crop")->capture_default_str();
  c_prep->add_option("--out", prep_out, "Output directory")->required();

  std::string tr_corpus, tr_out, tr_config, tr_scale = "desk", tr_latent;
  std::optional<std::uint64_t> tr_steps, tr_seed, tr_ckpt_every, tr_log_every;
  std::optional<std::size_t> tr_batch;
  std::optional<double> tr_lr;
  bool tr_no_wall = false, tr_quiet = false;
  auto* c_train = app.add_subcommand("train", "Train G, D and Q on a prepared corpus");
  c_train->add_option("--corpus", tr_corpus, "Prepared corpus directory")->required();
  c_train->add_option("--out", tr_out, "Run directory")->required();
  c_train->add_option("--config", tr_config, "JSON config file");
  c_train->add_option("--scale", tr_scale, "Preset: desk or paper")->capture_default_str();
  c_train->add_option("--latent", tr_latent, "one_hot:K or binary:N");
  c_train->add_option("--steps", tr_steps, "Training steps");
  c_train->add_option("--seed", tr_seed, "Seed");
  c_train->add_option("--batch", tr_batch, "Batch size");
  c_train->add_option("--lr", tr_lr, "Adam learning rate");
  c_train->add_option("--checkpoint-every", tr_ckpt_every, "Checkpoint cadence in steps (0: final only)");
  c_train->add_option("--log-every", tr_log_every, "Log cadence in steps");
  c_train->add_flag("--no-wall-time", tr_no_wall, "Write 0 in the seconds column so logs are byte-reproducible");
  c_train->add_flag("--quiet", tr_quiet, "Do not echo log lines");

  pipeline::ClassifyOptions cls;
  std::string cls_ckpt, cls_corpus, cls_out;
  auto* c_cls = app.add_subcommand("classify", "Run Q over the held-out split");
  c_cls->add_option("--checkpoint", cls_ckpt, "Checkpoint directory")->required();
  c_cls->add_option("--corpus", cls_corpus, "Prepared corpus directory")->required();
  c_cls->add_option("--out", cls_out, "Output directory")->required();

  pipeline::GenerateOptions gen;
  std::string gen_ckpt, gen_out;
  std::vector<std::string> gen_interp;
  std::optional<double> gen_marginal;
  auto* c_gen = app.add_subcommand("generate", "Write marginal samples or interpolation sweeps");
  c_gen->add_option("--checkpoint", gen_ckpt, "Checkpoint directory")->required();
  c_gen->add_option("--out", gen_out, "Output directory")->required();
  c_gen->add_option("--marginal", gen_marginal, "Scale for the active code entries");
  c_gen->add_option("--interpolate", gen_interp, "BITS FROM TO STEP, bits 1-based and comma separated")->expected(4);
  c_gen->add_option("--code", gen.base_code, "Hard code for the entries not swept (default all zero)");
  c_gen->add_option("-n,--n", gen.n, "Clips per code, or number of sweeps")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Seed")->capture_default_str();

  pipeline::AnalyzeOptions an;
  std::string an_records, an_out, an_logistic, an_peaks;
  std::vector<std::string> an_grouped;
  bool an_multi = false, an_table = false;
  auto* c_an = app.add_subcommand("analyze", "Statistics over a records CSV");
  c_an->add_option("--records", an_records, "records.csv from classify")->required();
  c_an->add_option("--out", an_out, "Output directory")->required();
  c_an->add_flag("--multinomial", an_multi, "Word ~ code against word ~ 1");
  c_an->add_option("--logistic", an_logistic, "PROPERTY ~ phi_1 + ... + phi_n");
  c_an->add_option("--grouped", an_grouped, "BITS PROPERTY")->expected(2);
  c_an->add_option("--peaks", an_peaks, "Comma separated words, or 'all'");
  c_an->add_flag("--table", an_table, "Cluster purity and permutation test");
  c_an->add_option("--ridge", an.ridge, "L2 penalty")->capture_default_str();
  c_an->add_option("--permutations", an.permutations, "Permutations for --table")->capture_default_str();
  c_an->add_option("--seed", an.seed, "Seed for --table")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : validation;
  }

  try {
    if (c_prep->parsed()) {
      if (!toy.empty()) prep.toy = std::pair{toy[0], toy[1]};
      prep.corpus_dir = prep_dir;
      prep.out = prep_out;
      const auto r = pipeline::cmd_prepare(prep);
      out << "prepared " << r.train + r.test << " tokens (" << r.train << " train, " << r.test << " test), hash "
          << r.manifest.content_hash << "\n";
      for (const auto& w : r.split.warnings) err << "warning: " << w << "\n";
    } else if (c_train->parsed()) {
      nlohmann::json file = nlohmann::json::object(), flags = nlohmann::json::object();
      if (!tr_config.empty()) {
        try {
          file = nlohmann::json::parse(read_text(tr_config));
        } catch (const nlohmann::json::parse_error& e) {
          throw ValidationError("config '" + tr_config + "': " + e.what());
        }
      }
      if (!tr_latent.empty()) flags["latent"] = parse_latent_flag(tr_latent);
      if (tr_steps) flags["steps"] = *tr_steps;
      if (tr_seed) flags["seed"] = *tr_seed;
      if (tr_batch) flags["batch"] = *tr_batch;
      if (tr_lr) flags["adam"] = {{"learning_rate", *tr_lr}};
      if (tr_ckpt_every) flags["checkpoint_every"] = *tr_ckpt_every;
      if (tr_log_every) flags["log_every"] = *tr_log_every;
      if (tr_no_wall) flags["record_wall_time"] = false;
      pipeline::TrainOptions o{pipeline::resolve_train_config(tr_scale, LatentSpec::one_hot(4), file, flags), tr_corpus, tr_out};
      const auto every = o.config.log_every;
      const auto res = pipeline::cmd_train(o, [&](const TrainLogRecord& r, TrainState&) {
        if (!tr_quiet && r.step % every == 0) out << to_csv(r) << std::flush;
      });
      out << "final checkpoint " << res.final_checkpoint.string() << "\n";
    } else if (c_cls->parsed()) {
      cls = {cls_ckpt, cls_corpus, cls_out};
      const auto rec = pipeline::cmd_classify(cls);
      out << "classified " << rec.size() << " held-out tokens\n";
    } else if (c_gen->parsed()) {
      gen.checkpoint = gen_ckpt;
      gen.out = gen_out;
      gen.marginal = gen_marginal;
      if (!gen_interp.empty()) {
        gen.interpolate_bits = parse_indices(gen_interp[0]);
        gen.from = parse_number(gen_interp[1], "--interpolate FROM");
        gen.to = parse_number(gen_interp[2], "--interpolate TO");
        gen.step = parse_number(gen_interp[3], "--interpolate STEP");
      }
      const auto r = pipeline::cmd_generate(gen);
      if (gen.marginal) out << "wrote " << r.marginal.size() << " clips\n";
      else out << "wrote " << r.sweeps.size() << " sweeps of " << r.sweeps.front().clips.size() << " clips\n";
    } else if (c_an->parsed()) {
      const int modes = an_multi + an_table + !an_logistic.empty() + !an_grouped.empty() + !an_peaks.empty();
      if (modes != 1) throw ValidationError("analyze: give exactly one of --multinomial, --logistic, --grouped, --peaks, --table");
      an.records = an_records;
      an.out = an_out;
      if (an_multi) an.mode = "multinomial";
      if (an_table) an.mode = "table";
      if (!an_logistic.empty()) an.mode = "logistic", an.property = an_logistic;
      if (!an_grouped.empty()) an.mode = "grouped", an.bits = parse_indices(an_grouped[0]), an.property = an_grouped[1];
      if (!an_peaks.empty()) {
        an.mode = "peaks";
        if (an_peaks != "all") an.words = split_list(an_peaks);
      }
      const auto r = pipeline::cmd_analyze(an);
      out << r.summary.dump(2) << "\n";
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return validation;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return validation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return io;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return io;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return internal;
  }
  return ok;
}

}  // namespace ciwgan::cli
