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

// The five pipeline commands behind the command-line tool. Each one validates
// its inputs before touching the output directory and leaves a
// run_manifest.json describing the run next to its artifacts.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ciwgan/checkpoint.hpp"
#include "ciwgan/corpus.hpp"
#include "ciwgan/errors.hpp"
#include "ciwgan/probe.hpp"
#include "ciwgan/raw_io.hpp"
#include "ciwgan/stats.hpp"
#include "ciwgan/trainer.hpp"

namespace ciwgan::pipeline {

inline constexpr const char* kCodeVersion = "ciwgan 0.1.0";
inline constexpr const char* kRunManifest = "run_manifest.json";

namespace fs = std::filesystem;
using nlohmann::json;

struct RunManifest {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  json inputs = json::object();  // name -> {path, hash}
  std::vector<std::string> artifacts;
};

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string file_hash(const fs::path& p) {
  const auto text = read_text(p);
  return hex64(fnv1a(text.data(), text.size()));
}

inline void write_run_manifest(const fs::path& dir, const RunManifest& m, const std::string& started) {
  json j{{"command", m.command},
         {"config", m.config},
         {"seed", m.seed},
         {"inputs", m.inputs},
         {"artifacts", m.artifacts},
         {"code_version", kCodeVersion},
         {"timestamps", {{"started", started}, {"finished", utc_timestamp()}}}};
  write_text(dir / kRunManifest, j.dump(2) + "\n");
}

/// Output directories must be new or empty so runs never mix.
inline void claim_output_dir(const fs::path& dir) {
  if (dir.empty()) throw ValidationError("an output directory is required");
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw IoError("output path '" + dir.string() + "' is not a directory");
    if (!fs::is_empty(dir)) throw IoError("output directory '" + dir.string() + "' is not empty");
  }
  fs::create_directories(dir);
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareOptions {
  std::optional<std::pair<std::size_t, std::size_t>> toy;  // classes, tokens per class
  fs::path corpus_dir;
  std::size_t slice_len = 4096;
  int rate = kDefaultRate;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::string overlength = "strict";  // or center_crop
  fs::path out;

  json to_json() const {
    json j{{"slice_len", slice_len}, {"rate", rate}, {"test_fraction", test_fraction}, {"seed", seed}, {"overlength", overlength}};
    if (toy) j["toy"] = {{"classes", toy->first}, {"tokens_per_class", toy->second}};
    else j["corpus_dir"] = corpus_dir.string();
    return j;
  }

  void validate() const {
    if (toy.has_value() == !corpus_dir.empty()) throw ValidationError("prepare: give exactly one of --toy or --corpus-dir");
    if (toy && toy->first < 2) throw ValidationError("prepare: toy corpus needs at least 2 classes");
    if (toy && toy->second == 0) throw ValidationError("prepare: toy corpus needs at least 1 token per class");
    if (slice_len == 0) throw ValidationError("prepare: slice_len must be positive");
    if (rate <= 0) throw ValidationError("prepare: rate must be positive");
    if (!(test_fraction > 0 && test_fraction < 1)) throw ValidationError("prepare: test_fraction must lie in (0, 1)");
    if (overlength != "strict" && overlength != "center_crop") throw ValidationError("prepare: overlength must be strict or center_crop");
  }
};

struct PrepareResult {
  CorpusManifest manifest;
  SplitReport split;
  std::size_t train = 0, test = 0;
};

inline PrepareResult cmd_prepare(const PrepareOptions& o) {
  o.validate();
  const auto started = utc_timestamp();
  Rng master(o.seed);
  Rng synth = master.fork(), split_rng = master.fork();
  std::vector<Token> tokens;
  json source;
  if (o.toy) {
    tokens = make_toy_corpus(o.toy->first, o.toy->second, o.slice_len, synth, o.rate);
    source = {{"kind", "toy"}, {"classes", o.toy->first}, {"tokens_per_class", o.toy->second}};
  } else {
    tokens = load_word_directory(o.corpus_dir, o.slice_len, o.rate,
                                 o.overlength == "strict" ? OverlengthPolicy::strict : OverlengthPolicy::center_crop);
    source = {{"kind", "directory"}, {"files", tokens.size()}};
  }
  claim_output_dir(o.out);
  PrepareResult r;
  r.split = split_corpus(tokens, o.test_fraction, split_rng);
  assert_no_leakage(tokens);
  source["split_warnings"] = r.split.warnings;
  r.manifest = describe_corpus(tokens, o.slice_len, o.rate, source);
  save_prepared_corpus(o.out, r.manifest, tokens);
  for (const auto& t : tokens) (t.split == Split::train ? r.train : r.test)++;

  RunManifest rm{"prepare", o.to_json(), o.seed, json::object(), {"manifest.json", "clips/"}};
  if (!o.corpus_dir.empty()) rm.inputs["corpus_dir"] = {{"path", o.corpus_dir.string()}};
  write_run_manifest(o.out, rm, started);
  return r;
}

// ---------------------------------------------------------------------------
// train

/// Preset, then the config file, then flag overrides; later entries win.
inline TrainConfig resolve_train_config(const std::string& scale, const LatentSpec& latent, const json& file, const json& flags) {
  if (scale != "desk" && scale != "paper") throw ValidationError("train: scale must be desk or paper");
  TrainConfig c = scale == "desk" ? TrainConfig::desk(latent) : TrainConfig::paper(latent);
  c = train_config_from_json(file, c);
  return train_config_from_json(flags, c);
}

struct TrainOptions {
  TrainConfig config;
  fs::path corpus;
  fs::path out;
};

inline TrainResult cmd_train(const TrainOptions& o, const StepCallback& on_step = {}) {
  o.config.validate();
  const auto started = utc_timestamp();
  const auto corpus = load_prepared_corpus(o.corpus);
  if (corpus.manifest.slice_len != o.config.arch.slice_len)
    throw ValidationError("train: config slice_len " + std::to_string(o.config.arch.slice_len) + " does not match corpus slice_len " +
                          std::to_string(corpus.manifest.slice_len));
  claim_output_dir(o.out);
  auto result = train(o.config, corpus.tokens, o.out, on_step);
  RunManifest rm{"train", to_json(o.config), o.config.seed, json::object(), {"train_log.csv"}};
  rm.inputs["corpus"] = {{"path", o.corpus.string()}, {"hash", corpus.manifest.content_hash}};
  for (const auto& e : fs::directory_iterator(o.out))
    if (e.is_directory()) rm.artifacts.push_back(e.path().filename().string() + "/");
  std::sort(rm.artifacts.begin(), rm.artifacts.end());
  write_run_manifest(o.out, rm, started);
  return result;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyOptions {
  fs::path checkpoint;
  fs::path corpus;
  fs::path out;
};

inline std::vector<ClassificationRecord> cmd_classify(const ClassifyOptions& o) {
  const auto started = utc_timestamp();
  const auto ck = load_checkpoint(o.checkpoint);
  const auto corpus = load_prepared_corpus(o.corpus);
  if (corpus.manifest.slice_len != ck.models.arch.slice_len)
    throw ValidationError("classify: corpus slice_len " + std::to_string(corpus.manifest.slice_len) + " does not match model slice_len " +
                          std::to_string(ck.models.arch.slice_len));
  const auto held_out = tokens_in(corpus.tokens, Split::test);
  if (held_out.empty()) throw ValidationError("classify: corpus has no held-out tokens");
  claim_output_dir(o.out);
  auto records = classify_corpus(ck.models.Q, ck.models.latent.kind, held_out);
  write_text(o.out / "records.csv", records_csv(records));
  RunManifest rm{"classify", {{"checkpoint", o.checkpoint.string()}, {"corpus", o.corpus.string()}, {"split", "test"}}, 0,
                 json::object(), {"records.csv"}};
  rm.inputs["checkpoint"] = {{"path", o.checkpoint.string()}, {"hash", file_hash(o.checkpoint / "manifest.json")}};
  rm.inputs["corpus"] = {{"path", o.corpus.string()}, {"hash", corpus.manifest.content_hash}};
  write_run_manifest(o.out, rm, started);
  return records;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
  fs::path checkpoint;
  fs::path out;
  std::uint64_t seed = 0;
  std::size_t n = 1;
  std::optional<double> marginal;             // scale for every active code entry
  std::vector<std::size_t> interpolate_bits;  // 1-based code entries
  double from = 0, to = 3, step = 0.2;
  std::string base_code;  // hard code for the entries that are not swept; empty: all zero

  json to_json() const {
    json j{{"checkpoint", checkpoint.string()}, {"seed", seed}, {"n", n}};
    if (marginal) j["marginal"] = *marginal;
    else j["interpolate"] = {{"bits", interpolate_bits}, {"from", from}, {"to", to}, {"step", step}, {"base_code", base_code}};
    return j;
  }
};

struct GenerateResult {
  std::vector<MarginalClip> marginal;
  std::vector<InterpolationSweep> sweeps;
  std::vector<SweepTrend> trends;
};

inline GenerateResult cmd_generate(const GenerateOptions& o) {
  const auto started = utc_timestamp();
  if (o.marginal.has_value() == !o.interpolate_bits.empty())
    throw ValidationError("generate: give exactly one of --marginal or --interpolate");
  if (o.n == 0) throw ValidationError("generate: n must be positive");
  auto ck = load_checkpoint(o.checkpoint);
  const auto& spec = ck.models.latent;
  const int rate = ck.manifest.contains("extra") ? ck.manifest.at("extra").value("sample_rate", kDefaultRate) : kDefaultRate;
  std::vector<std::size_t> swept;
  std::vector<float> base(spec.code_size, 0.0f);
  if (!o.marginal) {
    for (auto b : o.interpolate_bits) {
      if (b == 0 || b > spec.code_size)
        throw ValidationError("generate: bit index " + std::to_string(b) + " out of range 1.." + std::to_string(spec.code_size));
      swept.push_back(b - 1);
    }
    (void)interpolation_grid(o.from, o.to, o.step);
    if (!o.base_code.empty()) base = code_values(parse_hard_code(spec, o.base_code), spec.train_scale);
  }
  claim_output_dir(o.out);
  GenerateResult r;
  Rng rng(o.seed);
  RunManifest rm{"generate", o.to_json(), o.seed, json::object(), {}};
  rm.inputs["checkpoint"] = {{"path", o.checkpoint.string()}, {"hash", file_hash(o.checkpoint / "manifest.json")}};
  if (o.marginal) {
    LatentSpec s = spec;
    s.marginal_scale = *o.marginal;
    r.marginal = generate_marginal(ck.models.G, s, o.n, rng, rate);
    write_marginal(o.out, r.marginal);
    rm.artifacts = {"marginal.csv", "code_*.wav"};
  } else {
    std::string csv = "sweep,spearman,delta,first,last\n";
    for (std::size_t k = 0; k < o.n; ++k) {
      auto sweep = interpolate_features(ck.models.G, spec, sample_noise(spec, rng), swept, o.from, o.to, o.step, base, rate);
      measure_onset(sweep);
      char name[32];
      std::snprintf(name, sizeof name, "sweep_%03zu", k);
      write_sweep(o.out / name, sweep);
      if (sweep.grid.size() >= 2) {
        const auto t = sweep_trend(sweep);
        csv += std::to_string(k) + "," + format_double(t.spearman) + "," + format_double(t.delta) + "," + format_double(t.values.front()) +
               "," + format_double(t.values.back()) + "\n";
        r.trends.push_back(t);
      }
      r.sweeps.push_back(std::move(sweep));
      rm.artifacts.push_back(std::string(name) + "/");
    }
    write_text(o.out / "trends.csv", csv);
    rm.artifacts.push_back("trends.csv");
  }
  write_run_manifest(o.out, rm, started);
  return r;
}

// ---------------------------------------------------------------------------
// analyze

inline std::string fit_csv(const stats::RegressionFit& f, const std::string& model = "") {
  std::string out;
  for (const auto& t : f.terms)
    out += (model.empty() ? "" : model + ",") + t.name + "," + format_double(t.beta) + "," + format_double(t.stderr_) + "," +
           format_double(t.z) + "," + format_double(t.p) + "\n";
  return out;
}

inline json fit_json(const stats::RegressionFit& f) {
  return {{"kind", f.kind},         {"design", f.design},       {"log_likelihood", f.log_likelihood}, {"k", f.k},
          {"aic", f.aic},           {"n_obs", f.n_obs},         {"data_hash", f.data_hash},           {"converged", f.converged},
          {"separation", f.separation}, {"iterations", f.iterations}, {"ridge", f.ridge},             {"warnings", f.warnings}};
}

struct AnalyzeOptions {
  fs::path records;
  fs::path out;
  std::string mode;  // multinomial | logistic | grouped | peaks | table
  std::string property = "s_initial";
  std::vector<std::size_t> bits;    // 1-based, grouped mode
  std::vector<std::string> words;   // peaks mode; empty: every word
  double ridge = 1e-6;
  std::size_t permutations = 2000;
  std::uint64_t seed = 0;

  json to_json() const {
    return {{"records", records.string()}, {"mode", mode},   {"property", property},         {"bits", bits},
            {"words", words},              {"ridge", ridge}, {"permutations", permutations}, {"seed", seed}};
  }
};

/// Code kind from the table layout: binary codes are bit strings as wide as
/// the posterior; anything else is a class index.
inline CodeKind infer_code_kind(const CsvTable& t) {
  std::size_t width = 0;
  while (std::find(t.columns.begin(), t.columns.end(), "p_" + std::to_string(width + 1)) != t.columns.end()) ++width;
  const auto it = std::find(t.columns.begin(), t.columns.end(), "code");
  if (it == t.columns.end() || width == 0) return CodeKind::one_hot;  // schema errors are reported by read_records_csv
  const auto ci = static_cast<std::size_t>(it - t.columns.begin());
  for (const auto& row : t.rows) {
    const auto& c = row[ci];
    if (c.size() != width || c.find_first_not_of("01") != std::string::npos) return CodeKind::one_hot;
  }
  return CodeKind::binary;
}

inline std::vector<int> property_column(const CsvTable& t, const std::string& name) {
  const auto ci = std::find(t.columns.begin(), t.columns.end(), name);
  if (ci == t.columns.end()) throw ValidationError("analyze: records have no column '" + name + "'");
  const auto idx = static_cast<std::size_t>(ci - t.columns.begin());
  std::vector<int> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& v = t.rows[r][idx];
    if (v != "0" && v != "1") throw ValidationError("analyze: column '" + name + "' row " + std::to_string(r + 1) + " is not 0/1");
    out.push_back(v == "1");
  }
  return out;
}

struct AnalyzeResult {
  json summary;
};

inline AnalyzeResult cmd_analyze(const AnalyzeOptions& o) {
  const auto started = utc_timestamp();
  static const std::set<std::string> modes{"multinomial", "logistic", "grouped", "peaks", "table"};
  if (!modes.count(o.mode)) throw ValidationError("analyze: unknown mode '" + o.mode + "'");
  const auto text = read_text(o.records);
  const auto table = parse_csv(text, o.records.string());
  const auto kind = infer_code_kind(table);
  const auto records = read_records_csv(text, kind, o.records.string());
  if (records.empty()) throw ValidationError("analyze: records file has no rows");
  std::vector<std::string> words, codes;
  for (const auto& r : records) words.push_back(r.word), codes.push_back(r.code.to_string());
  stats::FitOptions fo;
  fo.ridge = o.ridge;

  AnalyzeResult res;
  RunManifest rm{"analyze", o.to_json(), o.seed, json::object(), {}};
  rm.inputs["records"] = {{"path", o.records.string()}, {"hash", file_hash(o.records)}};
  auto finish = [&](const std::vector<std::pair<std::string, std::string>>& files) {
    claim_output_dir(o.out);
    for (const auto& [name, content] : files) {
      write_text(o.out / name, content);
      rm.artifacts.push_back(name);
    }
    write_run_manifest(o.out, rm, started);
  };

  if (o.mode == "multinomial") {
    const auto full = stats::fit_multinomial(words, &codes, fo);
    const auto empty = stats::fit_multinomial(words, nullptr, fo);
    const auto cmp = stats::aic_compare(full, empty);
    res.summary = {{"code_model", fit_json(full)},
                   {"empty_model", fit_json(empty)},
                   {"comparison", {{"preferred", cmp.preferred == "a" ? "code_model" : cmp.preferred == "b" ? "empty_model" : "tie"},
                                   {"delta_aic", cmp.delta}}}};
    finish({{"multinomial_terms.csv", "model,term,beta,stderr,z,p\n" + fit_csv(full, "code_model") + fit_csv(empty, "empty_model")},
            {"multinomial.json", res.summary.dump(2) + "\n"}});
  } else if (o.mode == "logistic" || o.mode == "grouped") {
    if (kind != CodeKind::binary) throw ValidationError("analyze: --" + o.mode + " needs binary (featural) codes");
    const auto y = property_column(table, o.property);
    const std::size_t n_bits = records.front().posterior.size();
    if (o.mode == "logistic") {
      std::vector<std::vector<double>> cols(n_bits);
      std::vector<std::string> names;
      for (std::size_t b = 0; b < n_bits; ++b) {
        names.push_back("phi_" + std::to_string(b + 1));
        for (const auto& r : records) cols[b].push_back(r.code.bit(b) ? 1.0 : 0.0);
      }
      const auto fit = stats::fit_logistic(y, cols, names, fo);
      res.summary = fit_json(fit);
      res.summary["outcome"] = o.property;
      finish({{"logistic_terms.csv", "term,beta,stderr,z,p\n" + fit_csv(fit)}, {"logistic.json", res.summary.dump(2) + "\n"}});
    } else {
      std::vector<std::size_t> subset;
      for (auto b : o.bits) {
        if (b == 0 || b > n_bits) throw ValidationError("analyze: bit index " + std::to_string(b) + " out of range 1.." + std::to_string(n_bits));
        subset.push_back(b - 1);
      }
      if (subset.empty()) throw ValidationError("analyze: --grouped needs at least one bit");
      std::vector<stats::FeatureRecord> fr;
      for (std::size_t i = 0; i < records.size(); ++i) {
        stats::FeatureRecord f;
        for (std::size_t b = 0; b < n_bits; ++b) f.bits.push_back(records[i].code.bit(b) ? 1 : 0);
        f.outcome = y[i] == 1;
        fr.push_back(std::move(f));
      }
      const auto g = stats::grouped_feature_test(fr, subset, fo);
      auto prop = [](const stats::Proportion& p) {
        return json{{"successes", p.successes}, {"n", p.n}, {"defined", p.defined}, {"estimate", p.estimate}, {"lower", p.lower}, {"upper", p.upper}};
      };
      res.summary = {{"bits", o.bits},        {"outcome", o.property}, {"all_zero", prop(g.all_zero)}, {"all_one", prop(g.all_one)},
                     {"mixed", g.mixed},      {"lrt_statistic", g.lrt_statistic}, {"lrt_p", g.lrt_p}, {"flags", g.flags}};
      if (g.fit) res.summary["fit"] = fit_json(*g.fit);
      std::string csv = "group,successes,n,estimate,lower,upper\n";
      for (const auto& [name, p] : {std::pair{"all_zero", g.all_zero}, std::pair{"all_one", g.all_one}})
        csv += std::string(name) + "," + std::to_string(p.successes) + "," + std::to_string(p.n) + "," +
               (p.defined ? format_double(p.estimate) + "," + format_double(p.lower) + "," + format_double(p.upper) : std::string("NA,NA,NA")) + "\n";
      finish({{"grouped.csv", csv},
              {"grouped_terms.csv", "term,beta,stderr,z,p\n" + (g.fit ? fit_csv(*g.fit) : std::string())},
              {"grouped.json", res.summary.dump(2) + "\n"}});
    }
  } else if (o.mode == "peaks") {
    std::vector<stats::WordCode> wc;
    for (std::size_t i = 0; i < words.size(); ++i) wc.push_back({words[i], codes[i]});
    auto subset = o.words;
    if (subset.empty()) {
      const std::set<std::string> all(words.begin(), words.end());
      subset.assign(all.begin(), all.end());
    }
    const auto rep = stats::peak_match(wc, subset);
    std::string csv = "word,peak_code,word_peak_tied,all_equal,code_peak_words,category\n";
    for (const auto& r : rep.rows) {
      std::string peers;
      for (const auto& w : r.code_peak_words) peers += (peers.empty() ? "" : ";") + w;
      csv += r.word + "," + r.peak_code + "," + (r.word_peak_tied ? "1" : "0") + "," + (r.all_equal ? "1" : "0") + "," + peers + "," +
             stats::to_string(r.category) + "\n";
    }
    res.summary = {{"words", subset.size()}, {"mutual", rep.mutual}, {"tied", rep.tied}, {"fail", rep.fail}};
    finish({{"peaks.csv", csv}, {"peaks.json", res.summary.dump(2) + "\n"}});
  } else {
    std::vector<stats::WordCode> wc;
    for (std::size_t i = 0; i < words.size(); ++i) wc.push_back({words[i], codes[i]});
    Rng rng(o.seed);
    const auto perm = stats::permutation_test(wc, o.permutations, rng);
    std::string csv = "word,code,count\n";
    for (const auto& [w, cs] : stats::contingency(wc))
      for (const auto& [c, n] : cs) csv += w + "," + c + "," + std::to_string(n) + "\n";
    res.summary = {{"records", wc.size()},
                   {"purity", stats::majority_code_purity(wc)},
                   {"chi_square", perm.statistic},
                   {"permutations", perm.permutations},
                   {"p_value", perm.p_value}};
    finish({{"contingency.csv", csv}, {"table.json", res.summary.dump(2) + "\n"}});
  }
  return res;
}

}  // namespace ciwgan::pipeline
