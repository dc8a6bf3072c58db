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

// Probing trained models: Q-network classification of held-out tokens,
// generation at marginal code values, code interpolation sweeps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ciwgan/corpus.hpp"
#include "ciwgan/errors.hpp"
#include "ciwgan/latent.hpp"
#include "ciwgan/models.hpp"
#include "ciwgan/raw_io.hpp"
#include "ciwgan/spectral.hpp"
#include "ciwgan/wav.hpp"

namespace ciwgan {

struct ClassificationRecord {
  std::string token_id;
  std::string word;
  std::vector<double> posterior;
  HardCode code;
};

/// One record per held-out token, in input order. Any training-split token
/// is rejected before the network runs.
inline std::vector<ClassificationRecord> classify_corpus(const Network<float>& Q, CodeKind kind,
                                                         const std::vector<const Token*>& tokens) {
  for (const auto* t : tokens) {
    if (t->split != Split::test) throw ValidationError("classify: token " + t->id + " belongs to the training split");
    check_clip_length("classify", Q, t->clip);
  }
  std::vector<ClassificationRecord> out;
  out.reserve(tokens.size());
  for (const auto* t : tokens) {
    auto post = q_forward(Q, kind, t->clip);
    const auto code = decode_hard(kind, post);
    out.push_back({t->id, t->word, std::move(post), code});
  }
  return out;
}

inline std::vector<ClassificationRecord> classify_corpus(const Network<float>& Q, CodeKind kind, const std::vector<Token>& tokens) {
  std::vector<const Token*> ptrs;
  for (const auto& t : tokens) ptrs.push_back(&t);
  return classify_corpus(Q, kind, ptrs);
}

// ---------------------------------------------------------------------------
// Minimal comma-separated tables. Fields never contain commas or quotes.

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw ValidationError("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable parse_csv(const std::string& text, const std::string& name = "<csv>") {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.find('"') != std::string::npos) throw ValidationError(name + ":" + std::to_string(lineno) + ": quoted fields are not supported");
    auto fields = split_csv_line(line);
    if (t.columns.empty()) {
      t.columns = std::move(fields);
      continue;
    }
    if (fields.size() != t.columns.size())
      throw ValidationError(name + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                            " fields, found " + std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  if (t.columns.empty()) throw ValidationError(name + ": empty file");
  return t;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Columns: token_id, word, code, s_initial, p_1..p_k.
inline std::string records_csv(const std::vector<ClassificationRecord>& records) {
  std::string out = "token_id,word,code,s_initial";
  const std::size_t k = records.empty() ? 0 : records.front().posterior.size();
  for (std::size_t i = 0; i < k; ++i) out += ",p_" + std::to_string(i + 1);
  out += "\n";
  for (const auto& r : records) {
    if (r.posterior.size() != k) throw ValidationError("records_csv: posterior widths differ");
    out += r.token_id + "," + r.word + "," + r.code.to_string() + "," + (is_s_initial(r.word) ? "1" : "0");
    for (double p : r.posterior) out += "," + format_double(p);
    out += "\n";
  }
  return out;
}

/// Reads a records table and checks every column the schema requires,
/// listing all problems at once.
inline std::vector<ClassificationRecord> read_records_csv(const std::string& text, CodeKind kind, const std::string& name = "<records>") {
  const auto t = parse_csv(text, name);
  std::vector<std::string> problems;
  for (const char* col : {"token_id", "word", "code"})
    if (std::find(t.columns.begin(), t.columns.end(), col) == t.columns.end()) problems.push_back(std::string("missing column '") + col + "'");
  std::vector<std::size_t> pcols;
  for (std::size_t i = 1;; ++i) {
    const auto it = std::find(t.columns.begin(), t.columns.end(), "p_" + std::to_string(i));
    if (it == t.columns.end()) break;
    pcols.push_back(static_cast<std::size_t>(it - t.columns.begin()));
  }
  if (pcols.empty()) problems.push_back("missing posterior columns p_1..p_k");
  if (!problems.empty()) {
    std::string msg = name + ": schema violations:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValidationError(msg);
  }
  const auto ci = t.column("token_id"), wi = t.column("word"), ki = t.column("code");
  std::vector<ClassificationRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ClassificationRecord rec;
    rec.token_id = row[ci];
    rec.word = row[wi];
    for (auto c : pcols) {
      try {
        rec.posterior.push_back(std::stod(row[c]));
      } catch (const std::exception&) {
        throw ValidationError(name + ": row " + std::to_string(r + 1) + " column '" + t.columns[c] + "' is not a number");
      }
    }
    rec.code = decode_hard(kind, rec.posterior);
    if (rec.code.to_string() != row[ki])
      throw ValidationError(name + ": row " + std::to_string(r + 1) + " code '" + row[ki] + "' disagrees with its posterior");
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation

struct MarginalClip {
  HardCode code;
  std::size_t index = 0;  // position within the code
  AudioClip clip;
};

/// n_per_code clips for every hard code, active entries at spec.marginal_scale
/// and fresh noise per clip. Codes in index order, noise drawn in that order.
inline std::vector<MarginalClip> generate_marginal(const Network<float>& G, const LatentSpec& spec, std::size_t n_per_code, Rng& rng,
                                                   int rate = kDefaultRate) {
  std::vector<MarginalClip> out;
  for (const auto& code : enumerate_codes(spec))
    for (std::size_t i = 0; i < n_per_code; ++i) {
      LatentVector lv{sample_noise(spec, rng), code_values(code, spec.marginal_scale)};
      out.push_back({code, i, generate(G, lv, rate)});
    }
  return out;
}

/// Grid from, from+step, ... up to `to` (inclusive within 1e-9 steps).
inline std::vector<double> interpolation_grid(double from, double to, double step) {
  if (!(step > 0)) throw ValidationError("interpolation: step must be positive");
  if (!(from <= to)) throw ValidationError("interpolation: need from <= to");
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = from + static_cast<double>(i) * step;
  return g;
}

struct InterpolationSweep {
  std::vector<float> z;
  std::vector<float> base_code;        // code block before the swept entries are overwritten
  std::vector<std::size_t> swept;      // 0-based code entries
  std::vector<double> grid;
  std::vector<AudioClip> clips;
  std::vector<double> metric;          // one value per clip

  LatentVector latent_at(std::size_t i) const {
    LatentVector lv{z, base_code};
    for (auto b : swept) lv.c[b] = static_cast<float>(grid.at(i));
    return lv;
  }
};

/// Sets every swept code entry jointly to each grid value while z and the
/// other entries of `base_code` stay fixed. One generated clip per value.
inline InterpolationSweep interpolate_features(const Network<float>& G, const LatentSpec& spec, const std::vector<float>& z,
                                               const std::vector<std::size_t>& swept, double from, double to, double step,
                                               const std::vector<float>& base_code, int rate = kDefaultRate) {
  if (z.size() != spec.noise_dim) throw ShapeError("interpolate", "noise_dim", spec.noise_dim, z.size());
  if (base_code.size() != spec.code_size) throw ShapeError("interpolate", "code_size", spec.code_size, base_code.size());
  if (swept.empty()) throw ValidationError("interpolate: no swept entries");
  for (auto b : swept)
    if (b >= spec.code_size)
      throw ValidationError("interpolate: code index " + std::to_string(b + 1) + " out of range 1.." + std::to_string(spec.code_size));
  InterpolationSweep s;
  s.z = z;
  s.base_code = base_code;
  s.swept = swept;
  s.grid = interpolation_grid(from, to, step);
  for (std::size_t i = 0; i < s.grid.size(); ++i) s.clips.push_back(generate(G, s.latent_at(i), rate));
  return s;
}

/// Onset band ratio (frication proxy) for every clip of the sweep.
inline void measure_onset(InterpolationSweep& s, const OnsetSpec& spec = {}) {
  s.metric.clear();
  for (const auto& c : s.clips) s.metric.push_back(onset_band_ratio(c, spec));
}

/// Average ranks (1-based); ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
    i = j + 1;
  }
  return r;
}

/// Spearman correlation; 0 when either side has no variance.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("spearman", "length", a.size(), b.size());
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

struct SweepTrend {
  std::vector<double> grid, values;
  double spearman = 0;
  double delta = 0;  // last minus first
};

inline SweepTrend sweep_trend(const std::vector<double>& grid, const std::vector<double>& values) {
  if (grid.size() < 2) throw ValidationError("sweep_trend: need at least 2 points");
  if (grid.size() != values.size()) throw ShapeError("sweep_trend", "points", grid.size(), values.size());
  return {grid, values, spearman(grid, values), values.back() - values.front()};
}

inline SweepTrend sweep_trend(const InterpolationSweep& s) { return sweep_trend(s.grid, s.metric); }

/// WAVs sweep_NN.wav plus sweep.csv with grid value and onset/mean/max band ratio.
inline void write_sweep(const std::filesystem::path& dir, const InterpolationSweep& s, const OnsetSpec& spec = {}) {
  std::filesystem::create_directories(dir);
  std::string csv = "index,grid_value,file,onset_ratio,mean_ratio,max_ratio\n";
  for (std::size_t i = 0; i < s.clips.size(); ++i) {
    char file[32];
    std::snprintf(file, sizeof file, "sweep_%02zu.wav", i);
    write_wav(dir / file, s.clips[i]);
    const auto series = band_energy_ratio(s.clips[i], spec.lo_hz, spec.hi_hz, spec.frames);
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
    const double mx = *std::max_element(series.begin(), series.end());
    csv += std::to_string(i) + "," + format_double(s.grid[i]) + "," + file + "," + format_double(onset_band_ratio(s.clips[i], spec)) +
           "," + format_double(mean) + "," + format_double(mx) + "\n";
  }
  write_text(dir / "sweep.csv", csv);
}

/// WAVs code_<code>_NNN.wav plus marginal.csv with the onset band ratio.
inline void write_marginal(const std::filesystem::path& dir, const std::vector<MarginalClip>& clips, const OnsetSpec& spec = {}) {
  std::filesystem::create_directories(dir);
  std::string csv = "file,code,index,onset_ratio\n";
  for (const auto& m : clips) {
    char idx[16];
    std::snprintf(idx, sizeof idx, "%03zu", m.index);
    const std::string file = "code_" + m.code.to_string() + "_" + idx + ".wav";
    write_wav(dir / file, m.clip);
    csv += file + "," + m.code.to_string() + "," + std::to_string(m.index) + "," + format_double(onset_band_ratio(m.clip, spec)) + "\n";
  }
  write_text(dir / "marginal.csv", csv);
}

}  // namespace ciwgan
