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

// Word-token corpora: fixed-length slice preparation, a procedural toy
// vocabulary, stratified train/test splits and the on-disk manifest.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ciwgan/audio.hpp"
#include "ciwgan/errors.hpp"
#include "ciwgan/raw_io.hpp"
#include "ciwgan/rng.hpp"
#include "ciwgan/wav.hpp"

namespace ciwgan {

enum class OverlengthPolicy { strict, center_crop };

/// Places the clip at the start of a zero-filled slice of `slice_len` samples.
inline AudioClip slice_and_pad(const AudioClip& clip, std::size_t slice_len,
                               OverlengthPolicy policy = OverlengthPolicy::strict) {
  if (slice_len == 0) throw ValidationError("slice_and_pad: slice_len must be positive");
  AudioClip out = clip;
  if (clip.size() > slice_len) {
    if (policy == OverlengthPolicy::strict)
      throw ValidationError("slice_and_pad: clip '" + clip.source_id + "' has " + std::to_string(clip.size()) +
                            " samples, more than slice_len " + std::to_string(slice_len));
    const std::size_t start = (clip.size() - slice_len) / 2;
    out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                       clip.samples.begin() + static_cast<std::ptrdiff_t>(start + slice_len));
    return out;
  }
  out.samples.resize(slice_len, 0.0f);
  return out;
}

enum class Split { train, test };

inline std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }
inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ValidationError("split must be 'train' or 'test', got '" + s + "'");
}

struct Token {
  std::string id;
  std::string word;
  AudioClip clip;
  Split split = Split::train;
  std::string hash;
};

/// Orthographic proxy for word-initial [s]: the word label starts with 's'.
inline bool is_s_initial(const std::string& word) { return !word.empty() && (word[0] == 's' || word[0] == 'S'); }

// ---------------------------------------------------------------------------
// Procedural toy vocabulary

namespace toy {

enum class SegmentKind { fricative, vowel, nasal, burst, gap };

struct Segment {
  SegmentKind kind;
  double ms;
  double f1 = 0, f2 = 0;
  double level = 1.0;
};

struct WordTemplate {
  std::string name;
  std::vector<Segment> segments;
};

/// Eight base words; larger vocabularies reuse them with shifted formants.
/// Only templates 0 and 4 open with frication, and only those names start with 's'.
inline const std::vector<WordTemplate>& base_templates() {
  using K = SegmentKind;
  static const std::vector<WordTemplate> t{
      {"sa", {{K::fricative, 60, 0, 0, 0.8}, {K::vowel, 120, 700, 1220}}},
      {"mu", {{K::nasal, 70, 0, 0, 0.5}, {K::vowel, 200, 320, 800}}},
      {"ki", {{K::burst, 12, 0, 0, 0.8}, {K::gap, 20}, {K::vowel, 120, 300, 2300}}},
      {"wawa", {{K::vowel, 70, 640, 1000}, {K::gap, 30}, {K::vowel, 70, 640, 1000}}},
      {"se", {{K::fricative, 60, 0, 0, 0.8}, {K::vowel, 120, 500, 1900}}},
      {"lo", {{K::vowel, 160, 450, 880}}},
      {"bi", {{K::burst, 12, 0, 0, 0.8}, {K::vowel, 60, 280, 2250}, {K::gap, 25}, {K::vowel, 60, 280, 2250}}},
      {"nunu", {{K::nasal, 40, 0, 0, 0.5}, {K::vowel, 60, 350, 1300}, {K::nasal, 40, 0, 0, 0.5}, {K::vowel, 60, 350, 1300}}},
  };
  return t;
}

inline std::string class_name(std::size_t c) {
  const auto& base = base_templates();
  std::string name = base[c % base.size()].name;
  if (c >= base.size()) name += std::to_string(c / base.size());
  return name;
}

inline bool class_has_noise_onset(std::size_t c) {
  return base_templates()[c % base_templates().size()].segments.front().kind == SegmentKind::fricative;
}

/// RBJ biquad, direct form I.
class Biquad {
 public:
  enum class Type { lowpass, highpass, bandpass };
  Biquad(Type type, double freq, double q, double rate) {
    const double w0 = 2.0 * std::numbers::pi * freq / rate;
    const double alpha = std::sin(w0) / (2.0 * q), c = std::cos(w0);
    double b0, b1, b2;
    switch (type) {
      case Type::lowpass: b0 = (1 - c) / 2; b1 = 1 - c; b2 = (1 - c) / 2; break;
      case Type::highpass: b0 = (1 + c) / 2; b1 = -(1 + c); b2 = (1 + c) / 2; break;
      default: b0 = alpha; b1 = 0; b2 = -alpha; break;
    }
    const double a0 = 1 + alpha;
    b0_ = b0 / a0; b1_ = b1 / a0; b2_ = b2 / a0; a1_ = -2 * c / a0; a2_ = (1 - alpha) / a0;
  }
  double operator()(double x) {
    const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_; x1_ = x; y2_ = y1_; y1_ = y;
    return y;
  }
  void run(std::vector<double>& v) {
    for (auto& s : v) s = (*this)(s);
  }

 private:
  double b0_, b1_, b2_, a1_, a2_;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

inline void normalize_rms(std::vector<double>& v, double target) {
  double sq = 0;
  for (double s : v) sq += s * s;
  if (sq <= 0) return;
  const double k = target / std::sqrt(sq / static_cast<double>(v.size()));
  for (auto& s : v) s *= k;
}

inline void apply_ramps(std::vector<double>& v, std::size_t ramp) {
  ramp = std::min(ramp, v.size() / 2);
  for (std::size_t i = 0; i < ramp; ++i) {
    const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(ramp));
    v[i] *= w;
    v[v.size() - 1 - i] *= w;
  }
}

inline std::vector<double> pulse_train(std::size_t n, double f0, double rate, Rng& rng) {
  std::vector<double> v(n, 0.0);
  double phase = rng.uniform();
  for (std::size_t i = 0; i < n; ++i) {
    phase += f0 / rate;
    if (phase >= 1.0) {
      phase -= 1.0;
      v[i] = 1.0;
    }
  }
  return v;
}

inline std::vector<double> render_segment(const Segment& seg, std::size_t n, double f0, double formant_scale, int rate,
                                          Rng& rng) {
  using T = Biquad::Type;
  std::vector<double> out(n, 0.0);
  if (n == 0 || seg.kind == SegmentKind::gap) return out;
  switch (seg.kind) {
    case SegmentKind::fricative: {
      for (auto& s : out) s = rng.normal();
      Biquad h1(T::highpass, 4200, 0.707, rate), h2(T::highpass, 4200, 0.707, rate);
      Biquad l1(T::lowpass, 7400, 0.707, rate), l2(T::lowpass, 7400, 0.707, rate);
      h1.run(out); h2.run(out); l1.run(out); l2.run(out);
      break;
    }
    case SegmentKind::burst: {
      for (auto& s : out) s = rng.normal();
      Biquad l1(T::lowpass, 3000, 0.707, rate);
      l1.run(out);
      for (std::size_t i = 0; i < n; ++i) out[i] *= std::exp(-3.0 * static_cast<double>(i) / static_cast<double>(n));
      break;
    }
    case SegmentKind::nasal: {
      auto src = pulse_train(n, f0, rate, rng);
      Biquad r(T::bandpass, 250 * formant_scale, 3.0, rate);
      for (std::size_t i = 0; i < n; ++i) out[i] = r(src[i]);
      break;
    }
    case SegmentKind::vowel: {
      auto src = pulse_train(n, f0, rate, rng);
      const double f1 = seg.f1 * formant_scale, f2 = seg.f2 * formant_scale;
      Biquad r1(T::bandpass, f1, f1 / 80.0, rate), r2(T::bandpass, f2, f2 / 120.0, rate);
      Biquad r3(T::bandpass, 2600 * formant_scale, 2600.0 / 200.0, rate);
      for (std::size_t i = 0; i < n; ++i) out[i] = r1(src[i]) + 0.6 * r2(src[i]) + 0.2 * r3(src[i]);
      break;
    }
    default: break;
  }
  normalize_rms(out, seg.level);
  apply_ramps(out, std::max<std::size_t>(1, static_cast<std::size_t>(0.006 * rate)));
  return out;
}

/// One token of class `c`: jittered durations, pitch, formants and loudness.
/// `time_scale` compresses durations for short slices.
inline AudioClip synthesize_word(std::size_t c, Rng& rng, int rate = kDefaultRate, double time_scale = 1.0) {
  const auto& base = base_templates();
  const WordTemplate& tpl = base[c % base.size()];
  const double family_shift = 1.0 + 0.08 * static_cast<double>(c / base.size());
  const double f0 = rng.uniform(110.0, 130.0);
  const double formant_scale = family_shift * rng.uniform(0.95, 1.05);
  std::vector<double> word;
  const auto lead = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(32 * time_scale)));
  word.resize(lead, 0.0);
  for (const auto& seg : tpl.segments) {
    const double ms = seg.ms * rng.uniform(0.85, 1.15) * time_scale;
    const auto n = static_cast<std::size_t>(ms * 1e-3 * rate);
    const auto part = render_segment(seg, n, f0, formant_scale, rate, rng);
    word.insert(word.end(), part.begin(), part.end());
  }
  double peak = 0;
  for (double s : word) peak = std::max(peak, std::abs(s));
  const double amplitude = rng.uniform(0.6, 0.75);
  AudioClip clip;
  clip.rate = rate;
  clip.word = class_name(c);
  clip.samples.resize(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) clip.samples[i] = static_cast<float>(peak > 0 ? word[i] * amplitude / peak : 0.0);
  return clip;
}

}  // namespace toy

/// Builds `n_classes` x `tokens_per_class` labelled slices (all in the train
/// split until split_corpus runs). Tokens are ordered class-major.
inline std::vector<Token> make_toy_corpus(std::size_t n_classes, std::size_t tokens_per_class, std::size_t slice_len,
                                          Rng& rng, int rate = kDefaultRate) {
  if (n_classes < 2) throw ValidationError("toy corpus needs at least 2 classes");
  if (tokens_per_class == 0) throw ValidationError("toy corpus needs at least 1 token per class");
  const double time_scale = std::min(1.0, static_cast<double>(slice_len) / 4096.0 * 16000.0 / rate);
  std::vector<Token> tokens;
  tokens.reserve(n_classes * tokens_per_class);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < tokens_per_class; ++i) {
      AudioClip raw = toy::synthesize_word(c, rng, rate, time_scale);
      char id[64];
      std::snprintf(id, sizeof id, "%s/token_%04zu", toy::class_name(c).c_str(), i);
      raw.source_id = id;
      Token t;
      t.id = id;
      t.word = *raw.word;
      t.clip = slice_and_pad(raw, slice_len, OverlengthPolicy::center_crop);
      t.hash = content_hash(t.clip);
      tokens.push_back(std::move(t));
    }
  }
  return tokens;
}

/// Reads word-named directories of PCM16 mono WAV files (word/token.wav).
inline std::vector<Token> load_word_directory(const std::filesystem::path& root, std::size_t slice_len, int expected_rate,
                                              OverlengthPolicy policy = OverlengthPolicy::strict) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("corpus directory '" + root.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& word_dir : fs::directory_iterator(root)) {
    if (!word_dir.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(word_dir.path()))
      if (f.is_regular_file() && f.path().extension() == ".wav") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .wav files under '" + root.string() + "'");
  std::vector<Token> tokens;
  for (const auto& f : files) {
    AudioClip clip = load_wav(f);
    if (clip.rate != expected_rate)
      throw ValidationError("'" + f.string() + "' has rate " + std::to_string(clip.rate) + ", expected " +
                            std::to_string(expected_rate));
    Token t;
    t.word = f.parent_path().filename().string();
    t.id = t.word + "/" + f.stem().string();
    clip.source_id = t.id;
    clip.word = t.word;
    t.clip = slice_and_pad(clip, slice_len, policy);
    t.hash = content_hash(t.clip);
    tokens.push_back(std::move(t));
  }
  return tokens;
}

struct SplitReport {
  std::vector<std::string> warnings;
  std::size_t moved_duplicates = 0;
};

/// Seeded split stratified by word: round(n * test_fraction) tokens of each
/// word go to test. Words with fewer than 2 tokens stay in train. Any test
/// token whose content also occurs in train is moved to train.
inline SplitReport split_corpus(std::vector<Token>& tokens, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction must be in (0, 1)");
  SplitReport report;
  std::map<std::string, std::vector<std::size_t>> by_word;
  for (std::size_t i = 0; i < tokens.size(); ++i) by_word[tokens[i].word].push_back(i);
  for (auto& [word, idx] : by_word) {
    for (auto i : idx) tokens[i].split = Split::train;
    if (idx.size() < 2) {
      report.warnings.push_back("word '" + word + "' has fewer than 2 tokens; kept in train");
      continue;
    }
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    auto n_test = static_cast<std::size_t>(std::lround(static_cast<double>(idx.size()) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    for (std::size_t j = 0; j < n_test; ++j) tokens[idx[j]].split = Split::test;
  }
  std::set<std::string> train_hashes;
  for (const auto& t : tokens)
    if (t.split == Split::train) train_hashes.insert(t.hash);
  for (auto& t : tokens)
    if (t.split == Split::test && train_hashes.count(t.hash)) {
      t.split = Split::train;
      ++report.moved_duplicates;
      report.warnings.push_back("token '" + t.id + "' duplicates training audio; moved to train");
    }
  return report;
}

/// Throws if any test token's content also appears in the training split.
inline void assert_no_leakage(const std::vector<Token>& tokens) {
  std::set<std::string> train;
  for (const auto& t : tokens)
    if (t.split == Split::train) train.insert(t.hash);
  for (const auto& t : tokens)
    if (t.split == Split::test && train.count(t.hash))
      throw ValidationError("leakage: test token '" + t.id + "' duplicates training audio");
}

inline std::vector<const Token*> tokens_in(const std::vector<Token>& tokens, Split split) {
  std::vector<const Token*> out;
  for (const auto& t : tokens)
    if (t.split == split) out.push_back(&t);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

struct CorpusManifest {
  std::size_t slice_len = 0;
  int rate = kDefaultRate;
  std::string padding = "left_aligned_zero";
  std::map<std::string, std::size_t> word_counts;
  std::string content_hash;
  nlohmann::json source;  // how the corpus was produced
};

inline std::string corpus_hash(const std::vector<Token>& tokens) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& t : tokens) {
    const std::string line = t.id + "\t" + t.word + "\t" + to_string(t.split) + "\t" + t.hash + "\n";
    h = fnv1a(line.data(), line.size(), h);
  }
  return hex64(h);
}

inline std::string token_file(const Token& t) { return "clips/" + t.id + ".f32"; }

inline nlohmann::json manifest_json(const CorpusManifest& m, const std::vector<Token>& tokens) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["slice_len"] = m.slice_len;
  j["rate"] = m.rate;
  j["padding"] = m.padding;
  j["word_counts"] = m.word_counts;
  j["content_hash"] = m.content_hash;
  j["source"] = m.source;
  std::map<std::string, std::size_t> split_counts{{"train", 0}, {"test", 0}};
  auto& arr = j["tokens"] = nlohmann::json::array();
  for (const auto& t : tokens) {
    ++split_counts[to_string(t.split)];
    arr.push_back({{"id", t.id}, {"word", t.word}, {"split", to_string(t.split)}, {"hash", t.hash}, {"file", token_file(t)}});
  }
  j["split_counts"] = split_counts;
  return j;
}

inline CorpusManifest describe_corpus(const std::vector<Token>& tokens, std::size_t slice_len, int rate,
                                      nlohmann::json source) {
  CorpusManifest m;
  m.slice_len = slice_len;
  m.rate = rate;
  for (const auto& t : tokens) ++m.word_counts[t.word];
  m.content_hash = corpus_hash(tokens);
  m.source = std::move(source);
  return m;
}

/// Writes manifest.json plus one raw little-endian float32 file per token.
inline void save_prepared_corpus(const std::filesystem::path& dir, const CorpusManifest& m,
                                 const std::vector<Token>& tokens) {
  std::filesystem::create_directories(dir);
  for (const auto& t : tokens) write_f32_le(dir / token_file(t), t.clip.samples);
  write_text(dir / "manifest.json", manifest_json(m, tokens).dump(2) + "\n");
}

struct PreparedCorpus {
  CorpusManifest manifest;
  std::vector<Token> tokens;
};

inline PreparedCorpus load_prepared_corpus(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corpus manifest in '" + dir.string() + "' is malformed: " + e.what());
  }
  PreparedCorpus pc;
  auto& m = pc.manifest;
  m.slice_len = j.at("slice_len").get<std::size_t>();
  m.rate = j.at("rate").get<int>();
  m.padding = j.value("padding", "left_aligned_zero");
  m.content_hash = j.at("content_hash").get<std::string>();
  m.source = j.value("source", nlohmann::json::object());
  std::map<std::string, std::size_t> counts;
  for (const auto& e : j.at("tokens")) {
    Token t;
    t.id = e.at("id").get<std::string>();
    t.word = e.at("word").get<std::string>();
    t.split = parse_split(e.at("split").get<std::string>());
    t.clip.samples = read_f32_le(dir / e.at("file").get<std::string>());
    t.clip.rate = m.rate;
    t.clip.source_id = t.id;
    t.clip.word = t.word;
    if (t.clip.size() != m.slice_len)
      throw IoError("token '" + t.id + "' has " + std::to_string(t.clip.size()) + " samples, manifest says " +
                    std::to_string(m.slice_len));
    t.hash = content_hash(t.clip);
    if (t.hash != e.at("hash").get<std::string>()) throw IoError("token '" + t.id + "' content does not match manifest hash");
    ++counts[t.word];
    pc.tokens.push_back(std::move(t));
  }
  m.word_counts = j.at("word_counts").get<std::map<std::string, std::size_t>>();
  if (counts != m.word_counts) throw IoError("corpus manifest word counts do not match the token files");
  if (corpus_hash(pc.tokens) != m.content_hash) throw IoError("corpus content hash mismatch");
  return pc;
}

}  // namespace ciwgan
