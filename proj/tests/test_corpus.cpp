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
#include <complex>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>

#include "ciwgan/corpus.hpp"

using namespace ciwgan;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ciwgan_test_corpus_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Direct DFT power in each of `bands` equal-width bands for one frame.
std::vector<double> naive_band_power(const std::vector<float>& x, std::size_t start, std::size_t len, std::size_t bands) {
  std::vector<double> out(bands, 0.0);
  for (std::size_t k = 1; k < len / 2; ++k) {
    std::complex<double> acc{};
    for (std::size_t n = 0; n < len; ++n) {
      const double v = start + n < x.size() ? x[start + n] : 0.0;
      acc += v * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n) / double(len));
    }
    out[std::min(bands - 1, k * bands / (len / 2))] += std::norm(acc);
  }
  return out;
}

// Long-term average spectrum in 32 bands over the non-silent frames, plus
// the share of energy in each quarter of the word.
std::vector<double> oracle_features(const AudioClip& clip) {
  const std::size_t frame = 256, bands = 32;
  std::size_t first = clip.size(), last = 0;
  for (std::size_t i = 0; i < clip.size(); ++i)
    if (std::abs(clip.samples[i]) >= 1e-3f) first = std::min(first, i), last = i;
  std::vector<double> spec(bands, 0.0), quarters(4, 0.0);
  for (std::size_t start = first; start + frame / 2 <= last; start += frame / 2) {
    const auto p = naive_band_power(clip.samples, start, frame, bands);
    double e = 0;
    for (std::size_t b = 0; b < bands; ++b) spec[b] += p[b], e += p[b];
    quarters[std::min<std::size_t>(3, 4 * (start - first) / (last - first + 1))] += e;
  }
  double total = 1e-12;
  for (double v : spec) total += v;
  std::vector<double> f;
  for (double v : spec) f.push_back(std::log(v / total + 1e-6));
  for (double v : quarters) f.push_back(2.0 * std::log(v / total + 1e-3));
  return f;
}

}  // namespace

TEST(Wav, PcmScaleEndpoints) {
  EXPECT_FLOAT_EQ(from_pcm16(32767), 32767.0f / 32768.0f);
  EXPECT_EQ(from_pcm16(-32768), -1.0f);
  EXPECT_EQ(to_pcm16(1.5f), 32767);
  EXPECT_EQ(to_pcm16(-1.0f), -32768);
}

TEST(Wav, RoundTripIsBitExactOnIntegers) {
  const auto dir = scratch("wav");
  AudioClip clip;
  clip.rate = 16000;
  for (int v = -32768; v <= 32767; v += 97) clip.samples.push_back(from_pcm16(static_cast<std::int16_t>(v)));
  clip.samples.push_back(from_pcm16(32767));
  write_wav(dir / "a.wav", clip);
  const auto back = load_wav(dir / "a.wav");
  EXPECT_EQ(back.rate, 16000);
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) EXPECT_EQ(to_pcm16(back.samples[i]), to_pcm16(clip.samples[i]));
  EXPECT_EQ(back.samples, clip.samples);
}

TEST(Wav, RejectsStereoAndFloatCodec) {
  AudioClip clip;
  clip.samples.assign(10, 0.1f);
  auto bytes = encode_wav(clip);
  auto stereo = bytes;
  stereo[22] = 2;
  std::vector<unsigned char> s(stereo.begin(), stereo.end());
  EXPECT_THROW(decode_wav(s), IoError);
  auto flt = bytes;
  flt[20] = 3;
  std::vector<unsigned char> f(flt.begin(), flt.end());
  EXPECT_THROW(decode_wav(f), IoError);
  auto b24 = bytes;
  b24[34] = 24;
  std::vector<unsigned char> b(b24.begin(), b24.end());
  EXPECT_THROW(decode_wav(b), IoError);
}

TEST(SliceAndPad, LeftAlignsAndZeroFills) {
  AudioClip c;
  c.samples = {0.1f, -0.2f, 0.3f, -0.4f, 0.5f};
  const auto out = slice_and_pad(c, 8);
  ASSERT_EQ(out.size(), 8u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(out.samples[i], c.samples[i]);
  for (int i = 5; i < 8; ++i) EXPECT_EQ(out.samples[i], 0.0f);
}

TEST(SliceAndPad, IdempotentAndFullLengthUnchanged) {
  Rng rng(3);
  AudioClip c;
  for (int i = 0; i < 300; ++i) c.samples.push_back(static_cast<float>(rng.uniform(-1, 1)));
  const auto once = slice_and_pad(c, 512);
  EXPECT_EQ(slice_and_pad(once, 512).samples, once.samples);
  EXPECT_EQ(slice_and_pad(once, 512).samples, once.samples);
  const auto paper = slice_and_pad(c, 16384);
  EXPECT_DOUBLE_EQ(paper.seconds(), 1.024);
}

TEST(SliceAndPad, OverlengthStrictThrowsCropCenters) {
  AudioClip c;
  for (int i = 0; i < 10; ++i) c.samples.push_back(static_cast<float>(i) / 10.0f);
  EXPECT_THROW(slice_and_pad(c, 6), ValidationError);
  const auto cropped = slice_and_pad(c, 6, OverlengthPolicy::center_crop);
  ASSERT_EQ(cropped.size(), 6u);
  EXPECT_EQ(cropped.samples.front(), 0.2f);
  EXPECT_EQ(cropped.samples.back(), 0.7f);
}

TEST(ToyCorpus, ShapeLabelsAndNoDuplicates) {
  Rng rng(11);
  const auto tokens = make_toy_corpus(4, 500, 4096, rng);
  ASSERT_EQ(tokens.size(), 2000u);
  std::map<std::string, int> counts;
  std::set<std::string> hashes;
  for (const auto& t : tokens) {
    ++counts[t.word];
    hashes.insert(t.hash);
    EXPECT_EQ(t.clip.size(), 4096u);
    t.clip.validate();
  }
  EXPECT_EQ(counts.size(), 4u);
  for (auto& [w, n] : counts) EXPECT_EQ(n, 500) << w;
  EXPECT_EQ(hashes.size(), tokens.size());
  EXPECT_THROW(make_toy_corpus(1, 10, 4096, rng), ValidationError);
}

TEST(ToyCorpus, OnlyNoiseInitialClassesAreSWords) {
  for (std::size_t c = 0; c < 24; ++c) EXPECT_EQ(toy::class_has_noise_onset(c), is_s_initial(toy::class_name(c))) << c;
}

TEST(ToyCorpus, SWordsOpenWithHighBandNoise) {
  Rng rng(5);
  const auto tokens = make_toy_corpus(8, 60, 4096, rng);
  int correct = 0;
  for (const auto& t : tokens) {
    std::size_t onset = 0;
    while (onset < t.clip.size() && std::abs(t.clip.samples[onset]) < 1e-3f) ++onset;
    // Share of 4-8 kHz power in the first 32 ms.
    double hi = 0, all = 0;
    for (std::size_t f = 0; f < 4; ++f) {
      auto p = naive_band_power(t.clip.samples, onset + f * 128, 128, 2);
      hi += p[1];
      all += p[0] + p[1];
    }
    correct += ((hi / all > 0.5) == is_s_initial(t.word));
  }
  EXPECT_GE(correct / double(tokens.size()), 0.99);
}

TEST(ToyCorpus, ClassesRecoverableBySpectralOracle) {
  Rng rng(21);
  const std::size_t classes = 8, per = 60;
  const auto tokens = make_toy_corpus(classes, per, 4096, rng);
  std::map<std::string, std::vector<double>> centroid;
  std::map<std::string, int> n;
  std::vector<std::pair<std::string, std::vector<double>>> held;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto f = oracle_features(tokens[i].clip);
    if (i % per < per / 2) {
      auto& c = centroid[tokens[i].word];
      c.resize(f.size(), 0.0);
      for (std::size_t k = 0; k < f.size(); ++k) c[k] += f[k];
      ++n[tokens[i].word];
    } else {
      held.emplace_back(tokens[i].word, std::move(f));
    }
  }
  for (auto& [w, c] : centroid)
    for (auto& v : c) v /= n[w];
  int correct = 0;
  for (const auto& [word, f] : held) {
    std::string best;
    double best_d = 1e300;
    for (const auto& [w, c] : centroid) {
      double d = 0;
      for (std::size_t k = 0; k < f.size(); ++k) d += (f[k] - c[k]) * (f[k] - c[k]);
      if (d < best_d) best_d = d, best = w;
    }
    correct += best == word;
  }
  EXPECT_GE(correct / double(held.size()), 0.99);
}

TEST(Split, StratifiedEightyTwenty) {
  Rng rng(2);
  auto tokens = make_toy_corpus(3, 100, 1024, rng);
  Rng split_rng(9);
  const auto report = split_corpus(tokens, 0.2, split_rng);
  EXPECT_TRUE(report.warnings.empty());
  std::map<std::string, std::pair<int, int>> per;
  for (const auto& t : tokens) (t.split == Split::train ? per[t.word].first : per[t.word].second)++;
  for (auto& [w, tt] : per) {
    EXPECT_EQ(tt.first, 80) << w;
    EXPECT_EQ(tt.second, 20) << w;
  }
  assert_no_leakage(tokens);
}

TEST(Split, SameSeedSameAssignment) {
  Rng a(4), b(4);
  auto t1 = make_toy_corpus(2, 50, 1024, a);
  auto t2 = make_toy_corpus(2, 50, 1024, b);
  Rng s1(7), s2(7), s3(8);
  split_corpus(t1, 0.3, s1);
  split_corpus(t2, 0.3, s2);
  EXPECT_EQ(corpus_hash(t1), corpus_hash(t2));
  split_corpus(t2, 0.3, s3);
  EXPECT_NE(corpus_hash(t1), corpus_hash(t2));
}

TEST(Split, SingletonWordWarnsAndDuplicatesMoveToTrain) {
  Rng rng(1);
  auto tokens = make_toy_corpus(2, 10, 1024, rng);
  tokens.resize(11);  // one token of the second word
  auto dup = tokens[0];
  dup.id = "sa/copy";
  tokens.push_back(dup);
  Rng s(3);
  const auto report = split_corpus(tokens, 0.5, s);
  EXPECT_FALSE(report.warnings.empty());
  EXPECT_EQ(tokens[10].split, Split::train);
  EXPECT_NO_THROW(assert_no_leakage(tokens));
  EXPECT_THROW(split_corpus(tokens, 1.0, s), ValidationError);
}

TEST(Split, LeakageAssertionFires) {
  Rng rng(1);
  auto tokens = make_toy_corpus(2, 4, 1024, rng);
  tokens[1].split = Split::test;
  tokens[1].hash = tokens[0].hash;
  EXPECT_THROW(assert_no_leakage(tokens), ValidationError);
}

TEST(Split, PaperScaleTestSizesExpressible) {
  // 10,914 test tokens out of a larger pool split at a fixed fraction.
  std::vector<Token> tokens(21828);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens[i].id = std::to_string(i);
    tokens[i].word = "w" + std::to_string(i % 2);
    tokens[i].hash = std::to_string(i);
  }
  Rng s(0);
  split_corpus(tokens, 0.5, s);
  EXPECT_EQ(tokens_in(tokens, Split::test).size(), 10914u);
}

TEST(Manifest, SaveLoadRoundTrip) {
  const auto dir = scratch("manifest");
  Rng rng(6);
  auto tokens = make_toy_corpus(2, 6, 512, rng);
  Rng s(1);
  split_corpus(tokens, 0.5, s);
  const auto m = describe_corpus(tokens, 512, 16000, {{"toy", true}});
  save_prepared_corpus(dir, m, tokens);
  const auto back = load_prepared_corpus(dir);
  EXPECT_EQ(back.manifest.content_hash, m.content_hash);
  EXPECT_EQ(back.manifest.word_counts, m.word_counts);
  ASSERT_EQ(back.tokens.size(), tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    EXPECT_EQ(back.tokens[i].clip.samples, tokens[i].clip.samples);
    EXPECT_EQ(back.tokens[i].split, tokens[i].split);
  }
  // Tampering with a clip is detected.
  auto bad = tokens[0].clip.samples;
  bad[0] += 0.5f;
  write_f32_le(dir / token_file(tokens[0]), bad);
  EXPECT_THROW(load_prepared_corpus(dir), IoError);
}

TEST(Manifest, WordDirectoryIngest) {
  const auto dir = scratch("ingest");
  Rng rng(8);
  for (const std::string w : {"dark", "suit", "water"})
    for (int i = 0; i < 3; ++i) {
      AudioClip c;
      for (int k = 0; k < 100 + 10 * i; ++k) c.samples.push_back(static_cast<float>(rng.uniform(-0.5, 0.5)));
      char name[32];
      std::snprintf(name, sizeof name, "token_%03d.wav", i);
      write_wav(dir / w / name, c);
    }
  const auto tokens = load_word_directory(dir, 256, 16000);
  ASSERT_EQ(tokens.size(), 9u);
  EXPECT_EQ(tokens[0].id, "dark/token_000");
  EXPECT_EQ(tokens[3].word, "suit");
  for (const auto& t : tokens) EXPECT_EQ(t.clip.size(), 256u);
  EXPECT_THROW(load_word_directory(dir, 64, 16000), ValidationError);
  EXPECT_THROW(load_word_directory(dir, 256, 8000), ValidationError);
  EXPECT_THROW(load_word_directory(dir / "missing", 256, 16000), IoError);
}
