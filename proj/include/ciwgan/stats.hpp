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

// Regression and table statistics for probe outputs: binary and
// baseline-category logistic regression, grouped proportions, peak matching,
// contingency-table summaries.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ciwgan/audio.hpp"
#include "ciwgan/errors.hpp"
#include "ciwgan/rng.hpp"

namespace ciwgan::stats {

inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }
/// Upper tail of the chi-square distribution with one degree of freedom.
inline double chi2_1_sf(double x) { return x <= 0 ? 1.0 : std::erfc(std::sqrt(x / 2.0)); }

struct Term {
  std::string name;
  double beta = 0, stderr_ = 0, z = 0, p = 1;
};

struct RegressionFit {
  std::string kind;  // "logistic" or "multinomial"
  std::vector<std::string> design;  // predictors and reference levels
  std::vector<Term> terms;
  double log_likelihood = 0;
  std::size_t k = 0;
  double aic = 0;
  std::size_t n_obs = 0;
  std::string data_hash;  // of the outcome rows; nested fits on the same records share it
  bool converged = false;
  bool separation = false;
  std::size_t iterations = 0;
  double ridge = 0;
  std::vector<std::string> warnings;

  const Term& term(const std::string& name) const {
    for (const auto& t : terms)
      if (t.name == name) return t;
    throw ValidationError("fit has no term '" + name + "'");
  }
};

inline double aic(double log_likelihood, std::size_t k) { return 2.0 * static_cast<double>(k) - 2.0 * log_likelihood; }

namespace detail {

inline std::string hash_rows(const std::string& text) {
  return hex64(fnv1a(text.data(), text.size()));
}

inline void fill_terms(RegressionFit& fit, const std::vector<std::string>& names, const Eigen::VectorXd& beta,
                       const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd cov = hessian.ldlt().solve(Eigen::MatrixXd::Identity(beta.size(), beta.size()));
  fit.terms.clear();
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    Term t;
    t.name = names[static_cast<std::size_t>(i)];
    t.beta = beta[i];
    t.stderr_ = std::sqrt(std::max(cov(i, i), 0.0));
    t.z = t.stderr_ > 0 ? t.beta / t.stderr_ : 0.0;
    t.p = normal_two_sided_p(t.z);
    fit.terms.push_back(t);
  }
  fit.aic = aic(fit.log_likelihood, fit.k);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace detail

struct FitOptions {
  double ridge = 1e-6;  // added as ridge * ||beta||^2 to the negative log-likelihood
  std::size_t max_iter = 200;
  double tol = 1e-10;
  double separation_threshold = 1e-4;  // fitted probability this close to 0 or 1
};

/// Binary logistic regression with intercept by damped Newton iterations.
/// `columns[j]` holds predictor j for every observation. Constant columns
/// are dropped with a warning.
inline RegressionFit fit_logistic(const std::vector<int>& y, const std::vector<std::vector<double>>& columns,
                                  const std::vector<std::string>& names, const FitOptions& opt = {}) {
  const std::size_t n = y.size();
  if (n == 0) throw ValidationError("fit_logistic: no observations");
  if (names.size() != columns.size()) throw ValidationError("fit_logistic: names and columns differ in count");
  std::size_t positives = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("fit_logistic: outcome must be 0/1");
    positives += static_cast<std::size_t>(v);
  }
  if (positives == 0 || positives == n) throw ValidationError("fit_logistic: outcome is constant");

  RegressionFit fit;
  fit.kind = "logistic";
  fit.ridge = opt.ridge;
  fit.n_obs = n;
  std::vector<std::string> used{"(intercept)"};
  std::vector<const std::vector<double>*> cols;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != n) throw ValidationError("fit_logistic: column '" + names[j] + "' has wrong length");
    const auto [mn, mx] = std::minmax_element(columns[j].begin(), columns[j].end());
    if (*mn == *mx) {
      fit.warnings.push_back("predictor '" + names[j] + "' is constant; dropped");
      continue;
    }
    used.push_back(names[j]);
    cols.push_back(&columns[j]);
  }
  fit.design = used;
  const auto p = static_cast<Eigen::Index>(used.size());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
  std::string rows;
  for (std::size_t i = 0; i < n; ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < cols.size(); ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = (*cols[j])[i];
    Y[static_cast<Eigen::Index>(i)] = y[i];
    rows += std::to_string(y[i]) + ";";
  }
  fit.data_hash = detail::hash_rows(rows);

  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = X * b;
    double nll = 0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) nll += detail::softplus(eta[i]) - Y[i] * eta[i];
    return nll + opt.ridge * b.squaredNorm();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta[0] = std::log(static_cast<double>(positives) / static_cast<double>(n - positives));
  Eigen::MatrixXd H(p, p);
  double obj = objective(beta);
  for (fit.iterations = 0; fit.iterations < opt.max_iter; ++fit.iterations) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    const Eigen::VectorXd grad = X.transpose() * (mu - Y) + 2.0 * opt.ridge * beta;
    H = X.transpose() * w.asDiagonal() * X;
    H.diagonal().array() += 2.0 * opt.ridge;
    const Eigen::VectorXd delta = H.ldlt().solve(grad);
    double step = 1.0, next = objective(beta - delta);
    while (next > obj + 1e-12 * std::abs(obj) && step > 1e-8) {
      step *= 0.5;
      next = objective(beta - step * delta);
    }
    beta -= step * delta;
    const double change = (step * delta).cwiseAbs().maxCoeff();
    obj = next;
    if (change < opt.tol || grad.cwiseAbs().maxCoeff() < opt.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) fit.warnings.push_back("Newton iterations did not converge");

  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd w(eta.size());
  fit.log_likelihood = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double mu = 1.0 / (1.0 + std::exp(-eta[i]));
    w[i] = mu * (1.0 - mu);
    fit.log_likelihood -= detail::softplus(eta[i]) - Y[i] * eta[i];
    if (mu < opt.separation_threshold || mu > 1.0 - opt.separation_threshold) fit.separation = true;
  }
  if (fit.separation) fit.warnings.push_back("fitted probabilities at 0 or 1: (quasi-)separation");
  H = X.transpose() * w.asDiagonal() * X;
  H.diagonal().array() += 2.0 * opt.ridge;
  fit.k = static_cast<std::size_t>(p);
  detail::fill_terms(fit, used, beta, H);
  return fit;
}

/// Baseline-category multinomial logit for `outcome` (words) with an optional
/// categorical predictor (codes). The reference outcome and predictor levels
/// are the lexicographically first observed ones. Declared predictor levels
/// that never occur are dropped with a warning.
inline RegressionFit fit_multinomial(const std::vector<std::string>& outcome, const std::vector<std::string>* predictor,
                                     const FitOptions& opt = {}, const std::vector<std::string>& declared_levels = {}) {
  const std::size_t n = outcome.size();
  if (n == 0) throw ValidationError("fit_multinomial: no observations");
  if (predictor && predictor->size() != n) throw ValidationError("fit_multinomial: predictor length mismatch");
  const std::set<std::string> wset(outcome.begin(), outcome.end());
  if (wset.size() < 2) throw ValidationError("fit_multinomial: need at least 2 outcome levels");
  const std::vector<std::string> words(wset.begin(), wset.end());
  std::vector<std::string> levels;
  RegressionFit fit;
  fit.kind = "multinomial";
  fit.ridge = opt.ridge;
  fit.n_obs = n;
  if (predictor) {
    const std::set<std::string> cset(predictor->begin(), predictor->end());
    levels.assign(cset.begin(), cset.end());
    for (const auto& d : declared_levels)
      if (!cset.count(d)) fit.warnings.push_back("code level '" + d + "' has no observations; dropped");
  }
  const std::size_t W = words.size(), P = predictor ? levels.size() : 1;  // design columns incl. intercept
  fit.design.push_back("outcome reference: " + words.front());
  if (predictor) fit.design.push_back("predictor code, reference: " + levels.front());

  std::map<std::string, std::size_t> widx, cidx;
  for (std::size_t i = 0; i < W; ++i) widx[words[i]] = i;
  for (std::size_t i = 0; i < levels.size(); ++i) cidx[levels[i]] = i;
  std::vector<std::size_t> yi(n), ci(n, 0);
  std::string rows;
  for (std::size_t i = 0; i < n; ++i) {
    yi[i] = widx[outcome[i]];
    if (predictor) ci[i] = cidx[(*predictor)[i]];
    rows += outcome[i] + "\n";
  }
  fit.data_hash = detail::hash_rows(rows);

  // Observations share design rows, so work with counts per predictor level.
  const std::size_t L = predictor ? levels.size() : 1;
  std::vector<std::vector<double>> counts(L, std::vector<double>(W, 0.0));
  for (std::size_t i = 0; i < n; ++i) counts[ci[i]][yi[i]] += 1.0;
  auto design_row = [&](std::size_t level, Eigen::VectorXd& x) {
    x.setZero(static_cast<Eigen::Index>(P));
    x[0] = 1.0;
    if (level > 0) x[static_cast<Eigen::Index>(level)] = 1.0;
  };

  const auto D = static_cast<Eigen::Index>((W - 1) * P);  // beta[(w-1)*P + j]
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(D);
  auto probs = [&](const Eigen::VectorXd& b, std::size_t level, std::vector<double>& pr) {
    Eigen::VectorXd x;
    design_row(level, x);
    pr.assign(W, 0.0);
    double mx = 0.0;
    std::vector<double> eta(W, 0.0);
    for (std::size_t w = 1; w < W; ++w) {
      eta[w] = b.segment(static_cast<Eigen::Index>((w - 1) * P), static_cast<Eigen::Index>(P)).dot(x);
      mx = std::max(mx, eta[w]);
    }
    double z = 0;
    for (std::size_t w = 0; w < W; ++w) z += std::exp(eta[w] - mx);
    double log_z = mx + std::log(z);
    for (std::size_t w = 0; w < W; ++w) pr[w] = std::exp(eta[w] - log_z);
    return std::make_pair(eta, log_z);
  };
  auto loglik = [&](const Eigen::VectorXd& b) {
    double ll = 0;
    std::vector<double> pr;
    for (std::size_t l = 0; l < L; ++l) {
      const auto [eta, log_z] = probs(b, l, pr);
      for (std::size_t w = 0; w < W; ++w)
        if (counts[l][w] > 0) ll += counts[l][w] * (eta[w] - log_z);
    }
    return ll;
  };
  auto grad_hess = [&](const Eigen::VectorXd& b, Eigen::VectorXd& g, Eigen::MatrixXd& H) {
    g = 2.0 * opt.ridge * b;
    H = Eigen::MatrixXd::Identity(D, D) * (2.0 * opt.ridge);
    std::vector<double> pr;
    Eigen::VectorXd x;
    for (std::size_t l = 0; l < L; ++l) {
      double nl = std::accumulate(counts[l].begin(), counts[l].end(), 0.0);
      if (nl == 0) continue;
      probs(b, l, pr);
      design_row(l, x);
      const Eigen::MatrixXd xx = x * x.transpose();
      for (std::size_t a = 1; a < W; ++a) {
        const auto ra = static_cast<Eigen::Index>((a - 1) * P);
        g.segment(ra, static_cast<Eigen::Index>(P)) += (nl * pr[a] - counts[l][a]) * x;
        for (std::size_t c = 1; c < W; ++c) {
          const auto rc = static_cast<Eigen::Index>((c - 1) * P);
          const double v = nl * pr[a] * ((a == c ? 1.0 : 0.0) - pr[c]);
          H.block(ra, rc, static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P)) += v * xx;
        }
      }
    }
  };

  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  double obj = -loglik(beta) + opt.ridge * beta.squaredNorm();
  for (fit.iterations = 0; fit.iterations < opt.max_iter; ++fit.iterations) {
    grad_hess(beta, g, H);
    const Eigen::VectorXd delta = H.ldlt().solve(g);
    double step = 1.0;
    double next = -loglik(beta - delta) + opt.ridge * (beta - delta).squaredNorm();
    while (next > obj + 1e-12 * std::abs(obj) && step > 1e-8) {
      step *= 0.5;
      next = -loglik(beta - step * delta) + opt.ridge * (beta - step * delta).squaredNorm();
    }
    beta -= step * delta;
    obj = next;
    if ((step * delta).cwiseAbs().maxCoeff() < opt.tol || g.cwiseAbs().maxCoeff() < opt.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) fit.warnings.push_back("Newton iterations did not converge");
  fit.log_likelihood = loglik(beta);
  std::vector<double> pr;
  for (std::size_t l = 0; l < L && !fit.separation; ++l) {
    probs(beta, l, pr);
    for (std::size_t w = 0; w < W; ++w)
      if (pr[w] < opt.separation_threshold) fit.separation = true;
  }
  if (fit.separation) fit.warnings.push_back("fitted probabilities at 0: (quasi-)separation");
  grad_hess(beta, g, H);
  fit.k = static_cast<std::size_t>(D);
  std::vector<std::string> names;
  for (std::size_t w = 1; w < W; ++w) {
    names.push_back(words[w] + ":(intercept)");
    for (std::size_t j = 1; j < P; ++j) names.push_back(words[w] + ":code=" + levels[j]);
  }
  detail::fill_terms(fit, names, beta, H);
  return fit;
}

/// Parameter count of the baseline-category model: (W-1) * (1 + (C-1)),
/// or W-1 without a predictor.
inline std::size_t multinomial_parameter_count(std::size_t words, std::size_t code_levels, bool with_predictor) {
  if (words < 2) throw ValidationError("multinomial: need at least 2 outcome levels");
  return (words - 1) * (with_predictor ? code_levels : 1);
}

struct AicComparison {
  std::string preferred;  // "a", "b" or "tie"
  double delta = 0;       // aic(b) - aic(a)
};

inline AicComparison aic_compare(const RegressionFit& a, const RegressionFit& b) {
  if (a.n_obs != b.n_obs) throw ValidationError("aic_compare: fits use different row counts");
  if (a.data_hash != b.data_hash) throw ValidationError("aic_compare: fits use different data");
  AicComparison out;
  out.delta = b.aic - a.aic;
  out.preferred = out.delta > 0 ? "a" : out.delta < 0 ? "b" : "tie";
  return out;
}

// ---------------------------------------------------------------------------
// Proportions

struct Proportion {
  std::size_t successes = 0, n = 0;
  double estimate = 0, lower = 0, upper = 0;
  bool defined = false;  // false for an empty group
};

/// Wald interval on the logit scale, back-transformed. At 0 or n successes
/// the logit is evaluated at 0.5 or n - 0.5 and the open end is pinned to 0 or 1.
inline Proportion logit_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054) {
  Proportion p;
  p.successes = successes;
  p.n = n;
  if (n == 0) return p;
  if (successes > n) throw ValidationError("proportion: successes exceed trials");
  p.defined = true;
  p.estimate = static_cast<double>(successes) / static_cast<double>(n);
  const double s = successes == 0 ? 0.5 : successes == n ? static_cast<double>(n) - 0.5 : static_cast<double>(successes);
  const double f = static_cast<double>(n) - s;
  const double logit = std::log(s / f);
  const double se = std::sqrt(1.0 / s + 1.0 / f);
  auto inv = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  p.lower = successes == 0 ? 0.0 : inv(logit - z * se);
  p.upper = successes == n ? 1.0 : inv(logit + z * se);
  return p;
}

struct FeatureRecord {
  std::vector<int> bits;  // hard code bits phi_1..phi_n as 0/1
  bool outcome = false;
};

struct GroupedResult {
  std::vector<std::size_t> bits;
  Proportion all_zero, all_one;
  std::size_t mixed = 0;
  std::optional<RegressionFit> fit;  // outcome ~ group indicator
  double lrt_statistic = 0;
  double lrt_p = 1;
  std::vector<std::string> flags;
};

/// Splits records by whether every bit in `subset` (0-based) is 0 or every
/// one is 1; rows with mixed values are counted separately.
inline GroupedResult grouped_feature_test(const std::vector<FeatureRecord>& records, const std::vector<std::size_t>& subset,
                                          const FitOptions& opt = {}) {
  if (subset.empty()) throw ValidationError("grouped_feature_test: bit subset is empty");
  GroupedResult r;
  r.bits = subset;
  std::size_t s0 = 0, n0 = 0, s1 = 0, n1 = 0;
  std::vector<int> y;
  std::vector<double> g;
  for (const auto& rec : records) {
    bool zeros = true, ones = true;
    for (auto b : subset) {
      if (b >= rec.bits.size()) throw ValidationError("grouped_feature_test: bit index " + std::to_string(b + 1) + " out of range");
      zeros &= rec.bits[b] == 0;
      ones &= rec.bits[b] == 1;
    }
    if (zeros) {
      ++n0;
      s0 += rec.outcome;
    } else if (ones) {
      ++n1;
      s1 += rec.outcome;
    } else {
      ++r.mixed;
      continue;
    }
    y.push_back(rec.outcome ? 1 : 0);
    g.push_back(ones ? 1.0 : 0.0);
  }
  r.all_zero = logit_interval(s0, n0);
  r.all_one = logit_interval(s1, n1);
  if (!r.all_zero.defined) r.flags.push_back("all-zero group is empty; interval undefined");
  if (!r.all_one.defined) r.flags.push_back("all-one group is empty; interval undefined");
  const std::size_t pos = s0 + s1, total = n0 + n1;
  if (pos == 0 || pos == total) {
    r.flags.push_back("outcome constant across both groups; no test");
    return r;
  }
  r.fit = fit_logistic(y, {g}, {"group_all_one"}, opt);
  const double p_hat = static_cast<double>(pos) / static_cast<double>(total);
  const double ll0 = static_cast<double>(pos) * std::log(p_hat) + static_cast<double>(total - pos) * std::log(1.0 - p_hat);
  r.lrt_statistic = std::max(0.0, 2.0 * (r.fit->log_likelihood - ll0));
  r.lrt_p = r.fit->terms.size() > 1 ? chi2_1_sf(r.lrt_statistic) : 1.0;
  return r;
}

struct CapacityReport {
  std::size_t n_bits = 0, reserved_bits = 0, classes = 0, target_words = 0;
  bool feasible = false;
};

inline CapacityReport feature_capacity_check(std::size_t n_bits, std::size_t reserved_bits, std::size_t target_words) {
  if (reserved_bits > n_bits) throw ValidationError("capacity: reserved bits exceed total bits");
  if (n_bits - reserved_bits >= 63) throw ValidationError("capacity: too many free bits");
  CapacityReport r{n_bits, reserved_bits, std::size_t{1} << (n_bits - reserved_bits), target_words, false};
  r.feasible = r.classes >= target_words;
  return r;
}

// ---------------------------------------------------------------------------
// Word/code tables

struct WordCode {
  std::string word;
  std::string code;
};

using Table = std::map<std::string, std::map<std::string, std::size_t>>;  // word -> code -> count

inline Table contingency(const std::vector<WordCode>& records) {
  Table t;
  for (const auto& r : records) ++t[r.word][r.code];
  return t;
}

enum class PeakCategory { mutual, tied, fail };
inline std::string to_string(PeakCategory c) {
  return c == PeakCategory::mutual ? "mutual" : c == PeakCategory::tied ? "tied" : "fail";
}

struct PeakRow {
  std::string word;
  std::string peak_code;             // empty when the word's peak is not unique
  bool word_peak_tied = false;       // several codes share the word's top count
  bool all_equal = false;            // every code the word received has the same count
  std::vector<std::string> code_peak_words;  // most frequent words at peak_code
  PeakCategory category = PeakCategory::fail;
};

struct PeakMatchReport {
  std::vector<PeakRow> rows;
  std::size_t mutual = 0, tied = 0, fail = 0;
};

/// For each word: its most frequent code, then the most frequent word(s)
/// under that code over all records. mutual: both peaks unique and pointing
/// at each other; tied: the word shares the top count at its code; fail
/// otherwise, including a word whose codes all have equal counts.
inline PeakMatchReport peak_match(const std::vector<WordCode>& records, const std::vector<std::string>& word_subset) {
  const Table t = contingency(records);
  std::map<std::string, std::map<std::string, std::size_t>> by_code;
  for (const auto& [w, codes] : t)
    for (const auto& [c, n] : codes) by_code[c][w] += n;
  PeakMatchReport rep;
  for (const auto& word : word_subset) {
    const auto it = t.find(word);
    if (it == t.end()) throw ValidationError("peak_match: word '" + word + "' has no records");
    PeakRow row;
    row.word = word;
    std::size_t top = 0, low = SIZE_MAX;
    for (const auto& [c, n] : it->second) top = std::max(top, n), low = std::min(low, n);
    std::vector<std::string> peaks;
    for (const auto& [c, n] : it->second)
      if (n == top) peaks.push_back(c);
    row.all_equal = it->second.size() > 1 && top == low;
    row.word_peak_tied = peaks.size() > 1;
    if (!row.word_peak_tied) {
      row.peak_code = peaks.front();
      std::size_t wtop = 0;
      for (const auto& [w, n] : by_code[row.peak_code]) wtop = std::max(wtop, n);
      for (const auto& [w, n] : by_code[row.peak_code])
        if (n == wtop) row.code_peak_words.push_back(w);
      const bool at_top = std::find(row.code_peak_words.begin(), row.code_peak_words.end(), word) != row.code_peak_words.end();
      if (at_top) row.category = row.code_peak_words.size() == 1 ? PeakCategory::mutual : PeakCategory::tied;
    }
    if (row.all_equal) row.category = PeakCategory::fail;
    switch (row.category) {
      case PeakCategory::mutual: ++rep.mutual; break;
      case PeakCategory::tied: ++rep.tied; break;
      case PeakCategory::fail: ++rep.fail; break;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

/// Share of records whose word is the most frequent word of their code.
inline double majority_code_purity(const std::vector<WordCode>& records) {
  if (records.empty()) throw ValidationError("purity: no records");
  std::map<std::string, std::map<std::string, std::size_t>> by_code;
  for (const auto& r : records) ++by_code[r.code][r.word];
  std::size_t hit = 0;
  for (const auto& [c, words] : by_code) {
    std::size_t top = 0;
    for (const auto& [w, n] : words) top = std::max(top, n);
    hit += top;
  }
  return static_cast<double>(hit) / static_cast<double>(records.size());
}

/// Pearson chi-square statistic of the word x code table.
inline double chi_square_statistic(const std::vector<std::size_t>& words, const std::vector<std::size_t>& codes,
                                   std::size_t n_words, std::size_t n_codes) {
  std::vector<double> table(n_words * n_codes, 0.0), rw(n_words, 0.0), rc(n_codes, 0.0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    table[words[i] * n_codes + codes[i]] += 1;
    rw[words[i]] += 1;
    rc[codes[i]] += 1;
  }
  const double n = static_cast<double>(words.size());
  double x2 = 0;
  for (std::size_t w = 0; w < n_words; ++w)
    for (std::size_t c = 0; c < n_codes; ++c) {
      const double e = rw[w] * rc[c] / n;
      if (e > 0) x2 += (table[w * n_codes + c] - e) * (table[w * n_codes + c] - e) / e;
    }
  return x2;
}

struct PermutationResult {
  double statistic = 0;
  double p_value = 1;
  std::size_t permutations = 0;
};

/// Independence of word and code by permuting code labels; p = (1 + #{perm >= obs}) / (1 + permutations).
inline PermutationResult permutation_test(const std::vector<WordCode>& records, std::size_t permutations, Rng& rng) {
  if (records.empty()) throw ValidationError("permutation test: no records");
  std::map<std::string, std::size_t> wi, ci;
  for (const auto& r : records) wi.emplace(r.word, 0), ci.emplace(r.code, 0);
  std::size_t k = 0;
  for (auto& [w, i] : wi) i = k++;
  k = 0;
  for (auto& [c, i] : ci) i = k++;
  std::vector<std::size_t> words, codes;
  for (const auto& r : records) words.push_back(wi[r.word]), codes.push_back(ci[r.code]);
  PermutationResult out;
  out.permutations = permutations;
  out.statistic = chi_square_statistic(words, codes, wi.size(), ci.size());
  std::size_t extreme = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = codes.size(); i > 1; --i)
      std::swap(codes[i - 1], codes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    if (chi_square_statistic(words, codes, wi.size(), ci.size()) >= out.statistic - 1e-9) ++extreme;
  }
  out.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + permutations);
  return out;
}

}  // namespace ciwgan::stats
