// Copyright 2026 The vcmarkov Authors.
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

// Serial dependence diagnostics, rank correlation and the blockwise
// interaction regression.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "vcmarkov/encoder.hpp"
#include "vcmarkov/error.hpp"
#include "vcmarkov/markov.hpp"
#include "vcmarkov/parallel.hpp"
#include "vcmarkov/resample.hpp"
#include "vcmarkov/special_functions.hpp"

namespace vcmarkov {

// ---------------------------------------------------------------------------
// Autocorrelation

struct AcfResult {
  std::vector<double> rho;  // rho[k-1] is the lag-k autocorrelation
  std::size_t n = 0;

  std::size_t max_lag() const noexcept { return rho.size(); }
  double at_lag(std::size_t k) const { return rho.at(k - 1); }
};

/// rho_k = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2.
inline AcfResult autocorrelation(SymbolSpan seq, std::size_t max_lag) {
  const std::size_t n = seq.size();
  if (max_lag < 1 || n <= max_lag)
    throw DataError("autocorrelation needs n > max_lag >= 1 (n = " + std::to_string(n) +
                    ", max_lag = " + std::to_string(max_lag) + ")");
  double mean = 0;
  for (Symbol s : seq) mean += s;
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  double denom = 0;
  for (std::size_t t = 0; t < n; ++t) {
    centered[t] = seq[t] - mean;
    denom += centered[t] * centered[t];
  }
  if (denom == 0) throw DomainError("autocorrelation of a constant sequence");
  AcfResult r;
  r.n = n;
  r.rho.resize(max_lag);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0;
    for (std::size_t t = 0; t + k < n; ++t) num += centered[t] * centered[t + k];
    r.rho[k - 1] = num / denom;
  }
  return r;
}

struct LjungBoxResult {
  double q = 0;
  std::size_t h = 0;
  double p_value = 1;
};

/// Q = n(n+2) sum_{k<=h} rho_k^2 / (n-k); p = chi-square(h) upper tail.
inline LjungBoxResult ljung_box_test(const AcfResult& acf, std::size_t h) {
  if (h < 1) throw DataError("Ljung-Box needs h >= 1");
  if (h > acf.rho.size())
    throw DataError("Ljung-Box h = " + std::to_string(h) + " exceeds the " +
                    std::to_string(acf.rho.size()) + " computed lags");
  const double n = static_cast<double>(acf.n);
  double sum = 0;
  for (std::size_t k = 1; k <= h; ++k) sum += acf.rho[k - 1] * acf.rho[k - 1] / (n - k);
  LjungBoxResult r;
  r.h = h;
  r.q = n * (n + 2) * sum;
  r.p_value = chi_square_upper_tail(r.q, static_cast<double>(h));
  return r;
}

// ---------------------------------------------------------------------------
// Rank correlation

/// 1-based ranks with ties replaced by their average rank.
inline std::vector<double> mid_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw DomainError("correlation with a constant variable");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Two-sided p-value of a correlation from the t distribution with `df`
/// degrees of freedom. |r| = 1 gives 0.
inline double correlation_t_pvalue(double r, double df) {
  if (!(df > 0)) throw DomainError("non-positive degrees of freedom");
  if (std::fabs(r) >= 1.0) return 0.0;
  const double t = r * std::sqrt(df / ((1 - r) * (1 + r)));
  boost::math::students_t_distribution<double> dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

enum class PValueMethod { ExactPermutation, TApproximation };

struct SpearmanResult {
  double rho = 0;
  double p_value = 1;
  std::size_t n = 0;
  PValueMethod method = PValueMethod::TApproximation;
  std::vector<std::string> controlled_for;
};

/// Largest n for which the permutation distribution is enumerated.
inline constexpr std::size_t kExactSpearmanMaxN = 10;

namespace detail {

/// Null distribution of S = sum_i a_i b_pi(i) over all n! permutations, as
/// counts of |S|. a and b are doubled centered mid-ranks, so S is an exact
/// integer. It depends only on the two multisets, which lets trend scans
/// over many series with the same tie pattern share one enumeration.
struct ExactSpearmanNull {
  std::vector<std::pair<long long, std::uint64_t>> abs_counts;  // ascending |S|
  std::uint64_t total = 0;
};

inline const ExactSpearmanNull& exact_spearman_null(std::vector<long long> a,
                                                    std::vector<long long> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  thread_local std::map<std::pair<std::vector<long long>, std::vector<long long>>,
                        ExactSpearmanNull>
      cache;
  auto key = std::pair{a, b};
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::map<long long, std::uint64_t> hist;
  std::uint64_t total = 0;
  do {
    long long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    ++hist[s < 0 ? -s : s];
    ++total;
  } while (std::next_permutation(b.begin(), b.end()));
  // next_permutation visits distinct arrangements of the multiset; weight
  // them by the number of index permutations mapping onto each.
  std::uint64_t multiplicity = 1;
  for (std::size_t i = 0; i < b.size();) {
    std::size_t j = i;
    while (j < b.size() && b[j] == b[i]) ++j;
    for (std::size_t k = 2; k <= j - i; ++k) multiplicity *= k;
    i = j;
  }
  ExactSpearmanNull null;
  null.total = total * multiplicity;
  for (const auto& [v, c] : hist) null.abs_counts.emplace_back(v, c * multiplicity);
  return cache.emplace(std::move(key), std::move(null)).first->second;
}

}  // namespace detail

/// Two-sided exact permutation p-value: the share of the n! arrangements of
/// y whose |rho| is at least the observed one.
inline double spearman_exact_pvalue(const std::vector<double>& rx, const std::vector<double>& ry) {
  const std::size_t n = rx.size();
  const double center = static_cast<double>(n + 1);  // twice the mean rank
  std::vector<long long> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = std::llround(2 * rx[i] - center);
    b[i] = std::llround(2 * ry[i] - center);
  }
  long long observed = 0;
  for (std::size_t i = 0; i < n; ++i) observed += a[i] * b[i];
  if (observed < 0) observed = -observed;
  const auto& null = detail::exact_spearman_null(a, b);
  std::uint64_t hits = 0;
  for (const auto& [v, c] : null.abs_counts)
    if (v >= observed) hits += c;
  return static_cast<double>(hits) / static_cast<double>(null.total);
}

/// Spearman's rho on mid-ranks. p-value: exact permutation for n <= 10,
/// t approximation with n-2 degrees of freedom above.
inline SpearmanResult spearman_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("spearman_test: x and y differ in length");
  if (x.size() < 3) throw DataError("spearman_test needs at least 3 observations");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  SpearmanResult r;
  r.n = x.size();
  r.rho = pearson(rx, ry);
  if (r.n <= kExactSpearmanMaxN) {
    r.method = PValueMethod::ExactPermutation;
    r.p_value = spearman_exact_pvalue(rx, ry);
  } else {
    r.method = PValueMethod::TApproximation;
    r.p_value = correlation_t_pvalue(r.rho, static_cast<double>(r.n) - 2);
  }
  return r;
}

namespace detail {

/// Residuals of y regressed on [1, columns...] by least squares.
inline std::vector<double> residualize(const std::vector<double>& y,
                                       const std::vector<std::vector<double>>& columns) {
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto k = static_cast<Eigen::Index>(columns.size()) + 1;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) X(i, j) = columns[static_cast<std::size_t>(j - 1)][i];
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-12);
  if (qr.rank() < k) throw DomainError("control design is collinear");
  const Eigen::VectorXd resid = Y - X * qr.solve(Y);
  return {resid.data(), resid.data() + n};
}

}  // namespace detail

/// Partial Spearman correlation: rank every variable, residualize the x and
/// y ranks on the control ranks, correlate the residuals. The p-value uses
/// the t approximation with n - 2 - #controls degrees of freedom. With no
/// controls this is spearman_test.
inline SpearmanResult partial_spearman(const std::vector<double>& x, const std::vector<double>& y,
                                       const std::vector<std::vector<double>>& controls,
                                       const std::vector<std::string>& control_names = {}) {
  if (controls.empty()) return spearman_test(x, y);
  const std::size_t n = x.size();
  if (y.size() != n) throw DataError("partial_spearman: x and y differ in length");
  for (const auto& c : controls)
    if (c.size() != n) throw DataError("partial_spearman: control length mismatch");
  if (n < 3 + controls.size())
    throw DataError("partial_spearman needs at least 3 + #controls observations");
  std::vector<std::vector<double>> control_ranks;
  for (const auto& c : controls) control_ranks.push_back(mid_ranks(c));
  const auto ex = detail::residualize(mid_ranks(x), control_ranks);
  const auto ey = detail::residualize(mid_ranks(y), control_ranks);
  SpearmanResult r;
  r.n = n;
  r.rho = pearson(ex, ey);
  r.method = PValueMethod::TApproximation;
  r.p_value = correlation_t_pvalue(r.rho, static_cast<double>(n - 2 - controls.size()));
  r.controlled_for = control_names;
  return r;
}

// ---------------------------------------------------------------------------
// Interaction regression: MD ~ block * source

struct MdObservation {
  double md = 0;
  double block = 0;
  std::string source;
};

/// The baseline source gets is_treatment = 0 (the intercept and block slope
/// describe it); the treatment source gets 1.
struct RegressionSpec {
  std::string baseline = "it";
  std::string treatment = "ru";
};

inline constexpr std::array<const char*, 4> kCoefficientNames{"intercept", "block", "source",
                                                              "block:source"};

struct CoefficientSummary {
  double mean = 0;
  Interval interval;
};

struct RegressionFit {
  std::array<double, 4> coefficients{};  // intercept, block, source, block:source
  double r_squared = 0;
  std::vector<double> residuals;
  std::vector<std::array<double, 4>> replicates;  // empty unless bootstrapped
  std::array<CoefficientSummary, 4> summary{};
};

/// Ordinary least squares on [1, block, is_treatment, block * is_treatment]
/// via the normal equations, solved with a fully pivoted LU whose pivot
/// threshold is 1e-12 (relative); lower rank is an error.
inline RegressionFit fit_interaction_model(const std::vector<MdObservation>& rows,
                                           const RegressionSpec& spec) {
  std::size_t n_base = 0, n_treat = 0;
  for (const auto& r : rows) {
    if (r.source == spec.baseline)
      ++n_base;
    else if (r.source == spec.treatment)
      ++n_treat;
    else
      throw DataError("observation from unexpected source '" + r.source + "'");
  }
  if (n_base < 2 || n_treat < 2)
    throw DataError("interaction model needs at least 2 blocks per source");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    const double s = r.source == spec.treatment ? 1.0 : 0.0;
    X(i, 0) = 1.0;
    X(i, 1) = r.block;
    X(i, 2) = s;
    X(i, 3) = r.block * s;
    y(i) = r.md;
  }
  const Eigen::Matrix4d xtx = X.transpose() * X;
  const Eigen::Vector4d xty = X.transpose() * y;
  Eigen::FullPivLU<Eigen::Matrix4d> lu(xtx);
  lu.setThreshold(1e-12);
  if (lu.rank() < 4) throw DomainError("interaction design matrix is rank deficient");
  Eigen::Vector4d beta = lu.solve(xty);
  beta += lu.solve(xty - xtx * beta);  // one step of iterative refinement

  RegressionFit fit;
  for (int j = 0; j < 4; ++j) fit.coefficients[static_cast<std::size_t>(j)] = beta(j);
  const Eigen::VectorXd resid = y - X * beta;
  fit.residuals.assign(resid.data(), resid.data() + n);
  const double mean = y.mean();
  const double sst = (y.array() - mean).square().sum();
  fit.r_squared = sst > 0 ? 1.0 - resid.squaredNorm() / sst : 1.0;
  return fit;
}

/// One source's sequence and the blocks entering the regression. Block
/// numbers in the regression are 1-based positions in `blocks`.
struct SourceBlocks {
  std::string source_id;
  SymbolSpan sequence;
  std::vector<BlockRange> blocks;
};

inline std::vector<MdObservation> block_md_series(const SourceBlocks& src,
                                                  CfKind which = CfKind::Complex) {
  std::vector<MdObservation> rows;
  for (std::size_t b = 0; b < src.blocks.size(); ++b) {
    const auto& range = src.blocks[b];
    rows.push_back({analyze_block(src.sequence.subspan(range.start, range.size()), which).report.md,
                    static_cast<double>(b + 1), src.source_id});
  }
  return rows;
}

/// Refits the interaction model on cfg.n_replicates MBB replicates. In each
/// replicate every block of every source is rebuilt from its own subblocks,
/// its MD recomputed, and the model refitted. Coefficient intervals are
/// percentile intervals at `level`.
inline RegressionFit bootstrap_model_coefficients(const std::vector<SourceBlocks>& sources,
                                                  const RegressionSpec& spec,
                                                  const MbbConfig& cfg, double level = 0.95,
                                                  std::size_t threads = 0) {
  cfg.validate();
  std::vector<MdObservation> original;
  for (const auto& s : sources) {
    auto rows = block_md_series(s);
    original.insert(original.end(), rows.begin(), rows.end());
  }
  RegressionFit fit = fit_interaction_model(original, spec);

  struct BlockSampler {
    const SourceBlocks* source;
    std::size_t block_index;
    MbbCountSampler sampler;
  };
  std::vector<BlockSampler> samplers;
  for (const auto& s : sources)
    for (std::size_t b = 0; b < s.blocks.size(); ++b)
      samplers.push_back(
          {&s, b,
           MbbCountSampler(s.sequence.subspan(s.blocks[b].start, s.blocks[b].size()),
                           cfg.subblock_len)});

  fit.replicates.resize(cfg.n_replicates);
  parallel_for(
      cfg.n_replicates,
      [&](std::size_t r) {
        std::vector<MdObservation> rows;
        rows.reserve(samplers.size());
        for (const auto& bs : samplers) {
          const auto counts =
              bs.sampler.replicate_counts(cfg, bs.source->source_id, bs.block_index, r);
          rows.push_back({analyze_counts(counts).report.md,
                          static_cast<double>(bs.block_index + 1), bs.source->source_id});
        }
        fit.replicates[r] = fit_interaction_model(rows, spec).coefficients;
      },
      threads);

  if (fit.replicates.empty()) return fit;
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> values;
    values.reserve(fit.replicates.size());
    for (const auto& rep : fit.replicates) values.push_back(rep[j]);
    fit.summary[j].mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    fit.summary[j].interval = percentile_interval(std::move(values), level);
  }
  return fit;
}

}  // namespace vcmarkov
