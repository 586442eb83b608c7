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

// Blockwise analyses built from the core modules: longitudinal profiles,
// per-block bootstrap, model adequacy by simulation, serial-dependence
// diagnostics and the parameter correlation table.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "vcmarkov/encoder.hpp"
#include "vcmarkov/error.hpp"
#include "vcmarkov/markov.hpp"
#include "vcmarkov/parallel.hpp"
#include "vcmarkov/resample.hpp"
#include "vcmarkov/rng.hpp"
#include "vcmarkov/stats.hpp"

namespace vcmarkov {

// ---------------------------------------------------------------------------
// Profile

struct BlockProfileRow {
  std::string source_id;
  std::size_t block = 0;  // 1-based
  BlockRange range;
  bool partial = false;
  BlockModel model;
};

inline std::vector<BlockProfileRow> profile_blocks(const SymbolSequence& seq,
                                                   const BlockSegmentation& seg,
                                                   CfKind which = CfKind::Complex) {
  std::vector<BlockProfileRow> rows;
  for (std::size_t b = 0; b < seg.blocks.size(); ++b) {
    const auto& r = seg.blocks[b];
    rows.push_back({seq.source_id, b + 1, r, r.size() != seg.block_len,
                    analyze_block(seq.view(r.start, r.end), which)});
  }
  return rows;
}

/// Named scalar views of a fitted block, in the column order used by the
/// profile and bootstrap tables.
struct BlockStatistic {
  const char* name;
  double (*get)(const BlockModel&);
};

inline const std::vector<BlockStatistic>& block_statistics() {
  static const std::vector<BlockStatistic> stats{
      {"p", [](const BlockModel& m) { return m.two.p; }},
      {"q", [](const BlockModel& m) { return m.two.q; }},
      {"p0", [](const BlockModel& m) { return m.two.p0; }},
      {"q0", [](const BlockModel& m) { return m.two.q0; }},
      {"p1", [](const BlockModel& m) { return m.two.p1; }},
      {"q1", [](const BlockModel& m) { return m.two.q1; }},
      {"p11", [](const BlockModel& m) { return m.four.p11; }},
      {"p10", [](const BlockModel& m) { return m.four.p10; }},
      {"p01", [](const BlockModel& m) { return m.four.p01; }},
      {"p00", [](const BlockModel& m) { return m.four.p00; }},
      {"q00", [](const BlockModel& m) { return m.four.q00(); }},
      {"d", [](const BlockModel& m) { return m.report.d; }},
      {"eta", [](const BlockModel& m) { return m.report.eta; }},
      {"nu", [](const BlockModel& m) { return m.report.nu; }},
      {"cf_simple", [](const BlockModel& m) { return m.report.cf_simple; }},
      {"cf_complex", [](const BlockModel& m) { return m.report.cf_complex; }},
      {"md", [](const BlockModel& m) { return m.report.md; }},
      {"var_independent", [](const BlockModel& m) { return m.report.var_independent; }},
      {"var_dependent", [](const BlockModel& m) { return m.report.var_dependent; }},
      {"freq_VVV", [](const BlockModel& m) { return m.counts.tri.relative(0b111); }},
      {"freq_VVC", [](const BlockModel& m) { return m.counts.tri.relative(0b110); }},
      {"freq_CCV", [](const BlockModel& m) { return m.counts.tri.relative(0b001); }},
      {"freq_CCC", [](const BlockModel& m) { return m.counts.tri.relative(0b000); }},
  };
  return stats;
}

inline const BlockStatistic& find_block_statistic(std::string_view name) {
  for (const auto& s : block_statistics())
    if (name == s.name) return s;
  throw DataError("unknown block statistic '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Per-block bootstrap

struct StatisticBootstrap {
  std::string name;
  double estimate = 0;
  std::vector<double> replicates;
  double median = 0;
  double iqr = 0;
  Interval interval;
  /// IQR / |median|: the spread measure used for estimation error.
  double relative_spread() const { return median != 0 ? iqr / std::fabs(median) : 0.0; }
};

struct BlockBootstrap {
  std::string source_id;
  std::size_t block = 0;  // 1-based
  std::vector<StatisticBootstrap> statistics;
};

inline StatisticBootstrap summarize_replicates(std::string name, double estimate,
                                               std::vector<double> values, double level) {
  StatisticBootstrap s;
  s.name = std::move(name);
  s.estimate = estimate;
  s.replicates = values;
  std::sort(values.begin(), values.end());
  s.median = quantile_sorted(values, 0.5);
  s.iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
  s.interval = percentile_interval(std::move(values), level);
  return s;
}

/// MBB replicates of one block (block_index is 0-based and enters the seed).
inline BlockBootstrap bootstrap_block(SymbolSpan block, const MbbConfig& cfg,
                                      std::string_view source_id, std::size_t block_index,
                                      const std::vector<std::string>& statistic_names,
                                      double level = 0.95, std::size_t threads = 0) {
  if (cfg.n_replicates < 1) throw DataError("bootstrap needs at least one replicate");
  const MbbCountSampler sampler(block, cfg.subblock_len);
  const BlockModel observed = analyze_block(block);
  std::vector<const BlockStatistic*> stats;
  for (const auto& n : statistic_names) stats.push_back(&find_block_statistic(n));

  std::vector<std::vector<double>> values(stats.size(), std::vector<double>(cfg.n_replicates));
  parallel_for(
      cfg.n_replicates,
      [&](std::size_t r) {
        const auto m = analyze_counts(sampler.replicate_counts(cfg, source_id, block_index, r));
        for (std::size_t k = 0; k < stats.size(); ++k) values[k][r] = stats[k]->get(m);
      },
      threads);

  BlockBootstrap out;
  out.source_id = std::string(source_id);
  out.block = block_index + 1;
  for (std::size_t k = 0; k < stats.size(); ++k)
    out.statistics.push_back(
        summarize_replicates(stats[k]->name, stats[k]->get(observed), std::move(values[k]), level));
  return out;
}

// ---------------------------------------------------------------------------
// Model adequacy

struct AdequacyResult {
  FourStateModel model;
  double empirical_md = 0;
  std::vector<double> simulated_md;
  std::vector<double> discrepancy;
  Interval md_interval;
  double md_median = 0;
  Interval discrepancy_interval;
  double discrepancy_median = 0;
  bool empirical_inside = false;
};

/// Seed of simulation run `run` for a source; runs are independent of the
/// order in which they are computed.
inline std::uint64_t simulation_run_seed(std::uint64_t master, std::string_view source_id,
                                         std::size_t run) {
  return derive_seed(master, {stream::kModelDraw, fnv1a64(source_id), run});
}

/// Fits the four-state chain to `block`, simulates `runs` sequences of the
/// same length from its stationary bigram distribution and compares MD and
/// trigram frequencies with the block.
inline AdequacyResult adequacy_ensemble(SymbolSpan block, std::size_t runs, std::uint64_t master_seed,
                                        std::string_view source_id, double level = 0.95,
                                        std::size_t threads = 0) {
  if (runs < 1) throw DataError("adequacy ensemble needs at least one run");
  const BlockModel observed = analyze_block(block);
  AdequacyResult out;
  out.model = observed.four;
  out.empirical_md = observed.report.md;
  out.simulated_md.resize(runs);
  out.discrepancy.resize(runs);
  parallel_for(
      runs,
      [&](std::size_t r) {
        const auto sim = simulate_sequence(observed.four, block.size(),
                                           simulation_run_seed(master_seed, source_id, r));
        const auto m = analyze_block(sim.view());
        out.simulated_md[r] = m.report.md;
        out.discrepancy[r] = trigram_discrepancy(observed.counts.tri, m.counts.tri);
      },
      threads);
  out.md_interval = percentile_interval(out.simulated_md, level);
  out.md_median = median(out.simulated_md);
  out.discrepancy_interval = percentile_interval(out.discrepancy, level);
  out.discrepancy_median = median(out.discrepancy);
  out.empirical_inside =
      out.empirical_md >= out.md_interval.lo && out.empirical_md <= out.md_interval.hi;
  return out;
}

// ---------------------------------------------------------------------------
// Serial dependence

struct AcfLagRow {
  std::size_t lag = 0;
  double rho = 0;
  double white_noise = 0;  // 1.96 / sqrt(n)
  bool has_band = false;
  Interval band;
};

struct AcfReport {
  std::string source_id;
  std::size_t block = 0;  // 1-based
  std::size_t n = 0;
  std::vector<AcfLagRow> lags;
  LjungBoxResult ljung_box;
};

/// ACF up to max_lag, Ljung-Box at h = lb_lags, and MBB percentile bands for
/// lags 1..band_lags (no bands when cfg.n_replicates is 0).
inline AcfReport acf_report(SymbolSpan block, std::size_t max_lag, std::size_t lb_lags,
                            std::size_t band_lags, const MbbConfig& cfg,
                            std::string_view source_id, std::size_t block_index,
                            double level = 0.95, std::size_t threads = 0) {
  if (lb_lags > max_lag || band_lags > max_lag)
    throw DataError("Ljung-Box and band lags must not exceed the maximum ACF lag");
  const auto acf = autocorrelation(block, max_lag);
  AcfReport out;
  out.source_id = std::string(source_id);
  out.block = block_index + 1;
  out.n = block.size();
  out.ljung_box = ljung_box_test(acf, lb_lags);
  const double wn = 1.96 / std::sqrt(static_cast<double>(block.size()));
  for (std::size_t k = 1; k <= max_lag; ++k) out.lags.push_back({k, acf.at_lag(k), wn, false, {}});

  if (cfg.n_replicates == 0 || band_lags == 0) return out;
  std::vector<std::vector<double>> reps(band_lags, std::vector<double>(cfg.n_replicates));
  parallel_for(
      cfg.n_replicates,
      [&](std::size_t r) {
        const auto rep = mbb_replicate(block, cfg, source_id, block_index, r);
        const auto a = autocorrelation(rep, band_lags);
        for (std::size_t k = 0; k < band_lags; ++k) reps[k][r] = a.rho[k];
      },
      threads);
  for (std::size_t k = 0; k < band_lags; ++k) {
    out.lags[k].has_band = true;
    out.lags[k].band = percentile_interval(std::move(reps[k]), level);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter correlations

enum class ControlSet { None, Block };

inline ControlSet control_set_from_string(std::string_view s) {
  if (s == "none") return ControlSet::None;
  if (s == "block") return ControlSet::Block;
  throw DataError("unknown control set '" + std::string(s) + "' (expected none or block)");
}

inline const char* to_string(ControlSet c) { return c == ControlSet::None ? "none" : "block"; }

inline std::vector<std::string> default_correlation_variables() {
  return {"p", "p0", "p1", "q00", "p11", "freq_VVV", "freq_CCC", "freq_VVC", "freq_CCV"};
}

struct CorrelationRow {
  std::string source_id;
  std::string variable;
  SpearmanResult result;
};

/// Partial Spearman correlation of MD with each variable across the blocks
/// of one source.
inline std::vector<CorrelationRow> md_correlation_table(const std::vector<BlockProfileRow>& rows,
                                                        const std::vector<std::string>& variables,
                                                        ControlSet controls) {
  if (rows.size() < 4) throw DataError("correlation table needs at least 4 blocks");
  std::vector<double> md, block;
  for (const auto& r : rows) {
    md.push_back(r.model.report.md);
    block.push_back(static_cast<double>(r.block));
  }
  std::vector<std::vector<double>> ctrl;
  std::vector<std::string> names;
  if (controls == ControlSet::Block) {
    ctrl.push_back(block);
    names.push_back("block");
  }
  std::vector<CorrelationRow> out;
  for (const auto& v : variables) {
    const auto& stat = find_block_statistic(v);
    std::vector<double> x;
    for (const auto& r : rows) x.push_back(stat.get(r.model));
    out.push_back({rows.front().source_id, v, partial_spearman(md, x, ctrl, names)});
  }
  return out;
}

}  // namespace vcmarkov
