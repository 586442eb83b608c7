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

// Moving block bootstrap, subblock-shuffle surrogates and percentile
// intervals.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "vcmarkov/encoder.hpp"
#include "vcmarkov/error.hpp"
#include "vcmarkov/markov.hpp"
#include "vcmarkov/rng.hpp"

namespace vcmarkov {

struct MbbConfig {
  std::size_t block_len = 10'000;
  std::size_t subblock_len = 250;
  std::size_t n_replicates = 1'000;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (subblock_len < 1) throw DataError("subblock length must be >= 1");
    if (block_len < 1 || block_len % subblock_len != 0)
      throw DataError("block length " + std::to_string(block_len) +
                      " must be a positive multiple of the subblock length " +
                      std::to_string(subblock_len));
  }
};

struct Interval {
  double lo = 0;
  double hi = 0;
  double level = 0.95;
};

/// Sample quantile with linear interpolation between order statistics:
/// h = (N-1) prob, Q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> samples, double prob) {
  std::sort(samples.begin(), samples.end());
  return quantile_sorted(samples, prob);
}

inline double median(std::vector<double> samples) { return quantile(std::move(samples), 0.5); }

inline Interval percentile_interval(std::vector<double> samples, double level = 0.95) {
  if (samples.empty()) throw DataError("percentile interval of an empty sample");
  if (!(level > 0 && level < 1)) throw DataError("interval level must lie in (0, 1)");
  std::sort(samples.begin(), samples.end());
  const double alpha = (1 - level) / 2;
  return {quantile_sorted(samples, alpha), quantile_sorted(samples, 1 - alpha), level};
}

// ---------------------------------------------------------------------------
// Moving block bootstrap

/// Subblock indices drawn for one replicate: m = floor(len / subblock_len)
/// uniform draws with replacement among the m start-aligned, non-overlapping
/// candidate subblocks. The engine is seeded from (master seed, source id,
/// block index, replicate index) only.
inline std::vector<std::size_t> mbb_draws(std::size_t block_size, const MbbConfig& cfg,
                                          std::string_view source_id, std::size_t block_index,
                                          std::size_t replicate_index) {
  if (cfg.subblock_len < 1) throw DataError("subblock length must be >= 1");
  if (block_size < cfg.subblock_len)
    throw DataError("block of length " + std::to_string(block_size) +
                    " is shorter than one subblock (" + std::to_string(cfg.subblock_len) + ")");
  const std::size_t m = block_size / cfg.subblock_len;
  Rng rng(derive_seed(cfg.master_seed,
                      {stream::kMbb, fnv1a64(source_id), block_index, replicate_index}));
  std::vector<std::size_t> draws(m);
  for (auto& d : draws) d = static_cast<std::size_t>(rng.index(m));
  return draws;
}

inline std::vector<Symbol> mbb_replicate(SymbolSpan block, const MbbConfig& cfg,
                                         std::string_view source_id, std::size_t block_index,
                                         std::size_t replicate_index) {
  const auto draws = mbb_draws(block.size(), cfg, source_id, block_index, replicate_index);
  std::vector<Symbol> out;
  out.reserve(draws.size() * cfg.subblock_len);
  for (std::size_t d : draws) {
    const auto sub = block.subspan(d * cfg.subblock_len, cfg.subblock_len);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

/// Window counts of MBB replicates without materializing them: per-subblock
/// internal counts are summed and the windows straddling each junction are
/// added from the subblock edges. Equal to count_windows(mbb_replicate(...)).
class MbbCountSampler {
 public:
  MbbCountSampler(SymbolSpan block, std::size_t subblock_len) : subblock_len_(subblock_len) {
    if (subblock_len < 2) throw DataError("count sampler needs subblocks of length >= 2");
    if (block.size() < subblock_len)
      throw DataError("block of length " + std::to_string(block.size()) +
                      " is shorter than one subblock (" + std::to_string(subblock_len) + ")");
    const std::size_t m = block.size() / subblock_len;
    subs_.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto sub = block.subspan(k * subblock_len, subblock_len);
      Sub s;
      s.uni = count_ngrams(sub, 1);
      s.bi = count_ngrams(sub, 2);
      s.tri = subblock_len >= 3 ? count_ngrams(sub, 3) : NgramCounts{3, {}, 0};
      s.first = {sub[0], sub[1]};
      s.last = {sub[subblock_len - 2], sub[subblock_len - 1]};
      subs_.push_back(s);
    }
  }

  std::size_t candidates() const noexcept { return subs_.size(); }

  WindowCounts counts(const std::vector<std::size_t>& draws) const {
    WindowCounts w{{1, {}, 0}, {2, {}, 0}, {3, {}, 0}};
    const Sub* prev = nullptr;
    for (std::size_t d : draws) {
      const Sub& s = subs_.at(d);
      w.uni += s.uni;
      w.bi += s.bi;
      w.tri += s.tri;
      if (prev) {
        ++w.bi.counts[(prev->last[1] << 1) | s.first[0]];
        ++w.tri.counts[(prev->last[0] << 2) | (prev->last[1] << 1) | s.first[0]];
        ++w.tri.counts[(prev->last[1] << 2) | (s.first[0] << 1) | s.first[1]];
        w.bi.n_effective += 1;
        w.tri.n_effective += 2;
      }
      prev = &s;
    }
    return w;
  }

  WindowCounts replicate_counts(const MbbConfig& cfg, std::string_view source_id,
                                std::size_t block_index, std::size_t replicate_index) const {
    if (cfg.subblock_len != subblock_len_)
      throw DataError("sampler built for a different subblock length");
    return counts(mbb_draws(subs_.size() * subblock_len_, cfg, source_id, block_index,
                            replicate_index));
  }

 private:
  struct Sub {
    NgramCounts uni, bi, tri;
    std::array<unsigned, 2> first{}, last{};
  };
  std::size_t subblock_len_;
  std::vector<Sub> subs_;
};

// ---------------------------------------------------------------------------
// Surrogates

/// Shuffles the full subblocks of the whole sequence with a uniform random
/// permutation; a tail shorter than one subblock stays at the end.
inline SymbolSequence make_surrogate(SymbolSpan seq, std::size_t subblock_len, std::uint64_t seed,
                                     std::string source_id = {}) {
  if (subblock_len < 1) throw DataError("subblock length must be >= 1");
  if (seq.size() < subblock_len)
    throw DataError("sequence of length " + std::to_string(seq.size()) +
                    " is shorter than one subblock (" + std::to_string(subblock_len) + ")");
  const std::size_t m = seq.size() / subblock_len;
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  Rng rng(derive_seed(seed, {stream::kSurrogate}));
  for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  SymbolSequence out;
  out.source_id = std::move(source_id);
  out.symbols.reserve(seq.size());
  for (std::size_t k : order) {
    const auto sub = seq.subspan(k * subblock_len, subblock_len);
    out.symbols.insert(out.symbols.end(), sub.begin(), sub.end());
  }
  const auto tail = seq.subspan(m * subblock_len);
  out.symbols.insert(out.symbols.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace vcmarkov
