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

#include "vcmarkov/resample.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "vcmarkov/error.hpp"
#include "vcmarkov/markov.hpp"

namespace vcmarkov {
namespace {

TEST(ResampleTest, QuantileInterpolation) {
  std::vector<double> xs(100);
  std::iota(xs.begin(), xs.end(), 1.0);
  const auto ci = percentile_interval(xs, 0.95);
  EXPECT_NEAR(ci.lo, 3.475, 1e-12);
  EXPECT_NEAR(ci.hi, 97.525, 1e-12);
  const auto two = percentile_interval({0.0, 1.0}, 0.5);
  EXPECT_DOUBLE_EQ(two.lo, 0.25);
  EXPECT_DOUBLE_EQ(two.hi, 0.75);
  const auto flat = percentile_interval({2.5, 2.5, 2.5}, 0.9);
  EXPECT_DOUBLE_EQ(flat.lo, 2.5);
  EXPECT_DOUBLE_EQ(flat.hi, 2.5);
  EXPECT_DOUBLE_EQ(median({3, 1, 2, 10}), 2.5);
  EXPECT_THROW(percentile_interval({}, 0.95), DataError);
  EXPECT_THROW(percentile_interval({1.0}, 1.0), DataError);
}

TEST(ResampleTest, ConfigValidation) {
  MbbConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.block_len = 10'001;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg.subblock_len = 0;
  EXPECT_THROW(cfg.validate(), DataError);
}

TEST(ResampleTest, ReplicatesUseOnlySourceSubblocks) {
  const auto block = from_vc_string("VVVVCCCC");
  MbbConfig cfg{8, 4, 50, 1};
  for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
    const auto rep = mbb_replicate(block.view(), cfg, "x", 0, r);
    ASSERT_EQ(rep.size(), 8u);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto piece = to_vc_string(SymbolSpan(rep).subspan(k * 4, 4));
      EXPECT_TRUE(piece == "VVVV" || piece == "CCCC") << piece;
    }
  }
}

TEST(ResampleTest, SingleCandidateReproducesBlock) {
  const auto block = from_vc_string("VCCVCVVC");
  MbbConfig cfg{8, 8, 5, 3};
  for (std::size_t r = 0; r < 5; ++r)
    EXPECT_EQ(mbb_replicate(block.view(), cfg, "x", 0, r), block.symbols);
}

TEST(ResampleTest, ReplicatesAreDeterministicAndIndexed) {
  const auto block = simulate_sequence({0.1, 0.55, 0.13, 0.87}, 1000, 4);
  MbbConfig cfg{1000, 50, 10, 77};
  const auto a = mbb_replicate(block.view(), cfg, "ru", 2, 5);
  EXPECT_EQ(a, mbb_replicate(block.view(), cfg, "ru", 2, 5));
  EXPECT_NE(a, mbb_replicate(block.view(), cfg, "ru", 2, 6));
  EXPECT_NE(a, mbb_replicate(block.view(), cfg, "ru", 3, 5));
  EXPECT_NE(a, mbb_replicate(block.view(), cfg, "it", 2, 5));
  cfg.master_seed = 78;
  EXPECT_NE(a, mbb_replicate(block.view(), cfg, "ru", 2, 5));
}

TEST(ResampleTest, PartialBlockUsesFloorDraws) {
  const auto block = simulate_sequence({0.5, 0.5, 0.5, 0.5}, 7168, 4);
  MbbConfig cfg{10'000, 250, 1, 0};
  EXPECT_EQ(mbb_draws(block.size(), cfg, "ru", 10, 0).size(), 28u);
  EXPECT_EQ(mbb_replicate(block.view(), cfg, "ru", 10, 0).size(), 7000u);
  EXPECT_THROW(mbb_draws(100, cfg, "ru", 0, 0), DataError);
}

TEST(ResampleTest, CountSamplerMatchesMaterializedReplicate) {
  const auto block = simulate_sequence({0.1045, 0.5586, 0.1315, 0.868}, 10'000, 12);
  MbbConfig cfg{10'000, 250, 20, 9};
  const MbbCountSampler sampler(block.view(), cfg.subblock_len);
  EXPECT_EQ(sampler.candidates(), 40u);
  for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
    const auto fast = sampler.replicate_counts(cfg, "ru", 1, r);
    const auto slow = count_windows(mbb_replicate(block.view(), cfg, "ru", 1, r));
    EXPECT_EQ(fast.uni.counts, slow.uni.counts);
    EXPECT_EQ(fast.bi.counts, slow.bi.counts);
    EXPECT_EQ(fast.tri.counts, slow.tri.counts);
    EXPECT_EQ(fast.uni.n_effective, slow.uni.n_effective);
    EXPECT_EQ(fast.bi.n_effective, slow.bi.n_effective);
    EXPECT_EQ(fast.tri.n_effective, slow.tri.n_effective);
  }
}

TEST(ResampleTest, SurrogateSingleSubblockIsIdentity) {
  const auto seq = from_vc_string("VCCVV");
  EXPECT_EQ(make_surrogate(seq.view(), 5, 1).symbols, seq.symbols);
  EXPECT_THROW(make_surrogate(seq.view(), 6, 1), DataError);
}

TEST(ResampleTest, SurrogatePreservesCountsAndTail) {
  const auto seq = simulate_sequence({0.2, 0.6, 0.3, 0.7}, 10'037, 3);
  const auto sur = make_surrogate(seq.view(), 100, 5, "ru");
  ASSERT_EQ(sur.size(), seq.size());
  EXPECT_EQ(sur.source_id, "ru");
  EXPECT_EQ(count_ngrams(sur.view(), 1).counts, count_ngrams(seq.view(), 1).counts);
  EXPECT_TRUE(std::equal(seq.symbols.end() - 37, seq.symbols.end(), sur.symbols.end() - 37));
  EXPECT_NE(sur.symbols, seq.symbols);
}

TEST(ResampleTest, SurrogateChangesOnlyJunctionBigrams) {
  const std::size_t sub = 50;
  const auto seq = simulate_sequence({0.2, 0.6, 0.3, 0.7}, 5000, 8);
  const auto sur = make_surrogate(seq.view(), sub, 21);
  const auto internal = [&](const SymbolSequence& s) {
    NgramCounts total{2, {}, 0};
    for (std::size_t k = 0; k < s.size() / sub; ++k) total += count_ngrams(s.view(k * sub, (k + 1) * sub), 2);
    return total;
  };
  EXPECT_EQ(internal(sur).counts, internal(seq).counts);
  const auto whole_a = count_ngrams(seq.view(), 2), whole_b = count_ngrams(sur.view(), 2);
  EXPECT_EQ(whole_a.n_effective - internal(seq).n_effective, 5000 / sub - 1);
  EXPECT_EQ(whole_b.n_effective - internal(sur).n_effective, 5000 / sub - 1);
}

TEST(ResampleTest, SurrogateIsAPermutationOfSubblocks) {
  const std::size_t sub = 4;
  std::string vc;
  for (int i = 0; i < 16; ++i) vc += std::string(i % 2 ? "V" : "C") + (i % 4 < 2 ? "VCC" : "CVV");
  const auto seq = from_vc_string(vc);
  const auto sur = make_surrogate(seq.view(), sub, 2);
  std::multiset<std::string> before, after;
  for (std::size_t k = 0; k < seq.size() / sub; ++k) {
    before.insert(to_vc_string(seq.view(k * sub, (k + 1) * sub)));
    after.insert(to_vc_string(sur.view(k * sub, (k + 1) * sub)));
  }
  EXPECT_EQ(before, after);
}

}  // namespace
}  // namespace vcmarkov
