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

#include "vcmarkov/markov.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "vcmarkov/error.hpp"

namespace vcmarkov {
namespace {

// Reference computation straight from substring counts of a V/C string.
struct OracleCf {
  long double cf_simple, cf_complex, eta, nu;
};

OracleCf oracle_cf(const std::string& vc) {
  std::map<std::string, long double> n1, n2, n3;
  for (std::size_t i = 0; i < vc.size(); ++i) {
    n1[vc.substr(i, 1)] += 1;
    if (i + 2 <= vc.size()) n2[vc.substr(i, 2)] += 1;
    if (i + 3 <= vc.size()) n3[vc.substr(i, 3)] += 1;
  }
  const long double p = n1["V"] / static_cast<long double>(vc.size());
  const long double q = 1 - p;
  const long double p1 = n2["VV"] / (n2["VV"] + n2["VC"]);
  const long double p0 = n2["CV"] / (n2["CV"] + n2["CC"]);
  const long double p11 = n3["VVV"] / (n3["VVV"] + n3["VVC"]);
  const long double q00 = n3["CCC"] / (n3["CCC"] + n3["CCV"]);
  const long double d = p1 - p0;
  const long double eta = (p11 - p1) / (1 - p1);
  const long double nu = (q00 - (1 - p0)) / p0;
  const long double simple = (1 + d) / (1 - d);
  const long double a = (1 + eta) / (1 - eta);
  const long double b = (1 + nu) / (1 - nu);
  const long double complex = (a + b) / 2 * simple + (q - p) * (nu - eta) / ((1 - eta) * (1 - nu));
  return {simple, complex, eta, nu};
}

TwoStateModel two_state(double p, double p0, double p1) {
  return {p, 1 - p, p0, 1 - p0, p1, 1 - p1};
}

TEST(MarkovTest, NgramCountsOfShortSequence) {
  const auto seq = from_vc_string("VCVVC");
  const auto c2 = count_ngrams(seq.view(), 2);
  EXPECT_EQ(c2["VC"], 2u);
  EXPECT_EQ(c2["CV"], 1u);
  EXPECT_EQ(c2["VV"], 1u);
  EXPECT_EQ(c2["CC"], 0u);
  EXPECT_EQ(c2.n_effective, 4u);
  const auto c3 = count_ngrams(seq.view(), 3);
  EXPECT_EQ(c3["VCV"], 1u);
  EXPECT_EQ(c3["CVV"], 1u);
  EXPECT_EQ(c3["VVC"], 1u);
  EXPECT_EQ(c3.n_effective, 3u);
  EXPECT_EQ(c3.at(5), 1u);
  EXPECT_EQ(ngram_key(3, 6), "VVC");
}

TEST(MarkovTest, CountsSumToWindowCount) {
  std::mt19937_64 gen(11);
  std::string vc;
  for (int i = 0; i < 1000; ++i) vc.push_back(gen() & 1 ? 'V' : 'C');
  const auto seq = from_vc_string(vc);
  for (int order = 1; order <= 3; ++order) {
    const auto c = count_ngrams(seq.view(), order);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < c.cells(); ++i) total += c.counts[i];
    EXPECT_EQ(total, c.n_effective);
    EXPECT_EQ(c.n_effective, 1000u - static_cast<unsigned>(order) + 1);
  }
}

TEST(MarkovTest, TooShortForOrderIsError) {
  EXPECT_THROW(count_ngrams(from_vc_string("VC").view(), 3), DataError);
  EXPECT_THROW(count_ngrams(from_vc_string("VCV").view(), 4), DataError);
}

TEST(MarkovTest, PerfectAlternation) {
  std::string vc;
  for (int i = 0; i < 500; ++i) vc += "VC";
  const auto w = count_windows(from_vc_string(vc).view());
  const auto two = fit_two_state(w.uni, w.bi);
  EXPECT_DOUBLE_EQ(two.p1, 0.0);
  EXPECT_DOUBLE_EQ(two.p0, 1.0);
  EXPECT_DOUBLE_EQ(two.p, 0.5);
  EXPECT_THROW(fit_four_state(w.tri), DomainError);
}

TEST(MarkovTest, ZeroContextNamesTheContext) {
  const auto w = count_windows(from_vc_string("VVVVVV").view());
  try {
    fit_models(w);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("context C"), std::string::npos);
  }
}

TEST(MarkovTest, IidSequenceHasNoMemory) {
  const FourStateModel iid{0.5, 0.5, 0.5, 0.5};
  const auto seq = simulate_sequence(iid, 1'000'000, 7);
  const auto [two, four] = fit_models(count_windows(seq.view()));
  EXPECT_NEAR(two.p1, 0.5, 0.01);
  EXPECT_NEAR(two.p0, 0.5, 0.01);
}

TEST(MarkovTest, IndependenceGivesUnitCf) {
  const auto r = dispersion_report(two_state(0.4, 0.4, 0.4), {0.4, 0.4, 0.4, 0.4}, 100);
  EXPECT_DOUBLE_EQ(r.d, 0.0);
  EXPECT_DOUBLE_EQ(r.eta, 0.0);
  EXPECT_DOUBLE_EQ(r.nu, 0.0);
  EXPECT_DOUBLE_EQ(r.cf_simple, 1.0);
  EXPECT_DOUBLE_EQ(r.cf_complex, 1.0);
  EXPECT_DOUBLE_EQ(r.md, 0.0);
  EXPECT_DOUBLE_EQ(r.var_independent, 0.4 * 0.6 / 100);
  EXPECT_DOUBLE_EQ(r.var_dependent, r.var_independent);
}

TEST(MarkovTest, NegativeDependenceShrinksCf) {
  const double p0 = 0.7674, p1 = p0 - 0.5349;
  const FourStateModel four{p1, p0, p1, p0};
  const auto r = dispersion_report(two_state(0.5, p0, p1), four, 1000, CfKind::Simple);
  EXPECT_NEAR(r.d, -0.5349, 1e-12);
  EXPECT_NEAR(r.cf_simple, 0.3030, 5e-5);
  EXPECT_NEAR(r.cf_simple, 0.4651 / 1.5349, 1e-12);
  EXPECT_EQ(r.md, 1 - r.cf_simple);
}

TEST(MarkovTest, ComplexCfReducesToSimpleWithoutSecondOrderEffects) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 200; ++i) {
    const double p0 = u(gen), p1 = u(gen), p = u(gen);
    const FourStateModel four{p1, p0, p1, p0};
    const auto r = dispersion_report(two_state(p, p0, p1), four, 10);
    EXPECT_EQ(r.eta, 0.0);
    EXPECT_EQ(r.nu, 0.0);
    EXPECT_EQ(r.cf_complex, r.cf_simple);
  }
}

TEST(MarkovTest, CfSimpleIsIncreasingInD) {
  double prev = -1;
  for (int i = 1; i < 100; ++i) {
    const double d = -1 + 2.0 * i / 100.0;
    const auto r = dispersion_report(two_state(0.5, 0.5 - d / 2, 0.5 + d / 2),
                                     {0.5, 0.5, 0.5, 0.5}, 1, CfKind::Simple);
    EXPECT_GT(r.cf_simple, prev);
    prev = r.cf_simple;
  }
  const auto zero = dispersion_report(two_state(0.5, 1.0, 0.0), {0, 1, 0, 1}, 1, CfKind::Simple);
  EXPECT_DOUBLE_EQ(zero.cf_simple, 0.0);
}

TEST(MarkovTest, PolesAndZeroDenominatorsAreDomainErrors) {
  EXPECT_THROW(dispersion_report(two_state(0.5, 0.5, 1.0), {0.5, 0.5, 0.5, 0.5}, 1), DomainError);
  EXPECT_THROW(dispersion_report(two_state(0.5, 0.0, 0.5), {0.5, 0.5, 0.5, 0.5}, 1), DomainError);
  // eta = 1 when p11 = 1
  EXPECT_THROW(dispersion_report(two_state(0.5, 0.5, 0.5), {1.0, 0.5, 0.5, 0.5}, 1), DomainError);
  // nu = 1 when q00 = 1
  EXPECT_THROW(dispersion_report(two_state(0.5, 0.5, 0.5), {0.5, 0.5, 0.5, 0.0}, 1), DomainError);
}

TEST(MarkovTest, MatchesSubstringOracleOnRandomChains) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 40; ++i) {
    const FourStateModel m{u(gen), u(gen), u(gen), u(gen)};
    const auto seq = simulate_sequence(m, 20'000, gen());
    const auto vc = to_vc_string(seq.view());
    const auto o = oracle_cf(vc);
    const auto r = analyze_block(seq.view()).report;
    EXPECT_NEAR(r.cf_simple, static_cast<double>(o.cf_simple), 1e-12);
    EXPECT_NEAR(r.cf_complex, static_cast<double>(o.cf_complex), 1e-12);
    EXPECT_NEAR(r.eta, static_cast<double>(o.eta), 1e-12);
    EXPECT_NEAR(r.nu, static_cast<double>(o.nu), 1e-12);
    EXPECT_EQ(r.md, 1.0 - r.cf_complex);
    EXPECT_EQ(r.var_dependent, r.cf_complex * r.var_independent);
  }
}

TEST(MarkovTest, FrozenReportOnFixedSequence) {
  const auto r = analyze_block(from_vc_string("VCCVCVVCCCVCVCCVVCVCCVCV").view()).report;
  const auto o = oracle_cf("VCCVCVVCCCVCVCCVVCVCCVCV");
  EXPECT_NEAR(r.cf_complex, static_cast<double>(o.cf_complex), 1e-14);
  EXPECT_NEAR(r.cf_simple, static_cast<double>(o.cf_simple), 1e-14);
}

TEST(MarkovTest, DegenerateChains) {
  const auto all_v = simulate_sequence({1, 1, 1, 1}, 10, 99, 3u);
  EXPECT_EQ(to_vc_string(all_v.view()), "VVVVVVVVVV");
  const auto all_c = simulate_sequence({0, 0, 0, 0}, 10, 123, 2u);
  EXPECT_EQ(to_vc_string(all_c.view()), "VCCCCCCCCC");
  const auto stat_v = simulate_sequence({1, 1, 1, 1}, 10, 5);
  EXPECT_EQ(to_vc_string(stat_v.view()).substr(2), "VVVVVVVV");
}

TEST(MarkovTest, SimulationIsDeterministicPerSeed) {
  const FourStateModel m{0.15, 0.70, 0.45, 0.60};
  const auto a = simulate_sequence(m, 5000, 42);
  const auto b = simulate_sequence(m, 5000, 42);
  const auto c = simulate_sequence(m, 5000, 43);
  EXPECT_EQ(a.symbols, b.symbols);
  EXPECT_NE(a.symbols, c.symbols);
}

TEST(MarkovTest, InvalidProbabilityIsError) {
  EXPECT_THROW(simulate_sequence({1.2, 0.5, 0.5, 0.5}, 10, 1), DomainError);
  EXPECT_THROW(simulate_sequence({0.5, 0.5, 0.5, 0.5}, 1, 1), DataError);
}

TEST(MarkovTest, StationaryDistributionSolvesBalanceEquations) {
  const FourStateModel m{0.1045, 0.5586, 0.1315, 0.868};
  const auto pi = stationary_bigrams(m);
  Eigen::Matrix4d P = Eigen::Matrix4d::Zero();
  for (unsigned s = 0; s < 4; ++s) {
    P(s, ((s << 1) | 1u) & 3u) += m.vowel_given(s);
    P(s, (s << 1) & 3u) += 1 - m.vowel_given(s);
  }
  Eigen::Matrix4d A = P.transpose() - Eigen::Matrix4d::Identity();
  A.row(3).setOnes();
  Eigen::Vector4d rhs(0, 0, 0, 1);
  const Eigen::Vector4d expected = A.fullPivLu().solve(rhs);
  for (int s = 0; s < 4; ++s) EXPECT_NEAR(pi[static_cast<std::size_t>(s)], expected(s), 1e-10);
}

TEST(MarkovTest, ParameterRecovery) {
  const FourStateModel truth{0.15, 0.70, 0.45, 0.60};
  const auto seq = simulate_sequence(truth, 1'000'000, 2024);
  const auto w = count_windows(seq.view());
  const auto four = fit_four_state(w.tri);
  const auto check = [&](double est, double p, unsigned ctx) {
    const double n_ctx = static_cast<double>(w.tri.counts[ctx << 1] + w.tri.counts[(ctx << 1) | 1]);
    EXPECT_LE(std::fabs(est - p), 3 * std::sqrt(p * (1 - p) / n_ctx));
  };
  check(four.p11, truth.p11, 3);
  check(four.p10, truth.p10, 2);
  check(four.p01, truth.p01, 1);
  check(four.p00, truth.p00, 0);
}

TEST(MarkovTest, RefitOnSimulatedOutputAgrees) {
  const auto seq = simulate_sequence({0.1045, 0.5586, 0.1315, 0.868}, 50'000, 8);
  const auto fitted = analyze_block(seq.view());
  const auto resim = simulate_sequence(fitted.four, 1'000'000, 9);
  const auto refit = fit_four_state(count_ngrams(resim.view(), 3));
  EXPECT_NEAR(refit.p11, fitted.four.p11, 0.01);
  EXPECT_NEAR(refit.p10, fitted.four.p10, 0.01);
  EXPECT_NEAR(refit.p01, fitted.four.p01, 0.01);
  EXPECT_NEAR(refit.p00, fitted.four.p00, 0.01);
}

TEST(MarkovTest, TrigramDiscrepancy) {
  const auto a = count_ngrams(from_vc_string("VCVVCCVCVCCCV").view(), 3);
  const auto b = count_ngrams(from_vc_string("VVVCCCVVCVCVCVCC").view(), 3);
  EXPECT_DOUBLE_EQ(trigram_discrepancy(a, a), 0.0);
  EXPECT_DOUBLE_EQ(trigram_discrepancy(a, b), trigram_discrepancy(b, a));
  EXPECT_LE(trigram_discrepancy(a, b), 2.0);
  const auto v = count_ngrams(from_vc_string("VVVVV").view(), 3);
  const auto c = count_ngrams(from_vc_string("CCCCC").view(), 3);
  EXPECT_DOUBLE_EQ(trigram_discrepancy(v, c), 2.0);
  EXPECT_THROW(trigram_discrepancy(a, count_ngrams(from_vc_string("VC").view(), 2)), DataError);
}

}  // namespace
}  // namespace vcmarkov
