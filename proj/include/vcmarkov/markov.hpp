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

// Two-state and four-state (bigram-state) Markov models of V/C sequences and
// Markov's dispersion coefficients.
//
// Window codes: an n-gram is packed into an integer with the oldest symbol in
// the most significant bit and V = 1, so "VCV" = 0b101 = 5 and the four-state
// chain's states VV, VC, CV, CC are 3, 2, 1, 0.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "vcmarkov/encoder.hpp"
#include "vcmarkov/error.hpp"
#include "vcmarkov/rng.hpp"

namespace vcmarkov {

struct NgramCounts {
  int order = 0;
  std::array<std::uint64_t, 8> counts{};  // first 2^order entries used
  std::uint64_t n_effective = 0;

  std::size_t cells() const noexcept { return std::size_t{1} << order; }

  std::uint64_t at(unsigned code) const { return counts.at(code); }

  /// Count of a window given as a V/C string of length `order`.
  std::uint64_t operator[](std::string_view key) const {
    if (static_cast<int>(key.size()) != order)
      throw DataError("n-gram key '" + std::string(key) + "' does not match order " +
                      std::to_string(order));
    unsigned code = 0;
    for (char c : key) {
      if (c != 'V' && c != 'C') throw DataError("invalid n-gram key '" + std::string(key) + "'");
      code = (code << 1) | (c == 'V' ? 1u : 0u);
    }
    return counts[code];
  }

  double relative(unsigned code) const {
    return static_cast<double>(counts[code]) / static_cast<double>(n_effective);
  }

  NgramCounts& operator+=(const NgramCounts& o) {
    if (o.order != order) throw DataError("cannot add n-gram counts of different orders");
    for (std::size_t i = 0; i < cells(); ++i) counts[i] += o.counts[i];
    n_effective += o.n_effective;
    return *this;
  }
};

inline std::string ngram_key(int order, unsigned code) {
  std::string s(static_cast<std::size_t>(order), 'C');
  for (int i = 0; i < order; ++i)
    if (code & (1u << (order - 1 - i))) s[static_cast<std::size_t>(i)] = 'V';
  return s;
}

/// Overlapping windows in order, no wraparound.
inline NgramCounts count_ngrams(SymbolSpan seq, int order) {
  if (order < 1 || order > 3) throw DataError("n-gram order must be 1, 2 or 3");
  if (seq.size() < static_cast<std::size_t>(order))
    throw DataError("sequence of length " + std::to_string(seq.size()) +
                    " is shorter than order " + std::to_string(order));
  NgramCounts c;
  c.order = order;
  const unsigned mask = (1u << order) - 1;
  unsigned code = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    code = ((code << 1) | seq[i]) & mask;
    if (i + 1 >= static_cast<std::size_t>(order)) ++c.counts[code];
  }
  c.n_effective = seq.size() - static_cast<std::size_t>(order) + 1;
  return c;
}

/// Unigram, bigram and trigram counts of one range.
struct WindowCounts {
  NgramCounts uni, bi, tri;
};

inline WindowCounts count_windows(SymbolSpan seq) {
  return {count_ngrams(seq, 1), count_ngrams(seq, 2), count_ngrams(seq, 3)};
}

struct TwoStateModel {
  double p = 0;   // P(V)
  double q = 0;   // P(C)
  double p0 = 0;  // P(V|C)
  double q0 = 0;  // P(C|C)
  double p1 = 0;  // P(V|V)
  double q1 = 0;  // P(C|V)
};

/// P(V | previous two symbols), indexed oldest first: p10 = P(V | VC).
struct FourStateModel {
  double p11 = 0;  // P(V|VV)
  double p10 = 0;  // P(V|VC)
  double p01 = 0;  // P(V|CV)
  double p00 = 0;  // P(V|CC)

  double q11() const { return 1 - p11; }
  double q10() const { return 1 - p10; }
  double q01() const { return 1 - p01; }
  double q00() const { return 1 - p00; }

  /// P(V | state) with state = (older << 1) | newer.
  double vowel_given(unsigned state) const {
    switch (state & 3u) {
      case 3: return p11;
      case 2: return p10;
      case 1: return p01;
      default: return p00;
    }
  }

  void validate() const {
    const std::array<std::pair<const char*, double>, 4> params{
        {{"p11", p11}, {"p10", p10}, {"p01", p01}, {"p00", p00}}};
    for (const auto& [name, v] : params)
      if (!(v >= 0.0 && v <= 1.0))
        throw DomainError(std::string("transition probability ") + name + " = " +
                          std::to_string(v) + " is outside [0, 1]");
  }
};

namespace detail {

inline double context_ratio(std::uint64_t num, std::uint64_t ctx, const char* context) {
  if (ctx == 0) throw DomainError(std::string("context ") + context + " never occurs");
  return static_cast<double>(num) / static_cast<double>(ctx);
}

}  // namespace detail

/// Maximum-likelihood two-state chain. Contexts come from the bigram windows.
inline TwoStateModel fit_two_state(const NgramCounts& c1, const NgramCounts& c2) {
  if (c1.order != 1 || c2.order != 2) throw DataError("fit_two_state expects counts of orders 1, 2");
  if (c1.n_effective == 0) throw DomainError("empty unigram counts");
  TwoStateModel two;
  two.p = c1.relative(1);
  two.q = 1 - two.p;
  // bigram codes: CC=0 CV=1 VC=2 VV=3
  two.p1 = detail::context_ratio(c2.counts[3], c2.counts[3] + c2.counts[2], "V");
  two.q1 = 1 - two.p1;
  two.p0 = detail::context_ratio(c2.counts[1], c2.counts[1] + c2.counts[0], "C");
  two.q0 = 1 - two.p0;
  return two;
}

/// Maximum-likelihood four-state chain. Two-symbol contexts come from the
/// trigram prefixes.
inline FourStateModel fit_four_state(const NgramCounts& c3) {
  if (c3.order != 3) throw DataError("fit_four_state expects order-3 counts");
  const auto next_v = [&](unsigned ctx, const char* name) {
    return detail::context_ratio(c3.counts[(ctx << 1) | 1u],
                                 c3.counts[ctx << 1] + c3.counts[(ctx << 1) | 1u], name);
  };
  FourStateModel four;
  four.p11 = next_v(3, "VV");
  four.p10 = next_v(2, "VC");
  four.p01 = next_v(1, "CV");
  four.p00 = next_v(0, "CC");
  return four;
}

/// Both chains from the windowed counts of one range. A context that never
/// occurs is an error (no smoothing).
inline std::pair<TwoStateModel, FourStateModel> fit_models(const NgramCounts& c1,
                                                           const NgramCounts& c2,
                                                           const NgramCounts& c3) {
  return {fit_two_state(c1, c2), fit_four_state(c3)};
}

inline std::pair<TwoStateModel, FourStateModel> fit_models(const WindowCounts& w) {
  return fit_models(w.uni, w.bi, w.tri);
}

enum class CfKind { Simple, Complex };

struct DispersionReport {
  double d = 0;
  double eta = 0;
  double nu = 0;
  double cf_simple = 0;
  double cf_complex = 0;
  CfKind selected = CfKind::Complex;
  double md = 0;
  double var_independent = 0;
  double var_dependent = 0;
  std::size_t n = 0;

  double cf() const { return selected == CfKind::Complex ? cf_complex : cf_simple; }
};

/// CF_simple = (1+d)/(1-d) with d = p1 - p0;
/// eta = (p11 - p1)/q1, nu = (q00 - q0)/p0;
/// CF_complex = 1/2 [(1+eta)/(1-eta) + (1+nu)/(1-nu)] CF_simple
///              + (q-p)(nu-eta) / ((1-eta)(1-nu));
/// MD = 1 - CF; var_dependent = CF * p(1-p)/n.
inline DispersionReport dispersion_report(const TwoStateModel& two, const FourStateModel& four,
                                          std::size_t n, CfKind which = CfKind::Complex) {
  if (!(two.q1 > 0)) throw DomainError("q1 = P(C|V) must be positive (denominator of eta)");
  if (!(two.p0 > 0)) throw DomainError("p0 = P(V|C) must be positive (denominator of nu)");
  DispersionReport r;
  r.n = n;
  r.selected = which;
  r.d = two.p1 - two.p0;
  if (r.d == 1.0) throw DomainError("d = 1 is a pole of CF_simple");
  r.eta = (four.p11 - two.p1) / two.q1;
  r.nu = (four.q00() - two.q0) / two.p0;
  if (r.eta == 1.0) throw DomainError("eta = 1 is a pole of CF_complex");
  if (r.nu == 1.0) throw DomainError("nu = 1 is a pole of CF_complex");
  r.cf_simple = (1 + r.d) / (1 - r.d);
  r.cf_complex = 0.5 * ((1 + r.eta) / (1 - r.eta) + (1 + r.nu) / (1 - r.nu)) * r.cf_simple +
                 (two.q - two.p) * (r.nu - r.eta) / ((1 - r.eta) * (1 - r.nu));
  r.md = 1 - r.cf();
  r.var_independent = n ? two.p * (1 - two.p) / static_cast<double>(n) : 0.0;
  r.var_dependent = r.cf() * r.var_independent;
  return r;
}

/// Everything estimated from one block.
struct BlockModel {
  WindowCounts counts;
  TwoStateModel two;
  FourStateModel four;
  DispersionReport report;
};

inline BlockModel analyze_counts(const WindowCounts& w, CfKind which = CfKind::Complex) {
  BlockModel m;
  m.counts = w;
  std::tie(m.two, m.four) = fit_models(w);
  m.report = dispersion_report(m.two, m.four, static_cast<std::size_t>(w.uni.n_effective), which);
  return m;
}

inline BlockModel analyze_block(SymbolSpan block, CfKind which = CfKind::Complex) {
  return analyze_counts(count_windows(block), which);
}

// ---------------------------------------------------------------------------
// Simulation

/// Stationary distribution over the bigram states (indexed by state code),
/// by power iteration on the lazy chain (I + P)/2, which has the same
/// stationary vector and is aperiodic. Converges to an L1 change < 1e-12.
inline std::array<double, 4> stationary_bigrams(const FourStateModel& m) {
  m.validate();
  std::array<double, 4> pi{0.25, 0.25, 0.25, 0.25};
  for (int iter = 0; iter < 10'000'000; ++iter) {
    std::array<double, 4> next{};
    for (unsigned s = 0; s < 4; ++s) {
      const double pv = m.vowel_given(s);
      const unsigned to_v = ((s << 1) | 1u) & 3u;
      const unsigned to_c = (s << 1) & 3u;
      next[s] += 0.5 * pi[s];
      next[to_v] += 0.5 * pi[s] * pv;
      next[to_c] += 0.5 * pi[s] * (1 - pv);
    }
    double delta = 0;
    for (unsigned s = 0; s < 4; ++s) delta += std::fabs(next[s] - pi[s]);
    pi = next;
    if (delta < 1e-12) break;
  }
  return pi;
}

/// Initial bigram: explicit state code, or nullopt for a draw from the
/// stationary bigram distribution.
inline SymbolSequence simulate_sequence(const FourStateModel& model, std::size_t length,
                                        std::uint64_t seed,
                                        std::optional<unsigned> init = std::nullopt) {
  model.validate();
  if (length < 2) throw DataError("simulated length must be >= 2");
  Rng rng(derive_seed(seed, {stream::kSimulation}));
  unsigned state;
  if (init) {
    if (*init > 3) throw DataError("initial bigram code must be in 0..3");
    state = *init;
  } else {
    const auto pi = stationary_bigrams(model);
    const double u = rng.uniform();
    double acc = 0;
    state = 3;
    for (unsigned s = 0; s < 4; ++s) {
      acc += pi[s];
      if (u < acc) {
        state = s;
        break;
      }
    }
  }
  SymbolSequence seq;
  seq.symbols.resize(length);
  seq.symbols[0] = static_cast<Symbol>((state >> 1) & 1u);
  seq.symbols[1] = static_cast<Symbol>(state & 1u);
  const std::array<double, 4> pv{model.p00, model.p01, model.p10, model.p11};
  for (std::size_t t = 2; t < length; ++t) {
    const Symbol next = rng.bernoulli(pv[state]) ? kVowel : kConsonant;
    seq.symbols[t] = next;
    state = ((state << 1) | next) & 3u;
  }
  return seq;
}

/// Sum over the eight trigrams of |relative frequency difference|; in [0, 2].
inline double trigram_discrepancy(const NgramCounts& empirical, const NgramCounts& simulated) {
  if (empirical.order != 3 || simulated.order != 3)
    throw DataError("trigram discrepancy needs order-3 counts on both sides");
  if (empirical.n_effective == 0 || simulated.n_effective == 0)
    throw DataError("trigram discrepancy needs non-empty counts");
  double total = 0;
  for (unsigned code = 0; code < 8; ++code)
    total += std::fabs(empirical.relative(code) - simulated.relative(code));
  return total;
}

}  // namespace vcmarkov
