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

// Phonological probes: trigram windows of the encoded sequence mapped back to
// the letters and words they came from.
//
// Matching runs on the encoded sequence, where spaces and excluded
// characters are already gone; word boundaries and contexts are recovered
// through the origin map.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vcmarkov/corpus.hpp"
#include "vcmarkov/encoder.hpp"
#include "vcmarkov/error.hpp"
#include "vcmarkov/markov.hpp"
#include "vcmarkov/stats.hpp"
#include "vcmarkov/utf8.hpp"

namespace vcmarkov {

/// Trigram class codes (see markov.hpp): oldest symbol in the high bit.
inline unsigned vc_class_code(std::string_view cls) {
  if (cls.size() != 3) throw DataError("trigram class '" + std::string(cls) + "' is not 3 symbols");
  unsigned code = 0;
  for (char c : cls) {
    if (c != 'V' && c != 'C') throw DataError("invalid trigram class '" + std::string(cls) + "'");
    code = (code << 1) | (c == 'V' ? 1u : 0u);
  }
  return code;
}

inline std::string vc_class_name(unsigned code) { return ngram_key(3, code); }

enum class PatternKind { Persistent, Alternating, Other };

/// VVV/CCC persistent, VVC/CCV alternating.
inline PatternKind pattern_kind(unsigned code) {
  switch (code) {
    case 0b111:
    case 0b000: return PatternKind::Persistent;
    case 0b110:
    case 0b001: return PatternKind::Alternating;
    default: return PatternKind::Other;
  }
}

inline const char* to_string(PatternKind k) {
  switch (k) {
    case PatternKind::Persistent: return "persistent";
    case PatternKind::Alternating: return "alternating";
    case PatternKind::Other: return "other";
  }
  return "?";
}

inline std::set<unsigned> default_probe_classes() {
  return {vc_class_code("VVV"), vc_class_code("CCC"), vc_class_code("VVC"), vc_class_code("CCV")};
}

struct ProbeMatch {
  std::string letters;  // case-folded source letters
  unsigned vc_class = 0;
  std::string context;
  int part = 0;
  int stanza = 0;
  int line = 0;
  bool single_word = false;
  std::size_t position = 0;  // index of the first symbol in the sequence
  std::optional<std::size_t> block_index;
};

namespace detail {

inline bool context_trim_char(char32_t c) {
  return utf8::is_space(c) || (utf8::is_punct(c) && !utf8::is_apostrophe(c));
}

/// Strips surrounding punctuation (quotes, dashes, commas) from a context.
inline std::string trim_context(const std::u32string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && context_trim_char(s[b])) ++b;
  while (e > b && context_trim_char(s[e - 1])) --e;
  return utf8::encode(std::u32string_view(s).substr(b, e - b));
}

}  // namespace detail

/// One match per overlapping trigram window whose class is in `classes`.
/// `block_len` > 0 assigns each match the block of its first symbol.
inline std::vector<ProbeMatch> scan_pattern_class(const SymbolSequence& seq,
                                                  const std::set<unsigned>& classes,
                                                  std::size_t block_len = 0) {
  if (!seq.has_origins() && seq.size() > 0)
    throw DataError("probe scanning needs an encoded sequence with an origin map");
  std::vector<ProbeMatch> out;
  if (seq.size() < 3) return out;

  std::vector<std::u32string> decoded(seq.lines.size());
  std::vector<bool> done(seq.lines.size(), false);
  const auto line_text = [&](std::size_t ref) -> const std::u32string& {
    if (!done[ref]) {
      decoded[ref] = utf8::to_u32(seq.lines[ref].text);
      done[ref] = true;
    }
    return decoded[ref];
  };

  unsigned code = (seq.symbols[0] << 1) | seq.symbols[1];
  for (std::size_t i = 2; i < seq.size(); ++i) {
    code = ((code << 1) | seq.symbols[i]) & 7u;
    if (!classes.count(code)) continue;
    const std::size_t first = i - 2;
    const Origin& o0 = seq.origins[first];
    const Origin& o2 = seq.origins[i];

    ProbeMatch m;
    m.vc_class = code;
    m.position = first;
    if (block_len) m.block_index = first / block_len;
    const auto& src = seq.lines[o0.line_ref];
    m.part = src.part;
    m.stanza = src.stanza;
    m.line = src.line;
    for (std::size_t k = first; k <= i; ++k) {
      const auto& o = seq.origins[k];
      utf8::append(m.letters, utf8::fold_case(line_text(o.line_ref)[o.column]));
    }

    const auto& head = line_text(o0.line_ref);
    std::size_t word_start = o0.column;
    while (word_start > 0 && !utf8::is_space(head[word_start - 1])) --word_start;
    const auto& tail = line_text(o2.line_ref);
    std::size_t word_end = o2.column + 1;
    while (word_end < tail.size() && !utf8::is_space(tail[word_end])) ++word_end;

    std::u32string context;
    if (o0.line_ref == o2.line_ref) {
      context = head.substr(word_start, word_end - word_start);
      m.single_word = std::none_of(head.begin() + static_cast<std::ptrdiff_t>(o0.column),
                                   head.begin() + static_cast<std::ptrdiff_t>(o2.column),
                                   [](char32_t c) { return utf8::is_space(c); });
    } else {
      context = head.substr(word_start);
      for (std::size_t ref = o0.line_ref + 1; ref < o2.line_ref; ++ref)
        context += U" " + line_text(ref);
      context += U" " + tail.substr(0, word_end);
      m.single_word = false;
    }
    m.context = detail::trim_context(context);
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ranking

struct RankedTrigram {
  std::string letters;
  unsigned vc_class = 0;
  std::size_t count = 0;
  double share = 0;
  std::size_t zipf_rank = 0;
};

/// Descending count, ties broken by letters; share relative to all matches
/// passed in (the scanned class family).
inline std::vector<RankedTrigram> rank_letter_trigrams(const std::vector<ProbeMatch>& matches) {
  std::map<std::string, RankedTrigram> table;
  for (const auto& m : matches) {
    auto& row = table[m.letters];
    row.letters = m.letters;
    row.vc_class = m.vc_class;
    ++row.count;
  }
  std::vector<RankedTrigram> out;
  out.reserve(table.size());
  for (auto& [_, row] : table) out.push_back(row);
  std::sort(out.begin(), out.end(), [](const RankedTrigram& a, const RankedTrigram& b) {
    return a.count != b.count ? a.count > b.count : a.letters < b.letters;
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].zipf_rank = i + 1;
    out[i].share = static_cast<double>(out[i].count) / static_cast<double>(matches.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trend table

enum class Direction { Increasing, Decreasing };

inline const char* to_string(Direction d) {
  return d == Direction::Increasing ? "increasing" : "decreasing";
}

struct ProbeCandidate {
  std::string letters;
  unsigned vc_class = 0;
  PatternKind pattern = PatternKind::Other;
  Direction direction = Direction::Increasing;
  double rho = 0;
  double spearman_p = 1;
  std::size_t count = 0;
  std::size_t zipf_rank = 0;
  double share = 0;
  bool matches_md_trend = false;
};

struct TrendOptions {
  double threshold = 0.05;
  /// Direction of the source's MD trend. With a decreasing MD, increasing
  /// persistent and decreasing alternating trigrams count as aligned.
  Direction md_trend = Direction::Decreasing;
};

/// Relative frequency of every letter trigram per block (count / block
/// length), Spearman against block number; candidates have p < threshold.
/// Trigrams with a constant series have no trend and are skipped.
inline std::vector<ProbeCandidate> trigram_trend_table(const std::vector<ProbeMatch>& matches,
                                                       const BlockSegmentation& seg,
                                                       const TrendOptions& options = {}) {
  const std::size_t nb = seg.blocks.size();
  if (nb < 3) throw DataError("trend table needs at least 3 blocks");
  const auto block_of = [&](std::size_t pos) -> std::optional<std::size_t> {
    for (std::size_t b = 0; b < nb; ++b)
      if (pos >= seg.blocks[b].start && pos < seg.blocks[b].end) return b;
    return std::nullopt;
  };
  std::map<std::string, std::vector<double>> series;
  std::map<std::string, unsigned> classes;
  for (const auto& m : matches) {
    const auto b = block_of(m.position);
    if (!b) continue;
    auto& s = series[m.letters];
    s.resize(nb, 0.0);
    s[*b] += 1.0;
    classes[m.letters] = m.vc_class;
  }
  std::map<std::string, const RankedTrigram*> rank_of;
  const auto ranked = rank_letter_trigrams(matches);
  for (const auto& r : ranked) rank_of[r.letters] = &r;

  std::vector<double> index(nb);
  for (std::size_t b = 0; b < nb; ++b) index[b] = static_cast<double>(b + 1);

  std::vector<ProbeCandidate> out;
  for (auto& [letters, counts] : series) {
    std::vector<double> freq(nb);
    for (std::size_t b = 0; b < nb; ++b)
      freq[b] = counts[b] / static_cast<double>(seg.blocks[b].size());
    if (std::all_of(freq.begin(), freq.end(), [&](double f) { return f == freq[0]; })) continue;
    const auto sp = spearman_test(index, freq);
    if (!(sp.p_value < options.threshold)) continue;
    ProbeCandidate c;
    c.letters = letters;
    c.vc_class = classes[letters];
    c.pattern = pattern_kind(c.vc_class);
    c.rho = sp.rho;
    c.spearman_p = sp.p_value;
    c.direction = sp.rho > 0 ? Direction::Increasing : Direction::Decreasing;
    const auto* r = rank_of.at(letters);
    c.count = r->count;
    c.zipf_rank = r->zipf_rank;
    c.share = r->share;
    const bool md_down = options.md_trend == Direction::Decreasing;
    if (c.pattern == PatternKind::Persistent)
      c.matches_md_trend = (c.direction == Direction::Increasing) == md_down;
    else if (c.pattern == PatternKind::Alternating)
      c.matches_md_trend = (c.direction == Direction::Decreasing) == md_down;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const ProbeCandidate& a, const ProbeCandidate& b) {
    return a.spearman_p != b.spearman_p ? a.spearman_p < b.spearman_p : a.letters < b.letters;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Semantic categories

inline constexpr std::string_view kUncategorized = "uncategorized";
inline constexpr std::string_view kUnannotated = "unannotated";

/// Context -> lemma, as produced by an external annotator (case-folded keys).
struct AnnotationTable {
  std::map<std::string, std::string> lemma_of;

  void add(std::string_view context, std::string_view lemma) {
    lemma_of[utf8::fold_case(context)] = std::string(lemma);
  }
  const std::string* find(std::string_view context) const {
    auto it = lemma_of.find(utf8::fold_case(context));
    return it == lemma_of.end() ? nullptr : &it->second;
  }
};

/// Lemma or surface form -> category label; one category per form.
struct CategoryTable {
  std::map<std::string, std::string> category_of;

  void add(std::string_view form, std::string_view category) {
    const auto key = utf8::fold_case(form);
    auto [it, inserted] = category_of.emplace(key, std::string(category));
    if (!inserted && it->second != category)
      throw DataError("form '" + std::string(form) + "' assigned to both '" + it->second +
                      "' and '" + std::string(category) + "'");
  }
  const std::string* find(std::string_view form) const {
    auto it = category_of.find(utf8::fold_case(form));
    return it == category_of.end() ? nullptr : &it->second;
  }
  std::set<std::string> labels() const {
    std::set<std::string> out;
    for (const auto& [_, c] : category_of) out.insert(c);
    return out;
  }
};

struct CategorizedMatch {
  ProbeMatch match;
  std::string lemma;
  std::string category;  // a label, kUncategorized or kUnannotated
};

struct CategoryTrend {
  std::string name;
  std::vector<std::string> members;
  std::size_t n = 0;
  std::vector<std::size_t> block_counts;
  std::optional<SpearmanResult> trend;  // nullopt: constant series
};

struct CategoryReport {
  std::vector<CategorizedMatch> matches;
  std::vector<CategoryTrend> trends;
  std::size_t categorized = 0;
  std::size_t uncategorized = 0;
  std::size_t unannotated = 0;
};

struct CategoryUnion {
  std::string name;
  std::vector<std::string> members;
};

/// Labels every match, then tracks per-block frequencies of each category,
/// of the union of all real categories ("a + b"), of any extra unions, and
/// of all matches together ("all probe matches").
inline CategoryReport categorize_matches(const std::vector<ProbeMatch>& matches,
                                         const AnnotationTable& annotations,
                                         const CategoryTable& categories,
                                         const BlockSegmentation& seg,
                                         const std::vector<CategoryUnion>& extra_unions = {}) {
  CategoryReport report;
  for (const auto& m : matches) {
    CategorizedMatch cm{m, {}, {}};
    if (const auto* lemma = annotations.find(m.context)) {
      cm.lemma = *lemma;
      const auto* cat = categories.find(*lemma);
      if (!cat) cat = categories.find(m.context);
      if (cat) {
        cm.category = *cat;
        ++report.categorized;
      } else {
        cm.category = std::string(kUncategorized);
        ++report.uncategorized;
      }
    } else {
      cm.category = std::string(kUnannotated);
      ++report.unannotated;
    }
    report.matches.push_back(std::move(cm));
  }

  const std::size_t nb = seg.blocks.size();
  const auto block_of = [&](std::size_t pos) -> std::optional<std::size_t> {
    for (std::size_t b = 0; b < nb; ++b)
      if (pos >= seg.blocks[b].start && pos < seg.blocks[b].end) return b;
    return std::nullopt;
  };
  const auto trend_for = [&](std::string name, std::vector<std::string> members, bool all) {
    CategoryTrend t;
    t.name = std::move(name);
    t.members = std::move(members);
    t.block_counts.assign(nb, 0);
    for (const auto& cm : report.matches) {
      if (!all && std::find(t.members.begin(), t.members.end(), cm.category) == t.members.end())
        continue;
      ++t.n;
      if (auto b = block_of(cm.match.position)) ++t.block_counts[*b];
    }
    if (nb >= 3) {
      std::vector<double> index(nb), freq(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        index[b] = static_cast<double>(b + 1);
        freq[b] = static_cast<double>(t.block_counts[b]) / static_cast<double>(seg.blocks[b].size());
      }
      if (!std::all_of(freq.begin(), freq.end(), [&](double f) { return f == freq[0]; }))
        t.trend = spearman_test(index, freq);
    }
    report.trends.push_back(std::move(t));
  };

  const auto labels = categories.labels();
  for (const auto& label : labels) trend_for(label, {label}, false);
  if (labels.size() > 1) {
    std::string name;
    for (const auto& label : labels) name += (name.empty() ? "" : " + ") + label;
    trend_for(name, {labels.begin(), labels.end()}, false);
  }
  for (const auto& u : extra_unions) trend_for(u.name, u.members, false);
  trend_for("all probe matches", {}, true);
  return report;
}

// ---------------------------------------------------------------------------
// Name co-occurrence

struct NameForms {
  std::string character;
  std::set<std::string> forms;  // case-folded surface forms
};

struct StanzaCooccurrence {
  StanzaRef stanza;
  std::size_t name_mentions = 0;
  std::size_t probe_matches = 0;
  std::size_t thematic_forms = 0;
};

struct CooccurrenceReport {
  std::size_t total_mentions = 0;
  std::size_t mentions_in_probe_stanzas = 0;
  double mention_share_with_probe = 0;
  std::size_t probe_stanzas = 0;
  std::size_t probe_stanzas_with_theme = 0;
  double probe_stanza_theme_share = 0;
  /// Spearman between per-stanza name counts and thematic-form counts over
  /// probe-bearing stanzas; nullopt when not computable.
  std::optional<SpearmanResult> correlation;
  std::string correlation_unit = "per-stanza counts, probe-bearing stanzas";
  std::vector<StanzaCooccurrence> stanzas;
};

namespace detail {

inline bool name_separator(char32_t c) {
  return utf8::is_space(c) || (utf8::is_punct(c) && !utf8::is_apostrophe(c) && c != U'-');
}

/// Case-folded tokens of a line; apostrophes and hyphens stay inside tokens.
inline std::vector<std::string> name_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::u32string cur;
  const auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && (utf8::is_apostrophe(cur[b]) || cur[b] == U'-')) ++b;
    while (e > b && (utf8::is_apostrophe(cur[e - 1]) || cur[e - 1] == U'-')) --e;
    if (b < e) {
      std::string tok;
      for (std::size_t i = b; i < e; ++i) utf8::append(tok, utf8::fold_case(cur[i]));
      out.push_back(std::move(tok));
    }
    cur.clear();
  };
  for (const auto& cp : utf8::decode(text)) {
    if (name_separator(cp.value))
      flush();
    else
      cur.push_back(cp.value);
  }
  flush();
  return out;
}

}  // namespace detail

/// `probe_matches`: all matches of the probe; `thematic`: the categorized
/// matches whose category is in `thematic_categories`.
inline CooccurrenceReport name_cooccurrence(const std::vector<ProbeMatch>& probe_matches,
                                            const std::vector<CategorizedMatch>& categorized,
                                            const std::set<std::string>& thematic_categories,
                                            const Corpus& corpus,
                                            const std::vector<NameForms>& names) {
  std::set<std::string> forms;
  for (const auto& n : names)
    for (const auto& f : n.forms) forms.insert(utf8::fold_case(f));
  if (forms.empty()) throw DataError("name co-occurrence needs at least one name form");

  std::map<StanzaRef, StanzaCooccurrence> per_stanza;
  for_each_stanza(corpus, [&](const Part& p, const Stanza& s) {
    if (s.flags.epigraph) return;
    auto& row = per_stanza[{p.index, s.index}];
    row.stanza = {p.index, s.index};
    for (const auto& l : s.lines)
      for (const auto& tok : detail::name_tokens(l.text))
        if (forms.count(tok)) ++row.name_mentions;
  });
  for (const auto& m : probe_matches) {
    auto it = per_stanza.find({m.part, m.stanza});
    if (it != per_stanza.end()) ++it->second.probe_matches;
  }
  for (const auto& cm : categorized) {
    if (!thematic_categories.count(cm.category)) continue;
    auto it = per_stanza.find({cm.match.part, cm.match.stanza});
    if (it != per_stanza.end()) ++it->second.thematic_forms;
  }

  CooccurrenceReport r;
  std::vector<double> name_counts, theme_counts;
  for (const auto& [_, row] : per_stanza) {
    r.total_mentions += row.name_mentions;
    if (row.probe_matches > 0) {
      ++r.probe_stanzas;
      r.mentions_in_probe_stanzas += row.name_mentions;
      if (row.thematic_forms > 0) ++r.probe_stanzas_with_theme;
      name_counts.push_back(static_cast<double>(row.name_mentions));
      theme_counts.push_back(static_cast<double>(row.thematic_forms));
    }
    r.stanzas.push_back(row);
  }
  if (r.total_mentions)
    r.mention_share_with_probe =
        static_cast<double>(r.mentions_in_probe_stanzas) / static_cast<double>(r.total_mentions);
  if (r.probe_stanzas)
    r.probe_stanza_theme_share =
        static_cast<double>(r.probe_stanzas_with_theme) / static_cast<double>(r.probe_stanzas);
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (name_counts.size() >= 3 && !constant(name_counts) && !constant(theme_counts))
    r.correlation = spearman_test(name_counts, theme_counts);
  return r;
}

}  // namespace vcmarkov
