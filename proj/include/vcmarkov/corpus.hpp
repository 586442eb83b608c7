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

// Poem corpus: parts -> stanzas -> lines.
//
// Input format (one UTF-8 text file per source):
//
//   * A part header is a line equal to <prefix><numeral><suffix> after
//     trimming whitespace, where the numeral style is roman, arabic, or an
//     explicit word list (e.g. ordinal chapter names).
//   * A stanza header uses the same scheme. Several numerals joined by one of
//     the fuse separators ("XXXVIII-XXXIX") declare a fused stanza; it takes
//     the first numeral as its index.
//   * A line equal to the epigraph marker opens an epigraph for the current
//     part. Its lines run until the next stanza header and are stored as
//     stanza 0 with the epigraph flag.
//   * Blank lines, headers and markers are discarded separators. Text before
//     the first part header, or between a part header and its first stanza,
//     is kept as a discarded preamble fragment.
//   * A line made only of placeholder characters (dots) is a placeholder
//     line; a stanza with only placeholder lines is a dotted placeholder.
//
// Nothing is lost: reconstruct() reproduces the input byte for byte.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcmarkov/error.hpp"
#include "vcmarkov/scheme.hpp"
#include "vcmarkov/utf8.hpp"

namespace vcmarkov {

enum class NumeralStyle { Roman, Arabic, Words };

struct HeaderPattern {
  std::string prefix;
  std::string suffix;
  NumeralStyle numeral = NumeralStyle::Roman;
  std::vector<std::string> words;  // NumeralStyle::Words: words[i] means i+1
  std::string fuse_separators = "-,\xE2\x80\x93";  // '-', ',', en dash
};

struct LayoutConfig {
  HeaderPattern part_header{"", "", NumeralStyle::Arabic, {}, ""};
  HeaderPattern stanza_header{};
  std::string epigraph_marker = "@epigraph";
  std::string placeholder_chars = ".\xE2\x80\xA6";  // '.', ellipsis
};

struct Line {
  std::string text;  // without the line terminator
  std::string eol;   // "\n", "\r\n" or "" for an unterminated last line
  std::size_t offset = 0;
  int number = 0;  // 1-based within the stanza
  std::size_t char_count = 0;
  std::size_t word_count = 0;
  bool placeholder = false;
};

struct StanzaFlags {
  bool epigraph = false;
  bool dotted_placeholder = false;
  bool fused = false;
};

struct Stanza {
  int index = 0;
  std::vector<int> fused_indices;  // all numerals of a fused header
  StanzaFlags flags;
  std::vector<Line> lines;
};

struct Part {
  int index = 0;
  std::vector<Stanza> stanzas;
};

enum class FragmentKind { Blank, PartHeader, StanzaHeader, EpigraphMarker, Preamble };

struct Fragment {
  std::size_t offset = 0;
  std::string text;  // including the terminator
  FragmentKind kind = FragmentKind::Blank;
};

struct Corpus {
  std::string source_id;
  std::vector<Part> parts;
  std::vector<Fragment> discarded;
};

struct StanzaRef {
  int part = 0;
  int stanza = 0;
  friend bool operator==(const StanzaRef&, const StanzaRef&) = default;
  friend auto operator<=>(const StanzaRef&, const StanzaRef&) = default;
};

/// Stanza-level view of a corpus in document order.
template <typename Fn>
void for_each_stanza(const Corpus& corpus, Fn&& fn) {
  for (const auto& part : corpus.parts)
    for (const auto& stanza : part.stanzas) fn(part, stanza);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto cps = utf8::decode(s);
  std::size_t b = 0, e = cps.size();
  while (b < e && utf8::is_space(cps[b].value)) ++b;
  while (e > b && utf8::is_space(cps[e - 1].value)) --e;
  if (b == e) return {};
  const std::size_t from = cps[b].offset;
  const std::size_t to = cps[e - 1].offset + cps[e - 1].length;
  return s.substr(from, to - from);
}

inline std::optional<int> parse_roman(std::string_view s) {
  if (s.empty() || s.size() > 15) return std::nullopt;
  const auto value = [](char c) -> int {
    switch (c) {
      case 'I': return 1;
      case 'V': return 5;
      case 'X': return 10;
      case 'L': return 50;
      case 'C': return 100;
      case 'D': return 500;
      case 'M': return 1000;
      default: return 0;
    }
  };
  int total = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int v = value(s[i]);
    if (v == 0) return std::nullopt;
    const int next = i + 1 < s.size() ? value(s[i + 1]) : 0;
    total += v < next ? -v : v;
  }
  // Reject non-canonical spellings such as "IIII" or "VX".
  static constexpr std::pair<int, const char*> kTable[] = {
      {1000, "M"}, {900, "CM"}, {500, "D"}, {400, "CD"}, {100, "C"}, {90, "XC"}, {50, "L"},
      {40, "XL"},  {10, "X"},   {9, "IX"},  {5, "V"},   {4, "IV"},  {1, "I"}};
  std::string canonical;
  int rest = total;
  for (const auto& [v, sym] : kTable)
    while (rest >= v) {
      canonical += sym;
      rest -= v;
    }
  if (total <= 0 || canonical != s) return std::nullopt;
  return total;
}

inline std::optional<int> parse_numeral(std::string_view s, const HeaderPattern& p) {
  switch (p.numeral) {
    case NumeralStyle::Roman: return parse_roman(s);
    case NumeralStyle::Arabic: {
      if (s.empty() || s.size() > 6) return std::nullopt;
      int v = 0;
      for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
      }
      return v > 0 ? std::optional<int>(v) : std::nullopt;
    }
    case NumeralStyle::Words: {
      const auto folded = utf8::fold_case(s);
      for (std::size_t i = 0; i < p.words.size(); ++i)
        if (utf8::fold_case(p.words[i]) == folded) return static_cast<int>(i + 1);
      return std::nullopt;
    }
  }
  return std::nullopt;
}

/// Returns the numerals of a matching header line (more than one for a
/// fused header), or nullopt when the line is not a header.
inline std::optional<std::vector<int>> match_header(std::string_view line, const HeaderPattern& p,
                                                    bool allow_fused) {
  const auto t = trim(line);
  if (t.size() < p.prefix.size() + p.suffix.size()) return std::nullopt;
  if (t.substr(0, p.prefix.size()) != p.prefix) return std::nullopt;
  if (t.substr(t.size() - p.suffix.size()) != p.suffix) return std::nullopt;
  const auto body = trim(t.substr(p.prefix.size(), t.size() - p.prefix.size() - p.suffix.size()));
  if (body.empty()) return std::nullopt;
  if (auto single = parse_numeral(body, p)) return std::vector<int>{*single};
  if (!allow_fused || p.fuse_separators.empty()) return std::nullopt;

  const auto seps = utf8::to_u32(p.fuse_separators);
  std::vector<int> values;
  std::string token;
  const auto flush = [&]() -> bool {
    const std::string tok(trim(token));
    token.clear();
    if (tok.empty()) return true;
    auto v = parse_numeral(tok, p);
    if (!v) return false;
    values.push_back(*v);
    return true;
  };
  for (const auto& cp : utf8::decode(body)) {
    if (std::find(seps.begin(), seps.end(), cp.value) != seps.end()) {
      if (!flush()) return std::nullopt;
    } else {
      utf8::append(token, cp.value);
    }
  }
  if (!flush() || values.size() < 2) return std::nullopt;
  if (!std::is_sorted(values.begin(), values.end()) ||
      std::adjacent_find(values.begin(), values.end()) != values.end())
    return std::nullopt;
  return values;
}

inline std::size_t count_words(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (const auto& cp : utf8::decode(text)) {
    const bool sep = utf8::is_word_separator(cp.value);
    if (!sep && !in_word) ++words;
    in_word = !sep;
  }
  return words;
}

inline bool is_placeholder_line(std::string_view text, std::u32string_view placeholder) {
  bool any = false;
  for (const auto& cp : utf8::decode(text)) {
    if (utf8::is_space(cp.value)) continue;
    if (placeholder.find(cp.value) == std::u32string_view::npos) return false;
    any = true;
  }
  return any;
}

}  // namespace detail

/// Parses one source text. `scheme` supplies the encodable-character
/// predicate used for Line::char_count.
inline Corpus parse_corpus(std::string_view raw, const LayoutConfig& layout,
                           const EncodingScheme& scheme, std::string source_id = {}) {
  if (raw.empty()) throw DataError("empty input");
  utf8::decode(raw);  // validates the whole file up front

  Corpus corpus;
  corpus.source_id = std::move(source_id);
  const auto placeholder = utf8::to_u32(layout.placeholder_chars);

  Part* part = nullptr;
  Stanza* stanza = nullptr;

  std::size_t pos = 0;
  while (pos < raw.size()) {
    const std::size_t nl = raw.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? raw.size() : nl + 1;
    std::string_view body = raw.substr(pos, end - pos);
    std::string eol;
    if (!body.empty() && body.back() == '\n') {
      body.remove_suffix(1);
      eol = "\n";
      if (!body.empty() && body.back() == '\r') {
        body.remove_suffix(1);
        eol = "\r\n";
      }
    }
    const std::size_t offset = pos;
    pos = end;
    const auto discard = [&](FragmentKind kind) {
      corpus.discarded.push_back({offset, std::string(body) + eol, kind});
    };

    if (detail::trim(body).empty()) {
      discard(FragmentKind::Blank);
      continue;
    }
    if (auto nums = detail::match_header(body, layout.part_header, false)) {
      const int index = nums->front();
      if (part && index <= part->index)
        throw ParseError("part " + std::to_string(index) + " does not follow part " +
                             std::to_string(part->index),
                         offset);
      corpus.parts.push_back(Part{index, {}});
      part = &corpus.parts.back();
      stanza = nullptr;
      discard(FragmentKind::PartHeader);
      continue;
    }
    if (auto nums = detail::match_header(body, layout.stanza_header, true)) {
      if (!part) throw ParseError("stanza header before any part header", offset);
      const int index = nums->front();
      if (!part->stanzas.empty() && index <= part->stanzas.back().index)
        throw ParseError("stanza " + std::to_string(index) + " does not follow stanza " +
                             std::to_string(part->stanzas.back().index) + " in part " +
                             std::to_string(part->index),
                         offset);
      Stanza s;
      s.index = index;
      s.fused_indices = *nums;
      s.flags.fused = nums->size() > 1;
      part->stanzas.push_back(std::move(s));
      stanza = &part->stanzas.back();
      discard(FragmentKind::StanzaHeader);
      continue;
    }
    if (!layout.epigraph_marker.empty() && detail::trim(body) == layout.epigraph_marker) {
      if (part) {
        if (!part->stanzas.empty())
          throw ParseError("epigraph marker after the first stanza of part " +
                               std::to_string(part->index),
                           offset);
        Stanza s;
        s.index = 0;
        s.flags.epigraph = true;
        part->stanzas.push_back(std::move(s));
        stanza = &part->stanzas.back();
      }
      discard(FragmentKind::EpigraphMarker);
      continue;
    }
    if (!stanza) {
      // Title matter, dedications, chapter subtitles; an epigraph before the
      // first part header lands here as well.
      discard(FragmentKind::Preamble);
      continue;
    }
    Line line;
    line.text = std::string(body);
    line.eol = eol;
    line.offset = offset;
    line.number = static_cast<int>(stanza->lines.size()) + 1;
    line.placeholder = detail::is_placeholder_line(body, placeholder);
    line.word_count = line.placeholder ? 0 : detail::count_words(body);
    for (const auto& cp : utf8::decode(body, offset))
      if (is_encodable(cp.value, scheme)) ++line.char_count;
    stanza->lines.push_back(std::move(line));
  }

  if (corpus.parts.empty()) throw DataError("no part header found");
  for (auto& p : corpus.parts)
    for (auto& s : p.stanzas)
      s.flags.dotted_placeholder =
          !s.lines.empty() &&
          std::all_of(s.lines.begin(), s.lines.end(), [](const Line& l) { return l.placeholder; });
  return corpus;
}

/// Reassembles the original bytes from lines and discarded fragments.
inline std::string reconstruct(const Corpus& corpus) {
  std::vector<std::pair<std::size_t, std::string>> pieces;
  for (const auto& f : corpus.discarded) pieces.emplace_back(f.offset, f.text);
  for_each_stanza(corpus, [&](const Part&, const Stanza& s) {
    for (const auto& l : s.lines) pieces.emplace_back(l.offset, l.text + l.eol);
  });
  std::sort(pieces.begin(), pieces.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& [_, text] : pieces) out += text;
  return out;
}

/// Keeps the first `n` non-epigraph stanzas in document order (epigraphs of
/// the parts reached are kept, still flagged).
inline Corpus take_stanzas(const Corpus& corpus, std::size_t n) {
  Corpus out;
  out.source_id = corpus.source_id;
  std::size_t taken = 0;
  for (const auto& part : corpus.parts) {
    if (taken >= n) break;
    Part p{part.index, {}};
    for (const auto& s : part.stanzas) {
      if (s.flags.epigraph) {
        p.stanzas.push_back(s);
        continue;
      }
      if (taken >= n) break;
      p.stanzas.push_back(s);
      ++taken;
    }
    out.parts.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alignment

struct AlignedPair {
  StanzaRef reference;
  StanzaRef other;
};

struct UnmatchedStanza {
  StanzaRef ref;
  std::string reason;
};

struct AlignedCorpus {
  std::vector<AlignedPair> pairs;
  std::vector<UnmatchedStanza> unmatched;        // reference side
  std::vector<UnmatchedStanza> other_unmatched;  // other side, absent in reference
};

/// Reference-driven matching on (part, stanza index).
inline AlignedCorpus align_corpora(const Corpus& reference, const Corpus& other) {
  std::map<StanzaRef, bool> other_refs;
  for_each_stanza(other, [&](const Part& p, const Stanza& s) {
    other_refs[{p.index, s.index}] = false;
  });
  AlignedCorpus out;
  for_each_stanza(reference, [&](const Part& p, const Stanza& s) {
    const StanzaRef ref{p.index, s.index};
    auto it = other_refs.find(ref);
    if (it != other_refs.end()) {
      out.pairs.push_back({ref, ref});
      it->second = true;
    } else {
      out.unmatched.push_back({ref, "missing counterpart"});
    }
  });
  for (const auto& [ref, used] : other_refs)
    if (!used) out.other_unmatched.push_back({ref, "absent in reference"});
  return out;
}

// ---------------------------------------------------------------------------
// Surface statistics

struct LineStats {
  double mean_chars = 0;
  double sd_chars = 0;
  double mean_words = 0;
  double sd_words = 0;
  std::size_t n_lines = 0;
};

struct LineFilter {
  bool include_epigraphs = false;
  bool include_placeholders = false;
};

/// Visits retained lines in document order.
template <typename Fn>
void for_each_line(const Corpus& corpus, const LineFilter& filter, Fn&& fn) {
  for_each_stanza(corpus, [&](const Part& p, const Stanza& s) {
    if (s.flags.epigraph && !filter.include_epigraphs) return;
    for (const auto& l : s.lines) {
      if (l.placeholder && !filter.include_placeholders) continue;
      fn(p, s, l);
    }
  });
}

/// Mean and sample standard deviation (n-1 denominator; 0 for one line).
inline LineStats line_statistics(const Corpus& corpus, const LineFilter& filter = {}) {
  std::vector<double> chars, words;
  for_each_line(corpus, filter, [&](const Part&, const Stanza&, const Line& l) {
    chars.push_back(static_cast<double>(l.char_count));
    words.push_back(static_cast<double>(l.word_count));
  });
  if (chars.empty()) throw DataError("no retained lines for line statistics");
  const auto moments = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  LineStats st;
  std::tie(st.mean_chars, st.sd_chars) = moments(chars);
  std::tie(st.mean_words, st.sd_words) = moments(words);
  st.n_lines = chars.size();
  return st;
}

struct LatinToken {
  std::string token;
  int part = 0;
  int stanza = 0;
  int line = 0;
};

struct PartDensity {
  int part = 0;
  std::size_t tokens = 0;
  std::size_t words = 0;
  double per_thousand_words = 0;
};

struct TokenReport {
  std::vector<LatinToken> tokens;
  std::vector<PartDensity> densities;
};

/// Maximal runs of Latin letters of at least `min_len` code points.
inline TokenReport extract_latin_tokens(const Corpus& corpus, std::size_t min_len = 4) {
  if (min_len < 1) throw DataError("min_len must be >= 1");
  TokenReport report;
  std::map<int, PartDensity> per_part;
  for (const auto& p : corpus.parts) per_part[p.index].part = p.index;
  for_each_line(corpus, {}, [&](const Part& p, const Stanza& s, const Line& l) {
    auto& density = per_part[p.index];
    density.words += l.word_count;
    std::string run;
    std::size_t run_len = 0;
    const auto flush = [&] {
      if (run_len >= min_len) {
        report.tokens.push_back({run, p.index, s.index, l.number});
        ++density.tokens;
      }
      run.clear();
      run_len = 0;
    };
    for (const auto& cp : utf8::decode(l.text)) {
      if (utf8::is_latin_letter(cp.value)) {
        utf8::append(run, cp.value);
        ++run_len;
      } else {
        flush();
      }
    }
    flush();
  });
  for (auto& [_, d] : per_part) {
    d.per_thousand_words =
        d.words ? 1000.0 * static_cast<double>(d.tokens) / static_cast<double>(d.words) : 0.0;
    report.densities.push_back(d);
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

inline NumeralStyle numeral_style_from_string(const std::string& s) {
  if (s == "roman") return NumeralStyle::Roman;
  if (s == "arabic") return NumeralStyle::Arabic;
  if (s == "words") return NumeralStyle::Words;
  throw DataError("unknown numeral style '" + s + "'");
}

inline void from_json(const nlohmann::json& j, HeaderPattern& p) {
  p.prefix = j.value("prefix", std::string());
  p.suffix = j.value("suffix", std::string());
  p.numeral = numeral_style_from_string(j.value("numeral", std::string("roman")));
  p.words = j.value("words", std::vector<std::string>{});
  p.fuse_separators = j.value("fuse_separators", HeaderPattern{}.fuse_separators);
  if (p.numeral == NumeralStyle::Words && p.words.empty())
    throw DataError("numeral style 'words' needs a non-empty word list");
}

inline void from_json(const nlohmann::json& j, LayoutConfig& c) {
  LayoutConfig defaults;
  if (j.contains("part_header")) j.at("part_header").get_to(c.part_header);
  if (j.contains("stanza_header")) j.at("stanza_header").get_to(c.stanza_header);
  c.epigraph_marker = j.value("epigraph_marker", defaults.epigraph_marker);
  c.placeholder_chars = j.value("placeholder_chars", defaults.placeholder_chars);
}

inline const char* to_string(FragmentKind k) {
  switch (k) {
    case FragmentKind::Blank: return "blank";
    case FragmentKind::PartHeader: return "part_header";
    case FragmentKind::StanzaHeader: return "stanza_header";
    case FragmentKind::EpigraphMarker: return "epigraph_marker";
    case FragmentKind::Preamble: return "preamble";
  }
  return "?";
}

/// Corpus JSON schema:
///   { "source_id": str,
///     "parts": [ { "index": int,
///                  "stanzas": [ { "index": int, "fused_indices": [int],
///                                 "flags": {"epigraph", "dotted_placeholder", "fused"},
///                                 "lines": [ { "number", "offset", "text", "eol",
///                                              "char_count", "word_count",
///                                              "placeholder" } ] } ] } ],
///     "discarded": [ { "offset", "kind", "text" } ] }
inline nlohmann::json corpus_to_json(const Corpus& corpus) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : corpus.parts) {
    nlohmann::json stanzas = nlohmann::json::array();
    for (const auto& s : p.stanzas) {
      nlohmann::json lines = nlohmann::json::array();
      for (const auto& l : s.lines)
        lines.push_back({{"number", l.number},
                         {"offset", l.offset},
                         {"text", l.text},
                         {"eol", l.eol},
                         {"char_count", l.char_count},
                         {"word_count", l.word_count},
                         {"placeholder", l.placeholder}});
      stanzas.push_back({{"index", s.index},
                         {"fused_indices", s.fused_indices},
                         {"flags",
                          {{"epigraph", s.flags.epigraph},
                           {"dotted_placeholder", s.flags.dotted_placeholder},
                           {"fused", s.flags.fused}}},
                         {"lines", std::move(lines)}});
    }
    parts.push_back({{"index", p.index}, {"stanzas", std::move(stanzas)}});
  }
  nlohmann::json discarded = nlohmann::json::array();
  for (const auto& f : corpus.discarded)
    discarded.push_back({{"offset", f.offset}, {"kind", to_string(f.kind)}, {"text", f.text}});
  return {{"source_id", corpus.source_id},
          {"parts", std::move(parts)},
          {"discarded", std::move(discarded)}};
}

}  // namespace vcmarkov
