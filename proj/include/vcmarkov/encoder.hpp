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

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcmarkov/corpus.hpp"
#include "vcmarkov/error.hpp"
#include "vcmarkov/scheme.hpp"
#include "vcmarkov/utf8.hpp"

namespace vcmarkov {

/// Symbols are stored as bytes: 1 = vowel, 0 = consonant.
using Symbol = std::uint8_t;
inline constexpr Symbol kVowel = 1;
inline constexpr Symbol kConsonant = 0;

using SymbolSpan = std::span<const Symbol>;

/// Source line of an encoded symbol.
struct SourceLine {
  int part = 0;
  int stanza = 0;
  int line = 0;
  std::string text;
};

struct Origin {
  std::size_t line_ref = 0;     // index into SymbolSequence::lines
  std::size_t column = 0;       // code point index within the line
  std::size_t byte_offset = 0;  // absolute offset in the source file
};

struct SkippedChar {
  char32_t ch;
  std::size_t byte_offset;
  int part, stanza, line;
};

/// Encoded text. `origins` is either empty (synthetic sequences) or holds
/// one entry per symbol, strictly increasing in document order.
struct SymbolSequence {
  std::string source_id;
  std::vector<Symbol> symbols;
  std::vector<Origin> origins;
  std::vector<SourceLine> lines;
  std::vector<SkippedChar> skipped;

  std::size_t size() const noexcept { return symbols.size(); }
  SymbolSpan view() const noexcept { return symbols; }
  SymbolSpan view(std::size_t start, std::size_t end) const {
    return SymbolSpan(symbols).subspan(start, end - start);
  }
  bool has_origins() const noexcept { return !origins.empty(); }
};

enum class UnknownPolicy { Error, SkipAndLog };

/// "'x' (U+0078)"
inline std::string describe_char(char32_t c) {
  std::string out = "'";
  utf8::append(out, c);
  char buf[16];
  std::snprintf(buf, sizeof buf, "' (U+%04X)", static_cast<unsigned>(c));
  return out + buf;
}

struct EncodeOptions {
  UnknownPolicy unknown = UnknownPolicy::Error;
  LineFilter filter{};
  std::function<void(const SkippedChar&)> log;  // called per skipped character
};

/// Concatenates all retained lines in document order, drops Excluded
/// characters and records where every symbol came from.
inline SymbolSequence encode_text(const Corpus& corpus, const EncodingScheme& scheme,
                                  const EncodeOptions& options = {}) {
  SymbolSequence seq;
  seq.source_id = corpus.source_id;
  for_each_line(corpus, options.filter, [&](const Part& p, const Stanza& s, const Line& l) {
    const std::size_t line_ref = seq.lines.size();
    seq.lines.push_back({p.index, s.index, l.number, l.text});
    std::size_t column = 0;
    for (const auto& cp : utf8::decode(l.text, l.offset)) {
      switch (classify_char(cp.value, scheme)) {
        case CharClass::Vowel:
          seq.symbols.push_back(kVowel);
          seq.origins.push_back({line_ref, column, cp.offset});
          break;
        case CharClass::Consonant:
          seq.symbols.push_back(kConsonant);
          seq.origins.push_back({line_ref, column, cp.offset});
          break;
        case CharClass::Excluded: break;
        case CharClass::Unknown: {
          SkippedChar sk{cp.value, cp.offset, p.index, s.index, l.number};
          if (options.unknown == UnknownPolicy::Error)
            throw DataError("unknown character " + describe_char(cp.value) + " at part " +
                            std::to_string(p.index) + ", stanza " + std::to_string(s.index) +
                            ", line " + std::to_string(l.number) + ", byte " +
                            std::to_string(cp.offset));
          seq.skipped.push_back(sk);
          if (options.log) options.log(sk);
          break;
        }
      }
      ++column;
    }
  });
  return seq;
}

/// Builds a synthetic sequence from a 'V'/'C' string.
inline SymbolSequence from_vc_string(std::string_view vc, std::string source_id = {}) {
  SymbolSequence seq;
  seq.source_id = std::move(source_id);
  seq.symbols.reserve(vc.size());
  for (char c : vc) {
    if (c == 'V')
      seq.symbols.push_back(kVowel);
    else if (c == 'C')
      seq.symbols.push_back(kConsonant);
    else if (c != ' ' && c != '\n')
      throw DataError(std::string("invalid symbol '") + c + "' in V/C string");
  }
  return seq;
}

inline std::string to_vc_string(SymbolSpan symbols) {
  std::string out;
  out.reserve(symbols.size());
  for (Symbol s : symbols) out.push_back(s == kVowel ? 'V' : 'C');
  return out;
}

/// Origin map as CSV: index,symbol,part,stanza,line,column,byte_offset.
inline void write_origin_csv(std::ostream& os, const SymbolSequence& seq) {
  os << "index,symbol,part,stanza,line,column,byte_offset\n";
  for (std::size_t i = 0; i < seq.origins.size(); ++i) {
    const auto& o = seq.origins[i];
    const auto& l = seq.lines[o.line_ref];
    os << i << ',' << (seq.symbols[i] == kVowel ? 'V' : 'C') << ',' << l.part << ','
       << l.stanza << ',' << l.line << ',' << o.column << ',' << o.byte_offset << '\n';
  }
}

// ---------------------------------------------------------------------------
// Blocks

struct BlockRange {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - start; }
};

struct BlockSegmentation {
  std::size_t block_len = 0;
  std::vector<BlockRange> blocks;
  bool includes_partial_tail = false;
};

/// Consecutive blocks from the start of the sequence; a shorter tail block
/// is kept only if requested and at least `min_partial` long.
inline BlockSegmentation segment_blocks(std::size_t n, std::size_t block_len, bool keep_partial,
                                        std::size_t min_partial = 1) {
  if (block_len < 1) throw DataError("block length must be >= 1");
  BlockSegmentation seg;
  seg.block_len = block_len;
  const std::size_t full = n / block_len;
  for (std::size_t b = 0; b < full; ++b) seg.blocks.push_back({b * block_len, (b + 1) * block_len});
  const std::size_t tail = n - full * block_len;
  if (keep_partial && tail > 0 && tail >= min_partial) {
    seg.blocks.push_back({full * block_len, n});
    seg.includes_partial_tail = true;
  }
  return seg;
}

inline BlockSegmentation segment_blocks(const SymbolSequence& seq, std::size_t block_len,
                                        bool keep_partial, std::size_t min_partial = 1) {
  return segment_blocks(seq.size(), block_len, keep_partial, min_partial);
}

}  // namespace vcmarkov
