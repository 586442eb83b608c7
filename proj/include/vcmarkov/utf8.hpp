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

// Minimal UTF-8 decoding plus the character predicates shared by the parser,
// the encoder and the probe scanner.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vcmarkov/error.hpp"

namespace vcmarkov::utf8 {

struct CodePoint {
  char32_t value;
  std::size_t offset;  // byte offset of the first code unit
  std::size_t length;  // number of code units
};

/// Decodes `text`; throws DataError on malformed sequences (overlong forms,
/// surrogates and truncated sequences included). `base` is added to every
/// reported offset.
inline std::vector<CodePoint> decode(std::string_view text, std::size_t base = 0) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  std::size_t i = 0;
  const auto bad = [&](std::size_t at) {
    throw DataError("invalid UTF-8 at byte " + std::to_string(base + at));
  };
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      bad(i);
    }
    if (i + len > text.size()) bad(i);
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) bad(i);
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) bad(i);
    out.push_back({cp, base + i, len});
    i += len;
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view cps) {
  std::string out;
  for (char32_t cp : cps) append(out, cp);
  return out;
}

inline std::u32string to_u32(std::string_view text) {
  std::u32string out;
  for (const auto& cp : decode(text)) out.push_back(cp.value);
  return out;
}

/// Lower-cases Latin (Basic, Latin-1, Extended-A) and Cyrillic letters.
/// Everything else is returned unchanged.
inline char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x100 && c <= 0x137 && (c % 2) == 0) return c + 1;
  if (c >= 0x139 && c <= 0x148 && (c % 2) == 1) return c + 1;
  if (c >= 0x14A && c <= 0x177 && (c % 2) == 0) return c + 1;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E && (c % 2) == 1) return c + 1;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  return c;
}

inline std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const auto& cp : decode(text)) append(out, fold_case(cp.value));
  return out;
}

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF;
}

inline bool is_apostrophe(char32_t c) {
  return c == U'\'' || c == 0x2019 || c == 0x02BC || c == 0x2018 || c == 0x0060 || c == 0x00B4;
}

/// ASCII punctuation and symbols, Latin-1 punctuation, General Punctuation,
/// and the guillemets/quotes used in Russian and Italian typesetting.
inline bool is_punct(char32_t c) {
  if ((c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
      (c >= 0x7B && c <= 0x7E))
    return true;
  if (c >= 0xA1 && c <= 0xBF && c != 0xAA && c != 0xB5 && c != 0xBA) return true;
  if (c == 0xD7 || c == 0xF7) return true;
  if (c >= 0x2010 && c <= 0x205E) return true;
  if (c == 0x02BC || c == 0x2E3A || c == 0x2E3B) return true;
  return false;
}

inline bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

inline bool is_combining(char32_t c) { return c >= 0x300 && c <= 0x36F; }

inline bool is_latin_letter(char32_t c) {
  const char32_t f = fold_case(c);
  return (f >= U'a' && f <= U'z') || (f >= 0xDF && f <= 0xFF && f != 0xF7) ||
         (f >= 0x100 && f <= 0x17F);
}

inline bool is_cyrillic_letter(char32_t c) { return c >= 0x400 && c <= 0x45F; }

/// Separator predicate for word counting: whitespace and punctuation.
inline bool is_word_separator(char32_t c) { return is_space(c) || is_punct(c); }

}  // namespace vcmarkov::utf8
