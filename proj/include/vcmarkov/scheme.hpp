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

// Vowel/consonant classification schemes.

#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vcmarkov/error.hpp"
#include "vcmarkov/utf8.hpp"

namespace vcmarkov {

enum class CharClass { Vowel, Consonant, Excluded, Unknown };

inline const char* to_string(CharClass c) {
  switch (c) {
    case CharClass::Vowel: return "V";
    case CharClass::Consonant: return "C";
    case CharClass::Excluded: return "excluded";
    case CharClass::Unknown: return "unknown";
  }
  return "?";
}

/// Explicit character sets plus category switches for the large classes
/// (whitespace, punctuation, digits, apostrophes) that are impractical to
/// enumerate. Input is expected in NFC; combining marks classify as Unknown.
struct EncodingScheme {
  std::string name;
  std::set<char32_t> vowels;
  std::set<char32_t> consonants;
  std::set<char32_t> excluded;
  bool fold_case = true;
  bool exclude_whitespace = true;
  bool exclude_punctuation = true;
  bool exclude_digits = true;
  bool exclude_apostrophes = true;

  /// Throws DataError if the declared sets overlap.
  void validate() const {
    for (char32_t c : vowels) {
      if (consonants.count(c) || excluded.count(c))
        throw DataError("scheme '" + name + "': character " + utf8::encode(std::u32string(1, c)) +
                        " declared in more than one class");
    }
    for (char32_t c : consonants) {
      if (excluded.count(c))
        throw DataError("scheme '" + name + "': character " + utf8::encode(std::u32string(1, c)) +
                        " declared in more than one class");
    }
  }
};

inline CharClass classify_char(char32_t ch, const EncodingScheme& scheme) {
  const char32_t c = scheme.fold_case ? utf8::fold_case(ch) : ch;
  if (scheme.vowels.count(c)) return CharClass::Vowel;
  if (scheme.consonants.count(c)) return CharClass::Consonant;
  if (scheme.excluded.count(c)) return CharClass::Excluded;
  if (scheme.exclude_apostrophes && utf8::is_apostrophe(c)) return CharClass::Excluded;
  if (scheme.exclude_whitespace && utf8::is_space(c)) return CharClass::Excluded;
  if (scheme.exclude_punctuation && utf8::is_punct(c)) return CharClass::Excluded;
  if (scheme.exclude_digits && utf8::is_digit(c)) return CharClass::Excluded;
  return CharClass::Unknown;
}

inline bool is_encodable(char32_t ch, const EncodingScheme& scheme) {
  const auto k = classify_char(ch, scheme);
  return k == CharClass::Vowel || k == CharClass::Consonant;
}

namespace detail {

inline void insert_all(std::set<char32_t>& dst, std::u32string_view chars) {
  dst.insert(chars.begin(), chars.end());
}

// Latin letters shared by both default schemes. 'y' and accented vowels are
// vowels; diacritic consonants cover transliterated Slavic names.
inline void add_latin(EncodingScheme& s) {
  insert_all(s.vowels, U"aeiouy");
  insert_all(s.vowels, U"àáâãäåæèéêëìíîïòóôõöøùúûüýÿœāăąēĕėęěīĭįōŏőūŭůűųŷ");
  insert_all(s.consonants, U"bcdfghjklmnpqrstvwxz");
  insert_all(s.consonants, U"çñßðþćĉċčďđĝğġģĥħĵķĺļľŀłńņňŉŋŕŗřśŝşšţťŧŵźżž");
}

}  // namespace detail

/// Russian (post-1918) scheme with Latin-script borrowings. Hard and soft
/// signs are excluded; й is a consonant.
inline EncodingScheme russian_scheme() {
  EncodingScheme s;
  s.name = "ru";
  detail::insert_all(s.vowels, U"аеёиоуыэюя");
  detail::insert_all(s.consonants, U"бвгджзйклмнпрстфхцчшщ");
  detail::insert_all(s.excluded, U"ъь");
  detail::add_latin(s);
  return s;
}

inline EncodingScheme italian_scheme() {
  EncodingScheme s;
  s.name = "it";
  detail::add_latin(s);
  return s;
}

/// Built-in schemes by name ("ru", "it").
inline EncodingScheme builtin_scheme(std::string_view name) {
  if (name == "ru") return russian_scheme();
  if (name == "it") return italian_scheme();
  throw DataError("unknown built-in scheme '" + std::string(name) + "'");
}

inline void to_json(nlohmann::json& j, const EncodingScheme& s) {
  const auto chars = [](const std::set<char32_t>& set) {
    return utf8::encode(std::u32string(set.begin(), set.end()));
  };
  j = nlohmann::json{{"name", s.name},
                     {"vowels", chars(s.vowels)},
                     {"consonants", chars(s.consonants)},
                     {"excluded", chars(s.excluded)},
                     {"fold_case", s.fold_case},
                     {"exclude_whitespace", s.exclude_whitespace},
                     {"exclude_punctuation", s.exclude_punctuation},
                     {"exclude_digits", s.exclude_digits},
                     {"exclude_apostrophes", s.exclude_apostrophes}};
}

inline void from_json(const nlohmann::json& j, EncodingScheme& s) {
  const auto chars = [&](const char* key) {
    std::set<char32_t> out;
    if (j.contains(key)) {
      const auto u = utf8::to_u32(j.at(key).get<std::string>());
      out.insert(u.begin(), u.end());
    }
    return out;
  };
  s.name = j.value("name", std::string("custom"));
  s.vowels = chars("vowels");
  s.consonants = chars("consonants");
  s.excluded = chars("excluded");
  s.fold_case = j.value("fold_case", true);
  s.exclude_whitespace = j.value("exclude_whitespace", true);
  s.exclude_punctuation = j.value("exclude_punctuation", true);
  s.exclude_digits = j.value("exclude_digits", true);
  s.exclude_apostrophes = j.value("exclude_apostrophes", true);
  if (s.fold_case) {
    // Declared sets are matched against folded input.
    for (auto* set : {&s.vowels, &s.consonants, &s.excluded}) {
      std::set<char32_t> folded;
      for (char32_t c : *set) folded.insert(utf8::fold_case(c));
      *set = std::move(folded);
    }
  }
  s.validate();
}

}  // namespace vcmarkov
