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

#include "vcmarkov/corpus.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"
#include "vcmarkov/error.hpp"

namespace vcmarkov {
namespace {

using testing::sample_corpus;

LayoutConfig roman_parts() {
  LayoutConfig layout;
  layout.part_header = {"PART ", "", NumeralStyle::Roman, {}, ""};
  layout.stanza_header = {"", "", NumeralStyle::Arabic, {}, "-"};
  return layout;
}

TEST(CorpusTest, TwoPartStructure) {
  const std::string raw =
      "PART I\n\n1\nab cd\nef\n\n2\ngh\n\nPART II\n1\nij kl mn\n";
  const auto c = parse_corpus(raw, roman_parts(), russian_scheme(), "x");
  ASSERT_EQ(c.parts.size(), 2u);
  EXPECT_EQ(c.parts[0].index, 1);
  EXPECT_EQ(c.parts[0].stanzas.size(), 2u);
  EXPECT_EQ(c.parts[1].index, 2);
  EXPECT_EQ(c.parts[1].stanzas.size(), 1u);
  EXPECT_EQ(c.parts[1].stanzas[0].lines[0].word_count, 3u);
  EXPECT_EQ(c.parts[1].stanzas[0].lines[0].char_count, 6u);
}

TEST(CorpusTest, DottedPlaceholderStanza) {
  const std::string raw = "PART I\n1\n. . . . .\n.........\n";
  const auto c = parse_corpus(raw, roman_parts(), russian_scheme());
  const auto& s = c.parts[0].stanzas[0];
  EXPECT_TRUE(s.flags.dotted_placeholder);
  for (const auto& l : s.lines) {
    EXPECT_TRUE(l.placeholder);
    EXPECT_EQ(l.word_count, 0u);
  }
}

TEST(CorpusTest, FusedStanzaKeepsFirstIndex) {
  const std::string raw = "PART I\n3-4\nab\n";
  const auto c = parse_corpus(raw, roman_parts(), russian_scheme());
  const auto& s = c.parts[0].stanzas[0];
  EXPECT_TRUE(s.flags.fused);
  EXPECT_EQ(s.index, 3);
  EXPECT_EQ(s.fused_indices, (std::vector<int>{3, 4}));
}

TEST(CorpusTest, StanzaBeforePartIsParseErrorWithOffset) {
  const std::string raw = "intro\n1\nab\n";
  try {
    parse_corpus(raw, roman_parts(), russian_scheme());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.byte_offset(), 6u);
  }
}

TEST(CorpusTest, EmptyInputIsError) {
  EXPECT_THROW(parse_corpus("", roman_parts(), russian_scheme()), DataError);
}

TEST(CorpusTest, NonIncreasingStanzaIsError) {
  EXPECT_THROW(parse_corpus("PART I\n2\nab\n1\ncd\n", roman_parts(), russian_scheme()), ParseError);
}

TEST(CorpusTest, RoundTripIsLossless) {
  const std::string raw = "preface\r\n\r\nPART I\r\n\r\n1\r\nab, cd!\r\n  \r\n2\r\nef";
  const auto c = parse_corpus(raw, roman_parts(), russian_scheme());
  EXPECT_EQ(reconstruct(c), raw);
}

TEST(CorpusTest, SampleRoundTripAndStructure) {
  const auto raw = testing::read_file(testing::sample_path("ru.txt"));
  const auto c = sample_corpus("ru");
  EXPECT_EQ(reconstruct(c), raw);
  ASSERT_EQ(c.parts.size(), 2u);
  const auto& first = c.parts[0].stanzas;
  EXPECT_TRUE(first.front().flags.epigraph);
  EXPECT_EQ(first.front().index, 0);
  EXPECT_TRUE(first.back().flags.dotted_placeholder);
  EXPECT_TRUE(first.back().flags.fused);
}

TEST(CorpusTest, AlignmentWithItself) {
  const auto c = sample_corpus("ru");
  const auto a = align_corpora(c, c);
  EXPECT_TRUE(a.unmatched.empty());
  EXPECT_TRUE(a.other_unmatched.empty());
  for (const auto& p : a.pairs) EXPECT_EQ(p.reference, p.other);
}

Corpus synthetic(int stanzas_last_part) {
  Corpus c;
  for (int p = 1; p <= 2; ++p) {
    Part part{p, {}};
    const int n = p == 2 ? stanzas_last_part : 3;
    for (int s = 1; s <= n; ++s) part.stanzas.push_back({s, {}, {}, {Line{"ab", "\n"}}});
    c.parts.push_back(part);
  }
  return c;
}

TEST(CorpusTest, AlignmentReportsMissingAndExtra) {
  const auto ref = synthetic(51);
  const auto other = synthetic(41);
  const auto a = align_corpora(ref, other);
  ASSERT_EQ(a.unmatched.size(), 10u);
  EXPECT_EQ(a.unmatched.front().ref, (StanzaRef{2, 42}));
  EXPECT_EQ(a.unmatched.back().ref, (StanzaRef{2, 51}));
  EXPECT_EQ(a.unmatched.front().reason, "missing counterpart");
  EXPECT_EQ(a.pairs.size() + a.unmatched.size(), 54u);

  const auto b = align_corpora(other, ref);
  EXPECT_TRUE(b.unmatched.empty());
  EXPECT_EQ(b.other_unmatched.size(), 10u);
}

TEST(CorpusTest, SingleLineStatistics) {
  const auto c = parse_corpus("PART I\n1\nab cd\n", roman_parts(), russian_scheme());
  const auto st = line_statistics(c);
  EXPECT_EQ(st.n_lines, 1u);
  EXPECT_DOUBLE_EQ(st.mean_chars, 4.0);
  EXPECT_DOUBLE_EQ(st.sd_chars, 0.0);
  EXPECT_DOUBLE_EQ(st.mean_words, 2.0);
}

TEST(CorpusTest, LineStatisticsExcludeEpigraphsAndPlaceholders) {
  const auto c = sample_corpus("ru");
  const auto st = line_statistics(c);
  EXPECT_EQ(st.n_lines, 70u);
  const auto all = line_statistics(c, {true, true});
  EXPECT_EQ(all.n_lines, 74u);
}

TEST(CorpusTest, LineStatisticsInvariantUnderStanzaReordering) {
  auto c = sample_corpus("ru");
  const auto before = line_statistics(c);
  std::mt19937 gen(3);
  for (auto& p : c.parts) std::shuffle(p.stanzas.begin(), p.stanzas.end(), gen);
  const auto after = line_statistics(c);
  EXPECT_NEAR(before.mean_chars, after.mean_chars, 1e-12);
  EXPECT_NEAR(before.sd_chars, after.sd_chars, 1e-12);
  EXPECT_NEAR(before.mean_words, after.mean_words, 1e-12);
}

TEST(CorpusTest, NoRetainedLinesIsError) {
  const auto c = parse_corpus("PART I\n1\n....\n", roman_parts(), russian_scheme());
  EXPECT_THROW(line_statistics(c), DataError);
}

TEST(CorpusTest, LatinTokens) {
  const auto c = parse_corpus("PART I\n1\nКак dandy лондонский одет\n", roman_parts(),
                              russian_scheme());
  const auto r4 = extract_latin_tokens(c, 4);
  ASSERT_EQ(r4.tokens.size(), 1u);
  EXPECT_EQ(r4.tokens[0].token, "dandy");
  EXPECT_EQ(r4.tokens[0].part, 1);
  EXPECT_EQ(r4.tokens[0].stanza, 1);
  EXPECT_EQ(r4.tokens[0].line, 1);
  EXPECT_TRUE(extract_latin_tokens(c, 6).tokens.empty());
  ASSERT_EQ(r4.densities.size(), 1u);
  EXPECT_DOUBLE_EQ(r4.densities[0].per_thousand_words, 250.0);
}

TEST(CorpusTest, JsonExportHasSchemaFields) {
  const auto j = corpus_to_json(sample_corpus("ru"));
  EXPECT_EQ(j.at("source_id"), "ru");
  EXPECT_TRUE(j.at("parts")[0].at("stanzas")[0].at("flags").at("epigraph").get<bool>());
  EXPECT_FALSE(j.at("discarded").empty());
}

TEST(CorpusTest, TakeStanzasSkipsEpigraph) {
  const auto c = take_stanzas(sample_corpus("ru"), 2);
  std::size_t regular = 0;
  for_each_stanza(c, [&](const Part&, const Stanza& s) { regular += !s.flags.epigraph; });
  EXPECT_EQ(regular, 2u);
}

}  // namespace
}  // namespace vcmarkov
