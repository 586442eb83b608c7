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

#include "vcmarkov/encoder.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"
#include "vcmarkov/error.hpp"

namespace vcmarkov {
namespace {

LayoutConfig simple_layout() {
  LayoutConfig layout;
  layout.part_header = {"PART ", "", NumeralStyle::Arabic, {}, ""};
  layout.stanza_header = {"", "", NumeralStyle::Roman, {}, "-"};
  return layout;
}

SymbolSequence encode_line(const std::string& text,
                           UnknownPolicy policy = UnknownPolicy::Error) {
  const auto c = parse_corpus("PART 1\nI\n" + text + "\n", simple_layout(), russian_scheme());
  EncodeOptions opts;
  opts.unknown = policy;
  return encode_text(c, russian_scheme(), opts);
}

TEST(EncoderTest, SimpleWords) {
  EXPECT_EQ(to_vc_string(encode_line("мама").view()), "CVCV");
  EXPECT_EQ(to_vc_string(encode_line("съезд").view()), "CVCC");
  EXPECT_EQ(to_vc_string(encode_line("Мой дядя").view()), "CVCCVCV");
  EXPECT_EQ(to_vc_string(encode_line("l'Abbé").view()), "CVCCV");
}

TEST(EncoderTest, WhitespacePunctuationAndDigitsAreDropped) {
  EXPECT_EQ(to_vc_string(encode_line("а, б! 12 — в?").view()), "VCC");
}

TEST(EncoderTest, UnknownCharacterPolicy) {
  EXPECT_THROW(encode_line("мѣра"), DataError);
  const auto seq = encode_line("мѣра", UnknownPolicy::SkipAndLog);
  EXPECT_EQ(to_vc_string(seq.view()), "CCV");
  ASSERT_EQ(seq.skipped.size(), 1u);
  EXPECT_EQ(seq.skipped[0].ch, U'ѣ');
  EXPECT_EQ(seq.skipped[0].line, 1);
}

TEST(EncoderTest, OriginsPointBackToSource) {
  const std::string raw = "PART 1\nI\nab cd\nef\n";
  const auto c = parse_corpus(raw, simple_layout(), russian_scheme());
  const auto seq = encode_text(c, russian_scheme());
  ASSERT_EQ(seq.size(), 6u);
  ASSERT_EQ(seq.origins.size(), 6u);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& o = seq.origins[i];
    const auto& l = seq.lines[o.line_ref];
    EXPECT_EQ(raw[o.byte_offset], l.text[o.column]);
  }
  EXPECT_EQ(seq.origins[2].column, 3u);
  EXPECT_EQ(seq.lines[seq.origins[4].line_ref].line, 2);
}

TEST(EncoderTest, PositionsStableUnderLaterEdits) {
  const auto base = encode_line("мой дядя самых");
  const auto edited = encode_line("мой дядя самых честных");
  ASSERT_LT(base.size(), edited.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_EQ(base.symbols[i], edited.symbols[i]);
    EXPECT_EQ(base.origins[i].byte_offset, edited.origins[i].byte_offset);
  }
}

TEST(EncoderTest, OriginsStrictlyIncreasingOnSample) {
  const auto seq = encode_text(testing::sample_corpus("ru"), russian_scheme());
  ASSERT_EQ(seq.origins.size(), seq.size());
  for (std::size_t i = 1; i < seq.origins.size(); ++i)
    EXPECT_LT(seq.origins[i - 1].byte_offset, seq.origins[i].byte_offset);
}

TEST(EncoderTest, EpigraphsAndPlaceholdersAreNotEncoded) {
  const auto c = testing::sample_corpus("ru");
  const auto seq = encode_text(c, russian_scheme());
  for (const auto& l : seq.lines) EXPECT_NE(l.stanza, 0);
  EncodeOptions all;
  all.filter = {true, true};
  EXPECT_GT(encode_text(c, russian_scheme(), all).size(), seq.size());
}

TEST(EncoderTest, VcStringRoundTrip) {
  const auto seq = from_vc_string("VCCV CV");
  EXPECT_EQ(to_vc_string(seq.view()), "VCCVCV");
  EXPECT_FALSE(seq.has_origins());
  EXPECT_THROW(from_vc_string("VXC"), DataError);
}

TEST(EncoderTest, OriginCsv) {
  const auto seq = encode_line("да");
  std::ostringstream os;
  write_origin_csv(os, seq);
  EXPECT_EQ(os.str(),
            "index,symbol,part,stanza,line,column,byte_offset\n"
            "0,C,1,1,1,0,9\n"
            "1,V,1,1,1,1,11\n");
}

TEST(EncoderTest, BlockSegmentation) {
  const auto a = segment_blocks(107168, 10000, false);
  EXPECT_EQ(a.blocks.size(), 10u);
  EXPECT_FALSE(a.includes_partial_tail);
  const auto b = segment_blocks(107168, 10000, true);
  ASSERT_EQ(b.blocks.size(), 11u);
  EXPECT_EQ(b.blocks.back().size(), 7168u);
  EXPECT_TRUE(b.includes_partial_tail);
  EXPECT_EQ(segment_blocks(123327, 10000, false).blocks.size(), 12u);
  EXPECT_TRUE(segment_blocks(9999, 10000, false).blocks.empty());
  EXPECT_EQ(segment_blocks(9999, 10000, true, 10000).blocks.size(), 0u);
  EXPECT_THROW(segment_blocks(10, 0, false), DataError);
}

TEST(EncoderTest, BlocksAreContiguous) {
  const auto s = segment_blocks(25, 7, true);
  std::size_t expected = 0;
  for (const auto& b : s.blocks) {
    EXPECT_EQ(b.start, expected);
    expected = b.end;
  }
  EXPECT_EQ(expected, 25u);
}

}  // namespace
}  // namespace vcmarkov
