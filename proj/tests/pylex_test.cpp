#include "prl/pylex.hpp"

#include <gtest/gtest.h>

namespace prl::pylex {
namespace {

TEST(PylexTest, SplitsOperatorsGreedily) {
  const auto toks = lex_line("x **= y // 2");
  ASSERT_EQ(toks.size(), 5u);
  EXPECT_TRUE(toks[1].is_op("**="));
  EXPECT_TRUE(toks[3].is_op("//"));
  EXPECT_EQ(toks[4].kind, Kind::kNumber);
}

TEST(PylexTest, StringsAndComments) {
  const auto toks = lex_line("s = 'a # b' + rb\"x\"  # note");
  ASSERT_EQ(toks.size(), 6u);
  EXPECT_EQ(toks[2].kind, Kind::kString);
  EXPECT_EQ(toks[2].text, "'a # b'");
  EXPECT_EQ(toks[4].kind, Kind::kString);
  EXPECT_EQ(toks[5].kind, Kind::kComment);
}

TEST(PylexTest, UnterminatedStringRunsToEnd) {
  const auto toks = lex_line("x = 'abc");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[2].text, "'abc");
  EXPECT_EQ(toks[2].end, 8u);
}

TEST(PylexTest, OffsetsCoverText) {
  const std::string line = "    return a[i] != b";
  for (const auto& t : lex_line(line)) {
    EXPECT_EQ(line.substr(t.begin, t.end - t.begin), t.text);
  }
}

TEST(PylexTest, Classifiers) {
  EXPECT_TRUE(is_keyword("return"));
  EXPECT_FALSE(is_keyword("returns"));
  EXPECT_TRUE(is_comparison_op("<="));
  EXPECT_FALSE(is_comparison_op("="));
  EXPECT_TRUE(is_augmented_assign("+="));
  EXPECT_FALSE(is_augmented_assign("=="));
  EXPECT_EQ(indent_of("\t  x"), "\t  ");
  EXPECT_TRUE(is_integer_literal(lex_line("42")[0]));
  EXPECT_FALSE(is_integer_literal(lex_line("4.2")[0]));
}

}  // namespace
}  // namespace prl::pylex
