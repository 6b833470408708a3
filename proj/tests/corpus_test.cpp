#include "prl/corpus.hpp"

#include <random>

#include <gtest/gtest.h>

#include "prl/errors.hpp"

namespace prl {
namespace {

constexpr const char* kTwoRecords =
    R"({"task_id": 3, "text": "Add.", "code": "def f(a, b):\r\n  return a + b", "test_list": ["assert f(1, 2) == 3", "assert f(0, 0) == 0"]})"
    "\n"
    R"({"task_id": 700, "text": "Neg.", "code": "def g(x):\n\treturn -x\n\n\n", "test_list": ["assert g(1) == -1"]})"
    "\n";

TEST(NormalizeTest, RewritesIndentationToFourSpaces) {
  EXPECT_EQ(normalize("def f():\n  if x:\n      y = 1\n  return 2\n\n"),
            "def f():\n    if x:\n        y = 1\n    return 2\n");
  EXPECT_EQ(normalize("def f():\n\treturn 1   "), "def f():\n    return 1\n");
}

TEST(NormalizeTest, MixedIndentationThrows) {
  EXPECT_THROW(normalize("def f():\n \treturn 1\n"),
               MixedIndentationUnresolvable);
}

TEST(NormalizeTest, IdempotentOnRandomPrograms) {
  std::mt19937_64 rng(11);
  const char* stmts[] = {"x = 1", "y = x + 2", "return y", "# note", ""};
  for (int trial = 0; trial < 200; ++trial) {
    std::string src = "def f(x):\n";
    int depth = 1;
    const int lines = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < lines; ++i) {
      const int unit = 1 + static_cast<int>(rng() % 4);
      if (rng() % 3 == 0 && depth < 4) {
        src += std::string(depth * unit, ' ') + "if x:\n";
        ++depth;
      }
      src += std::string(depth * unit, ' ') + stmts[rng() % 5] + "\n";
      if (rng() % 4 == 0 && depth > 1) --depth;
    }
    std::string once;
    try {
      once = normalize(src);
    } catch (const MixedIndentationUnresolvable&) {
      continue;
    }
    EXPECT_EQ(normalize(once), once) << src;
    ASSERT_FALSE(once.empty());
    EXPECT_EQ(once.back(), '\n');
  }
}

TEST(CodeLinesTest, PrefixAndJoin) {
  const auto lines = split_lines("a\nb\nc\n");
  ASSERT_EQ(lines.line_count(), 3u);
  EXPECT_EQ(lines.joined(), "a\nb\nc");
  EXPECT_EQ(lines.prefix(2), "a\nb\n");
}

TEST(IngestTest, ReadsRecordsAndRendersPrompt) {
  const auto corpus = ingest_text(kTwoRecords);
  ASSERT_EQ(corpus.size(), 2u);
  const auto* p = corpus.find(3);
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->reference_code, "def f(a, b):\n    return a + b\n");
  EXPECT_EQ(p->tests.size(), 2u);
  EXPECT_NE(p->prompt.find("Add."), std::string::npos);
  EXPECT_NE(p->prompt.find("assert f(1, 2) == 3"), std::string::npos);
  EXPECT_EQ(corpus.find(700)->reference_code, "def g(x):\n    return -x\n");
}

TEST(IngestTest, ReportsRecordIndexOnBadJson) {
  const std::string text = std::string(kTwoRecords) + "{not json}\n";
  try {
    ingest_text(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.record_index(), 2u);
  }
}

TEST(IngestTest, MissingFieldAndDuplicates) {
  EXPECT_THROW(ingest_text(R"({"task_id": 1, "text": "x", "code": "y = 1"})"),
               ParseError);
  const std::string one =
      R"({"task_id": 1, "text": "x", "code": "y = 1", "test_list": ["assert y == 1"]})";
  EXPECT_THROW(ingest_text(one + "\n" + one + "\n"), DuplicateId);
}

TEST(SplitMapTest, DefaultPartition) {
  const auto map = SplitMap::mbpp_default();
  EXPECT_EQ(map.lookup(1), Split::kTest);
  EXPECT_EQ(map.lookup(100), Split::kTest);
  EXPECT_EQ(map.lookup(101), Split::kRlTrain);
  EXPECT_EQ(map.lookup(550), Split::kValidation);
  EXPECT_EQ(map.lookup(974), Split::kSftSeed);
  EXPECT_THROW(map.lookup(975), UnmappedId);
  EXPECT_FALSE(map.find(0).has_value());
}

TEST(SplitMapTest, ParseRanges) {
  const auto map = SplitMap::parse("1-5:test,6-9:rl_train");
  EXPECT_EQ(map.lookup(7), Split::kRlTrain);
  EXPECT_THROW(SplitMap::parse("1-x:test"), ConfigError);
}

TEST(CorpusTest, SerializeRoundTrip) {
  const auto corpus = assign_splits(ingest_text(kTwoRecords));
  const auto again = ingest_text(serialize(corpus));
  ASSERT_EQ(again.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& a = corpus.problems()[i];
    const auto& b = again.problems()[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.reference_code, b.reference_code);
    EXPECT_EQ(a.tests, b.tests);
    EXPECT_EQ(a.split, b.split);
    EXPECT_EQ(a.prompt, b.prompt);
  }
  EXPECT_EQ(serialize(again), serialize(corpus));
  EXPECT_EQ(corpus.filter(Split::kSftSeed).size(), 1u);
}

}  // namespace
}  // namespace prl
