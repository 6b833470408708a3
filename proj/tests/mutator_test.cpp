#include "prl/mutator.hpp"

#include <algorithm>

#include <gtest/gtest.h>

#include "prl/errors.hpp"
#include "prl/pylex.hpp"

namespace prl {
namespace {

const CodeLines kCode = split_lines(
    "def f(a, b):\n"
    "    if a < b:\n"
    "        return a + b\n"
    "    x += 1\n"
    "    return 0\n");

bool has_edit(const std::vector<LineEdit>& edits, const std::string& rule,
              const std::string& edited) {
  return std::any_of(edits.begin(), edits.end(), [&](const LineEdit& e) {
    return e.provenance == "rule:" + rule && e.edited_line == edited;
  });
}

MutationRuleSet only(const std::string& rule) {
  MutationRuleSet r;
  r.enabled_rules = {rule};
  r.rng_seed = 7;
  return r;
}

TEST(MutatorTest, MutationRulesFire) {
  EXPECT_TRUE(has_edit(mutate_line(kCode.lines[2], kCode, only("arith_swap")),
                       "arith_swap", "        return a - b"));
  EXPECT_TRUE(has_edit(
      mutate_line(kCode.lines[1], kCode, only("comparison_flip")),
      "comparison_flip", "    if a <= b:"));
  const auto bound =
      mutate_line(kCode.lines[4], kCode, only("boundary_constant"));
  EXPECT_TRUE(has_edit(bound, "boundary_constant", "    return -1") ||
              has_edit(bound, "boundary_constant", "    return 1"));
}

TEST(MutatorTest, EditsPerLineAreCapped) {
  auto rules = MutationRuleSet::all(7);
  rules.max_edits_per_line = 2;
  for (const auto& line : kCode.lines) {
    EXPECT_LE(mutate_line(line, kCode, rules).size(), 2u) << line;
  }
}

TEST(MutatorTest, RefactorRulesFire) {
  const auto rules = MutationRuleSet::all(7);
  EXPECT_TRUE(has_edit(refactor_line(kCode.lines[2], kCode, rules),
                       "commutative_swap", "        return b + a"));
  EXPECT_TRUE(has_edit(refactor_line(kCode.lines[3], kCode, rules),
                       "augmented_expansion", "    x = x + 1"));
  EXPECT_TRUE(has_edit(refactor_line(kCode.lines[1], kCode, rules),
                       "comparison_negation", "    if not a >= b:"));
}

TEST(MutatorTest, EditsChangeTheLineAndKeepIndent) {
  const auto rules = MutationRuleSet::all(3);
  for (const auto& line : kCode.lines) {
    for (int mode = 0; mode < 2; ++mode) {
      std::vector<LineEdit> edits;
      try {
        edits = mode ? refactor_line(line, kCode, rules)
                     : mutate_line(line, kCode, rules);
      } catch (const NoApplicableRule&) {
        continue;
      }
      EXPECT_LE(edits.size(), rules.max_edits_per_line);
      for (const auto& e : edits) {
        EXPECT_NE(e.edited_line, line);
        EXPECT_EQ(pylex::indent_of(e.edited_line), pylex::indent_of(line));
        EXPECT_EQ(e.original_line, line);
        EXPECT_EQ(e.mode, mode ? EditMode::kRefactor : EditMode::kMutate);
      }
    }
  }
}

TEST(MutatorTest, DeterministicInSeed) {
  const auto a = mutate_line(kCode.lines[2], kCode, MutationRuleSet::all(5));
  const auto b = mutate_line(kCode.lines[2], kCode, MutationRuleSet::all(5));
  EXPECT_EQ(a, b);
}

TEST(MutatorTest, DisabledRulesAndSkippedLines) {
  MutationRuleSet only;
  only.enabled_rules = {"arith_swap"};
  const auto edits = mutate_line(kCode.lines[2], kCode, only);
  ASSERT_EQ(edits.size(), 1u);
  EXPECT_EQ(edits[0].provenance, "rule:arith_swap");
  EXPECT_THROW(mutate_line(kCode.lines[1], kCode, only), NoApplicableRule);
  EXPECT_TRUE(is_skipped_line("   "));
  EXPECT_TRUE(is_skipped_line("# hi"));
  EXPECT_TRUE(is_skipped_line("import os"));
  EXPECT_TRUE(is_skipped_line("from x import y"));
  EXPECT_FALSE(is_skipped_line("important = 1"));
}

TEST(MutatorTest, ApplyEditReplacesOneLine) {
  Problem p;
  p.id = 4;
  p.reference_code = kCode.joined() + "\n";
  const auto edits = edit_problem(p, MutationRuleSet::all(7), true, true);
  ASSERT_FALSE(edits.empty());
  for (const auto& e : edits) {
    EXPECT_EQ(e.problem_id, 4);
    ASSERT_LT(e.line_index, kCode.line_count());
    EXPECT_EQ(kCode.lines[e.line_index], e.original_line);
    const auto program = split_lines(apply_edit(kCode, e));
    ASSERT_EQ(program.line_count(), kCode.line_count());
    for (std::size_t i = 0; i < kCode.line_count(); ++i) {
      EXPECT_EQ(program.lines[i],
                i == e.line_index ? e.edited_line : kCode.lines[i]);
    }
  }
}

TEST(CleanTeacherLineTest, ReindentsFirstLine) {
  EXPECT_EQ(clean_teacher_line("\n  return a - b\nmore", "        return a + b"),
            "        return a - b");
  EXPECT_THROW(clean_teacher_line(" \n\n", "x = 1"), MalformedTeacherResponse);
  EXPECT_THROW(clean_teacher_line("x=1", "    x = 1"), EditIdenticalToOriginal);
}

}  // namespace
}  // namespace prl
