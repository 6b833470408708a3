#include "prl/dataset.hpp"

#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "prl/errors.hpp"
#include "prl/util.hpp"

namespace prl {
namespace {

Problem make_problem(int id) {
  Problem p;
  p.id = id;
  p.description = "Add one (" + std::to_string(id) + ").";
  p.reference_code = "def f(x):\n    y = x + 1\n    return y\n";
  p.tests = {{"assert f(1) == 2"}, {"assert f(-1) == 0"}};
  p.prompt = render_prompt(kDefaultPromptTemplate, p.description, p.tests);
  return p;
}

TEST(DatasetTest, PositivePrefixesCoverEveryLine) {
  const auto p = make_problem(1);
  const auto s = build_positive_prefixes(p);
  ASSERT_EQ(s.size(), 3u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].prefix_lines.size(), i + 1);
    EXPECT_TRUE(s[i].positive());
    EXPECT_EQ(s[i].source, SampleSource::kReference);
    EXPECT_FALSE(s[i].verdict.has_value());
  }
  EXPECT_EQ(s[2].prefix(), "def f(x):\n    y = x + 1\n    return y");
}

TEST(DatasetTest, EditSamplesFollowVerdicts) {
  const auto p = make_problem(1);
  LineEdit e;
  e.problem_id = 1;
  e.line_index = 1;
  e.original_line = "    y = x + 1";
  e.edited_line = "    y = x - 1";
  ExecutionVerdict bad;
  bad.status = VerdictStatus::kTestFailed;
  const auto s = build_edit_samples(p, {e}, {bad});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_FALSE(s[0].positive());
  EXPECT_EQ(s[0].prefix_lines.size(), 2u);
  EXPECT_EQ(s[0].last_line(), "    y = x - 1");
  EXPECT_EQ(*s[0].verdict, VerdictStatus::kTestFailed);
  EXPECT_EQ(reconstruct_program(s[0], p),
            "def f(x):\n    y = x - 1\n    return y\n");
  EXPECT_THROW(build_edit_samples(p, {e}, {}), AlignmentError);
  e.problem_id = 2;
  EXPECT_THROW(build_edit_samples(p, {e}, {bad}), InvalidArgs);
}

TEST(DatasetTest, DeduplicateKeepsFirst) {
  auto s = build_positive_prefixes(make_problem(1));
  auto dup = s[0];
  dup.label = Label::kNegative;
  s.push_back(dup);
  const auto d = deduplicate(s);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_TRUE(d[0].positive());
}

TEST(DatasetTest, JsonlRoundTrip) {
  auto s = build_positive_prefixes(make_problem(1));
  s[1].label = Label::kNegative;
  s[1].source = SampleSource::kMutate;
  s[1].verdict = VerdictStatus::kRuntimeError;
  const auto text = to_jsonl(s);
  const auto back = parse_samples(text);
  ASSERT_EQ(back.size(), s.size());
  EXPECT_EQ(to_jsonl(back), text);
  EXPECT_EQ(*back[1].verdict, VerdictStatus::kRuntimeError);
  EXPECT_THROW(parse_samples("{\"problem_id\": 1}\n"), ParseError);
}

TEST(DatasetSplitMapTest, DefaultAndParse) {
  const auto m = DatasetSplitMap::seed_default();
  EXPECT_EQ(m.lookup(601), DatasetSplitName::kTrain);
  EXPECT_EQ(m.lookup(901), DatasetSplitName::kValidation);
  EXPECT_EQ(m.lookup(974), DatasetSplitName::kTest);
  EXPECT_THROW(m.lookup(600), UnmappedId);
  const auto p = DatasetSplitMap::parse("1-2:train,3-3:test");
  EXPECT_EQ(p.lookup(3), DatasetSplitName::kTest);
  EXPECT_EQ(DatasetSplitMap::single(DatasetSplitName::kValidation).lookup(12345),
            DatasetSplitName::kValidation);
}

TEST(DatasetSplitsTest, SplitsAreDisjointAndSeeded) {
  std::vector<StepSample> all;
  for (int id : {1, 2, 3}) {
    for (auto& s : build_positive_prefixes(make_problem(id))) {
      s.prefix_lines.back() += "  # " + std::to_string(id);
      all.push_back(s);
    }
  }
  const auto map = DatasetSplitMap::parse("1-1:train,2-2:validation,3-3:test");
  const auto a = make_splits(all, map, 7);
  const auto b = make_splits(all, map, 7);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(to_jsonl(a[i].samples), to_jsonl(b[i].samples));
    EXPECT_EQ(a[i].samples.size(), 3u);
    EXPECT_EQ(a[i].positive_count, 3u);
    for (const auto& s : a[i].samples) EXPECT_EQ(s.problem_id, static_cast<int>(i) + 1);
  }

  const auto dir = std::filesystem::temp_directory_path() / "prl_dataset_test";
  std::filesystem::remove_all(dir);
  emit_splits(all, map, 7, dir);
  const auto first = read_file(dir / "train.jsonl") + read_file(dir / "stats.json");
  emit_splits(all, map, 7, dir);
  EXPECT_EQ(read_file(dir / "train.jsonl") + read_file(dir / "stats.json"), first);
  EXPECT_EQ(load_samples(dir / "test.jsonl").size(), 3u);
  std::filesystem::remove_all(dir);
}

TEST(BuildDatasetTest, ShapeAndLabels) {
  std::vector<Problem> problems;
  for (int id : {1, 2}) problems.push_back(make_problem(id));
  problems[1].reference_code =
      "def f(x):\n    if x > 0:\n        return x + 1\n    return x + 1\n";
  Sandbox::Options so;
  so.cache_verdicts = true;
  Sandbox sandbox(so);
  ResourceLimits lim;
  lim.wall = std::chrono::milliseconds(1000);
  DatasetStats st;
  const auto samples = build_dataset(Corpus(problems), MutationRuleSet::all(7),
                                     sandbox, lim, DatasetOptions{}, &st);
  EXPECT_EQ(st.reference_positives, 3u + 4u);
  std::size_t mutate = 0;
  for (const auto& s : samples) {
    if (s.source == SampleSource::kReference) continue;
    ASSERT_TRUE(s.verdict.has_value());
    EXPECT_EQ(s.positive(), *s.verdict == VerdictStatus::kAllPassed);
    mutate += s.source == SampleSource::kMutate;
  }
  EXPECT_EQ(mutate, st.mutate_positive + st.mutate_negative);
  EXPECT_GE(st.mutate_negative_fraction(), 0.5);
  const auto again = build_dataset(Corpus(problems), MutationRuleSet::all(7),
                                   sandbox, lim, DatasetOptions{});
  EXPECT_EQ(to_jsonl(again), to_jsonl(samples));
}

}  // namespace
}  // namespace prl
