#include "prl/eval.hpp"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prl/errors.hpp"

namespace prl {
namespace {

TEST(PassAtKTest, MatchesSubsetEnumeration) {
  for (int n = 1; n <= 10; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        EXPECT_NEAR(pass_at_k(n, c, k), oracle::pass_at_k_enumerate(n, c, k), 1e-12)
            << n << " " << c << " " << k;
      }
    }
  }
}

TEST(PassAtKTest, EdgeCasesAndErrors) {
  EXPECT_DOUBLE_EQ(pass_at_k(200, 0, 80), 0.0);
  EXPECT_DOUBLE_EQ(pass_at_k(200, 200, 1), 1.0);
  EXPECT_DOUBLE_EQ(pass_at_k(200, 121, 80), 1.0);
  EXPECT_NEAR(pass_at_k(200, 10, 1), 0.05, 1e-12);
  EXPECT_THROW(pass_at_k(5, 6, 1), InvalidArgs);
  EXPECT_THROW(pass_at_k(5, 2, 0), InvalidArgs);
  EXPECT_THROW(pass_at_k(5, 2, 6), InvalidArgs);
  EXPECT_THROW(pass_at_k(5, -1, 1), InvalidArgs);
}

TEST(BucketTest, LengthBoundaries) {
  EXPECT_EQ(bucket_by_length(49), Difficulty::kEasy);
  EXPECT_EQ(bucket_by_length(50), Difficulty::kMedium);
  EXPECT_EQ(bucket_by_length(100), Difficulty::kMedium);
  EXPECT_EQ(bucket_by_length(101), Difficulty::kHard);
  Problem p;
  p.reference_code = std::string(49, 'x') + "\n";
  EXPECT_EQ(bucket_difficulty(p), Difficulty::kEasy);
  EXPECT_EQ(to_string(Difficulty::kHard), "HRD");
}

TEST(ReportTest, AggregatesByBucket) {
  Problem easy, hard;
  easy.id = 1;
  easy.reference_code = "x\n";
  hard.id = 2;
  hard.reference_code = std::string(150, 'y') + "\n";
  const auto r = summarize({&easy, &hard}, {4, 4}, {4, 0}, {1, 2});
  const auto e = Difficulty::kEasy, m = Difficulty::kMedium;
  EXPECT_DOUBLE_EQ(r.aggregate(1, &e), 1.0);
  EXPECT_DOUBLE_EQ(r.aggregate(1), 0.5);
  EXPECT_TRUE(std::isnan(r.aggregate(1, &m)));
  EXPECT_THROW(r.aggregate(3), InvalidArgs);
  EXPECT_EQ(r.bucket_size(Difficulty::kHard), 1u);
  const auto table = r.table();
  EXPECT_NE(table.find("pass@2"), std::string::npos);
  EXPECT_NE(table.find("EZY(1)"), std::string::npos);
  EXPECT_NE(table.find("50.0"), std::string::npos);
  const auto jsonl = r.to_jsonl();
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 2);
  EXPECT_THROW(summarize({&easy}, {4}, {4}, {5}), InvalidArgs);
}

SegmentRewardTrace trace(std::vector<double> rewards) {
  SegmentRewardTrace t;
  t.rewards = std::move(rewards);
  for (std::size_t i = 0; i < t.rewards.size(); ++i) t.positions.push_back(i);
  t.length = t.rewards.size();
  return t;
}

TEST(SelectionTest, RulesAndTies) {
  const auto a = trace({0.5, 0.5});
  const auto b = trace({1.0, -0.2});
  EXPECT_DOUBLE_EQ(selection_score(a, SelectionScore::kSum), 1.0);
  EXPECT_DOUBLE_EQ(selection_score(b, SelectionScore::kMin), -0.2);
  EXPECT_DOUBLE_EQ(selection_score(b, SelectionScore::kMean), 0.4);
  EXPECT_DOUBLE_EQ(selection_score(trace({}), SelectionScore::kMin), 0.0);
  EXPECT_EQ(select_best({b, a}, SelectionScore::kSum), 1u);
  EXPECT_EQ(select_best({b, a}, SelectionScore::kMin), 1u);
  EXPECT_EQ(select_best({a, a, b}, SelectionScore::kSum), 0u);
  EXPECT_THROW(select_best({}, SelectionScore::kSum), InvalidArgs);
  EXPECT_EQ(parse_selection_score("mean"), SelectionScore::kMean);
  EXPECT_THROW(parse_selection_score("max"), InvalidArgs);
}

TEST(ErrorDistributionTest, HistogramAndDistance) {
  const auto h = error_distribution(
      {VerdictStatus::kAllPassed, VerdictStatus::kTestFailed,
       VerdictStatus::kTestFailed, VerdictStatus::kCompileError,
       VerdictStatus::kTimeout});
  EXPECT_EQ(h.passed, 1u);
  EXPECT_EQ(h.errors(), 4u);
  const auto f = h.fractions();
  EXPECT_DOUBLE_EQ(f[0], 0.25);  // compile_error
  EXPECT_DOUBLE_EQ(f[2], 0.5);   // test_failed
  const auto g = error_distribution({VerdictStatus::kRuntimeError});
  EXPECT_DOUBLE_EQ(total_variation(h, g), 1.0);
  EXPECT_DOUBLE_EQ(total_variation(h, h), 0.0);
  EXPECT_NE(h.to_json().find("\"test_failed\""), std::string::npos);
}

TEST(EvaluatePolicyTest, ReferencePolicyPassesEverything) {
  const auto env = rl::ToyEnvironment::standard();
  std::vector<rl::Demonstration> demos;
  for (std::size_t i = 0; i < env.task_count(); ++i) {
    demos.push_back({i, env.reference_tokens(i), 1.0});
  }
  const auto policy = rl::imitation_policy(env, demos, 3, 1.2, 1e-6);
  Sandbox::Options so;
  so.cache_verdicts = true;
  Sandbox sandbox(so);
  ResourceLimits lim;
  lim.wall = std::chrono::milliseconds(1000);
  std::vector<std::size_t> tasks(env.task_count());
  std::iota(tasks.begin(), tasks.end(), 0);
  const auto r = evaluate_policy(policy, env, tasks, 5, {1, 5}, rl::DecodeConfig{},
                                 sandbox, lim, 3);
  EXPECT_DOUBLE_EQ(r.aggregate(1), 1.0);
  EXPECT_EQ(r.problems.size(), env.task_count());

  RewardModel prm(RewardKind::kPrm, 0);
  const auto source = rl::prm_source(prm);
  const auto pick = rejection_sample(policy, *source, env, 0, 4, rl::DecodeConfig{}, 1);
  EXPECT_EQ(pick.candidates.size(), 4u);
  EXPECT_EQ(pick.traces.size(), 4u);
  EXPECT_LT(pick.chosen, 4u);
  const auto study = rejection_study(policy, *source, env, sandbox, lim, 2, 1,
                                     rl::DecodeConfig{}, 1);
  EXPECT_EQ(study.trials, env.task_count());
  EXPECT_DOUBLE_EQ(study.uniform_pass_rate, 1.0);
}

}  // namespace
}  // namespace prl
