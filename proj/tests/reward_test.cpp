#include "prl/reward.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prl/errors.hpp"

namespace prl {
namespace {

LabeledFeatures separable(std::mt19937_64& rng, std::size_t n) {
  LabeledFeatures d;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    const std::string text = pos ? "return a + b" : "return a - b";
    d.x.push_back(featurize("Add.", text + "  # " + std::to_string(rng() % 50)));
    d.y.push_back(pos ? 1.0 : 0.0);
  }
  return d;
}

TEST(MetricsTest, Counts) {
  const auto m = classification_metrics({0.9, 0.2, 0.6, 0.4}, {1, 0, 0, 1});
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.negative_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.positive_accuracy, 0.5);
  EXPECT_EQ(m.count, 4u);
}

TEST(RewardModelTest, LogitGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (const std::size_t hidden : {0u, 3u}) {
    RewardModel m(RewardKind::kPrm, hidden);
    std::normal_distribution<double> g(0.0, 0.3);
    for (auto& p : m.params()) p = g(rng);
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = oracle::random_features(rng, 200, 4);
      std::vector<double> grad(m.params().size(), 0.0);
      m.accumulate_logit_grad(x, 1.0, grad.data());
      std::vector<std::size_t> coords;
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (grad[i] != 0.0) coords.push_back(i);
      }
      ASSERT_FALSE(coords.empty());
      const auto fd = oracle::finite_difference(m.params(), coords,
                                                [&] { return m.logit(x); });
      std::vector<double> analytic;
      for (auto i : coords) analytic.push_back(grad[i]);
      EXPECT_LT(oracle::relative_error(analytic, fd), 1e-4);
    }
  }
}

TEST(RewardModelTest, RewardIsTwoPMinusOne) {
  RewardModel m(RewardKind::kPrm, 0);
  m.params().back() = 0.7;
  const auto x = featurize("p", "x = 1");
  EXPECT_NEAR(m.reward(x), 2.0 / (1.0 + std::exp(-0.7)) - 1.0, 1e-12);
  EXPECT_NEAR(m.reward(x), std::tanh(0.35), 1e-12);
}

TEST(RewardModelTest, SerializationIsExact) {
  std::mt19937_64 rng(7);
  RewardModel m(RewardKind::kOrmPreference, 2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& p : m.params()) p = g(rng);
  m.meta().epochs = 3;
  m.meta().config_hash = "abc";
  m.meta().loss_curve = {0.5, 0.25};
  const auto back = RewardModel::deserialize(m.serialize());
  EXPECT_EQ(back.kind(), RewardKind::kOrmPreference);
  EXPECT_EQ(back.hidden(), 2u);
  EXPECT_EQ(back.params(), m.params());
  EXPECT_EQ(back.meta().config_hash, "abc");
  EXPECT_EQ(back.serialize(), m.serialize());
  EXPECT_THROW(RewardModel::deserialize("garbage"), InvalidInput);
}

TEST(TrainTest, LearnsSeparableData) {
  std::mt19937_64 rng(8);
  const auto train = separable(rng, 80);
  const auto val = separable(rng, 40);
  TrainHyper h;
  h.epochs = 20;
  const auto r = train_classifier(RewardKind::kPrm, train, val, h);
  ASSERT_EQ(r.history.size(), 20u);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_GE(evaluate_classifier(r.model, val).accuracy, 0.95);
  const auto again = train_classifier(RewardKind::kPrm, train, val, h);
  EXPECT_EQ(again.model.params(), r.model.params());
}

TEST(TrainTest, SingleClassIsDegenerate) {
  std::mt19937_64 rng(9);
  auto d = separable(rng, 10);
  for (auto& y : d.y) y = 1.0;
  EXPECT_THROW(train_classifier(RewardKind::kPrm, d, d, TrainHyper{}), DegenerateData);
}

TEST(SegmentTest, PositionsAndPrefixes) {
  EXPECT_EQ(segment_end_positions("ab\ncd\n"), (std::vector<std::size_t>{2, 5}));
  EXPECT_EQ(segment_end_positions("ab\ncd"), (std::vector<std::size_t>{2, 4}));
  EXPECT_TRUE(segment_end_positions("").empty());
  EXPECT_EQ(cumulative_segments("ab\ncd"),
            (std::vector<std::string>{"ab", "ab\ncd"}));
  SegmentRewardTrace t;
  t.length = 5;
  t.positions = {1, 4};
  t.rewards = {0.5, -1.0};
  EXPECT_EQ(t.dense(), (std::vector<double>{0, 0.5, 0, 0, -1.0}));
}

TEST(SegmentTest, PrmAndOrmSupport) {
  RewardModel m(RewardKind::kPrm, 0);
  const std::string code = "def f(x):\n    y = x\n    return y\n";
  const auto prm = score_prm(m, "p", code);
  EXPECT_EQ(prm.positions, segment_end_positions(code));
  EXPECT_EQ(prm.rewards.size(), 3u);
  const auto orm = reward_orm_original(m, "p", code);
  EXPECT_EQ(orm.positions, (std::vector<std::size_t>{code.size() - 1}));
  EXPECT_THROW(reward_orm_original(m, "p", ""), InvalidInput);
}

TEST(PreferenceTest, PairsAndTraining) {
  std::vector<PreferenceGroup> groups;
  for (int i = 0; i < 20; ++i) {
    PreferenceGroup g;
    g.prompt = "Add " + std::to_string(i);
    g.snippets = {{"return a + b", 2.0}, {"return a - b", 0.0}, {"return a * b", 0.0}};
    groups.push_back(g);
  }
  const auto pairs = preference_pairs(groups);
  EXPECT_EQ(pairs.size(), 40u);
  TrainHyper h;
  h.epochs = 30;
  const auto r = train_orm_preference(groups, h);
  const auto good = reward_orm_preference(r.model, "Add 3", "return a + b");
  const auto bad = reward_orm_preference(r.model, "Add 3", "return a - b");
  EXPECT_GT(good.rewards[0], bad.rewards[0]);
  std::vector<PreferenceGroup> flat = {{"p", {{"a", 1.0}, {"b", 1.0}}}};
  EXPECT_THROW(train_orm_preference(flat, h), DegenerateData);
}

TEST(CompilerRewardTest, MapAndRank) {
  ExecutionVerdict v;
  EXPECT_DOUBLE_EQ(reward_orm_compiler(v), 1.0);
  v.status = VerdictStatus::kTestFailed;
  EXPECT_DOUBLE_EQ(reward_orm_compiler(v), -0.3);
  v.status = VerdictStatus::kRuntimeError;
  EXPECT_DOUBLE_EQ(reward_orm_compiler(v), -0.6);
  v.status = VerdictStatus::kCompileError;
  EXPECT_DOUBLE_EQ(reward_orm_compiler(v), -1.0);
  ExecutionVerdict a, b;
  a.passed_count = 2;
  a.status = VerdictStatus::kTestFailed;
  b.passed_count = 1;
  b.status = VerdictStatus::kTestFailed;
  EXPECT_GT(sandbox_rank(a), sandbox_rank(b));
  b.passed_count = 2;
  b.status = VerdictStatus::kRuntimeError;
  EXPECT_GT(sandbox_rank(a), sandbox_rank(b));
}

TEST(RewardKindTest, NamesRoundTrip) {
  for (const auto k : {RewardKind::kPrm, RewardKind::kOrmOriginal,
                       RewardKind::kOrmPreference, RewardKind::kOrmCompiler}) {
    EXPECT_EQ(parse_reward_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_reward_kind("nope"), InvalidInput);
}

}  // namespace
}  // namespace prl
