#include "prl/kernels.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prl/features.hpp"

namespace prl::kernels {
namespace {

constexpr std::uint32_t kSmallDim = 64;

struct Instance {
  std::vector<FeatureVector> xs;
  std::vector<double> y;
  std::vector<std::size_t> rows;
  std::vector<double> w;
  double b = 0.0;
  std::vector<std::size_t> coords;  // active weight indices
};

Instance random_instance(std::mt19937_64& rng) {
  Instance in;
  const std::size_t n = 2 + rng() % 7;
  std::normal_distribution<double> g(0.0, 1.0);
  std::set<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i) {
    in.xs.push_back(oracle::random_features(rng, kSmallDim, 1 + rng() % 5));
    in.y.push_back(static_cast<double>(rng() % 2));
    in.rows.push_back(i);
    for (auto k : in.xs.back().index) active.insert(k);
  }
  in.w.assign(kFeatureDim, 0.0);
  for (std::uint32_t k = 0; k < kSmallDim; ++k) in.w[k] = g(rng);
  in.b = g(rng);
  in.coords.assign(active.begin(), active.end());
  return in;
}

TEST(FeaturesTest, NormalizedSortedAndDeterministic) {
  const auto a = featurize("Add two numbers.", "def f(a, b):\n    return a + b");
  const auto b = featurize("Add two numbers.", "def f(a, b):\n    return a + b");
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.value, b.value);
  double sq = 0.0;
  for (double v : a.value) sq += v * v;
  EXPECT_NEAR(sq, 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(a.index.begin(), a.index.end()));
  EXPECT_EQ(std::set<std::uint32_t>(a.index.begin(), a.index.end()).size(), a.nnz());
  for (auto i : a.index) EXPECT_LT(i, kFeatureDim);
  const auto c = featurize("Add two numbers.", "def f(a, b):\n    return a - b");
  EXPECT_NE(a.index, c.index);
}

TEST(FeaturesTest, DotAndDense) {
  std::mt19937_64 rng(1);
  const auto x = oracle::random_features(rng, 100, 6);
  std::vector<double> w(kFeatureDim, 0.0);
  for (std::size_t i = 0; i < 100; ++i) w[i] = 0.01 * static_cast<double>(i);
  const auto d = x.dense();
  const double ref = std::inner_product(d.begin(), d.end(), w.begin(), 0.0);
  EXPECT_NEAR(x.dot(w.data()), ref, 1e-12);
  EXPECT_EQ(x.at(x.index[0]), x.value[0]);
}

TEST(KernelsTest, SerialAndOpenMpAgreeBitwise) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_instance(rng);
    std::vector<double> g1(kFeatureDim), g2(kFeatureDim);
    double b1 = 0, b2 = 0;
    const double l1 = logistic_loss_grad(in.xs, in.y, in.rows, in.w.data(), in.b,
                                         g1.data(), &b1, Backend::kSerial);
    const double l2 = logistic_loss_grad(in.xs, in.y, in.rows, in.w.data(), in.b,
                                         g2.data(), &b2, Backend::kOpenMP);
    EXPECT_EQ(l1, l2);
    EXPECT_EQ(b1, b2);
    EXPECT_EQ(g1, g2);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i + 1 < in.xs.size(); ++i) pairs.emplace_back(i, i + 1);
    std::vector<std::size_t> prow(pairs.size());
    std::iota(prow.begin(), prow.end(), 0);
    const double p1 = pairwise_loss_grad(in.xs, pairs, prow, in.w.data(),
                                         g1.data(), Backend::kSerial);
    const double p2 = pairwise_loss_grad(in.xs, pairs, prow, in.w.data(),
                                         g2.data(), Backend::kOpenMP);
    EXPECT_EQ(p1, p2);
    EXPECT_EQ(g1, g2);

    std::vector<double> s1(in.rows.size()), s2(in.rows.size());
    score_batch(in.xs, in.rows, in.w.data(), in.b, s1.data(), Backend::kSerial);
    score_batch(in.xs, in.rows, in.w.data(), in.b, s2.data(), Backend::kOpenMP);
    EXPECT_EQ(s1, s2);
  }
  const std::vector<std::string> prompts = {"p", "q", "r"};
  const std::vector<std::string> prefixes = {"a = 1", "b = 2", "c = 3"};
  const auto f1 = featurize_batch(prompts, prefixes, Backend::kSerial);
  const auto f2 = featurize_batch(prompts, prefixes, Backend::kOpenMP);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(f1[i].index, f2[i].index);
    EXPECT_EQ(f1[i].value, f2[i].value);
  }
}

TEST(KernelsTest, LogisticGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto in = random_instance(rng);
    std::vector<double> g(kFeatureDim), scratch(kFeatureDim);
    double gb = 0, sb = 0;
    logistic_loss_grad(in.xs, in.y, in.rows, in.w.data(), in.b, g.data(), &gb,
                       Backend::kSerial);
    const auto loss = [&] {
      return logistic_loss_grad(in.xs, in.y, in.rows, in.w.data(), in.b,
                                scratch.data(), &sb, Backend::kSerial);
    };
    auto fd = oracle::finite_difference(in.w, in.coords, loss);
    std::vector<double> analytic;
    for (auto i : in.coords) analytic.push_back(g[i]);
    std::vector<double> bias{in.b};
    const auto fdb = oracle::finite_difference(bias, {0}, [&] {
      return logistic_loss_grad(in.xs, in.y, in.rows, in.w.data(), bias[0],
                                scratch.data(), &sb, Backend::kSerial);
    });
    fd.push_back(fdb[0]);
    analytic.push_back(gb);
    EXPECT_LT(oracle::relative_error(analytic, fd), 1e-4);
  }
}

TEST(KernelsTest, LogisticLossValue) {
  FeatureVector x;
  x.index = {0};
  x.value = {1.0};
  std::vector<double> w(kFeatureDim, 0.0), g(kFeatureDim);
  w[0] = 2.0;
  double gb = 0;
  const double loss =
      logistic_loss_grad({x}, {1.0}, {0}, w.data(), -1.0, g.data(), &gb, Backend::kSerial);
  EXPECT_NEAR(loss, std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(gb, 1.0 / (1.0 + std::exp(-1.0)) - 1.0, 1e-12);
}

TEST(KernelsTest, PairwiseGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto in = random_instance(rng);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < in.xs.size(); ++i) {
      for (std::size_t j = 0; j < in.xs.size(); ++j) {
        if (i != j && rng() % 2) pairs.emplace_back(i, j);
      }
    }
    if (pairs.empty()) pairs.emplace_back(0, 1);
    std::vector<std::size_t> rows(pairs.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> g(kFeatureDim), scratch(kFeatureDim);
    pairwise_loss_grad(in.xs, pairs, rows, in.w.data(), g.data(), Backend::kSerial);
    const auto fd = oracle::finite_difference(in.w, in.coords, [&] {
      return pairwise_loss_grad(in.xs, pairs, rows, in.w.data(), scratch.data(),
                                Backend::kSerial);
    });
    std::vector<double> analytic;
    for (auto i : in.coords) analytic.push_back(g[i]);
    EXPECT_LT(oracle::relative_error(analytic, fd), 1e-4);
  }
}

TEST(KernelsTest, GaeMatchesDoubleSum) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> rewards, values;
  std::vector<std::size_t> offsets{0};
  std::vector<std::vector<double>> expected;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = rng() % 11;
    std::vector<double> r(n), v(n + 1);
    for (auto& x : r) x = g(rng);
    for (std::size_t t = 0; t < n; ++t) v[t] = g(rng);
    v[n] = 0.0;
    expected.push_back(oracle::gae_double_sum(r, v, 0.97, 0.9));
    rewards.insert(rewards.end(), r.begin(), r.end());
    values.insert(values.end(), v.begin(), v.end());
    offsets.push_back(rewards.size());
  }
  for (const auto backend : {Backend::kSerial, Backend::kOpenMP}) {
    std::vector<double> adv(rewards.size());
    gae_batch(rewards, values, offsets, 0.97, 0.9, adv.data(), backend);
    for (std::size_t i = 0; i < expected.size(); ++i) {
      for (std::size_t t = 0; t < expected[i].size(); ++t) {
        EXPECT_NEAR(adv[offsets[i] + t], expected[i][t], 1e-10);
      }
    }
  }
}

}  // namespace
}  // namespace prl::kernels
