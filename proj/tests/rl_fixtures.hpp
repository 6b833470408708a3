#ifndef PRL_TESTS_RL_FIXTURES_HPP_
#define PRL_TESTS_RL_FIXTURES_HPP_

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "prl/rl.hpp"

namespace prl::oracle {

struct PpoInstance {
  rl::Policy policy;
  std::vector<rl::Trajectory> batch;
  double epsilon = 0.2;
};

// Random logit table, trajectories over its states (plus one state without a
// row), noisy behaviour log-probs and random advantages. Ratios are kept
// away from the clip boundaries so the surrogate is differentiable.
inline PpoInstance random_ppo_instance(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.7, 1.5);
  for (;;) {
    PpoInstance in;
    const std::size_t vocab = 3 + rng() % 4;
    in.policy = rl::Policy(vocab, 2, u(rng));
    const std::size_t states = 2 + rng() % 4;
    for (std::uint64_t k = 1; k <= states; ++k) {
      double* row = in.policy.row(k);
      for (std::size_t a = 0; a < vocab; ++a) row[a] = g(rng);
    }
    const std::size_t trajectories = 1 + rng() % 3;
    bool near_boundary = false;
    for (std::size_t i = 0; i < trajectories; ++i) {
      rl::Trajectory tr;
      const std::size_t n = 1 + rng() % 6;
      for (std::size_t t = 0; t < n; ++t) {
        const std::uint64_t key = rng() % 8 == 0 ? 999 : 1 + rng() % states;
        const int a = static_cast<int>(rng() % vocab);
        tr.states.push_back(key);
        tr.tokens.push_back(a);
        const double lp = in.policy.log_prob(key, a);
        tr.logp_old.push_back(lp + 0.3 * g(rng));
        tr.advantages.push_back(g(rng));
        const double rho = std::exp(lp - tr.logp_old.back());
        if (std::abs(rho - (1.0 - in.epsilon)) < 1e-3 ||
            std::abs(rho - (1.0 + in.epsilon)) < 1e-3) {
          near_boundary = true;
        }
      }
      in.batch.push_back(std::move(tr));
    }
    if (!near_boundary) return in;
  }
}

struct ValueInstance {
  rl::ValueModel value;
  std::vector<rl::Trajectory> batch;
  std::vector<std::size_t> coords;
};

inline ValueInstance random_value_instance(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ValueInstance in;
  constexpr std::uint32_t kDim = 48;
  for (std::uint32_t i = 0; i < kDim; ++i) in.value.weights()[i] = g(rng);
  const std::size_t trajectories = 1 + rng() % 3;
  for (std::size_t i = 0; i < trajectories; ++i) {
    rl::Trajectory tr;
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t t = 0; t < n; ++t) {
      tr.tokens.push_back(0);
      tr.value_features.push_back(random_features(rng, kDim, 1 + rng() % 4));
      tr.value_targets.push_back(g(rng));
    }
    in.batch.push_back(std::move(tr));
  }
  for (std::size_t i = 0; i < kDim; ++i) in.coords.push_back(i);
  return in;
}

// Relative error between the analytic PPO surrogate gradient and central
// differences over every table entry.
inline double ppo_gradient_error(PpoInstance& in) {
  std::vector<double> grad;
  rl::ppo_surrogate(in.batch, in.policy, in.epsilon, &grad);
  auto& table = in.policy.table();
  std::vector<std::size_t> coords(table.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  const auto fd = finite_difference(table, coords, [&] {
    return rl::ppo_surrogate(in.batch, in.policy, in.epsilon, nullptr);
  });
  return relative_error(grad, fd);
}

inline double value_gradient_error(ValueInstance& in) {
  std::vector<double> grad;
  rl::value_loss(in.batch, in.value, &grad);
  const auto fd = finite_difference(in.value.weights(), in.coords, [&] {
    return rl::value_loss(in.batch, in.value, nullptr);
  });
  std::vector<double> analytic;
  for (auto i : in.coords) analytic.push_back(grad[i]);
  return relative_error(analytic, fd);
}

}  // namespace prl::oracle

#endif  // PRL_TESTS_RL_FIXTURES_HPP_
