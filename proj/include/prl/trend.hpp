#ifndef PRL_TREND_HPP_
#define PRL_TREND_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "prl/dataset.hpp"
#include "prl/reward.hpp"
#include "prl/rl.hpp"

// The PRM-vs-ORM comparison on the toy suite: reward models trained from
// the toy references, four PPO arms from a shared initial policy, and the
// trend statistics over seeds.
namespace prl::rl {

struct ToySetupConfig {
  InitConfig init;
  TrainHyper prm_hyper{.epochs = 50};
  TrainHyper orm_hyper;
  std::size_t preference_samples = 4;  // m snippets per problem
  std::uint64_t seed = 7;
};

struct ToyRewardModels {
  std::vector<StepSample> dataset;
  DatasetStats stats;
  RewardModel prm;
  RewardModel orm_original;
  RewardModel orm_preference;
};

// Draws m programs per problem from `policy` (problems are the env's).
SnippetGenerator policy_generator(const Policy& policy,
                                  const ToyEnvironment& env,
                                  const DecodeConfig& decode);

// Step-level dataset from the toy references, PRM on it, ORM on the full
// programs behind it, and the preference ORM on snippets sampled from
// `policy` and ranked by the sandbox.
ToyRewardModels train_toy_reward_models(const ToyEnvironment& env,
                                        const Policy& policy,
                                        const Sandbox& sandbox,
                                        const ResourceLimits& limits,
                                        const ToySetupConfig& config);

inline constexpr std::array<RewardKind, 4> kArms = {
    RewardKind::kPrm, RewardKind::kOrmOriginal, RewardKind::kOrmPreference,
    RewardKind::kOrmCompiler};

struct TrendConfig {
  std::size_t seeds = 5;
  std::uint64_t seed_base = 1000;
  TrainConfig train;
  double final_fraction = 0.1;  // "final mean reward": mean of this tail
  double late_fraction = 0.25;  // "late training": this tail of the steps
  std::size_t window = 5;       // moving average for steps_to_reach
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::array<TrainReport, 4> arms;  // kArms order
  double prm_gain = 0.0;            // final - initial greedy pass@1
  double compiler_target = 0.0;     // compiler arm's final mean reward
  std::size_t prm_steps = 0;        // steps to reach the target
  std::size_t compiler_steps = 0;
  std::array<double, 4> late_variance{};
};

struct TrendResult {
  std::vector<SeedOutcome> seeds;
  double min_gain = 0.0;
  double median_prm_steps = 0.0;
  double median_compiler_steps = 0.0;
  std::array<double, 4> median_late_variance{};

  bool gain_ok(double threshold) const { return min_gain >= threshold; }
  bool speed_ok() const { return median_prm_steps <= median_compiler_steps; }
  bool stability_ok() const;
  std::string summary_json() const;
};

// Mean reward for the speed comparison is the compiler-map reward of the
// rollouts, shared by all arms.
TrendResult run_trend(const ToyEnvironment& env, const Policy& initial,
                      const ToyRewardModels& models, const Sandbox& sandbox,
                      const TrendConfig& config);

double median(std::vector<double> values);

}  // namespace prl::rl

#endif  // PRL_TREND_HPP_
