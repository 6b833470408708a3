#ifndef PRL_RL_HPP_
#define PRL_RL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "prl/kernels.hpp"
#include "prl/reward.hpp"
#include "prl/sandbox.hpp"
#include "prl/toy_env.hpp"

namespace prl::rl {

struct DecodeConfig {
  double temperature = 1.2;
  double top_p = 0.95;
  // Argmax decoding (ties go to the lowest token id); also used when the
  // temperature is at or below 1e-6.
  bool greedy = false;
};

// Logit table keyed by (task, last `context` tokens), hash-backed; states
// never written to have all-zero logits. Action probabilities are the
// softmax of logits / temperature.
class Policy {
 public:
  Policy() = default;
  Policy(std::size_t vocab_size, std::size_t context, double temperature);

  std::size_t vocab_size() const { return vocab_; }
  std::size_t context() const { return context_; }
  double temperature() const { return temperature_; }

  // State before position t of `tokens`.
  std::uint64_t state_key(std::size_t task, const std::vector<int>& tokens,
                          std::size_t t) const;

  std::vector<double> logits(std::uint64_t key) const;
  std::vector<double> probabilities(std::uint64_t key) const;
  double log_prob(std::uint64_t key, int action) const;

  // Mutable logits row, created on demand.
  double* row(std::uint64_t key);
  std::size_t state_count() const { return rows_.size(); }
  // Parameter storage: state_count() rows of vocab_size() logits.
  std::vector<double>& table() { return table_; }
  const std::vector<double>& table() const { return table_; }
  // Row index of a stored state, or -1.
  std::ptrdiff_t row_index(std::uint64_t key) const;

  std::string serialize() const;
  static Policy deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Policy load(const std::filesystem::path& path);

 private:
  std::size_t vocab_ = 0;
  std::size_t context_ = 3;
  double temperature_ = 1.2;
  std::unordered_map<std::uint64_t, std::size_t> rows_;
  std::vector<std::uint64_t> keys_;  // row -> key, for serialization
  std::vector<double> table_;
};

// Draws one action. Nucleus filtering keeps the smallest set of most likely
// actions whose mass reaches top_p.
int sample_action(const std::vector<double>& logits, const DecodeConfig& decode,
                  std::mt19937_64& rng);

// Linear value model over hashed state features.
class ValueModel {
 public:
  static constexpr std::size_t kDim = 1u << 12;

  ValueModel() : weights_(kDim, 0.0) {}

  // Sparse features of the state before position t.
  FeatureVector features(std::size_t task, const std::vector<int>& tokens,
                         std::size_t t) const;
  double value(const FeatureVector& phi) const;

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  std::string serialize() const;
  static ValueModel deserialize(std::string_view text);

 private:
  std::vector<double> weights_;
};

struct Trajectory {
  std::size_t task = 0;
  std::vector<int> tokens;         // a_1..a_T (may end in <eos>)
  std::vector<std::uint64_t> states;
  std::vector<FeatureVector> value_features;
  std::vector<double> logp_old;    // log pi_old(a_t | s_t) at the policy temperature
  SegmentRewardTrace rm;           // reward-model trace over token positions
  std::vector<double> rewards;     // shaped r_t
  std::vector<double> values;      // V(s_1..s_T), plus V(s_{T+1}) = 0
  std::vector<double> advantages;
  std::vector<double> value_targets;
  std::string program;
  ExecutionVerdict verdict;

  std::size_t length() const { return tokens.size(); }
};

// Samples n trajectories per listed task; trajectory k of task i uses a seed
// derived from (seed, i, k), so results do not depend on threading.
std::vector<Trajectory> rollout(const Policy& policy, const ToyEnvironment& env,
                                const std::vector<std::size_t>& tasks,
                                std::size_t n, const DecodeConfig& decode,
                                std::uint64_t seed);

// Sandbox verdicts for the rendered programs, filled into the trajectories.
void verify_trajectories(std::vector<Trajectory>& trajectories,
                         const ToyEnvironment& env, const Sandbox& sandbox,
                         const ResourceLimits& limits);

// Positions closing a line: every newline token, plus the terminal token when
// the last line is non-empty.
std::vector<std::size_t> segment_ends(const std::vector<int>& tokens);

// Where the reward-model signal comes from.
class RewardSource {
 public:
  virtual ~RewardSource() = default;
  virtual RewardKind kind() const = 0;
  // Trace over token positions of the trajectory; verdicts are filled in.
  virtual SegmentRewardTrace trace(const ToyEnvironment& env,
                                   const Trajectory& traj) const = 0;
};

std::unique_ptr<RewardSource> prm_source(const RewardModel& model);
std::unique_ptr<RewardSource> orm_source(const RewardModel& model);
std::unique_ptr<RewardSource> compiler_source(CompilerRewardMap map = {});

// r_t = rm_t - beta * (log pi(a_t|s_t) - log pi_anchor(a_t|s_t)).
void shape_rewards(Trajectory& traj, const Policy& policy,
                   const Policy& anchor, double beta);

// GAE with V(s_{T+1}) = 0; value targets are A_t + V(s_t).
void compute_advantages(Trajectory& traj, const ValueModel& value,
                        double gamma, double lambda);
// Same for a batch through the kernel backend.
void compute_advantages(std::vector<Trajectory>& batch,
                        const ValueModel& value, double gamma, double lambda,
                        kernels::Backend backend);

// Mean over trajectories of the per-token mean clipped surrogate, and its
// gradient with respect to the policy table (same layout as table()).
// States without a stored row get no gradient.
double ppo_surrogate(const std::vector<Trajectory>& batch, const Policy& policy,
                     double epsilon, std::vector<double>* grad);
// Mean over trajectories of the per-token mean squared value error, and its
// gradient with respect to the value weights.
double value_loss(const std::vector<Trajectory>& batch,
                  const ValueModel& value, std::vector<double>* grad);
// Fraction of tokens whose ratio lies outside [1 - epsilon, 1 + epsilon].
double clip_fraction(const std::vector<Trajectory>& batch,
                     const Policy& policy, double epsilon);

struct PpoConfig {
  double epsilon = 0.2;
  int mu = 4;
  double policy_lr = 0.1;
  double value_lr = 0.05;
};

struct PpoStats {
  std::vector<double> surrogate;  // before each of the mu iterations
  std::vector<double> value_loss;
  double final_surrogate = 0.0;
  double final_value_loss = 0.0;
  double clip_fraction = 0.0;
};

class PpoOptimizer;

// mu iterations of gradient ascent on the surrogate and descent on the
// value loss. Throws NonFiniteLoss.
PpoStats ppo_update(const std::vector<Trajectory>& batch, Policy& policy,
                    ValueModel& value, const PpoConfig& config,
                    PpoOptimizer* optimizer = nullptr);

// Adam state carried across outer steps.
class PpoOptimizer {
 public:
  PpoOptimizer(double policy_lr, double value_lr);
  void step_policy(Policy& policy, const std::vector<double>& grad_ascent);
  void step_value(ValueModel& value, const std::vector<double>& grad);

 private:
  struct Moments {
    std::vector<double> m, v;
    std::uint64_t t = 0;
  };
  static void adam(std::vector<double>& params, const std::vector<double>& g,
                   Moments& mom, double lr, double sign);
  double policy_lr_, value_lr_;
  Moments policy_, value_;
};

enum class KlAnchor { kRollout, kInitial };

struct TrainConfig {
  int steps = 60;  // M
  std::size_t samples_per_task = 4;
  double beta = 0.05;
  double gamma = 0.99;
  double lambda = 0.95;
  PpoConfig ppo;
  DecodeConfig decode;
  KlAnchor kl_anchor = KlAnchor::kRollout;
  std::uint64_t seed = 7;
  ResourceLimits limits{std::chrono::milliseconds(1000)};
  CompilerRewardMap compiler_map;
  std::size_t checkpoint_every = 0;  // 0: no checkpoints
  std::filesystem::path checkpoint_dir;
  kernels::Backend backend = kernels::Backend::kOpenMP;
};

struct StepMetrics {
  int step = 0;
  double mean_rm_reward = 0.0;        // summed RM trace per trajectory
  double mean_compiler_reward = 0.0;  // compiler map of rollout verdicts
  double pass_rate = 0.0;             // rollouts passing all tests
  double greedy_pass = 0.0;           // greedy pass@1 over the suite
  double policy_loss = 0.0;           // -surrogate after the update
  double value_loss = 0.0;
  double train_loss = 0.0;            // policy_loss + 0.5 value_loss
  double clip_fraction = 0.0;
};

struct TrainReport {
  double initial_greedy_pass = 0.0;
  std::vector<StepMetrics> steps;
};

// Greedy pass@1 over every task.
double greedy_pass_rate(const Policy& policy, const ToyEnvironment& env,
                        const Sandbox& sandbox, const ResourceLimits& limits);

// Algorithm 1: for each step, rollout, reward, shape, advantages, PPO.
TrainReport train_loop(const ToyEnvironment& env, Policy& policy,
                       ValueModel& value, const RewardSource& reward,
                       const Sandbox& sandbox, const TrainConfig& config);

std::string to_jsonl(const std::vector<StepMetrics>& steps);

// Trend summaries over a per-step curve.
// Mean of the last ceil(fraction * n) entries.
double tail_mean(const std::vector<double>& curve, double fraction);
// Population variance of the last ceil(fraction * n) entries.
double tail_variance(const std::vector<double>& curve, double fraction);
// First step whose trailing moving average (over `window` steps, fewer at
// the start) reaches `target`; curve.size() when it never does.
std::size_t steps_to_reach(const std::vector<double>& curve, double target,
                           std::size_t window);

// Demonstrations for the initial policy: a token sequence and its weight.
struct Demonstration {
  std::size_t task = 0;
  std::vector<int> tokens;
  double weight = 1.0;
};

// Count-based imitation: logits = log(weighted count + smoothing) at every
// state the demonstrations visit.
Policy imitation_policy(const ToyEnvironment& env,
                        const std::vector<Demonstration>& demos,
                        std::size_t context, double temperature,
                        double smoothing);

struct InitConfig {
  double reference_weight = 1.0;
  double passing_edit_weight = 1.0;
  double failing_edit_weight = 2.0;
  double smoothing = 1e-4;
  // Which edit modes supply demonstrations.
  bool mutate_demos = true;
  bool refactor_demos = false;
  std::size_t context = 3;
  double temperature = 1.2;
  std::uint64_t seed = 7;
};

// Demonstrations from each task's reference and its rule-based single-line
// edits, weighted by whether the edit still passes the tests.
std::vector<Demonstration> edit_demonstrations(const ToyEnvironment& env,
                                               const Sandbox& sandbox,
                                               const InitConfig& config,
                                               const ResourceLimits& limits);

}  // namespace prl::rl

#endif  // PRL_RL_HPP_
