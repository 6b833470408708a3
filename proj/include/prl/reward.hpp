#ifndef PRL_REWARD_HPP_
#define PRL_REWARD_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "prl/corpus.hpp"
#include "prl/dataset.hpp"
#include "prl/features.hpp"
#include "prl/kernels.hpp"
#include "prl/sandbox.hpp"

namespace prl {

enum class RewardKind { kPrm, kOrmOriginal, kOrmPreference, kOrmCompiler };

std::string_view to_string(RewardKind kind);
RewardKind parse_reward_kind(std::string_view name);

struct TrainHyper {
  int epochs = 10;
  double learning_rate = 0.05;
  double weight_decay = 0.01;  // decoupled (AdamW)
  std::size_t batch_size = 32;
  std::uint64_t seed = 7;
  // 0: linear model; otherwise one tanh hidden layer of this width.
  std::size_t hidden = 0;
  kernels::Backend backend = kernels::Backend::kOpenMP;
};

struct ClassMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double negative_accuracy = 0.0;  // accuracy on label-0 samples
  double positive_accuracy = 0.0;  // accuracy on label-1 samples
  std::size_t count = 0;
};

// Threshold 0.5 on probabilities against 0/1 labels.
ClassMetrics classification_metrics(const std::vector<double>& probabilities,
                                    const std::vector<double>& labels);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  ClassMetrics validation;
};

// A linear scorer over hashed features, optionally behind one tanh hidden
// layer. score() is the logit.
class RewardModel {
 public:
  RewardModel() = default;
  RewardModel(RewardKind kind, std::size_t hidden);

  RewardKind kind() const { return kind_; }
  std::size_t hidden() const { return hidden_; }

  double logit(const FeatureVector& x) const;
  double probability(const FeatureVector& x) const;
  // 2p - 1 in [-1, 1].
  double reward(const FeatureVector& x) const;

  // Parameters flattened for the optimizer and the gradient checker.
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  // d logit / d params, added into grad scaled by `scale`.
  void accumulate_logit_grad(const FeatureVector& x, double scale,
                             double* grad) const;

  struct Meta {
    int epochs = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<double> loss_curve;
  };
  Meta& meta() { return meta_; }
  const Meta& meta() const { return meta_; }

  // Text dump with hex floats so reloading is exact.
  std::string serialize() const;
  static RewardModel deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static RewardModel load(const std::filesystem::path& path);

 private:
  // Linear: [w (D), b]. Hidden H: [W1 (H x D row-major), b1 (H), w2 (H), b2].
  RewardKind kind_ = RewardKind::kPrm;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
  Meta meta_;
};

struct LabeledFeatures {
  std::vector<FeatureVector> x;
  std::vector<double> y;  // 0 or 1
};

LabeledFeatures featurize_samples(const std::vector<StepSample>& samples,
                                  kernels::Backend backend);

struct TrainResult {
  RewardModel model;
  std::vector<EpochRecord> history;
};

// Logistic regression (or the hidden-layer variant) with AdamW on shuffled
// minibatches. Throws DegenerateData when train holds a single class.
TrainResult train_classifier(RewardKind kind, const LabeledFeatures& train,
                             const LabeledFeatures& validation,
                             const TrainHyper& hyper);

TrainResult train_prm(const DatasetSplit& train,
                      const DatasetSplit& validation, const TrainHyper& hyper);

ClassMetrics evaluate_classifier(const RewardModel& model,
                                 const LabeledFeatures& data);

// Rewards at chosen positions of a token sequence; zero elsewhere.
struct SegmentRewardTrace {
  std::vector<std::size_t> positions;  // strictly increasing
  std::vector<double> rewards;
  std::size_t length = 0;  // sequence length

  std::vector<double> dense() const;
};

// Character positions of line ends: every '\n', plus the last character
// when the code does not end in one.
std::vector<std::size_t> segment_end_positions(std::string_view code);

// Cumulative line prefixes w_1..w_k of `code` (split at newlines).
std::vector<std::string> cumulative_segments(std::string_view code);

// Per-line rewards 2p-1 of (prompt, w_i); positions are character indices.
SegmentRewardTrace score_prm(const RewardModel& model, std::string_view prompt,
                             std::string_view code);
// Same scores for already split segments.
std::vector<double> score_segments(const RewardModel& model,
                                   std::string_view prompt,
                                   const std::vector<std::string>& segments);

// One reward at the last character. Throws InvalidInput on empty code.
SegmentRewardTrace reward_orm_original(const RewardModel& model,
                                       std::string_view prompt,
                                       std::string_view code);

// Full programs behind a dataset: each reference solution (positive) and
// each edited program labeled by its verdict.
std::vector<StepSample> orm_samples(const Corpus& corpus,
                                    const std::vector<StepSample>& samples);

TrainResult train_orm_original(const std::vector<StepSample>& train,
                               const std::vector<StepSample>& validation,
                               const TrainHyper& hyper);

// Preference data: snippets for one prompt with a comparable quality key.
struct RankedSnippet {
  std::string code;
  double rank = 0.0;  // higher is better
};
struct PreferenceGroup {
  std::string prompt;
  std::vector<RankedSnippet> snippets;
};

using SnippetGenerator = std::function<std::vector<std::string>(
    const Problem&, std::size_t m, std::mt19937_64&)>;
using SnippetRanker =
    std::function<double(const Problem&, const std::string& code)>;

// Pass count, ties broken by verdict severity (all_passed best).
double sandbox_rank(const ExecutionVerdict& verdict);
SnippetRanker sandbox_ranker(const Sandbox& sandbox,
                             const ResourceLimits& limits);
// Uniform draws from the reference plus its rule-based single-line edits.
SnippetGenerator edit_generator(std::uint64_t seed);

std::vector<PreferenceGroup> build_preference_groups(
    const Corpus& corpus, const SnippetGenerator& generator,
    const SnippetRanker& ranker, std::size_t m, std::uint64_t seed);

// All (better, worse) index pairs within each group with distinct ranks.
std::vector<std::pair<std::size_t, std::size_t>> preference_pairs(
    const std::vector<PreferenceGroup>& groups);

// Bradley-Terry training over all ranked pairs. Throws DegenerateData when
// no group yields a pair.
TrainResult train_orm_preference(const std::vector<PreferenceGroup>& groups,
                                 const TrainHyper& hyper);

// Terminal reward tanh(s / 2) = 2 sigmoid(s) - 1 of the preference score.
SegmentRewardTrace reward_orm_preference(const RewardModel& model,
                                         std::string_view prompt,
                                         std::string_view code);

struct CompilerRewardMap {
  double all_passed = 1.0;
  double test_failed = -0.3;
  double runtime_error = -0.6;
  double compile_error = -1.0;
  double timeout = -1.0;

  double operator()(VerdictStatus status) const;
};

double reward_orm_compiler(const ExecutionVerdict& verdict,
                           const CompilerRewardMap& map = {});

}  // namespace prl

#endif  // PRL_REWARD_HPP_
