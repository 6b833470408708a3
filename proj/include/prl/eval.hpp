#ifndef PRL_EVAL_HPP_
#define PRL_EVAL_HPP_

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "prl/corpus.hpp"
#include "prl/reward.hpp"
#include "prl/rl.hpp"
#include "prl/sandbox.hpp"

namespace prl {

// Unbiased pass@k estimate 1 - C(n-c, k) / C(n, k). Throws InvalidArgs
// unless 0 <= c <= n and 1 <= k <= n.
double pass_at_k(long n, long c, long k);

enum class Difficulty { kEasy, kMedium, kHard };
std::string_view to_string(Difficulty d);  // "EZY", "MED", "HRD"

// By character length of the normalized reference (no trailing newline):
// < 50 easy, 50..100 medium, > 100 hard.
Difficulty bucket_difficulty(const Problem& problem);
Difficulty bucket_by_length(std::size_t length);

struct ProblemEval {
  int problem_id = 0;
  Difficulty bucket = Difficulty::kEasy;
  std::size_t n = 0;
  std::size_t c = 0;
  std::map<std::size_t, double> pass_at;  // k -> pass@k
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<ProblemEval> problems;

  // Mean pass@k over problems in a bucket (all problems when bucket is
  // empty); NaN when the bucket has no problems.
  double aggregate(std::size_t k, const Difficulty* bucket = nullptr) const;
  std::size_t bucket_size(Difficulty bucket) const;

  std::string to_jsonl() const;
  // pass@k rows by EZY / MED / HRD / all columns.
  std::string table() const;
};

// Per-problem pass@k from completion counts. Throws InvalidArgs when some
// k exceeds a problem's n.
EvalReport summarize(const std::vector<const Problem*>& problems,
                     const std::vector<std::size_t>& n,
                     const std::vector<std::size_t>& c,
                     const std::vector<std::size_t>& ks);

// Samples n completions per task, verifies them and reports pass@k.
EvalReport evaluate_policy(const rl::Policy& policy,
                           const rl::ToyEnvironment& env,
                           const std::vector<std::size_t>& tasks, std::size_t n,
                           const std::vector<std::size_t>& ks,
                           const rl::DecodeConfig& decode,
                           const Sandbox& sandbox, const ResourceLimits& limits,
                           std::uint64_t seed);

enum class SelectionScore { kSum, kMin, kMean };
std::string_view to_string(SelectionScore s);
SelectionScore parse_selection_score(std::string_view name);

// Score of one trace; an empty trace scores 0 under every rule.
double selection_score(const SegmentRewardTrace& trace, SelectionScore rule);
// Index of the best trace; ties go to the earliest. Throws InvalidArgs on
// an empty list.
std::size_t select_best(const std::vector<SegmentRewardTrace>& traces,
                        SelectionScore rule);

struct RejectionResult {
  std::vector<rl::Trajectory> candidates;
  std::vector<SegmentRewardTrace> traces;
  std::size_t chosen = 0;
};

// Draws n completions for one task and keeps the best under the reward
// source. Throws InvalidArgs when n is 0.
RejectionResult rejection_sample(const rl::Policy& policy,
                                 const rl::RewardSource& prm,
                                 const rl::ToyEnvironment& env,
                                 std::size_t task, std::size_t n,
                                 const rl::DecodeConfig& decode,
                                 std::uint64_t seed,
                                 SelectionScore rule = SelectionScore::kSum);

struct RejectionStudy {
  std::size_t trials = 0;
  double selected_pass_rate = 0.0;
  // Expected pass rate of a uniformly chosen candidate.
  double uniform_pass_rate = 0.0;
};

// `rounds` rounds of best-of-n selection over every task of the suite.
RejectionStudy rejection_study(const rl::Policy& policy,
                               const rl::RewardSource& prm,
                               const rl::ToyEnvironment& env,
                               const Sandbox& sandbox,
                               const ResourceLimits& limits, std::size_t n,
                               std::size_t rounds,
                               const rl::DecodeConfig& decode,
                               std::uint64_t seed,
                               SelectionScore rule = SelectionScore::kSum);

// Error categories in report order.
inline constexpr std::array<VerdictStatus, 4> kErrorCategories = {
    VerdictStatus::kCompileError, VerdictStatus::kRuntimeError,
    VerdictStatus::kTestFailed, VerdictStatus::kTimeout};

struct ErrorHistogram {
  std::array<std::size_t, 4> counts{};  // in kErrorCategories order
  std::size_t passed = 0;

  std::size_t errors() const;
  // Fraction of errors per category; all zero when there are no errors.
  std::array<double, 4> fractions() const;
  std::string to_json() const;
};

ErrorHistogram error_distribution(const std::vector<VerdictStatus>& statuses);
// Half the L1 distance between the two fraction vectors.
double total_variation(const ErrorHistogram& a, const ErrorHistogram& b);

}  // namespace prl

#endif  // PRL_EVAL_HPP_
