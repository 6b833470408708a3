#ifndef PRL_DATASET_HPP_
#define PRL_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prl/corpus.hpp"
#include "prl/mutator.hpp"
#include "prl/sandbox.hpp"

namespace prl {

enum class Label { kPositive, kNegative };
enum class SampleSource { kReference, kMutate, kRefactor };
enum class DatasetSplitName { kTrain, kValidation, kTest };

std::string_view to_string(Label label);
std::string_view to_string(SampleSource source);
std::string_view to_string(DatasetSplitName name);
Label parse_label(std::string_view name);
SampleSource parse_sample_source(std::string_view name);
DatasetSplitName parse_dataset_split(std::string_view name);

// A code prefix ending at the labeled line; later lines are never stored.
struct StepSample {
  int problem_id = 0;
  std::string prompt;
  std::vector<std::string> prefix_lines;
  Label label = Label::kPositive;
  SampleSource source = SampleSource::kReference;
  // Absent for reference-derived samples.
  std::optional<VerdictStatus> verdict;

  bool positive() const { return label == Label::kPositive; }
  std::string prefix() const;  // newline-joined, no trailing newline
  const std::string& last_line() const { return prefix_lines.back(); }
};

struct DatasetSplit {
  DatasetSplitName name = DatasetSplitName::kTrain;
  std::vector<StepSample> samples;
  std::size_t positive_count = 0;
  std::size_t negative_count = 0;
};

// One positive sample per prefix length 1..L of the reference solution.
std::vector<StepSample> build_positive_prefixes(const Problem& problem);

// One sample per edit: original lines before the edit, then the edited line.
// Positive iff the verdict is all_passed. Throws AlignmentError when the
// lists differ in length, InvalidArgs when an edit belongs elsewhere.
std::vector<StepSample> build_edit_samples(
    const Problem& problem, const std::vector<LineEdit>& edits,
    const std::vector<ExecutionVerdict>& verdicts);

// Drops samples whose (prompt, prefix) was already seen, keeping the first.
std::vector<StepSample> deduplicate(std::vector<StepSample> samples);

// Full program behind a sample: its prefix followed by the reference lines
// after the labeled one.
std::string reconstruct_program(const StepSample& sample,
                                const Problem& problem);

// Problem-id ranges for the train/validation/test files.
class DatasetSplitMap {
 public:
  struct Range {
    int lo;
    int hi;
    DatasetSplitName name;
  };

  DatasetSplitMap() = default;
  explicit DatasetSplitMap(std::vector<Range> ranges)
      : ranges_(std::move(ranges)) {}
  // 601-900 train, 901-937 validation, 938-974 test.
  static DatasetSplitMap seed_default();
  // Everything in one split.
  static DatasetSplitMap single(DatasetSplitName name);
  // "601-900:train,901-937:validation,938-974:test".
  static DatasetSplitMap parse(std::string_view text);

  // Throws UnmappedId.
  DatasetSplitName lookup(int problem_id) const;

 private:
  std::vector<Range> ranges_;
  std::optional<DatasetSplitName> all_;
};

// Groups by split and shuffles each split with `seed`. Throws UnmappedId.
std::vector<DatasetSplit> make_splits(const std::vector<StepSample>& samples,
                                      const DatasetSplitMap& map,
                                      std::uint64_t seed);

// Writes train.jsonl, validation.jsonl, test.jsonl and stats.json into `dir`.
std::vector<DatasetSplit> emit_splits(const std::vector<StepSample>& samples,
                                      const DatasetSplitMap& map,
                                      std::uint64_t seed,
                                      const std::filesystem::path& dir);

std::string to_jsonl(const std::vector<StepSample>& samples);
std::vector<StepSample> parse_samples(std::string_view jsonl);
std::vector<StepSample> load_samples(const std::filesystem::path& path);

struct DatasetOptions {
  bool mutate = true;
  bool refactor = true;
  // Keep at most this many reference positives per edit-derived sample
  // (0 keeps everything).
  double reference_ratio = 0.0;
  std::uint64_t seed = 7;
  // When set, every eligible line also gets one teacher rewrite per enabled
  // mode. Rewrites the teacher returns unchanged or malformed are skipped.
  std::optional<std::string> teacher_endpoint;
};

struct DatasetStats {
  std::size_t reference_positives = 0;
  std::size_t mutate_positive = 0;
  std::size_t mutate_negative = 0;
  std::size_t refactor_positive = 0;
  std::size_t refactor_negative = 0;
  std::size_t duplicates_dropped = 0;

  double mutate_negative_fraction() const;
};

// Positive prefixes plus verified single-line edits for every problem,
// deduplicated, in problem order.
std::vector<StepSample> build_dataset(const Corpus& corpus,
                                      const MutationRuleSet& rules,
                                      const Sandbox& sandbox,
                                      const ResourceLimits& limits,
                                      const DatasetOptions& options,
                                      DatasetStats* stats = nullptr);

}  // namespace prl

#endif  // PRL_DATASET_HPP_
