#ifndef PRL_CORPUS_HPP_
#define PRL_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prl {

enum class Split { kSftSeed, kRlTrain, kValidation, kTest };
enum class TestOrigin { kSeed, kAugmented };

std::string_view to_string(Split split);
std::string_view to_string(TestOrigin origin);
Split parse_split(std::string_view name);
TestOrigin parse_test_origin(std::string_view name);

struct TestCase {
  std::string assertion;
  TestOrigin origin = TestOrigin::kSeed;

  friend bool operator==(const TestCase&, const TestCase&) = default;
};

// A reference solution split at newline characters. Joining `lines` with
// '\n' gives back the normalized source without its trailing newline.
struct CodeLines {
  std::vector<std::string> lines;

  std::size_t line_count() const { return lines.size(); }
  std::string joined() const;
  // Source text of lines [0, count) with a trailing newline.
  std::string prefix(std::size_t count) const;
};

struct Problem {
  int id = 0;
  std::string description;
  std::string reference_code;  // normalized, one trailing newline
  std::vector<TestCase> tests;
  Split split = Split::kTest;
  std::string prompt;  // rendered description + seed assertions

  CodeLines code_lines() const;
  std::vector<TestCase> seed_tests() const;
};

constexpr std::string_view kDefaultPromptTemplate =
    "{description}\nYour code should satisfy these tests:\n{tests}";

// Leading indentation rewritten to 4 spaces per block level, trailing
// whitespace stripped, trailing blank lines dropped, exactly one final
// newline. Idempotent. Throws MixedIndentationUnresolvable when a line's
// indentation mixes tab and space characters.
std::string normalize(std::string_view source);

CodeLines split_lines(std::string_view normalized_source);

std::string render_prompt(std::string_view prompt_template,
                          std::string_view description,
                          const std::vector<TestCase>& tests);

// Inclusive id ranges mapped to splits. The default reproduces the MBPP
// re-partition: 601-974 SFT seed, 101-500 RL, 501-600 validation, 1-100 test.
class SplitMap {
 public:
  struct Range {
    int lo;
    int hi;
    Split split;
  };

  SplitMap() = default;
  explicit SplitMap(std::vector<Range> ranges) : ranges_(std::move(ranges)) {}
  static SplitMap mbpp_default();
  // Parses "601-974:sft_seed,101-500:rl_train,...".
  static SplitMap parse(std::string_view text);

  // Throws UnmappedId.
  Split lookup(int id) const;
  std::optional<Split> find(int id) const;
  const std::vector<Range>& ranges() const { return ranges_; }

 private:
  std::vector<Range> ranges_;
};

class Corpus {
 public:
  Corpus() = default;
  // Throws DuplicateId.
  explicit Corpus(std::vector<Problem> problems);

  const std::vector<Problem>& problems() const { return problems_; }
  std::size_t size() const { return problems_.size(); }
  bool empty() const { return problems_.empty(); }
  const Problem* find(int id) const;
  Corpus filter(Split split) const;
  // First `count` problems in file order.
  Corpus head(std::size_t count) const;

 private:
  std::vector<Problem> problems_;
  std::map<int, std::size_t> index_;
};

// Reads line-delimited records {task_id, text, code, test_list}; optional
// `split` and `test_origin` fields written by save() are honored. Records
// whose code cannot be normalized are skipped with a warning. Throws
// ParseError (with the 0-based record index) and DuplicateId.
Corpus ingest(const std::filesystem::path& path,
              std::string_view prompt_template = kDefaultPromptTemplate);
Corpus ingest_text(std::string_view text,
                   std::string_view prompt_template = kDefaultPromptTemplate);

// Throws UnmappedId for ids outside every range.
Corpus assign_splits(const Corpus& corpus,
                     const SplitMap& map = SplitMap::mbpp_default());

std::string serialize(const Corpus& corpus);
void save(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace prl

#endif  // PRL_CORPUS_HPP_
