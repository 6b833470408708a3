#ifndef PRL_MUTATOR_HPP_
#define PRL_MUTATOR_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "prl/corpus.hpp"

namespace prl {

enum class EditMode { kMutate, kRefactor };

std::string_view to_string(EditMode mode);
EditMode parse_edit_mode(std::string_view name);

struct LineEdit {
  int problem_id = 0;
  std::size_t line_index = 0;
  std::string original_line;
  std::string edited_line;
  EditMode mode = EditMode::kMutate;
  std::string provenance;  // "rule:<name>" or "external_teacher"

  friend bool operator==(const LineEdit&, const LineEdit&) = default;
};

// Rule names, in application order.
inline constexpr std::string_view kMutationRules[] = {
    "arith_swap",      "comparison_flip", "boolean_negation",
    "boundary_constant", "identifier_swap", "early_return",
    "statement_deletion"};
inline constexpr std::string_view kRefactorRules[] = {
    "commutative_swap", "comparison_negation", "augmented_expansion",
    "redundant_parens", "literal_rewrite"};

struct MutationRuleSet {
  std::vector<std::string> enabled_rules;
  std::uint64_t rng_seed = 0;
  std::size_t max_edits_per_line = 3;

  // Every mutation and refactoring rule enabled.
  static MutationRuleSet all(std::uint64_t seed = 0);
  bool enabled(std::string_view rule) const;
};

// True for lines the mutator never touches: blank, comment-only, import.
bool is_skipped_line(std::string_view line);

// Single-line rewrites that change (mutate) or intend to keep (refactor)
// behaviour. Returned edits carry problem_id 0 and line_index 0; the caller
// fills in the location. Output is deterministic in (line, context, rules).
// Throws NoApplicableRule when nothing fires.
std::vector<LineEdit> mutate_line(std::string_view line,
                                  const CodeLines& context,
                                  const MutationRuleSet& rules);
std::vector<LineEdit> refactor_line(std::string_view line,
                                    const CodeLines& context,
                                    const MutationRuleSet& rules);

// Applies the selected mode(s) to every eligible line of a reference
// solution. Lines where no rule fires are skipped.
std::vector<LineEdit> edit_problem(const Problem& problem,
                                   const MutationRuleSet& rules, bool mutate,
                                   bool refactor);

// The full program with `edit` applied, all other lines kept.
std::string apply_edit(const CodeLines& code, const LineEdit& edit);

// Client for an external rewrite model reached over HTTP. Bounded number of
// requests in flight; callable from many threads.
class TeacherClient {
 public:
  struct Options {
    std::chrono::milliseconds timeout{30000};
    std::ptrdiff_t max_in_flight = 4;
  };

  TeacherClient(std::string endpoint, Options options);
  explicit TeacherClient(std::string endpoint)
      : TeacherClient(std::move(endpoint), Options{}) {}
  ~TeacherClient();

  // POSTs {"mode", "line", "context", "problem"} and parses
  // {"rewritten_line"}. Throws TeacherUnavailable, MalformedTeacherResponse,
  // EditIdenticalToOriginal.
  LineEdit rewrite(std::string_view line, const CodeLines& context,
                   EditMode mode, std::string_view problem_text = {});

  // Sends an arbitrary JSON request body and returns the parsed response
  // field. Used by test generation with mode "testgen".
  std::string request_field(const std::string& body_json,
                            const std::string& field);

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  Options options_;
  std::unique_ptr<std::counting_semaphore<64>> slots_;
};

// Thin wrapper so callers can use the teacher through the same signature as
// the rule-based path.
LineEdit teacher_rewrite(std::string_view line, const CodeLines& context,
                         EditMode mode, const std::string& endpoint);

// Post-processing of a raw teacher answer: keeps the first non-empty line and
// re-indents it like `original`. Throws MalformedTeacherResponse on an empty
// answer and EditIdenticalToOriginal when nothing non-whitespace changed.
std::string clean_teacher_line(std::string_view raw, std::string_view original);

}  // namespace prl

#endif  // PRL_MUTATOR_HPP_
