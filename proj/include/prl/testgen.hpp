#ifndef PRL_TESTGEN_HPP_
#define PRL_TESTGEN_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prl/corpus.hpp"
#include "prl/mutator.hpp"
#include "prl/sandbox.hpp"

namespace prl {

enum class AdequacyMethod { kCoverage, kMutationKill };

std::string_view to_string(AdequacyMethod method);
AdequacyMethod parse_adequacy_method(std::string_view name);

// Branch-coverage measurement is provided by an external instrumented
// runner; the pipeline never requires one.
class CoverageRunner {
 public:
  virtual ~CoverageRunner() = default;
  // Fraction of branches of the reference taken by its tests.
  virtual double branch_coverage(const Problem& problem) = 0;
};

inline constexpr std::string_view kTestgenPrompt =
    "Given the following code and its existing test cases, supplement with a "
    "new test case to achieve full path coverage.";

// Every single-line mutant of a reference solution together with whether
// the current tests kill it.
struct MutantSet {
  std::vector<LineEdit> edits;
  std::vector<std::string> programs;
  std::vector<bool> killed;

  std::size_t size() const { return programs.size(); }
  std::size_t killed_count() const;
  // 1.0 when there are no mutants.
  double adequacy() const;
  std::vector<std::size_t> survivors() const;
};

// Every mutation rule with no per-line cap.
MutationRuleSet adequacy_rules();

struct TestgenOptions {
  AdequacyMethod method = AdequacyMethod::kMutationKill;
  MutationRuleSet rules = adequacy_rules();
  ResourceLimits limits{};
  std::size_t max_new_tests = 5;
  std::size_t max_candidates = 64;
  // Per-call limit inside the enumeration and screening scripts.
  double call_timeout_s = 0.5;
  std::optional<std::string> teacher_endpoint;
};

MutantSet build_mutants(const Problem& problem, const Sandbox& sandbox,
                        const TestgenOptions& options);

// Coverage needs `coverage` (else ShimUnavailable); mutation_kill is the
// killed fraction of all rule mutants under the problem's tests.
double measure_adequacy(const Problem& problem, AdequacyMethod method,
                        const Sandbox& sandbox, const TestgenOptions& options,
                        CoverageRunner* coverage = nullptr);

// Candidate assertions from executing the reference on enumerated inputs, or
// from the teacher when an endpoint is configured. Throws NoCandidates,
// TeacherUnavailable.
std::vector<TestCase> propose_tests(const Problem& problem,
                                    const Sandbox& sandbox,
                                    const TestgenOptions& options);

// Assertion lines ("assert ...") from a teacher answer.
std::vector<TestCase> parse_assertions(std::string_view text);

struct AugmentResult {
  Problem problem;
  double adequacy_before = 0.0;
  double adequacy_after = 0.0;
  std::size_t accepted = 0;
  std::size_t survivors_before = 0;
  std::size_t survivors_flipped = 0;  // survivors killed by accepted tests
  bool flagged = false;               // no usable candidates
};

// Keeps candidates the reference passes that strictly raise adequacy,
// killing the most survivors first, up to max_new_tests. Accepted tests are
// appended with origin augmented.
AugmentResult accept_tests(const Problem& problem,
                           const std::vector<TestCase>& candidates,
                           const Sandbox& sandbox,
                           const TestgenOptions& options);

// propose_tests + accept_tests; problems already at adequacy 1 come back
// unchanged.
AugmentResult augment_problem(const Problem& problem, const Sandbox& sandbox,
                              const TestgenOptions& options);

}  // namespace prl

#endif  // PRL_TESTGEN_HPP_
