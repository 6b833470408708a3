#ifndef PRL_SANDBOX_HPP_
#define PRL_SANDBOX_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prl/corpus.hpp"
#include "prl/mutator.hpp"

namespace prl {

// Ordered by increasing severity; a verdict reports the most severe status
// seen across its tests.
enum class VerdictStatus {
  kAllPassed = 0,
  kTestFailed = 1,
  kRuntimeError = 2,
  kTimeout = 3,
  kCompileError = 4,
};

std::string_view to_string(VerdictStatus status);
VerdictStatus parse_verdict_status(std::string_view name);

struct ExecutionVerdict {
  VerdictStatus status = VerdictStatus::kAllPassed;
  std::size_t passed_count = 0;
  std::size_t total_count = 0;
  std::optional<std::string> first_failure;  // at most 2 KiB
  // Longest single test process; bounded by the per-test limit.
  double wall_time_ms = 0.0;
  double total_time_ms = 0.0;

  bool passed() const { return status == VerdictStatus::kAllPassed; }
};

struct ResourceLimits {
  std::chrono::milliseconds wall{5000};  // per test process
  std::size_t memory_bytes = 256u << 20;
  // After a timeout nothing but a compile error can outrank the status, so
  // the remaining tests are not run and count as not passed.
  bool skip_after_timeout = true;
};

// Harness exit codes.
inline constexpr int kExitPass = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitSyntax = 3;
inline constexpr int kExitTimeout = 124;

inline constexpr std::size_t kFailureExcerptBytes = 2048;

// Program text, one assertion and the exit-code epilogue as one script. The
// program is compiled (compile-only) before anything runs; a syntax error
// exits with kExitSyntax.
std::string harness_script(std::string_view program,
                           std::string_view assertion);

struct ProcessResult {
  int exit_code = 0;
  std::string stderr_tail;
  double wall_time_ms = 0.0;
};

class ForkServer;

class Sandbox {
 public:
  enum class Launch {
    // One long-lived interpreter per worker forks a fresh child per test.
    kForkServer,
    // A new interpreter process is exec'd per test.
    kExec,
  };

  struct Options {
    // SANDBOX_INTERPRETER in the environment takes precedence.
    std::string interpreter = "python3";
    std::vector<std::string> interpreter_args = {"-I", "-S"};
    std::filesystem::path temp_root = std::filesystem::temp_directory_path();
    int parallelism = 0;  // 0: one worker per CPU
    bool cache_verdicts = false;
    Launch launch = Launch::kForkServer;
  };

  // Throws SandboxSetupFailure when the interpreter cannot be found or the
  // temp root is not writable.
  explicit Sandbox(Options options);
  Sandbox() : Sandbox(Options{}) {}
  ~Sandbox();

  // Runs each assertion in a fresh interpreter process in a fresh temp dir.
  ExecutionVerdict verify(const std::string& program,
                          const std::vector<TestCase>& tests,
                          const ResourceLimits& limits = {}) const;

  // Reference solution with `edit` applied, then verify().
  ExecutionVerdict verify_edit(const Problem& problem, const LineEdit& edit,
                               const ResourceLimits& limits = {}) const;

  struct Job {
    std::string program;
    const std::vector<TestCase>* tests;
  };
  // Runs jobs on the worker pool; results are in job order.
  std::vector<ExecutionVerdict> verify_batch(
      const std::vector<Job>& jobs, const ResourceLimits& limits = {}) const;

  // One interpreter run of an arbitrary script; exposed for the adequacy
  // screening and output-recording helpers, which report through stderr.
  // Only the last `keep_bytes` of stderr are kept.
  ProcessResult run_script(const std::string& script,
                           const ResourceLimits& limits,
                           std::size_t keep_bytes = kFailureExcerptBytes) const;

  const std::string& interpreter() const { return interpreter_; }
  int parallelism() const { return parallelism_; }
  std::size_t cache_size() const;

 private:
  ProcessResult run_exec(const std::string& script,
                         const ResourceLimits& limits,
                         std::size_t keep_bytes) const;
  ProcessResult run_forked(const std::string& script,
                           const ResourceLimits& limits,
                           std::size_t keep_bytes) const;
  ExecutionVerdict verify_uncached(const std::string& program,
                                   const std::vector<TestCase>& tests,
                                   const ResourceLimits& limits) const;

  Options options_;
  std::string interpreter_;
  int parallelism_ = 1;
  mutable std::mutex cache_mu_;
  mutable std::map<std::uint64_t, ExecutionVerdict> cache_;
  mutable std::mutex pool_mu_;
  mutable std::vector<std::unique_ptr<ForkServer>> idle_servers_;
};

// First interpreter found on PATH (or the absolute path itself).
std::optional<std::string> find_executable(const std::string& name);

}  // namespace prl

#endif  // PRL_SANDBOX_HPP_
