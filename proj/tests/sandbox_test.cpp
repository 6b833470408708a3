#include "prl/sandbox.hpp"

#include <random>

#include <gtest/gtest.h>

#include "prl/errors.hpp"

namespace prl {
namespace {

const std::vector<TestCase> kTests = {{"assert f(1) == 2"}, {"assert f(5) == 6"}};

ResourceLimits short_limits() {
  ResourceLimits l;
  l.wall = std::chrono::milliseconds(1000);
  return l;
}

Sandbox make(Sandbox::Launch launch, int parallelism = 1) {
  Sandbox::Options o;
  o.launch = launch;
  o.parallelism = parallelism;
  return Sandbox(o);
}

TEST(SandboxTest, AllPassed) {
  const auto v = make(Sandbox::Launch::kForkServer)
                     .verify("def f(x):\n    return x + 1\n", kTests, short_limits());
  EXPECT_EQ(v.status, VerdictStatus::kAllPassed);
  EXPECT_EQ(v.passed_count, 2u);
  EXPECT_EQ(v.total_count, 2u);
  EXPECT_FALSE(v.first_failure.has_value());
}

TEST(SandboxTest, StatusesBySeverity) {
  const auto sb = make(Sandbox::Launch::kForkServer);
  const auto lim = short_limits();
  EXPECT_EQ(sb.verify("def f(x):\n    return 2\n", kTests, lim).status,
            VerdictStatus::kTestFailed);
  EXPECT_EQ(sb.verify("def f(x):\n    return x / 0\n", kTests, lim).status,
            VerdictStatus::kRuntimeError);
  EXPECT_EQ(sb.verify("def f(x)\n    return x\n", kTests, lim).status,
            VerdictStatus::kCompileError);
  const auto slow =
      sb.verify("def f(x):\n    while True:\n        pass\n", kTests, lim);
  EXPECT_EQ(slow.status, VerdictStatus::kTimeout);
  EXPECT_EQ(slow.passed_count, 0u);
  EXPECT_LT(slow.wall_time_ms, 3000.0);
}

TEST(SandboxTest, MixedOutcomesReportWorst) {
  const std::vector<TestCase> tests = {{"assert f(1) == 2"}, {"assert f(0) == 1"}};
  const auto v = make(Sandbox::Launch::kForkServer)
                     .verify("def f(x):\n    return 1 + 1 // x\n", tests, short_limits());
  EXPECT_EQ(v.status, VerdictStatus::kRuntimeError);
  EXPECT_EQ(v.passed_count, 1u);
  ASSERT_TRUE(v.first_failure.has_value());
  EXPECT_NE(v.first_failure->find("ZeroDivisionError"), std::string::npos);
  EXPECT_LE(v.first_failure->size(), kFailureExcerptBytes);
}

TEST(SandboxTest, ProcessesAreIsolated) {
  const std::vector<TestCase> tests = {{"assert g() == 1"}, {"assert g() == 1"}};
  const auto program =
      "import builtins\n"
      "def g():\n"
      "    builtins.counter = getattr(builtins, 'counter', 0) + 1\n"
      "    return builtins.counter\n";
  for (const auto launch : {Sandbox::Launch::kForkServer, Sandbox::Launch::kExec}) {
    EXPECT_TRUE(make(launch).verify(program, tests, short_limits()).passed());
  }
}

TEST(SandboxTest, MemoryLimitIsEnforced) {
  ResourceLimits lim = short_limits();
  lim.memory_bytes = 64u << 20;
  const auto v = make(Sandbox::Launch::kForkServer)
                     .verify("def f(x):\n    return len(bytearray(512 << 20))\n",
                             kTests, lim);
  EXPECT_EQ(v.status, VerdictStatus::kRuntimeError);
}

TEST(SandboxTest, ExecAndForkServerAgree) {
  const auto fork = make(Sandbox::Launch::kForkServer);
  const auto exec = make(Sandbox::Launch::kExec);
  const char* bodies[] = {"return x + 1", "return x",     "return x / 0",
                          "return x +",   "return None",  "return x - -1",
                          "raise ValueError(x)", "return [x][1]"};
  std::mt19937_64 rng(5);
  for (int i = 0; i < 24; ++i) {
    const std::string program =
        std::string("def f(x):\n    ") + bodies[rng() % 8] + "\n";
    const auto a = fork.verify(program, kTests, short_limits());
    const auto b = exec.verify(program, kTests, short_limits());
    EXPECT_EQ(a.status, b.status) << program;
    EXPECT_EQ(a.passed_count, b.passed_count) << program;
  }
}

TEST(SandboxTest, BatchKeepsJobOrderAndMatchesSingleCalls) {
  const auto sb = make(Sandbox::Launch::kForkServer, 2);
  const std::vector<std::string> programs = {
      "def f(x):\n    return x + 1\n", "def f(x):\n    return 0\n",
      "def f(x):\n    return x / 0\n", "def f(x)\n"};
  std::vector<Sandbox::Job> jobs;
  for (const auto& p : programs) jobs.push_back({p, &kTests});
  const auto batch = sb.verify_batch(jobs, short_limits());
  ASSERT_EQ(batch.size(), programs.size());
  for (std::size_t i = 0; i < programs.size(); ++i) {
    EXPECT_EQ(batch[i].status, sb.verify(programs[i], kTests, short_limits()).status);
  }
}

TEST(SandboxTest, CacheReturnsSameVerdict) {
  Sandbox::Options o;
  o.cache_verdicts = true;
  Sandbox sb(o);
  const auto a = sb.verify("def f(x):\n    return x + 1\n", kTests, short_limits());
  EXPECT_EQ(sb.cache_size(), 1u);
  const auto b = sb.verify("def f(x):\n    return x + 1\n", kTests, short_limits());
  EXPECT_EQ(sb.cache_size(), 1u);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.passed_count, b.passed_count);
}

TEST(SandboxTest, VerifyEditAppliesTheEdit) {
  Problem p;
  p.reference_code = "def f(x):\n    return x + 1\n";
  p.tests = kTests;
  LineEdit e;
  e.line_index = 1;
  e.original_line = "    return x + 1";
  e.edited_line = "    return x - 1";
  const auto sb = make(Sandbox::Launch::kForkServer);
  EXPECT_EQ(sb.verify_edit(p, e, short_limits()).status, VerdictStatus::kTestFailed);
}

TEST(SandboxTest, MissingInterpreter) {
  Sandbox::Options o;
  o.interpreter = "/nonexistent/python";
  EXPECT_THROW(Sandbox{o}, SandboxSetupFailure);
}

TEST(SandboxTest, HarnessScriptCompilesFirst) {
  const auto s = harness_script("x = 1", "assert x == 1");
  EXPECT_NE(s.find("compile"), std::string::npos);
  EXPECT_NE(s.find("assert x == 1"), std::string::npos);
}

TEST(VerdictStatusTest, NamesRoundTrip) {
  for (const auto s : {VerdictStatus::kAllPassed, VerdictStatus::kTestFailed,
                       VerdictStatus::kRuntimeError, VerdictStatus::kTimeout,
                       VerdictStatus::kCompileError}) {
    EXPECT_EQ(parse_verdict_status(to_string(s)), s);
  }
}

}  // namespace
}  // namespace prl
