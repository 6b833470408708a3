#include "prl/testgen.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <json.hpp>
#include <set>

#include "prl/errors.hpp"
#include "prl/util.hpp"

namespace prl {

namespace {

constexpr std::size_t kCaptureBytes = 1u << 20;

// Reports "C <assertion>" lines on stderr, one per observed input/output
// pair of the reference.
constexpr std::string_view kEnumerateScript = R"PY(
import ast, copy, itertools, signal, sys

def _alarm(*_):
    raise TimeoutError()

signal.signal(signal.SIGALRM, _alarm)

INTS = [0, 1, -1, 2, -2, 3, -3]
POOLS = {
    "int": INTS,
    "bool": [True, False],
    "float": [0.0, 1.0, -1.0, 2.5, -0.5],
    "str": ["", "a", "ab", "abc", "aba", "AbC", "a b c", "Hello World", "hello"],
    "list": [[], [0], [1], [-1], [1, 2, 3], [3, 1, 2], [-1, 0, 1], [2, 2],
             [-3, 5, 0, 2], [1, 1, 2, 2, 2]],
    "strlist": [[], ["a"], ["ab", "abc"], ["", "xyz", "hello"], ["aa", "b"]],
    "tuple": [(), (0,), (1, 2), (3, 1, 2), (-1, 0, 1)],
    "dict": [{}, {"a": 1}, {"a": 1, "b": 2}],
}

def kind(v):
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, str):
        return "str"
    if isinstance(v, list):
        if v and all(isinstance(x, str) for x in v):
            return "strlist"
        return "list"
    if isinstance(v, tuple):
        return "tuple"
    if isinstance(v, dict):
        return "dict"
    return "int"

tree = ast.parse(CODE)
defs = [n for n in tree.body if isinstance(n, ast.FunctionDef)]
names = {d.name for d in defs}
fname, arity, kinds = None, None, None
for t in TESTS:
    try:
        nodes = list(ast.walk(ast.parse(t)))
    except SyntaxError:
        continue
    for node in nodes:
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in names and not node.keywords):
            if fname is None:
                fname, arity = node.func.id, len(node.args)
                kinds = [None] * arity
            if node.func.id == fname and len(node.args) == arity:
                for i, a in enumerate(node.args):
                    if kinds[i] is None:
                        try:
                            kinds[i] = kind(ast.literal_eval(a))
                        except Exception:
                            pass
            break
if fname is None:
    if not defs:
        sys.exit(0)
    fname, arity = defs[0].name, len(defs[0].args.args)
    kinds = [None] * arity
kinds = [k or "int" for k in kinds]

ns = {"__name__": "solution"}
exec(compile(CODE, "<solution>", "exec"), ns)
fn = ns[fname]
pools = [POOLS[k] for k in kinds]
combos = list(itertools.islice(
    itertools.product(*[list(enumerate(p)) for p in pools]), 20000))
combos.sort(key=lambda c: (sum(i for i, _ in c), [i for i, _ in c]))
existing = set(TESTS)
emitted = 0
for combo in combos:
    if emitted >= MAXC:
        break
    args = [v for _, v in combo]
    call = "%s(%s)" % (fname, ", ".join(repr(a) for a in args))
    try:
        signal.setitimer(signal.ITIMER_REAL, CALL_TIMEOUT)
        out = fn(*copy.deepcopy(args))
        signal.setitimer(signal.ITIMER_REAL, 0)
    except BaseException:
        signal.setitimer(signal.ITIMER_REAL, 0)
        continue
    try:
        if ast.literal_eval(repr(out)) != out:
            continue
    except Exception:
        continue
    line = "assert %s == %r" % (call, out)
    if line in existing or "\n" in line:
        continue
    sys.stderr.write("C " + line + "\n")
    emitted += 1
)PY";

// Executes PROGRAM once, then every candidate assertion in a copy of its
// namespace; reports "K <indices>" of candidates that fail.
constexpr std::string_view kScreenScript = R"PY(
import signal, sys

def _alarm(*_):
    raise TimeoutError()

signal.signal(signal.SIGALRM, _alarm)
ns = {"__name__": "solution"}
try:
    signal.setitimer(signal.ITIMER_REAL, CALL_TIMEOUT)
    exec(compile(PROGRAM, "<solution>", "exec"), ns)
    signal.setitimer(signal.ITIMER_REAL, 0)
except BaseException:
    sys.stderr.write("K *\n")
    sys.exit(0)
failed = []
for i, c in enumerate(CANDS):
    try:
        signal.setitimer(signal.ITIMER_REAL, CALL_TIMEOUT)
        exec(c, dict(ns))
        signal.setitimer(signal.ITIMER_REAL, 0)
    except BaseException:
        signal.setitimer(signal.ITIMER_REAL, 0)
        failed.append(i)
sys.stderr.write("K " + " ".join(map(str, failed)) + "\n")
)PY";

std::string py_assign(const std::string& name, const nlohmann::json& value) {
  return name + " = " + value.dump() + "\n";
}

ResourceLimits script_limits(const TestgenOptions& options,
                             std::size_t calls) {
  ResourceLimits lim = options.limits;
  const auto budget = std::chrono::milliseconds(static_cast<long>(
      1000.0 * options.call_timeout_s * static_cast<double>(calls + 1) +
      2000.0));
  lim.wall = std::max(lim.wall, budget);
  return lim;
}

// Indices of `candidates` that fail (or cannot run) against `program`.
std::set<std::size_t> screen(const std::string& program,
                             const std::vector<std::string>& candidates,
                             const Sandbox& sandbox,
                             const TestgenOptions& options) {
  std::string script = py_assign("PROGRAM", program) +
                       py_assign("CANDS", candidates) +
                       "CALL_TIMEOUT = " +
                       std::to_string(options.call_timeout_s) + "\n";
  script += kScreenScript;
  const auto r = sandbox.run_script(
      script, script_limits(options, candidates.size()), kCaptureBytes);
  std::set<std::size_t> failed;
  const auto pos = r.stderr_tail.rfind("K ");
  if (r.exit_code != 0 || pos == std::string::npos ||
      r.stderr_tail.compare(pos, 3, "K *") == 0) {
    // The program does not even load: every candidate "fails".
    for (std::size_t i = 0; i < candidates.size(); ++i) failed.insert(i);
    return failed;
  }
  const auto line = r.stderr_tail.substr(pos + 2);
  for (const auto& tok : split(trim(line), ' ')) {
    if (!tok.empty()) failed.insert(std::stoul(tok));
  }
  return failed;
}

std::vector<TestCase> enumerate_tests(const Problem& problem,
                                      const Sandbox& sandbox,
                                      const TestgenOptions& options) {
  std::vector<std::string> tests;
  for (const auto& t : problem.tests) tests.push_back(t.assertion);
  std::string script = py_assign("CODE", problem.reference_code) +
                       py_assign("TESTS", tests) +
                       "MAXC = " + std::to_string(options.max_candidates) +
                       "\nCALL_TIMEOUT = " +
                       std::to_string(options.call_timeout_s) + "\n";
  script += kEnumerateScript;
  const auto r = sandbox.run_script(
      script, script_limits(options, options.max_candidates * 4),
      kCaptureBytes);
  std::vector<TestCase> out;
  for (const auto& line : split(r.stderr_tail, '\n')) {
    if (line.rfind("C assert ", 0) == 0) {
      out.push_back({line.substr(2), TestOrigin::kAugmented});
    }
  }
  return out;
}

std::vector<TestCase> teacher_tests(const Problem& problem,
                                    const TestgenOptions& options) {
  std::string tests;
  for (const auto& t : problem.tests) tests += t.assertion + "\n";
  nlohmann::json body;
  body["mode"] = "testgen";
  body["line"] = "";
  body["context"] = problem.reference_code;
  body["problem"] = std::string(kTestgenPrompt) + "\n\nCode:\n" +
                    problem.reference_code + "\nExisting test cases:\n" +
                    tests;
  TeacherClient client(*options.teacher_endpoint);
  auto out = parse_assertions(client.request_field(body.dump(), "assertion"));
  for (auto& t : out) t.origin = TestOrigin::kAugmented;
  return out;
}

AugmentResult accept_with(const Problem& problem, MutantSet mutants,
                          const std::vector<TestCase>& candidates,
                          const Sandbox& sandbox,
                          const TestgenOptions& options) {
  AugmentResult res;
  res.problem = problem;
  res.adequacy_before = mutants.adequacy();
  res.adequacy_after = res.adequacy_before;
  res.survivors_before = mutants.size() - mutants.killed_count();

  std::vector<std::string> cands;
  {
    std::set<std::string> seen;
    for (const auto& t : problem.tests) seen.insert(t.assertion);
    for (const auto& c : candidates) {
      if (seen.insert(c.assertion).second) cands.push_back(c.assertion);
    }
  }
  const auto survivors = mutants.survivors();
  if (cands.empty() || survivors.empty()) return res;

  const auto ref_failed =
      screen(problem.reference_code, cands, sandbox, options);
  std::vector<std::set<std::size_t>> kills(cands.size());
  for (const auto m : survivors) {
    for (const auto c : screen(mutants.programs[m], cands, sandbox, options)) {
      kills[c].insert(m);
    }
  }
  std::vector<bool> rejected(cands.size(), false);
  for (const auto c : ref_failed) rejected[c] = true;

  while (res.accepted < options.max_new_tests) {
    std::size_t best = cands.size();
    std::size_t best_gain = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (rejected[c]) continue;
      std::size_t gain = 0;
      for (const auto m : kills[c]) gain += mutants.killed[m] ? 0 : 1;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    if (best == cands.size()) break;
    rejected[best] = true;
    const std::vector<TestCase> one{{cands[best], TestOrigin::kAugmented}};
    if (!sandbox.verify(problem.reference_code, one, options.limits)
             .passed()) {
      continue;
    }
    std::size_t newly = 0;
    for (const auto m : kills[best]) {
      if (mutants.killed[m]) continue;
      if (!sandbox.verify(mutants.programs[m], one, options.limits).passed()) {
        mutants.killed[m] = true;
        ++newly;
      }
    }
    if (newly == 0) continue;
    res.problem.tests.push_back(one[0]);
    ++res.accepted;
    res.survivors_flipped += newly;
  }
  res.adequacy_after = mutants.adequacy();
  return res;
}

}  // namespace

std::string_view to_string(AdequacyMethod method) {
  return method == AdequacyMethod::kCoverage ? "coverage" : "mutation_kill";
}

AdequacyMethod parse_adequacy_method(std::string_view name) {
  if (name == "coverage") return AdequacyMethod::kCoverage;
  if (name == "mutation_kill") return AdequacyMethod::kMutationKill;
  throw InvalidInput("unknown adequacy method: " + std::string(name));
}

MutationRuleSet adequacy_rules() {
  MutationRuleSet rules;
  for (const auto r : kMutationRules) rules.enabled_rules.emplace_back(r);
  rules.max_edits_per_line = 1000;
  return rules;
}

std::size_t MutantSet::killed_count() const {
  return static_cast<std::size_t>(
      std::count(killed.begin(), killed.end(), true));
}

double MutantSet::adequacy() const {
  if (programs.empty()) return 1.0;
  return static_cast<double>(killed_count()) /
         static_cast<double>(programs.size());
}

std::vector<std::size_t> MutantSet::survivors() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < killed.size(); ++i) {
    if (!killed[i]) out.push_back(i);
  }
  return out;
}

MutantSet build_mutants(const Problem& problem, const Sandbox& sandbox,
                        const TestgenOptions& options) {
  MutantSet set;
  set.edits = edit_problem(problem, options.rules, true, false);
  const auto code = problem.code_lines();
  std::vector<Sandbox::Job> jobs;
  for (const auto& e : set.edits) {
    set.programs.push_back(apply_edit(code, e));
  }
  for (const auto& p : set.programs) jobs.push_back({p, &problem.tests});
  for (const auto& v : sandbox.verify_batch(jobs, options.limits)) {
    set.killed.push_back(!v.passed());
  }
  return set;
}

double measure_adequacy(const Problem& problem, AdequacyMethod method,
                        const Sandbox& sandbox, const TestgenOptions& options,
                        CoverageRunner* coverage) {
  if (method == AdequacyMethod::kCoverage) {
    if (!coverage) {
      throw ShimUnavailable("branch coverage needs an instrumented runner");
    }
    return coverage->branch_coverage(problem);
  }
  return build_mutants(problem, sandbox, options).adequacy();
}

std::vector<TestCase> parse_assertions(std::string_view text) {
  std::vector<TestCase> out;
  for (const auto& raw : split(text, '\n')) {
    auto line = std::string(trim(raw));
    if (line.rfind("```", 0) == 0) continue;
    if (starts_with_word(line, "assert")) {
      out.push_back({line, TestOrigin::kAugmented});
    }
  }
  return out;
}

std::vector<TestCase> propose_tests(const Problem& problem,
                                    const Sandbox& sandbox,
                                    const TestgenOptions& options) {
  if (measure_adequacy(problem, options.method, sandbox, options) >= 1.0) {
    throw PreconditionViolation("problem " + std::to_string(problem.id) +
                                " is already fully adequate");
  }
  auto out = options.teacher_endpoint ? teacher_tests(problem, options)
                                      : enumerate_tests(problem, sandbox,
                                                        options);
  if (out.empty()) {
    throw NoCandidates("no candidate tests for problem " +
                       std::to_string(problem.id));
  }
  return out;
}

AugmentResult accept_tests(const Problem& problem,
                           const std::vector<TestCase>& candidates,
                           const Sandbox& sandbox,
                           const TestgenOptions& options) {
  return accept_with(problem, build_mutants(problem, sandbox, options),
                     candidates, sandbox, options);
}

AugmentResult augment_problem(const Problem& problem, const Sandbox& sandbox,
                              const TestgenOptions& options) {
  auto mutants = build_mutants(problem, sandbox, options);
  if (mutants.adequacy() >= 1.0) {
    AugmentResult res;
    res.problem = problem;
    res.adequacy_before = res.adequacy_after = 1.0;
    return res;
  }
  std::vector<TestCase> candidates;
  try {
    candidates = options.teacher_endpoint
                     ? teacher_tests(problem, options)
                     : enumerate_tests(problem, sandbox, options);
  } catch (const NoCandidates&) {
  }
  if (candidates.empty()) {
    AugmentResult res;
    res.problem = problem;
    res.adequacy_before = res.adequacy_after = mutants.adequacy();
    res.survivors_before = mutants.size() - mutants.killed_count();
    res.flagged = true;
    spdlog::warn("problem {}: no candidate tests", problem.id);
    return res;
  }
  return accept_with(problem, std::move(mutants), candidates, sandbox,
                     options);
}

}  // namespace prl
