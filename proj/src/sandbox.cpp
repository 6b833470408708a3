#include "prl/sandbox.hpp"

#include <fcntl.h>
#include <omp.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <json.hpp>
#include <thread>

#include "prl/errors.hpp"
#include "prl/util.hpp"

namespace prl {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::filesystem::path& root) {
    std::string tmpl = (root / "prl-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw SandboxSetupFailure("cannot create temp dir under " +
                                root.string() + ": " + std::strerror(errno));
    }
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};


// Python side of the fork server. It only ever imports the standard library
// and forks one child per script; the child applies the limits, redirects
// its streams and runs the script in a fresh namespace.
constexpr std::string_view kForkServerSource = R"PY(
import json, os, resource, select, signal, sys, time
def _limit(res, value):
    try:
        resource.setrlimit(res, (value, value))
    except (ValueError, OSError):
        pass
def _child(req, w):
    os.setpgid(0, 0)
    fd = os.open(os.devnull, os.O_RDWR)
    os.dup2(fd, 0)
    os.dup2(fd, 1)
    os.dup2(w, 2)
    os.chdir(req["dir"])
    os.environ["HOME"] = req["dir"]
    _limit(resource.RLIMIT_AS, req["mem"])
    _limit(resource.RLIMIT_CPU, req["cpu"])
    _limit(resource.RLIMIT_CORE, 0)
    _limit(resource.RLIMIT_FSIZE, 16 << 20)
    signal.signal(signal.SIGPIPE, signal.SIG_DFL)
    code = compile(req["script"], "harness.py", "exec")
    exec(code, {"__name__": "__main__"})
    os._exit(0)
def _run(req):
    r, w = os.pipe()
    start = time.monotonic()
    pid = os.fork()
    if pid == 0:
        try:
            os.close(r)
            _child(req, w)
        except SystemExit as e:
            os._exit(e.code if isinstance(e.code, int) else 1)
        except BaseException:
            os._exit(2)
        os._exit(0)
    os.close(w)
    try:
        os.setpgid(pid, pid)
    except OSError:
        pass
    deadline = start + req["wall_ms"] / 1000.0
    keep = req["keep"]
    tail = b""
    timed_out = False
    while True:
        left = deadline - time.monotonic()
        if left <= 0:
            timed_out = True
            break
        ready, _, _ = select.select([r], [], [], left)
        if not ready:
            continue
        chunk = os.read(r, 4096)
        if not chunk:
            break
        tail = (tail + chunk)[-keep:]
    os.close(r)
    status = None
    try:
        pfd = os.pidfd_open(pid)
    except (AttributeError, OSError):
        pfd = None
    while not timed_out:
        done, st = os.waitpid(pid, os.WNOHANG)
        if done == pid:
            status = st
            break
        left = deadline - time.monotonic()
        if left <= 0:
            timed_out = True
            break
        if pfd is not None:
            select.select([pfd], [], [], left)
        else:
            time.sleep(0.0002)
    if pfd is not None:
        os.close(pfd)
    if timed_out:
        for target in (-pid, pid):
            try:
                os.kill(target, signal.SIGKILL)
            except OSError:
                pass
        os.waitpid(pid, 0)
        code = 124
    elif os.WIFEXITED(status):
        code = os.WEXITSTATUS(status)
    elif os.WIFSIGNALED(status) and os.WTERMSIG(status) == signal.SIGXCPU:
        code = 124
    else:
        code = 2
    ms = (time.monotonic() - start) * 1000.0
    return {"exit": code, "err": tail.decode("utf-8", "replace"), "ms": ms}
signal.signal(signal.SIGPIPE, signal.SIG_DFL)
for line in sys.stdin.buffer:
    reply = _run(json.loads(line))
    os.write(1, (json.dumps(reply) + "\n").encode())
)PY";

void set_limit(int resource, rlim_t value) {
  struct rlimit rl {
    value, value
  };
  ::setrlimit(resource, &rl);
}

std::vector<std::string> child_env(const std::filesystem::path& home) {
  return {"PATH=/usr/bin:/bin", "LANG=C.UTF-8", "PYTHONHASHSEED=0",
          "PYTHONDONTWRITEBYTECODE=1", "HOME=" + home.string()};
}

}  // namespace

// A long-lived interpreter that forks one fresh child per script, which
// avoids interpreter start-up on every test. Not thread safe; the sandbox
// hands each worker its own server.
class ForkServer {
 public:
  ForkServer(const std::string& interpreter,
             const std::vector<std::string>& interpreter_args,
             std::vector<std::string> env) {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0 ||
        ::pipe2(out_pipe, O_CLOEXEC) != 0) {
      throw SandboxSetupFailure(std::string("pipe: ") + std::strerror(errno));
    }
    std::vector<std::string> args{interpreter};
    args.insert(args.end(), interpreter_args.begin(), interpreter_args.end());
    args.push_back("-c");
    args.emplace_back(kForkServerSource);
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    std::vector<char*> envp;
    for (auto& e : env) envp.push_back(e.data());
    envp.push_back(nullptr);
    pid_ = ::fork();
    if (pid_ < 0) {
      throw SandboxSetupFailure(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::execve(argv[0], argv.data(), envp.data());
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_ = in_pipe[1];
    from_ = out_pipe[0];
  }

  ~ForkServer() {
    ::close(to_);
    ::close(from_);
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  ForkServer(const ForkServer&) = delete;
  ForkServer& operator=(const ForkServer&) = delete;

  // nullopt when the server itself failed; the caller replaces it.
  std::optional<ProcessResult> run(const std::string& request,
                                   std::chrono::milliseconds patience) {
    std::string line = request + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
      const auto n = ::write(to_, line.data() + off, line.size() - off);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      off += static_cast<std::size_t>(n);
    }
    const auto deadline = Clock::now() + patience;
    std::size_t nl;
    while ((nl = buf_.find('\n')) == std::string::npos) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd pfd{from_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc <= 0) continue;
      char chunk[8192];
      const auto n = ::read(from_, chunk, sizeof chunk);
      if (n <= 0) return std::nullopt;
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
    const auto reply = buf_.substr(0, nl);
    buf_.erase(0, nl + 1);
    try {
      const auto j = nlohmann::json::parse(reply);
      ProcessResult r;
      r.exit_code = j.at("exit").get<int>();
      r.stderr_tail = j.at("err").get<std::string>();
      r.wall_time_ms = j.at("ms").get<double>();
      return r;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  }

 private:
  pid_t pid_ = -1;
  int to_ = -1;
  int from_ = -1;
  std::string buf_;
};

std::string_view to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::kAllPassed:
      return "all_passed";
    case VerdictStatus::kTestFailed:
      return "test_failed";
    case VerdictStatus::kRuntimeError:
      return "runtime_error";
    case VerdictStatus::kTimeout:
      return "timeout";
    case VerdictStatus::kCompileError:
      return "compile_error";
  }
  return "runtime_error";
}

VerdictStatus parse_verdict_status(std::string_view name) {
  if (name == "all_passed") return VerdictStatus::kAllPassed;
  if (name == "test_failed") return VerdictStatus::kTestFailed;
  if (name == "runtime_error") return VerdictStatus::kRuntimeError;
  if (name == "timeout") return VerdictStatus::kTimeout;
  if (name == "compile_error") return VerdictStatus::kCompileError;
  throw InvalidInput("unknown verdict status: " + std::string(name));
}

std::string harness_script(std::string_view program,
                           std::string_view assertion) {
  // A JSON string literal is also a valid Python string literal.
  const auto prog = nlohmann::json(std::string(program)).dump();
  const auto test = nlohmann::json(std::string(assertion)).dump();
  std::string s;
  s += "import os, sys\n";
  s += "_PROGRAM = " + prog + "\n";
  s += "_TEST = " + test + "\n";
  s += R"(def _fail(code, label):
    try:
        e = sys.exc_info()[1]
        sys.stderr.write("%s: %s\n" % (label or type(e).__name__, e))
        sys.stderr.flush()
    except BaseException:
        pass
    os._exit(code)
try:
    _code = compile(_PROGRAM, "solution.py", "exec")
except BaseException:
    _fail(3, None)
_ns = {"__name__": "solution"}
try:
    exec(_code, _ns)
    exec(compile(_TEST, "test.py", "exec"), _ns)
except AssertionError:
    _fail(1, "AssertionError: " + _TEST)
except BaseException:
    _fail(2, None)
try:
    sys.stdout.flush()
except BaseException:
    pass
os._exit(0)
)";
  return s;
}

std::optional<std::string> find_executable(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return name;
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  for (const auto& dir : split(path ? path : "/usr/bin:/bin", ':')) {
    if (dir.empty()) continue;
    const auto candidate = std::filesystem::path(dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate.string();
  }
  return std::nullopt;
}

Sandbox::Sandbox(Options options) : options_(std::move(options)) {
  std::string wanted = options_.interpreter;
  if (const char* env = std::getenv("SANDBOX_INTERPRETER"); env && *env) {
    wanted = env;
  }
  const auto found = find_executable(wanted);
  if (!found) {
    throw SandboxSetupFailure("interpreter not found: " + wanted);
  }
  interpreter_ = *found;
  std::error_code ec;
  std::filesystem::create_directories(options_.temp_root, ec);
  if (::access(options_.temp_root.c_str(), W_OK) != 0) {
    throw SandboxSetupFailure("temp root not writable: " +
                              options_.temp_root.string());
  }
  parallelism_ = options_.parallelism > 0
                     ? options_.parallelism
                     : static_cast<int>(std::max(
                           1u, std::thread::hardware_concurrency()));
}

Sandbox::~Sandbox() = default;

ProcessResult Sandbox::run_script(const std::string& script,
                                  const ResourceLimits& limits,
                                  std::size_t keep_bytes) const {
  return options_.launch == Launch::kForkServer
             ? run_forked(script, limits, keep_bytes)
             : run_exec(script, limits, keep_bytes);
}

ProcessResult Sandbox::run_forked(const std::string& script,
                                  const ResourceLimits& limits,
                                  std::size_t keep_bytes) const {
  std::unique_ptr<ForkServer> server;
  {
    std::lock_guard<std::mutex> lock(pool_mu_);
    if (!idle_servers_.empty()) {
      server = std::move(idle_servers_.back());
      idle_servers_.pop_back();
    }
  }
  TempDir dir(options_.temp_root);
  nlohmann::json req;
  req["dir"] = dir.path().string();
  req["script"] = script;
  req["wall_ms"] = limits.wall.count();
  req["mem"] = limits.memory_bytes;
  req["cpu"] =
      std::chrono::duration_cast<std::chrono::seconds>(limits.wall).count() +
      2;
  req["keep"] = keep_bytes;
  const auto request = req.dump(-1, ' ', false,
                                nlohmann::json::error_handler_t::replace);
  const auto patience = limits.wall + std::chrono::seconds(10);
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (!server) {
      server = std::make_unique<ForkServer>(
          interpreter_, options_.interpreter_args, child_env(dir.path()));
    }
    if (auto r = server->run(request, patience)) {
      std::lock_guard<std::mutex> lock(pool_mu_);
      idle_servers_.push_back(std::move(server));
      return *r;
    }
    server.reset();
  }
  throw SandboxSetupFailure("fork server for " + interpreter_ +
                            " failed twice");
}

ProcessResult Sandbox::run_exec(const std::string& script,
                                const ResourceLimits& limits,
                                std::size_t keep_bytes) const {
  TempDir dir(options_.temp_root);
  const auto script_path = dir.path() / "harness.py";
  write_file(script_path, script);

  // Everything the child touches is prepared before fork.
  std::vector<std::string> args{interpreter_};
  args.insert(args.end(), options_.interpreter_args.begin(),
              options_.interpreter_args.end());
  args.push_back(script_path.string());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  auto env = child_env(dir.path());
  std::vector<char*> envp;
  for (auto& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  const std::string workdir = dir.path().string();
  const auto cpu_secs = static_cast<rlim_t>(
      std::chrono::duration_cast<std::chrono::seconds>(limits.wall).count() +
      2);
  const auto mem = static_cast<rlim_t>(limits.memory_bytes);

  int err_pipe[2];
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    throw SandboxSetupFailure(std::string("pipe: ") + std::strerror(errno));
  }
  const auto start = Clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    throw SandboxSetupFailure(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    const int devnull = ::open("/dev/null", O_RDWR);
    ::dup2(devnull, STDIN_FILENO);
    ::dup2(devnull, STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    if (::chdir(workdir.c_str()) != 0) ::_exit(kExitRuntime);
    set_limit(RLIMIT_AS, mem);
    set_limit(RLIMIT_CPU, cpu_secs);
    set_limit(RLIMIT_CORE, 0);
    set_limit(RLIMIT_FSIZE, 16u << 20);
    ::execve(argv[0], argv.data(), envp.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(err_pipe[1]);

  ProcessResult result;
  const auto deadline = start + limits.wall;
  bool timed_out = false;
  bool eof = false;
  char buf[4096];
  while (!eof) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    if (remaining.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{err_pipe[0], POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) continue;
    const auto n = ::read(err_pipe[0], buf, sizeof buf);
    if (n <= 0) {
      eof = true;
      break;
    }
    result.stderr_tail.append(buf, static_cast<std::size_t>(n));
    if (result.stderr_tail.size() > keep_bytes) {
      result.stderr_tail.erase(0, result.stderr_tail.size() - keep_bytes);
    }
  }
  ::close(err_pipe[0]);

  int status = 0;
  while (!timed_out) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) break;
    if (Clock::now() >= deadline) {
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    result.exit_code = kExitTimeout;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else {
    // Killed by a signal (memory or CPU limit): a runtime error.
    result.exit_code = kExitRuntime;
    if (WIFSIGNALED(status) && WTERMSIG(status) == SIGXCPU) {
      result.exit_code = kExitTimeout;
    }
  }
  result.wall_time_ms = ms_since(start);
  return result;
}

ExecutionVerdict Sandbox::verify_uncached(const std::string& program,
                                          const std::vector<TestCase>& tests,
                                          const ResourceLimits& limits) const {
  ExecutionVerdict v;
  v.total_count = tests.size();
  auto note_failure = [&](const ProcessResult& r) {
    if (!v.first_failure) {
      v.first_failure = std::string(trim(r.stderr_tail));
      if (r.exit_code == kExitTimeout) {
        v.first_failure = "timeout after " +
                          std::to_string(limits.wall.count()) + " ms";
      }
    }
  };
  auto account = [&](const ProcessResult& r) {
    v.wall_time_ms = std::max(v.wall_time_ms, r.wall_time_ms);
    v.total_time_ms += r.wall_time_ms;
  };

  if (tests.empty()) {
    const auto r = run_script(harness_script(program, "pass"), limits);
    account(r);
    if (r.exit_code == kExitSyntax) {
      v.status = VerdictStatus::kCompileError;
      note_failure(r);
    }
    return v;
  }

  for (const auto& test : tests) {
    const auto r = run_script(harness_script(program, test.assertion), limits);
    account(r);
    VerdictStatus s = VerdictStatus::kAllPassed;
    switch (r.exit_code) {
      case kExitPass:
        ++v.passed_count;
        continue;
      case kExitAssertion:
        s = VerdictStatus::kTestFailed;
        break;
      case kExitSyntax:
        s = VerdictStatus::kCompileError;
        break;
      case kExitTimeout:
        s = VerdictStatus::kTimeout;
        break;
      default:
        s = VerdictStatus::kRuntimeError;
        break;
    }
    note_failure(r);
    v.status = std::max(v.status, s);
    if (s == VerdictStatus::kCompileError) {
      v.passed_count = 0;
      break;
    }
    if (s == VerdictStatus::kTimeout && limits.skip_after_timeout) break;
  }
  return v;
}

ExecutionVerdict Sandbox::verify(const std::string& program,
                                 const std::vector<TestCase>& tests,
                                 const ResourceLimits& limits) const {
  if (!options_.cache_verdicts) return verify_uncached(program, tests, limits);
  std::uint64_t key = fnv1a(program);
  for (const auto& t : tests) key = fnv1a(t.assertion, fnv1a("\x1f", key));
  key = combine_seed(key, static_cast<std::uint64_t>(limits.wall.count()));
  {
    std::lock_guard<std::mutex> lock(cache_mu_);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto v = verify_uncached(program, tests, limits);
  std::lock_guard<std::mutex> lock(cache_mu_);
  cache_.emplace(key, v);
  return v;
}

ExecutionVerdict Sandbox::verify_edit(const Problem& problem,
                                      const LineEdit& edit,
                                      const ResourceLimits& limits) const {
  return verify(apply_edit(problem.code_lines(), edit), problem.tests, limits);
}

std::vector<ExecutionVerdict> Sandbox::verify_batch(
    const std::vector<Job>& jobs, const ResourceLimits& limits) const {
  std::vector<ExecutionVerdict> out(jobs.size());
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallelism_)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& job = jobs[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = verify(job.program, *job.tests, limits);
    } catch (...) {
#pragma omp critical(prl_sandbox_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::size_t Sandbox::cache_size() const {
  std::lock_guard<std::mutex> lock(cache_mu_);
  return cache_.size();
}

}  // namespace prl
