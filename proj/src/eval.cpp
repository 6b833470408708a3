#include "prl/eval.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "prl/errors.hpp"
#include "prl/util.hpp"

namespace prl {

double pass_at_k(long n, long c, long k) {
  if (n < 0 || c < 0 || c > n || k < 1 || k > n) {
    throw InvalidArgs("pass_at_k needs 0 <= c <= n and 1 <= k <= n (n=" +
                      std::to_string(n) + ", c=" + std::to_string(c) +
                      ", k=" + std::to_string(k) + ")");
  }
  if (n - c < k) return 1.0;
  double fail = 1.0;
  for (long i = n - c + 1; i <= n; ++i) {
    fail *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  }
  return 1.0 - fail;
}

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "EZY";
    case Difficulty::kMedium: return "MED";
    case Difficulty::kHard: return "HRD";
  }
  return "?";
}

Difficulty bucket_by_length(std::size_t length) {
  if (length < 50) return Difficulty::kEasy;
  if (length <= 100) return Difficulty::kMedium;
  return Difficulty::kHard;
}

Difficulty bucket_difficulty(const Problem& problem) {
  std::string_view code = problem.reference_code;
  if (!code.empty() && code.back() == '\n') code.remove_suffix(1);
  return bucket_by_length(code.size());
}

double EvalReport::aggregate(std::size_t k, const Difficulty* bucket) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : problems) {
    if (bucket && p.bucket != *bucket) continue;
    const auto it = p.pass_at.find(k);
    if (it == p.pass_at.end()) {
      throw InvalidArgs("k=" + std::to_string(k) + " was not evaluated");
    }
    sum += it->second;
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(count);
}

std::size_t EvalReport::bucket_size(Difficulty bucket) const {
  std::size_t n = 0;
  for (const auto& p : problems) n += p.bucket == bucket;
  return n;
}

std::string EvalReport::to_jsonl() const {
  std::string out;
  for (const auto& p : problems) {
    nlohmann::ordered_json j;
    j["problem_id"] = p.problem_id;
    j["bucket"] = std::string(to_string(p.bucket));
    j["n"] = p.n;
    j["c"] = p.c;
    for (const auto& [k, v] : p.pass_at) j["pass@" + std::to_string(k)] = v;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string EvalReport::table() const {
  std::ostringstream os;
  constexpr Difficulty kBuckets[] = {Difficulty::kEasy, Difficulty::kMedium,
                                     Difficulty::kHard};
  os << std::left << std::setw(10) << "metric";
  for (const auto b : kBuckets) {
    os << std::right << std::setw(10)
       << (std::string(to_string(b)) + "(" + std::to_string(bucket_size(b)) + ")");
  }
  os << std::setw(10) << ("all(" + std::to_string(problems.size()) + ")")
     << "\n";
  os << std::fixed << std::setprecision(1);
  for (const auto k : ks) {
    os << std::left << std::setw(10) << ("pass@" + std::to_string(k));
    for (const auto b : kBuckets) {
      const double v = aggregate(k, &b);
      os << std::right << std::setw(10);
      if (std::isnan(v)) {
        os << "-";
      } else {
        os << 100.0 * v;
      }
    }
    os << std::setw(10) << 100.0 * aggregate(k) << "\n";
  }
  return os.str();
}

EvalReport summarize(const std::vector<const Problem*>& problems,
                     const std::vector<std::size_t>& n,
                     const std::vector<std::size_t>& c,
                     const std::vector<std::size_t>& ks) {
  if (problems.size() != n.size() || n.size() != c.size()) {
    throw InvalidArgs("problem, n and c lists differ in length");
  }
  EvalReport report;
  report.ks = ks;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    ProblemEval e;
    e.problem_id = problems[i]->id;
    e.bucket = bucket_difficulty(*problems[i]);
    e.n = n[i];
    e.c = c[i];
    for (const auto k : ks) {
      e.pass_at[k] = pass_at_k(static_cast<long>(n[i]), static_cast<long>(c[i]),
                               static_cast<long>(k));
    }
    report.problems.push_back(std::move(e));
  }
  return report;
}

EvalReport evaluate_policy(const rl::Policy& policy,
                           const rl::ToyEnvironment& env,
                           const std::vector<std::size_t>& tasks, std::size_t n,
                           const std::vector<std::size_t>& ks,
                           const rl::DecodeConfig& decode,
                           const Sandbox& sandbox, const ResourceLimits& limits,
                           std::uint64_t seed) {
  if (n == 0) throw InvalidArgs("n must be at least 1");
  auto batch = rl::rollout(policy, env, tasks, n, decode, seed);
  rl::verify_trajectories(batch, env, sandbox, limits);
  std::vector<const Problem*> problems;
  std::vector<std::size_t> ns, cs;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    problems.push_back(&env.problems()[tasks[i]]);
    ns.push_back(n);
    std::size_t c = 0;
    for (std::size_t k = 0; k < n; ++k) c += batch[i * n + k].verdict.passed();
    cs.push_back(c);
  }
  return summarize(problems, ns, cs, ks);
}

std::string_view to_string(SelectionScore s) {
  switch (s) {
    case SelectionScore::kSum: return "sum";
    case SelectionScore::kMin: return "min";
    case SelectionScore::kMean: return "mean";
  }
  return "?";
}

SelectionScore parse_selection_score(std::string_view name) {
  if (name == "sum") return SelectionScore::kSum;
  if (name == "min") return SelectionScore::kMin;
  if (name == "mean") return SelectionScore::kMean;
  throw InvalidArgs("unknown selection score: " + std::string(name));
}

double selection_score(const SegmentRewardTrace& trace, SelectionScore rule) {
  if (trace.rewards.empty()) return 0.0;
  switch (rule) {
    case SelectionScore::kSum:
      return std::accumulate(trace.rewards.begin(), trace.rewards.end(), 0.0);
    case SelectionScore::kMin:
      return *std::min_element(trace.rewards.begin(), trace.rewards.end());
    case SelectionScore::kMean:
      return std::accumulate(trace.rewards.begin(), trace.rewards.end(), 0.0) /
             static_cast<double>(trace.rewards.size());
  }
  return 0.0;
}

std::size_t select_best(const std::vector<SegmentRewardTrace>& traces,
                        SelectionScore rule) {
  if (traces.empty()) throw InvalidArgs("no candidates to select from");
  std::size_t best = 0;
  double best_score = selection_score(traces[0], rule);
  for (std::size_t i = 1; i < traces.size(); ++i) {
    const double s = selection_score(traces[i], rule);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

RejectionResult rejection_sample(const rl::Policy& policy,
                                 const rl::RewardSource& prm,
                                 const rl::ToyEnvironment& env,
                                 std::size_t task, std::size_t n,
                                 const rl::DecodeConfig& decode,
                                 std::uint64_t seed, SelectionScore rule) {
  if (n == 0) throw InvalidArgs("n must be at least 1");
  RejectionResult r;
  r.candidates = rl::rollout(policy, env, {task}, n, decode, seed);
  for (const auto& t : r.candidates) r.traces.push_back(prm.trace(env, t));
  r.chosen = select_best(r.traces, rule);
  return r;
}

RejectionStudy rejection_study(const rl::Policy& policy,
                               const rl::RewardSource& prm,
                               const rl::ToyEnvironment& env,
                               const Sandbox& sandbox,
                               const ResourceLimits& limits, std::size_t n,
                               std::size_t rounds,
                               const rl::DecodeConfig& decode,
                               std::uint64_t seed, SelectionScore rule) {
  if (n == 0 || rounds == 0) throw InvalidArgs("need n >= 1 and rounds >= 1");
  RejectionStudy study;
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t task = 0; task < env.task_count(); ++task) {
      auto res = rejection_sample(policy, prm, env, task, n, decode,
                                  combine_seed(seed, r), rule);
      rl::verify_trajectories(res.candidates, env, sandbox, limits);
      double passed = 0.0;
      for (const auto& c : res.candidates) passed += c.verdict.passed();
      study.uniform_pass_rate += passed / static_cast<double>(n);
      study.selected_pass_rate += res.candidates[res.chosen].verdict.passed();
      ++study.trials;
    }
  }
  study.uniform_pass_rate /= static_cast<double>(study.trials);
  study.selected_pass_rate /= static_cast<double>(study.trials);
  return study;
}

std::size_t ErrorHistogram::errors() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::array<double, 4> ErrorHistogram::fractions() const {
  std::array<double, 4> f{};
  const auto total = errors();
  if (total == 0) return f;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return f;
}

std::string ErrorHistogram::to_json() const {
  nlohmann::ordered_json j;
  const auto f = fractions();
  for (std::size_t i = 0; i < kErrorCategories.size(); ++i) {
    const std::string name(to_string(kErrorCategories[i]));
    j[name] = {{"count", counts[i]}, {"fraction", f[i]}};
  }
  j["passed"] = passed;
  return j.dump();
}

ErrorHistogram error_distribution(const std::vector<VerdictStatus>& statuses) {
  ErrorHistogram h;
  for (const auto s : statuses) {
    if (s == VerdictStatus::kAllPassed) {
      ++h.passed;
      continue;
    }
    for (std::size_t i = 0; i < kErrorCategories.size(); ++i) {
      if (kErrorCategories[i] == s) ++h.counts[i];
    }
  }
  return h;
}

double total_variation(const ErrorHistogram& a, const ErrorHistogram& b) {
  const auto fa = a.fractions();
  const auto fb = b.fractions();
  double d = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) d += std::abs(fa[i] - fb[i]);
  return 0.5 * d;
}

}  // namespace prl
