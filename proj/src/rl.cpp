#include "prl/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "prl/errors.hpp"
#include "prl/mutator.hpp"
#include "prl/util.hpp"

namespace prl::rl {
namespace {

constexpr char kPolicyMagic[] = "prl-policy v1";
constexpr char kValueMagic[] = "prl-value v1";

std::string hex(double v) {
  std::ostringstream os;
  os << std::hexfloat << v;
  return os.str();
}

double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw InvalidInput("bad number in model file: " + tok);
  }
  return v;
}

std::vector<double> softmax(const std::vector<double>& logits, double temp) {
  std::vector<double> p(logits.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto l : logits) hi = std::max(hi, l / temp);
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] / temp - hi);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) -
                                  v.begin());
}

}  // namespace

// ---------------------------------------------------------------- Policy

Policy::Policy(std::size_t vocab_size, std::size_t context, double temperature)
    : vocab_(vocab_size), context_(context), temperature_(temperature) {
  if (vocab_size == 0) throw InvalidArgs("policy needs a vocabulary");
  if (!(temperature > 0.0)) throw InvalidArgs("temperature must be positive");
}

std::uint64_t Policy::state_key(std::size_t task,
                                const std::vector<int>& tokens,
                                std::size_t t) const {
  std::uint64_t h = mix64(0x9e3779b97f4a7c15ULL ^ task);
  for (std::size_t k = context_; k > 0; --k) {
    const std::int64_t tok =
        t >= k ? tokens[t - k] : -1;  // -1 pads before the first token
    h = combine_seed(h, static_cast<std::uint64_t>(tok + 2));
  }
  return h;
}

std::ptrdiff_t Policy::row_index(std::uint64_t key) const {
  const auto it = rows_.find(key);
  return it == rows_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::vector<double> Policy::logits(std::uint64_t key) const {
  const auto r = row_index(key);
  if (r < 0) return std::vector<double>(vocab_, 0.0);
  const auto* p = table_.data() + static_cast<std::size_t>(r) * vocab_;
  return std::vector<double>(p, p + vocab_);
}

std::vector<double> Policy::probabilities(std::uint64_t key) const {
  return softmax(logits(key), temperature_);
}

double Policy::log_prob(std::uint64_t key, int action) const {
  const auto l = logits(key);
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto v : l) hi = std::max(hi, v / temperature_);
  double z = 0.0;
  for (const auto v : l) z += std::exp(v / temperature_ - hi);
  return l[static_cast<std::size_t>(action)] / temperature_ - hi - std::log(z);
}

double* Policy::row(std::uint64_t key) {
  auto [it, fresh] = rows_.emplace(key, keys_.size());
  if (fresh) {
    keys_.push_back(key);
    table_.resize(table_.size() + vocab_, 0.0);
  }
  return table_.data() + it->second * vocab_;
}

std::string Policy::serialize() const {
  std::ostringstream os;
  os << kPolicyMagic << "\n";
  os << "vocab " << vocab_ << "\ncontext " << context_ << "\ntemperature "
     << hex(temperature_) << "\nrows " << keys_.size() << "\n";
  // Sorted by key so equal policies serialize identically.
  std::vector<std::size_t> order(keys_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return keys_[a] < keys_[b]; });
  for (const auto r : order) {
    os << keys_[r];
    for (std::size_t j = 0; j < vocab_; ++j) {
      os << " " << hex(table_[r * vocab_ + j]);
    }
    os << "\n";
  }
  return os.str();
}

Policy Policy::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || line != kPolicyMagic) {
    throw InvalidInput("not a policy file");
  }
  std::string key, tok;
  std::size_t vocab = 0, context = 0, rows = 0;
  is >> key >> vocab;
  if (key != "vocab") throw InvalidInput("policy file: expected vocab");
  is >> key >> context;
  if (key != "context") throw InvalidInput("policy file: expected context");
  is >> key >> tok;
  if (key != "temperature") {
    throw InvalidInput("policy file: expected temperature");
  }
  Policy p(vocab, context, parse_double(tok));
  is >> key >> rows;
  if (key != "rows" || !is) throw InvalidInput("policy file: expected rows");
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint64_t k = 0;
    if (!(is >> k)) throw InvalidInput("policy file: truncated");
    double* row = p.row(k);
    for (std::size_t j = 0; j < vocab; ++j) {
      if (!(is >> tok)) throw InvalidInput("policy file: truncated");
      row[j] = parse_double(tok);
    }
  }
  return p;
}

void Policy::save(const std::filesystem::path& path) const {
  write_file(path, serialize());
}

Policy Policy::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

int sample_action(const std::vector<double>& logits, const DecodeConfig& decode,
                  std::mt19937_64& rng) {
  if (decode.greedy || decode.temperature <= 1e-6) {
    return static_cast<int>(argmax(logits));
  }
  const auto p = softmax(logits, decode.temperature);
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  double mass = 0.0;
  std::size_t keep = 0;
  while (keep < order.size()) {
    mass += p[order[keep++]];
    if (mass >= decode.top_p) break;
  }
  std::uniform_real_distribution<double> u(0.0, mass);
  double x = u(rng);
  for (std::size_t k = 0; k < keep; ++k) {
    x -= p[order[k]];
    if (x < 0.0) return static_cast<int>(order[k]);
  }
  return static_cast<int>(order[keep - 1]);
}

// ---------------------------------------------------------------- Value

FeatureVector ValueModel::features(std::size_t task,
                                   const std::vector<int>& tokens,
                                   std::size_t t) const {
  auto tok = [&](std::size_t back) -> std::uint64_t {
    return t >= back ? static_cast<std::uint64_t>(tokens[t - back] + 2) : 1;
  };
  std::size_t line = 0;
  for (std::size_t i = 0; i < t; ++i) line += tokens[i] == ToyEnvironment::kNewline;
  const std::uint64_t tk = task + 1;
  const std::uint64_t keys[] = {
      0,
      combine_seed(1, tk),
      combine_seed(combine_seed(2, tk), std::min<std::size_t>(t / 4, 15)),
      combine_seed(combine_seed(3, tk), tok(1)),
      combine_seed(combine_seed(combine_seed(4, tk), tok(1)), tok(2)),
      combine_seed(combine_seed(combine_seed(combine_seed(5, tk), tok(1)), tok(2)),
                   tok(3)),
      combine_seed(combine_seed(6, tk), std::min<std::size_t>(line, 7)),
  };
  std::map<std::uint32_t, double> acc;
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::size(keys)));
  for (const auto k : keys) {
    acc[static_cast<std::uint32_t>(mix64(k) % kDim)] += scale;
  }
  FeatureVector phi;
  double sq = 0.0;
  for (const auto& [i, v] : acc) {
    phi.index.push_back(i);
    phi.value.push_back(v);
    sq += v * v;
  }
  phi.norm = std::sqrt(sq);
  return phi;
}

double ValueModel::value(const FeatureVector& phi) const {
  double out = 0.0;
  for (std::size_t j = 0; j < phi.index.size(); ++j) {
    out += weights_[phi.index[j]] * phi.value[j];
  }
  return out;
}

std::string ValueModel::serialize() const {
  std::ostringstream os;
  os << kValueMagic << "\n";
  std::size_t nnz = 0;
  for (const auto w : weights_) nnz += w != 0.0;
  os << "dim " << kDim << "\nnnz " << nnz << "\n";
  for (std::size_t i = 0; i < kDim; ++i) {
    if (weights_[i] != 0.0) os << i << " " << hex(weights_[i]) << "\n";
  }
  return os.str();
}

ValueModel ValueModel::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line, key, tok;
  if (!std::getline(is, line) || line != kValueMagic) {
    throw InvalidInput("not a value model file");
  }
  std::size_t dim = 0, nnz = 0;
  is >> key >> dim;
  if (key != "dim" || dim != kDim) throw InvalidInput("value file: bad dim");
  is >> key >> nnz;
  if (key != "nnz" || !is) throw InvalidInput("value file: expected nnz");
  ValueModel v;
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0;
    if (!(is >> i >> tok) || i >= kDim) {
      throw InvalidInput("value file: bad entry");
    }
    v.weights_[i] = parse_double(tok);
  }
  return v;
}

// ---------------------------------------------------------------- Rollout

std::vector<Trajectory> rollout(const Policy& policy, const ToyEnvironment& env,
                                const std::vector<std::size_t>& tasks,
                                std::size_t n, const DecodeConfig& decode,
                                std::uint64_t seed) {
  std::vector<Trajectory> out(tasks.size() * n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < out.size(); ++j) {
    const std::size_t i = j / n;
    const std::size_t k = j % n;
    std::mt19937_64 rng(combine_seed(combine_seed(seed, tasks[i]), k));
    Trajectory& tr = out[j];
    tr.task = tasks[i];
    while (tr.tokens.size() < env.max_length()) {
      const auto key = policy.state_key(tr.task, tr.tokens, tr.tokens.size());
      const int a = sample_action(policy.logits(key), decode, rng);
      tr.states.push_back(key);
      tr.logp_old.push_back(policy.log_prob(key, a));
      tr.tokens.push_back(a);
      if (a == ToyEnvironment::kEos) break;
    }
    tr.program = env.render(tr.task, tr.tokens);
  }
  return out;
}

void verify_trajectories(std::vector<Trajectory>& trajectories,
                         const ToyEnvironment& env, const Sandbox& sandbox,
                         const ResourceLimits& limits) {
  std::vector<Sandbox::Job> jobs;
  jobs.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    jobs.push_back({t.program, &env.problems()[t.task].tests});
  }
  auto verdicts = sandbox.verify_batch(jobs, limits);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    trajectories[i].verdict = std::move(verdicts[i]);
  }
}

std::vector<std::size_t> segment_ends(const std::vector<int>& tokens) {
  std::vector<std::size_t> ends;
  bool content = false;
  bool at_start = true;
  std::size_t t = 0;
  for (; t < tokens.size(); ++t) {
    const int tok = tokens[t];
    if (tok == ToyEnvironment::kEos) break;
    if (tok == ToyEnvironment::kNewline) {
      ends.push_back(t);
      content = false;
      at_start = true;
      continue;
    }
    if ((tok == ToyEnvironment::kIndent || tok == ToyEnvironment::kDedent) &&
        at_start) {
      continue;
    }
    content = true;
    at_start = false;
  }
  if (content) ends.push_back(t < tokens.size() ? t : tokens.size() - 1);
  return ends;
}

namespace {

class PrmSource : public RewardSource {
 public:
  explicit PrmSource(const RewardModel& model) : model_(model) {}
  RewardKind kind() const override { return RewardKind::kPrm; }
  SegmentRewardTrace trace(const ToyEnvironment& env,
                           const Trajectory& traj) const override {
    SegmentRewardTrace t;
    t.length = traj.tokens.size();
    t.positions = segment_ends(traj.tokens);
    const auto lines = env.render_lines(traj.tokens);
    if (lines.size() != t.positions.size()) {
      throw AlignmentError("segment count does not match rendered lines");
    }
    std::string prefix = env.task(traj.task).header;
    const auto& prompt = env.problems()[traj.task].prompt;
    for (const auto& l : lines) {
      prefix += "\n" + l;
      t.rewards.push_back(model_.reward(featurize(prompt, prefix)));
    }
    return t;
  }

 private:
  const RewardModel& model_;
};

class OrmSource : public RewardSource {
 public:
  explicit OrmSource(const RewardModel& model) : model_(model) {}
  RewardKind kind() const override { return model_.kind(); }
  SegmentRewardTrace trace(const ToyEnvironment& env,
                           const Trajectory& traj) const override {
    const auto& prompt = env.problems()[traj.task].prompt;
    std::string_view body = traj.program;
    while (!body.empty() && body.back() == '\n') body.remove_suffix(1);
    const auto x = featurize(prompt, body);
    SegmentRewardTrace t;
    t.length = traj.tokens.size();
    t.positions = {t.length - 1};
    // The preference score is unbounded; tanh(s/2) equals 2 sigmoid(s) - 1.
    t.rewards = {model_.reward(x)};
    return t;
  }

 private:
  const RewardModel& model_;
};

class CompilerSource : public RewardSource {
 public:
  explicit CompilerSource(CompilerRewardMap map) : map_(map) {}
  RewardKind kind() const override { return RewardKind::kOrmCompiler; }
  SegmentRewardTrace trace(const ToyEnvironment&,
                           const Trajectory& traj) const override {
    SegmentRewardTrace t;
    t.length = traj.tokens.size();
    t.positions = {t.length - 1};
    t.rewards = {reward_orm_compiler(traj.verdict, map_)};
    return t;
  }

 private:
  CompilerRewardMap map_;
};

}  // namespace

std::unique_ptr<RewardSource> prm_source(const RewardModel& model) {
  return std::make_unique<PrmSource>(model);
}
std::unique_ptr<RewardSource> orm_source(const RewardModel& model) {
  return std::make_unique<OrmSource>(model);
}
std::unique_ptr<RewardSource> compiler_source(CompilerRewardMap map) {
  return std::make_unique<CompilerSource>(map);
}

// ---------------------------------------------------------------- Shaping

void shape_rewards(Trajectory& traj, const Policy& policy,
                   const Policy& anchor, double beta) {
  traj.rewards = traj.rm.dense();
  traj.rewards.resize(traj.tokens.size(), 0.0);
  if (beta == 0.0) return;
  for (std::size_t t = 0; t < traj.tokens.size(); ++t) {
    const auto key = traj.states[t];
    const int a = traj.tokens[t];
    traj.rewards[t] -= beta * (policy.log_prob(key, a) - anchor.log_prob(key, a));
  }
}

namespace {

void fill_values(Trajectory& traj, const ValueModel& value) {
  const std::size_t n = traj.tokens.size();
  if (traj.value_features.size() != n) {
    traj.value_features.clear();
    for (std::size_t t = 0; t < n; ++t) {
      traj.value_features.push_back(value.features(traj.task, traj.tokens, t));
    }
  }
  traj.values.assign(n + 1, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    traj.values[t] = value.value(traj.value_features[t]);
  }
}

}  // namespace

void compute_advantages(Trajectory& traj, const ValueModel& value,
                        double gamma, double lambda) {
  fill_values(traj, value);
  const std::size_t n = traj.tokens.size();
  if (traj.rewards.size() != n) {
    throw InvalidArgs("rewards and tokens differ in length");
  }
  traj.advantages.assign(n, 0.0);
  traj.value_targets.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double delta =
        traj.rewards[t] + gamma * traj.values[t + 1] - traj.values[t];
    running = delta + gamma * lambda * running;
    traj.advantages[t] = running;
    traj.value_targets[t] = running + traj.values[t];
  }
}

void compute_advantages(std::vector<Trajectory>& batch,
                        const ValueModel& value, double gamma, double lambda,
                        kernels::Backend backend) {
  std::vector<double> rewards, values;
  std::vector<std::size_t> offsets{0};
  for (auto& tr : batch) {
    fill_values(tr, value);
    if (tr.rewards.size() != tr.tokens.size()) {
      throw InvalidArgs("rewards and tokens differ in length");
    }
    rewards.insert(rewards.end(), tr.rewards.begin(), tr.rewards.end());
    values.insert(values.end(), tr.values.begin(), tr.values.end());
    offsets.push_back(rewards.size());
  }
  std::vector<double> adv(rewards.size());
  kernels::gae_batch(rewards, values, offsets, gamma, lambda, adv.data(),
                     backend);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& tr = batch[i];
    tr.advantages.assign(adv.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                         adv.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
    tr.value_targets.resize(tr.advantages.size());
    for (std::size_t t = 0; t < tr.advantages.size(); ++t) {
      tr.value_targets[t] = tr.advantages[t] + tr.values[t];
    }
  }
}

// ---------------------------------------------------------------- PPO

double ppo_surrogate(const std::vector<Trajectory>& batch, const Policy& policy,
                     double epsilon, std::vector<double>* grad) {
  if (batch.empty()) throw InvalidArgs("empty batch");
  const std::size_t vocab = policy.vocab_size();
  const double temp = policy.temperature();
  if (grad) grad->assign(policy.table().size(), 0.0);
  double total = 0.0;
  for (const auto& tr : batch) {
    const std::size_t n = tr.tokens.size();
    if (n == 0) continue;
    const double w = 1.0 / (static_cast<double>(batch.size()) * n);
    for (std::size_t t = 0; t < n; ++t) {
      const auto key = tr.states[t];
      const auto a = static_cast<std::size_t>(tr.tokens[t]);
      const auto p = policy.probabilities(key);
      const double rho = std::exp(std::log(p[a]) - tr.logp_old[t]);
      const double A = tr.advantages[t];
      const double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon);
      const bool use_raw = rho * A <= clipped * A;
      total += w * (use_raw ? rho * A : clipped * A);
      if (!grad || !use_raw) continue;
      const auto r = policy.row_index(key);
      if (r < 0) continue;
      double* g = grad->data() + static_cast<std::size_t>(r) * vocab;
      const double s = w * A * rho / temp;
      for (std::size_t b = 0; b < vocab; ++b) {
        g[b] += s * ((b == a ? 1.0 : 0.0) - p[b]);
      }
    }
  }
  return total;
}

double value_loss(const std::vector<Trajectory>& batch,
                  const ValueModel& value, std::vector<double>* grad) {
  if (batch.empty()) throw InvalidArgs("empty batch");
  if (grad) grad->assign(ValueModel::kDim, 0.0);
  double total = 0.0;
  for (const auto& tr : batch) {
    const std::size_t n = tr.tokens.size();
    if (n == 0) continue;
    if (tr.value_features.size() != n || tr.value_targets.size() != n) {
      throw InvalidArgs("trajectory has no value targets");
    }
    const double w = 1.0 / (static_cast<double>(batch.size()) * n);
    for (std::size_t t = 0; t < n; ++t) {
      const auto& phi = tr.value_features[t];
      const double err = value.value(phi) - tr.value_targets[t];
      total += w * err * err;
      if (!grad) continue;
      for (std::size_t j = 0; j < phi.index.size(); ++j) {
        (*grad)[phi.index[j]] += 2.0 * w * err * phi.value[j];
      }
    }
  }
  return total;
}

double clip_fraction(const std::vector<Trajectory>& batch,
                     const Policy& policy, double epsilon) {
  std::size_t clipped = 0, total = 0;
  for (const auto& tr : batch) {
    for (std::size_t t = 0; t < tr.tokens.size(); ++t) {
      const double rho =
          std::exp(policy.log_prob(tr.states[t], tr.tokens[t]) - tr.logp_old[t]);
      clipped += std::abs(rho - 1.0) > epsilon;
      ++total;
    }
  }
  return total ? static_cast<double>(clipped) / total : 0.0;
}

PpoOptimizer::PpoOptimizer(double policy_lr, double value_lr)
    : policy_lr_(policy_lr), value_lr_(value_lr) {}

void PpoOptimizer::adam(std::vector<double>& params,
                        const std::vector<double>& g, Moments& mom, double lr,
                        double sign) {
  constexpr double kB1 = 0.9, kB2 = 0.999, kEps = 1e-8;
  mom.m.resize(params.size(), 0.0);
  mom.v.resize(params.size(), 0.0);
  ++mom.t;
  const double c1 = 1.0 - std::pow(kB1, static_cast<double>(mom.t));
  const double c2 = 1.0 - std::pow(kB2, static_cast<double>(mom.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    mom.m[i] = kB1 * mom.m[i] + (1.0 - kB1) * g[i];
    mom.v[i] = kB2 * mom.v[i] + (1.0 - kB2) * g[i] * g[i];
    params[i] += sign * lr * (mom.m[i] / c1) / (std::sqrt(mom.v[i] / c2) + kEps);
  }
}

void PpoOptimizer::step_policy(Policy& policy,
                               const std::vector<double>& grad_ascent) {
  adam(policy.table(), grad_ascent, policy_, policy_lr_, +1.0);
}

void PpoOptimizer::step_value(ValueModel& value,
                              const std::vector<double>& grad) {
  adam(value.weights(), grad, value_, value_lr_, -1.0);
}

PpoStats ppo_update(const std::vector<Trajectory>& batch, Policy& policy,
                    ValueModel& value, const PpoConfig& config,
                    PpoOptimizer* optimizer) {
  PpoOptimizer local(config.policy_lr, config.value_lr);
  PpoOptimizer& opt = optimizer ? *optimizer : local;
  for (const auto& tr : batch) {
    for (const auto key : tr.states) policy.row(key);
  }
  PpoStats stats;
  std::vector<double> pg, vg;
  for (int it = 0; it < config.mu; ++it) {
    const double j = ppo_surrogate(batch, policy, config.epsilon, &pg);
    const double l = value_loss(batch, value, &vg);
    if (!std::isfinite(j) || !std::isfinite(l)) {
      throw NonFiniteLoss("non-finite PPO loss at iteration " +
                          std::to_string(it));
    }
    stats.surrogate.push_back(j);
    stats.value_loss.push_back(l);
    spdlog::debug("ppo iteration {}: surrogate {:.6f} value loss {:.6f}", it, j,
                  l);
    opt.step_policy(policy, pg);
    opt.step_value(value, vg);
  }
  stats.final_surrogate = ppo_surrogate(batch, policy, config.epsilon, nullptr);
  stats.final_value_loss = value_loss(batch, value, nullptr);
  if (!std::isfinite(stats.final_surrogate) ||
      !std::isfinite(stats.final_value_loss)) {
    throw NonFiniteLoss("non-finite PPO loss after update");
  }
  stats.clip_fraction = clip_fraction(batch, policy, config.epsilon);
  return stats;
}

// ---------------------------------------------------------------- Loop

double greedy_pass_rate(const Policy& policy, const ToyEnvironment& env,
                        const Sandbox& sandbox, const ResourceLimits& limits) {
  std::vector<std::size_t> tasks(env.task_count());
  std::iota(tasks.begin(), tasks.end(), 0);
  DecodeConfig greedy;
  greedy.greedy = true;
  auto batch = rollout(policy, env, tasks, 1, greedy, 0);
  verify_trajectories(batch, env, sandbox, limits);
  double passed = 0.0;
  for (const auto& t : batch) passed += t.verdict.passed();
  return passed / static_cast<double>(batch.size());
}

TrainReport train_loop(const ToyEnvironment& env, Policy& policy,
                       ValueModel& value, const RewardSource& reward,
                       const Sandbox& sandbox, const TrainConfig& config) {
  if (config.steps <= 0 || config.samples_per_task == 0) {
    throw InvalidArgs("training needs positive steps and samples");
  }
  std::vector<std::size_t> tasks(env.task_count());
  std::iota(tasks.begin(), tasks.end(), 0);
  const Policy initial = policy;
  PpoOptimizer opt(config.ppo.policy_lr, config.ppo.value_lr);
  TrainReport report;
  report.initial_greedy_pass =
      greedy_pass_rate(policy, env, sandbox, config.limits);
  for (int step = 0; step < config.steps; ++step) {
    auto batch = rollout(policy, env, tasks, config.samples_per_task,
                         config.decode,
                         combine_seed(config.seed, static_cast<std::uint64_t>(step)));
    verify_trajectories(batch, env, sandbox, config.limits);
    const Policy& anchor =
        config.kl_anchor == KlAnchor::kRollout ? policy : initial;
    StepMetrics m;
    m.step = step;
    for (auto& tr : batch) {
      tr.rm = reward.trace(env, tr);
      shape_rewards(tr, policy, anchor, config.beta);
      for (const auto r : tr.rm.rewards) m.mean_rm_reward += r;
      m.mean_compiler_reward += reward_orm_compiler(tr.verdict, config.compiler_map);
      m.pass_rate += tr.verdict.passed();
    }
    const double nb = static_cast<double>(batch.size());
    m.mean_rm_reward /= nb;
    m.mean_compiler_reward /= nb;
    m.pass_rate /= nb;
    compute_advantages(batch, value, config.gamma, config.lambda,
                       config.backend);
    const auto stats = ppo_update(batch, policy, value, config.ppo, &opt);
    m.policy_loss = -stats.final_surrogate;
    m.value_loss = stats.final_value_loss;
    m.train_loss = m.policy_loss + 0.5 * m.value_loss;
    m.clip_fraction = stats.clip_fraction;
    m.greedy_pass = greedy_pass_rate(policy, env, sandbox, config.limits);
    spdlog::info(
        "step {} reward {:.4f} compiler {:.4f} pass {:.3f} greedy {:.3f} "
        "loss {:.5f}",
        step, m.mean_rm_reward, m.mean_compiler_reward, m.pass_rate,
        m.greedy_pass, m.train_loss);
    report.steps.push_back(m);
    if (config.checkpoint_every &&
        (step + 1) % static_cast<int>(config.checkpoint_every) == 0) {
      const auto dir = config.checkpoint_dir / ("step_" + std::to_string(step + 1));
      std::filesystem::create_directories(dir);
      policy.save(dir / "policy.txt");
      write_file(dir / "value.txt", value.serialize());
    }
  }
  return report;
}

std::string to_jsonl(const std::vector<StepMetrics>& steps) {
  std::string out;
  for (const auto& m : steps) {
    nlohmann::ordered_json j;
    j["step"] = m.step;
    j["mean_rm_reward"] = m.mean_rm_reward;
    j["mean_compiler_reward"] = m.mean_compiler_reward;
    j["pass_rate"] = m.pass_rate;
    j["greedy_pass"] = m.greedy_pass;
    j["policy_loss"] = m.policy_loss;
    j["value_loss"] = m.value_loss;
    j["train_loss"] = m.train_loss;
    j["clip_fraction"] = m.clip_fraction;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::size_t tail_count(std::size_t n, double fraction) {
  if (n == 0) throw InvalidArgs("empty curve");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgs("tail fraction must be in (0, 1]");
  }
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
}

}  // namespace

double tail_mean(const std::vector<double>& curve, double fraction) {
  const auto k = tail_count(curve.size(), fraction);
  double s = 0.0;
  for (std::size_t i = curve.size() - k; i < curve.size(); ++i) s += curve[i];
  return s / static_cast<double>(k);
}

double tail_variance(const std::vector<double>& curve, double fraction) {
  const auto k = tail_count(curve.size(), fraction);
  const double m = tail_mean(curve, fraction);
  double s = 0.0;
  for (std::size_t i = curve.size() - k; i < curve.size(); ++i) {
    s += (curve[i] - m) * (curve[i] - m);
  }
  return s / static_cast<double>(k);
}

std::size_t steps_to_reach(const std::vector<double>& curve, double target,
                           std::size_t window) {
  if (window == 0) throw InvalidArgs("window must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    sum += curve[i];
    if (i >= window) sum -= curve[i - window];
    const auto k = std::min(window, i + 1);
    if (sum / static_cast<double>(k) >= target) return i;
  }
  return curve.size();
}

// ---------------------------------------------------------------- Init

Policy imitation_policy(const ToyEnvironment& env,
                        const std::vector<Demonstration>& demos,
                        std::size_t context, double temperature,
                        double smoothing) {
  if (!(smoothing > 0.0)) throw InvalidArgs("smoothing must be positive");
  Policy counts(env.vocab_size(), context, temperature);
  for (const auto& d : demos) {
    for (std::size_t t = 0; t < d.tokens.size(); ++t) {
      counts.row(counts.state_key(d.task, d.tokens, t))
          [static_cast<std::size_t>(d.tokens[t])] += d.weight;
    }
  }
  for (auto& v : counts.table()) v = std::log(v + smoothing);
  return counts;
}

std::vector<Demonstration> edit_demonstrations(const ToyEnvironment& env,
                                               const Sandbox& sandbox,
                                               const InitConfig& config,
                                               const ResourceLimits& limits) {
  std::vector<Demonstration> demos;
  std::vector<Demonstration> edits;
  std::vector<std::string> programs;
  for (std::size_t i = 0; i < env.task_count(); ++i) {
    demos.push_back({i, env.reference_tokens(i), config.reference_weight});
    const auto& p = env.problems()[i];
    const auto code = p.code_lines();
    for (const auto& e :
         edit_problem(p, MutationRuleSet::all(config.seed), config.mutate_demos,
                      config.refactor_demos)) {
      auto program = apply_edit(code, e);
      auto toks = env.tokenize(i, program);
      if (!toks) continue;
      edits.push_back({i, std::move(*toks), 0.0});
      programs.push_back(std::move(program));
    }
  }
  std::vector<Sandbox::Job> jobs;
  for (std::size_t k = 0; k < edits.size(); ++k) {
    jobs.push_back({programs[k], &env.problems()[edits[k].task].tests});
  }
  const auto verdicts = sandbox.verify_batch(jobs, limits);
  for (std::size_t k = 0; k < edits.size(); ++k) {
    edits[k].weight = verdicts[k].passed() ? config.passing_edit_weight
                                           : config.failing_edit_weight;
    demos.push_back(std::move(edits[k]));
  }
  return demos;
}

}  // namespace prl::rl
