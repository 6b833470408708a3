#include "prl/trend.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "prl/errors.hpp"
#include "prl/mutator.hpp"
#include "prl/util.hpp"

namespace prl::rl {

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgs("median of nothing");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SnippetGenerator policy_generator(const Policy& policy,
                                  const ToyEnvironment& env,
                                  const DecodeConfig& decode) {
  return [&policy, &env, decode](const Problem& p, std::size_t m,
                                 std::mt19937_64& rng) {
    std::size_t task = env.task_count();
    for (std::size_t i = 0; i < env.task_count(); ++i) {
      if (env.problems()[i].id == p.id) task = i;
    }
    if (task == env.task_count()) {
      throw InvalidInput("problem " + std::to_string(p.id) +
                         " is not part of the toy suite");
    }
    std::vector<std::string> out;
    for (auto& t : rollout(policy, env, {task}, m, decode, rng())) {
      out.push_back(std::move(t.program));
    }
    return out;
  };
}

ToyRewardModels train_toy_reward_models(const ToyEnvironment& env,
                                        const Policy& policy,
                                        const Sandbox& sandbox,
                                        const ResourceLimits& limits,
                                        const ToySetupConfig& config) {
  ToyRewardModels m;
  const auto corpus = env.corpus();
  DatasetOptions opts;
  opts.seed = config.seed;
  m.dataset = build_dataset(corpus, MutationRuleSet::all(config.seed), sandbox,
                            limits, opts, &m.stats);
  DatasetSplit all;
  all.samples = m.dataset;
  for (const auto& s : m.dataset) {
    (s.label == Label::kPositive ? all.positive_count : all.negative_count)++;
  }
  m.prm = train_prm(all, all, config.prm_hyper).model;
  const auto programs = orm_samples(corpus, m.dataset);
  m.orm_original = train_orm_original(programs, programs, config.orm_hyper).model;
  const auto groups = build_preference_groups(
      corpus, policy_generator(policy, env, DecodeConfig{}),
      sandbox_ranker(sandbox, limits), config.preference_samples, config.seed);
  m.orm_preference = train_orm_preference(groups, config.orm_hyper).model;
  return m;
}

bool TrendResult::stability_ok() const {
  for (std::size_t a = 1; a < median_late_variance.size(); ++a) {
    if (median_late_variance[0] > median_late_variance[a]) return false;
  }
  return true;
}

std::string TrendResult::summary_json() const {
  nlohmann::ordered_json j;
  j["min_gain"] = min_gain;
  j["median_prm_steps"] = median_prm_steps;
  j["median_compiler_steps"] = median_compiler_steps;
  nlohmann::ordered_json v;
  for (std::size_t a = 0; a < kArms.size(); ++a) {
    v[std::string(to_string(kArms[a]))] = median_late_variance[a];
  }
  j["median_late_loss_variance"] = v;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
  for (const auto& s : this->seeds) {
    nlohmann::ordered_json o;
    o["seed"] = s.seed;
    o["initial_greedy_pass"] = s.arms[0].initial_greedy_pass;
    o["final_greedy_pass"] = s.arms[0].steps.back().greedy_pass;
    o["compiler_target"] = s.compiler_target;
    o["prm_steps"] = s.prm_steps;
    o["compiler_steps"] = s.compiler_steps;
    o["late_variance"] = s.late_variance;
    seeds.push_back(o);
  }
  j["seeds"] = seeds;
  return j.dump(2);
}

TrendResult run_trend(const ToyEnvironment& env, const Policy& initial,
                      const ToyRewardModels& models, const Sandbox& sandbox,
                      const TrendConfig& config) {
  if (config.seeds == 0) throw InvalidArgs("need at least one seed");
  const auto prm = prm_source(models.prm);
  const auto orm = orm_source(models.orm_original);
  const auto pref = orm_source(models.orm_preference);
  const auto cmp = compiler_source(config.train.compiler_map);
  const RewardSource* sources[] = {prm.get(), orm.get(), pref.get(), cmp.get()};
  TrendResult result;
  std::vector<double> gains, prm_steps, cmp_steps;
  std::array<std::vector<double>, 4> variances;
  for (std::size_t s = 0; s < config.seeds; ++s) {
    SeedOutcome out;
    out.seed = config.seed_base + s;
    std::array<std::vector<double>, 4> reward, loss;
    for (std::size_t a = 0; a < kArms.size(); ++a) {
      Policy policy = initial;
      ValueModel value;
      TrainConfig tc = config.train;
      tc.seed = out.seed;
      out.arms[a] = train_loop(env, policy, value, *sources[a], sandbox, tc);
      for (const auto& m : out.arms[a].steps) {
        reward[a].push_back(m.mean_compiler_reward);
        loss[a].push_back(m.train_loss);
      }
      out.late_variance[a] = tail_variance(loss[a], config.late_fraction);
      variances[a].push_back(out.late_variance[a]);
    }
    out.prm_gain =
        out.arms[0].steps.back().greedy_pass - out.arms[0].initial_greedy_pass;
    out.compiler_target = tail_mean(reward[3], config.final_fraction);
    out.prm_steps = steps_to_reach(reward[0], out.compiler_target, config.window);
    out.compiler_steps =
        steps_to_reach(reward[3], out.compiler_target, config.window);
    spdlog::info("trend seed {}: gain {:.3f}, steps prm {} vs compiler {}",
                 out.seed, out.prm_gain, out.prm_steps, out.compiler_steps);
    gains.push_back(out.prm_gain);
    prm_steps.push_back(static_cast<double>(out.prm_steps));
    cmp_steps.push_back(static_cast<double>(out.compiler_steps));
    result.seeds.push_back(std::move(out));
  }
  result.min_gain = *std::min_element(gains.begin(), gains.end());
  result.median_prm_steps = median(prm_steps);
  result.median_compiler_steps = median(cmp_steps);
  for (std::size_t a = 0; a < kArms.size(); ++a) {
    result.median_late_variance[a] = median(variances[a]);
  }
  return result;
}

}  // namespace prl::rl
