#include "prl/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "prl/corpus.hpp"
#include "prl/dataset.hpp"
#include "prl/errors.hpp"
#include "prl/eval.hpp"
#include "prl/mutator.hpp"
#include "prl/reward.hpp"
#include "prl/rl.hpp"
#include "prl/sandbox.hpp"
#include "prl/testgen.hpp"
#include "prl/trend.hpp"
#include "prl/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace prl::cli {

std::string Manifest::to_json() const {
  json j;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["config"] = config;
  j["parameters"] = parameters;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

fs::path resolve_corpus(const std::string& value, const fs::path& out) {
  if (value.empty()) throw InvalidArgs("--corpus is empty");
  const fs::path direct(value);
  if (fs::exists(direct)) return direct;
  const auto named = out / "corpus" / (value + ".jsonl");
  if (fs::exists(named)) return named;
  throw IoError("corpus not found: " + value + " (also looked for " +
                named.string() + ")");
}

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 7;
  bool seed_set = false;
  std::string out = "out";
  int jobs = 0;
  std::string teacher_endpoint;
  std::string interpreter;
  std::string corpus;
  Config config;
};

// A run in progress: collects inputs and outputs for the manifest.
class Run {
 public:
  Run(const Common& c, std::string name) : c_(c) {
    m_.subcommand = std::move(name);
    m_.seed = c.seed;
    m_.config = c.config.canonical();
    m_.config_hash = c.config.hash();
  }

  fs::path out() const { return fs::path(c_.out); }

  void input(const fs::path& path) {
    m_.inputs[path.lexically_normal().string()] = sha256_file(path);
  }
  void param(const std::string& key, const std::string& value) {
    m_.parameters[key] = value;
  }
  // Writes `content` under <out>/<rel> and records it.
  void write(const fs::path& rel, std::string_view content) {
    const auto path = out() / rel;
    write_file(path, content);
    m_.outputs[rel.generic_string()] = sha256_hex(content);
  }
  void record(const fs::path& rel) {
    m_.outputs[rel.generic_string()] = sha256_file(out() / rel);
  }
  void finish(const std::string& manifest_name) {
    write_file(out() / "manifests" / (manifest_name + ".json"), m_.to_json());
  }

 private:
  const Common& c_;
  Manifest m_;
};

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) {
    const auto t = std::string(trim(part));
    if (t.empty()) continue;
    try {
      std::size_t used = 0;
      const long v = std::stol(t, &used);
      if (used != t.size() || v < 1) throw std::invalid_argument(t);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw ConfigError("bad list entry: " + t);
    }
  }
  return out;
}

Sandbox make_sandbox(const Common& c) {
  Sandbox::Options o;
  if (!c.interpreter.empty()) o.interpreter = c.interpreter;
  o.parallelism = c.jobs;
  o.cache_verdicts = true;
  return Sandbox(o);
}

ResourceLimits corpus_limits(const Config& cfg) {
  ResourceLimits l;
  l.wall = std::chrono::milliseconds(cfg.get_int("sandbox.wall_ms", 5000));
  l.memory_bytes =
      static_cast<std::size_t>(cfg.get_int("sandbox.memory_mb", 256)) << 20;
  return l;
}

ResourceLimits toy_limits(const Config& cfg) {
  ResourceLimits l = corpus_limits(cfg);
  l.wall = std::chrono::milliseconds(cfg.get_int("toy.wall_ms", 1000));
  return l;
}

TrainHyper rm_hyper(const Config& cfg, const std::string& prefix,
                    const TrainHyper& base, std::uint64_t seed) {
  TrainHyper h = base;
  h.epochs = static_cast<int>(cfg.get_int(prefix + "epochs", h.epochs));
  h.learning_rate = cfg.get_double(prefix + "lr", h.learning_rate);
  h.weight_decay = cfg.get_double(prefix + "weight_decay", h.weight_decay);
  h.batch_size = static_cast<std::size_t>(
      cfg.get_int(prefix + "batch_size", static_cast<std::int64_t>(h.batch_size)));
  h.hidden = static_cast<std::size_t>(
      cfg.get_int(prefix + "hidden", static_cast<std::int64_t>(h.hidden)));
  h.seed = seed;
  return h;
}

rl::InitConfig init_config(const Config& cfg, std::uint64_t seed) {
  rl::InitConfig ic;
  ic.reference_weight = cfg.get_double("init.reference_weight", ic.reference_weight);
  ic.passing_edit_weight =
      cfg.get_double("init.passing_edit_weight", ic.passing_edit_weight);
  ic.failing_edit_weight =
      cfg.get_double("init.failing_edit_weight", ic.failing_edit_weight);
  ic.smoothing = cfg.get_double("init.smoothing", ic.smoothing);
  ic.mutate_demos = cfg.get_bool("init.mutate_demos", ic.mutate_demos);
  ic.refactor_demos = cfg.get_bool("init.refactor_demos", ic.refactor_demos);
  ic.context = static_cast<std::size_t>(
      cfg.get_int("policy.context", static_cast<std::int64_t>(ic.context)));
  ic.temperature = cfg.get_double("decode.temperature", ic.temperature);
  ic.seed = seed;
  return ic;
}

rl::DecodeConfig decode_config(const Config& cfg) {
  rl::DecodeConfig d;
  d.temperature = cfg.get_double("decode.temperature", d.temperature);
  d.top_p = cfg.get_double("decode.top_p", d.top_p);
  return d;
}

rl::ToyEnvironment toy_env(const Config& cfg) {
  return rl::ToyEnvironment::standard(
      static_cast<std::size_t>(cfg.get_int("toy.max_length", 64)));
}

rl::Policy initial_policy(const rl::ToyEnvironment& env, const Sandbox& sandbox,
                          const Common& c) {
  const auto ic = init_config(c.config, c.seed);
  const auto demos =
      rl::edit_demonstrations(env, sandbox, ic, toy_limits(c.config));
  return rl::imitation_policy(env, demos, ic.context, ic.temperature,
                              ic.smoothing);
}

DatasetSplit as_split(std::vector<StepSample> samples) {
  DatasetSplit s;
  for (const auto& x : samples) {
    (x.positive() ? s.positive_count : s.negative_count)++;
  }
  s.samples = std::move(samples);
  return s;
}

std::string history_jsonl(const std::vector<EpochRecord>& history) {
  std::string out;
  for (const auto& r : history) {
    json j;
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["accuracy"] = r.validation.accuracy;
    j["precision"] = r.validation.precision;
    j["recall"] = r.validation.recall;
    j["f1"] = r.validation.f1;
    j["negative_accuracy"] = r.validation.negative_accuracy;
    j["positive_accuracy"] = r.validation.positive_accuracy;
    out += j.dump() + "\n";
  }
  return out;
}

json metrics_json(const ClassMetrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["negative_accuracy"] = m.negative_accuracy;
  j["positive_accuracy"] = m.positive_accuracy;
  j["count"] = m.count;
  return j;
}

Corpus load_corpus(Run& run, const Common& c, const std::string& fallback) {
  const auto path =
      resolve_corpus(c.corpus.empty() ? fallback : c.corpus, run.out());
  run.input(path);
  return ingest(path);
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const Common& c, const std::string& input,
               const std::string& name) {
  Run run(c, "ingest");
  run.input(input);
  const auto corpus = assign_splits(ingest(input));
  run.write(fs::path("corpus") / (name + ".jsonl"), serialize(corpus));
  run.param("name", name);
  run.finish("ingest");
  std::cout << "ingested " << corpus.size() << " problems\n";
  return kExitOk;
}

// ---------------------------------------------------------------- augment

int cmd_augment(const Common& c, const std::string& splits,
                std::size_t limit, const std::string& name) {
  Run run(c, "augment-tests");
  const auto corpus = load_corpus(run, c, "mbpp");
  std::vector<Split> wanted;
  for (const auto& s : split(splits, ',')) {
    if (!trim(s).empty() && trim(s) != "all") wanted.push_back(parse_split(trim(s)));
  }
  const auto sandbox = make_sandbox(c);
  TestgenOptions opts;
  opts.method = parse_adequacy_method(
      c.config.get_string("testgen.method", "mutation_kill"));
  opts.limits = corpus_limits(c.config);
  opts.max_new_tests = static_cast<std::size_t>(
      c.config.get_int("testgen.max_new_tests", 5));
  if (!c.teacher_endpoint.empty()) opts.teacher_endpoint = c.teacher_endpoint;

  std::vector<Problem> problems = corpus.problems();
  std::string report;
  std::size_t done = 0, survivors = 0, flipped = 0;
  double before_sum = 0.0, after_sum = 0.0;
  for (auto& p : problems) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), p.split) == wanted.end()) {
      continue;
    }
    if (limit && done >= limit) break;
    ++done;
    json j;
    j["problem_id"] = p.id;
    try {
      auto r = augment_problem(p, sandbox, opts);
      j["adequacy_before"] = r.adequacy_before;
      j["adequacy_after"] = r.adequacy_after;
      j["accepted"] = r.accepted;
      j["survivors_before"] = r.survivors_before;
      j["survivors_flipped"] = r.survivors_flipped;
      j["flagged"] = r.flagged;
      before_sum += r.adequacy_before;
      after_sum += r.adequacy_after;
      survivors += r.survivors_before;
      flipped += r.survivors_flipped;
      p = std::move(r.problem);
    } catch (const PreconditionViolation& e) {
      j["skipped"] = e.what();
      before_sum += 1.0;
      after_sum += 1.0;
    } catch (const NoApplicableRule& e) {
      j["skipped"] = e.what();
      --done;
    }
    report += j.dump() + "\n";
  }
  run.write(fs::path("corpus") / (name + ".jsonl"),
            serialize(Corpus(std::move(problems))));
  run.write("augment/report.jsonl", report);
  json s;
  s["problems"] = done;
  s["mean_adequacy_before"] = done ? before_sum / static_cast<double>(done) : 0.0;
  s["mean_adequacy_after"] = done ? after_sum / static_cast<double>(done) : 0.0;
  s["survivors_before"] = survivors;
  s["survivors_flipped"] = flipped;
  s["flipped_fraction"] =
      survivors ? static_cast<double>(flipped) / static_cast<double>(survivors) : 0.0;
  run.write("augment/summary.json", s.dump(2) + "\n");
  run.param("splits", splits);
  run.param("limit", std::to_string(limit));
  run.finish("augment-tests");
  std::cout << s.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- dataset

int cmd_build_dataset(const Common& c, std::size_t limit) {
  Run run(c, "build-dataset");
  const auto corpus = load_corpus(run, c, "mbpp_plus");
  const auto map_text = c.config.get_string("dataset.split_map", "");
  const auto map = map_text.empty() ? DatasetSplitMap::seed_default()
                                    : DatasetSplitMap::parse(map_text);
  std::vector<Problem> chosen;
  std::map<DatasetSplitName, std::size_t> taken;
  for (const auto& p : corpus.problems()) {
    DatasetSplitName name;
    try {
      name = map.lookup(p.id);
    } catch (const UnmappedId&) {
      continue;
    }
    if (limit && taken[name] >= limit) continue;
    ++taken[name];
    chosen.push_back(p);
  }
  if (chosen.empty()) throw InvalidInput("no corpus problem falls in the split map");
  auto rules = MutationRuleSet::all(c.seed);
  rules.max_edits_per_line = static_cast<std::size_t>(c.config.get_int(
      "mutator.max_edits_per_line",
      static_cast<std::int64_t>(rules.max_edits_per_line)));
  DatasetOptions opts;
  opts.mutate = c.config.get_bool("dataset.mutate", true);
  opts.refactor = c.config.get_bool("dataset.refactor", true);
  opts.reference_ratio = c.config.get_double("dataset.reference_ratio", 0.0);
  opts.seed = c.seed;
  if (!c.teacher_endpoint.empty()) opts.teacher_endpoint = c.teacher_endpoint;
  const auto sandbox = make_sandbox(c);
  DatasetStats st;
  const auto samples = build_dataset(Corpus(std::move(chosen)), rules, sandbox,
                                     corpus_limits(c.config), opts, &st);
  const auto dir = run.out() / "dataset";
  emit_splits(samples, map, c.seed, dir);
  for (const auto* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "stats.json"}) {
    run.record(fs::path("dataset") / f);
  }
  json s;
  s["samples"] = samples.size();
  s["reference_positives"] = st.reference_positives;
  s["mutate_positive"] = st.mutate_positive;
  s["mutate_negative"] = st.mutate_negative;
  s["refactor_positive"] = st.refactor_positive;
  s["refactor_negative"] = st.refactor_negative;
  s["duplicates_dropped"] = st.duplicates_dropped;
  s["mutate_negative_fraction"] = st.mutate_negative_fraction();
  run.write("dataset/build_stats.json", s.dump(2) + "\n");
  run.param("limit", std::to_string(limit));
  run.finish("build-dataset");
  std::cout << s.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train-rm

int cmd_train_rm(const Common& c, const std::string& kind_name,
                 const std::string& suite, const std::string& dataset_dir) {
  const auto kind = parse_reward_kind(kind_name);
  if (kind == RewardKind::kOrmCompiler) {
    throw InvalidArgs("orm_compiler reads the sandbox and has nothing to train");
  }
  if (suite != "corpus" && suite != "toy") {
    throw InvalidArgs("--suite must be corpus or toy");
  }
  const std::string tag = kind_name + (suite == "toy" ? "_toy" : "");
  Run run(c, "train-rm");
  run.param("kind", kind_name);
  run.param("suite", suite);
  const auto sandbox = make_sandbox(c);
  RewardModel model;
  std::vector<EpochRecord> history;
  json summary;
  summary["kind"] = kind_name;
  summary["suite"] = suite;

  if (suite == "toy") {
    const auto env = toy_env(c.config);
    const auto init = initial_policy(env, sandbox, c);
    rl::ToySetupConfig sc;
    sc.init = init_config(c.config, c.seed);
    sc.prm_hyper = rm_hyper(c.config, "rm.toy_prm.", sc.prm_hyper, c.seed);
    sc.orm_hyper = rm_hyper(c.config, "rm.", sc.orm_hyper, c.seed);
    sc.seed = c.seed;
    auto models = rl::train_toy_reward_models(env, init, sandbox,
                                              toy_limits(c.config), sc);
    model = kind == RewardKind::kPrm           ? std::move(models.prm)
            : kind == RewardKind::kOrmOriginal ? std::move(models.orm_original)
                                               : std::move(models.orm_preference);
    summary["dataset_samples"] = models.dataset.size();
  } else {
    const fs::path dir = dataset_dir.empty() ? run.out() / "dataset" : fs::path(dataset_dir);
    const auto train_path = dir / "train.jsonl";
    const auto val_path = dir / "validation.jsonl";
    const auto test_path = dir / "test.jsonl";
    run.input(train_path);
    run.input(val_path);
    run.input(test_path);
    const auto train = load_samples(train_path);
    const auto val = load_samples(val_path);
    const auto test = load_samples(test_path);
    const auto hyper = rm_hyper(c.config, "rm.", TrainHyper{}, c.seed);
    if (kind == RewardKind::kPrm) {
      auto r = train_prm(as_split(train), as_split(val), hyper);
      model = std::move(r.model);
      history = std::move(r.history);
      summary["test"] = metrics_json(evaluate_classifier(
          model, featurize_samples(test, hyper.backend)));
    } else {
      const auto corpus = load_corpus(run, c, "mbpp_plus");
      if (kind == RewardKind::kOrmOriginal) {
        const auto tr = orm_samples(corpus, train);
        auto r = train_orm_original(tr, orm_samples(corpus, val), hyper);
        model = std::move(r.model);
        history = std::move(r.history);
        summary["test"] = metrics_json(evaluate_classifier(
            model, featurize_samples(orm_samples(corpus, test), hyper.backend)));
      } else {
        std::set<int> ids;
        for (const auto& s : train) ids.insert(s.problem_id);
        std::vector<Problem> problems;
        for (const auto id : ids) {
          if (const auto* p = corpus.find(id)) problems.push_back(*p);
        }
        const auto groups = build_preference_groups(
            Corpus(std::move(problems)), edit_generator(c.seed),
            sandbox_ranker(sandbox, corpus_limits(c.config)),
            static_cast<std::size_t>(c.config.get_int("rm.preference_samples", 4)),
            c.seed);
        auto r = train_orm_preference(groups, hyper);
        model = std::move(r.model);
        history = std::move(r.history);
      }
    }
  }
  model.meta().config_hash = c.config.hash();
  model.meta().seed = c.seed;
  run.write(fs::path("models") / (tag + ".txt"), model.serialize());
  run.write(fs::path("models") / (tag + ".metrics.jsonl"), history_jsonl(history));
  run.write(fs::path("models") / (tag + ".summary.json"), summary.dump(2) + "\n");
  run.finish("train-rm-" + tag);
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train-ppo

rl::TrainConfig train_config(const Common& c) {
  const auto& cfg = c.config;
  rl::TrainConfig t;
  t.steps = static_cast<int>(cfg.get_int("ppo.steps", t.steps));
  t.samples_per_task = static_cast<std::size_t>(cfg.get_int(
      "ppo.samples_per_task", static_cast<std::int64_t>(t.samples_per_task)));
  t.beta = cfg.get_double("ppo.beta", t.beta);
  t.gamma = cfg.get_double("ppo.gamma", t.gamma);
  t.lambda = cfg.get_double("ppo.lambda", t.lambda);
  t.ppo.epsilon = cfg.get_double("ppo.epsilon", t.ppo.epsilon);
  t.ppo.mu = static_cast<int>(cfg.get_int("ppo.mu", t.ppo.mu));
  t.ppo.policy_lr = cfg.get_double("ppo.policy_lr", t.ppo.policy_lr);
  t.ppo.value_lr = cfg.get_double("ppo.value_lr", t.ppo.value_lr);
  t.decode = decode_config(cfg);
  const auto anchor = cfg.get_string("ppo.kl_anchor", "rollout");
  if (anchor == "rollout") {
    t.kl_anchor = rl::KlAnchor::kRollout;
  } else if (anchor == "initial") {
    t.kl_anchor = rl::KlAnchor::kInitial;
  } else {
    throw ConfigError("ppo.kl_anchor must be rollout or initial");
  }
  t.seed = c.seed;
  t.limits = toy_limits(cfg);
  t.checkpoint_every =
      static_cast<std::size_t>(cfg.get_int("ppo.checkpoint_every", 0));
  return t;
}

int cmd_train_ppo(const Common& c, const std::string& rm_path,
                  const std::string& kind_name, const std::string& policy_path,
                  const std::string& name_flag) {
  if (rm_path.empty() == kind_name.empty()) {
    throw InvalidArgs("give exactly one of --rm <model> or --kind orm_compiler");
  }
  if (!kind_name.empty() && parse_reward_kind(kind_name) != RewardKind::kOrmCompiler) {
    throw InvalidArgs("--kind only selects orm_compiler; learned models need --rm");
  }
  Run run(c, "train-ppo");
  const auto env = toy_env(c.config);
  const auto sandbox = make_sandbox(c);
  RewardModel model;
  std::unique_ptr<rl::RewardSource> source;
  std::string kind = kind_name;
  if (!rm_path.empty()) {
    run.input(rm_path);
    model = RewardModel::load(rm_path);
    kind = std::string(to_string(model.kind()));
    source = model.kind() == RewardKind::kPrm ? rl::prm_source(model)
                                              : rl::orm_source(model);
  } else {
    source = rl::compiler_source();
  }
  rl::Policy policy;
  if (!policy_path.empty()) {
    run.input(policy_path);
    policy = rl::Policy::load(policy_path);
  } else {
    policy = initial_policy(env, sandbox, c);
  }
  const std::string name = name_flag.empty() ? kind : name_flag;
  auto tc = train_config(c);
  const auto dir = fs::path("ppo") / name;
  tc.checkpoint_dir = run.out() / dir / "checkpoints";
  rl::ValueModel value;
  const auto report = rl::train_loop(env, policy, value, *source, sandbox, tc);
  run.write(dir / "metrics.jsonl", rl::to_jsonl(report.steps));
  run.write(dir / "policy.txt", policy.serialize());
  run.write(dir / "value.txt", value.serialize());
  json s;
  s["reward"] = kind;
  s["steps"] = report.steps.size();
  s["initial_greedy_pass"] = report.initial_greedy_pass;
  s["final_greedy_pass"] =
      report.steps.empty() ? report.initial_greedy_pass : report.steps.back().greedy_pass;
  std::vector<double> loss;
  for (const auto& m : report.steps) loss.push_back(m.train_loss);
  s["late_loss_variance"] = loss.empty() ? 0.0 : rl::tail_variance(loss, 0.25);
  run.write(dir / "summary.json", s.dump(2) + "\n");
  run.param("name", name);
  run.finish("train-ppo-" + name);
  std::cout << s.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const Common& c, const std::string& policy_path,
                 const std::string& rm_path) {
  Run run(c, "evaluate");
  const auto env = toy_env(c.config);
  const auto sandbox = make_sandbox(c);
  const auto limits = toy_limits(c.config);
  rl::Policy policy;
  if (!policy_path.empty()) {
    run.input(policy_path);
    policy = rl::Policy::load(policy_path);
  } else {
    policy = initial_policy(env, sandbox, c);
  }
  const auto n = static_cast<std::size_t>(c.config.get_int("eval.n", 200));
  auto ks = parse_size_list(c.config.get_string("eval.k", "1,10,80"));
  ks.erase(std::remove_if(ks.begin(), ks.end(), [&](std::size_t k) { return k > n; }),
           ks.end());
  if (ks.empty()) throw ConfigError("no eval.k value fits eval.n");
  std::vector<std::size_t> tasks(env.task_count());
  std::iota(tasks.begin(), tasks.end(), 0);
  auto batch = rl::rollout(policy, env, tasks, n, decode_config(c.config), c.seed);
  rl::verify_trajectories(batch, env, sandbox, limits);
  std::vector<const Problem*> problems;
  std::vector<std::size_t> ns, cs;
  std::vector<VerdictStatus> statuses;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    problems.push_back(&env.problems()[i]);
    ns.push_back(n);
    std::size_t passed = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& v = batch[i * n + k].verdict;
      passed += v.passed();
      statuses.push_back(v.status);
    }
    cs.push_back(passed);
  }
  const auto report = summarize(problems, ns, cs, ks);
  run.write("eval/report.jsonl", report.to_jsonl());
  run.write("eval/table.txt", report.table());
  run.write("eval/errors.json", error_distribution(statuses).to_json() + "\n");
  if (!rm_path.empty()) {
    run.input(rm_path);
    const auto model = RewardModel::load(rm_path);
    const auto source = model.kind() == RewardKind::kPrm ? rl::prm_source(model)
                                                         : rl::orm_source(model);
    const auto rule =
        parse_selection_score(c.config.get_string("eval.rejection_score", "sum"));
    const auto study = rejection_study(
        policy, *source, env, sandbox, limits,
        static_cast<std::size_t>(c.config.get_int("eval.rejection_n", 4)),
        static_cast<std::size_t>(c.config.get_int("eval.rejection_rounds", 10)),
        decode_config(c.config), c.seed, rule);
    json j;
    j["reward_model"] = std::string(to_string(model.kind()));
    j["score"] = std::string(to_string(rule));
    j["trials"] = study.trials;
    j["selected_pass_rate"] = study.selected_pass_rate;
    j["uniform_pass_rate"] = study.uniform_pass_rate;
    run.write("eval/rejection.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
  }
  run.param("n", std::to_string(n));
  run.finish("evaluate");
  std::cout << report.table();
  return kExitOk;
}

// ---------------------------------------------------------------- report

ErrorHistogram histogram_from_json(const json& j) {
  ErrorHistogram h;
  for (std::size_t i = 0; i < kErrorCategories.size(); ++i) {
    const std::string name(to_string(kErrorCategories[i]));
    if (j.contains(name)) h.counts[i] = j[name]["count"].get<std::size_t>();
  }
  if (j.contains("passed")) h.passed = j["passed"].get<std::size_t>();
  return h;
}

int cmd_report(const Common& c) {
  Run run(c, "report");
  const auto out = run.out();
  std::ostringstream md;
  md << "# Run report\n\n";
  const auto table = out / "eval" / "table.txt";
  if (fs::exists(table)) {
    run.input(table);
    md << "## pass@k (percent) by difficulty bucket\n\n```\n"
       << read_file(table) << "```\n\n";
  }
  const auto rej = out / "eval" / "rejection.json";
  if (fs::exists(rej)) {
    run.input(rej);
    const auto j = json::parse(read_file(rej));
    md << "## Rejection sampling\n\nbest-of-n by " << j["reward_model"].get<std::string>()
       << " (" << j["score"].get<std::string>() << "): "
       << j["selected_pass_rate"].get<double>() << " vs uniform "
       << j["uniform_pass_rate"].get<double>() << " over "
       << j["trials"].get<std::size_t>() << " trials\n\n";
  }
  if (fs::exists(out / "ppo")) {
    std::vector<fs::path> runs;
    for (const auto& e : fs::directory_iterator(out / "ppo")) {
      if (fs::exists(e.path() / "summary.json")) runs.push_back(e.path());
    }
    std::sort(runs.begin(), runs.end());
    if (!runs.empty()) {
      md << "## PPO runs\n\n| run | reward | steps | initial greedy | final greedy | late loss var |\n"
         << "|---|---|---|---|---|---|\n";
    }
    for (const auto& r : runs) {
      run.input(r / "summary.json");
      const auto j = json::parse(read_file(r / "summary.json"));
      md << "| " << r.filename().string() << " | " << j["reward"].get<std::string>()
         << " | " << j["steps"].get<std::size_t>() << " | "
         << j["initial_greedy_pass"].get<double>() << " | "
         << j["final_greedy_pass"].get<double>() << " | "
         << j["late_loss_variance"].get<double>() << " |\n";
    }
    if (!runs.empty()) md << "\n";
  }
  const auto errors = out / "eval" / "errors.json";
  const auto train = out / "dataset" / "train.jsonl";
  if (fs::exists(errors)) {
    run.input(errors);
    const auto policy_h = histogram_from_json(json::parse(read_file(errors)));
    md << "## Error distribution\n\n| category | policy |";
    std::optional<ErrorHistogram> data_h;
    if (fs::exists(train)) {
      run.input(train);
      std::vector<VerdictStatus> st;
      for (const auto& s : load_samples(train)) {
        if (s.verdict) st.push_back(*s.verdict);
      }
      data_h = error_distribution(st);
      md << " dataset |";
    }
    md << "\n|---|---|" << (data_h ? "---|" : "") << "\n";
    const auto fp = policy_h.fractions();
    for (std::size_t i = 0; i < kErrorCategories.size(); ++i) {
      md << "| " << to_string(kErrorCategories[i]) << " | " << fp[i] << " |";
      if (data_h) md << " " << data_h->fractions()[i] << " |";
      md << "\n";
    }
    if (data_h) {
      md << "\ntotal variation distance: " << total_variation(policy_h, *data_h)
         << "\n";
    }
  }
  run.write("report/report.md", md.str());
  run.finish("report");
  std::cout << md.str();
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Process-supervised reward pipeline for code generation"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--config", c.config_path, "key = value configuration file");
  auto* seed_opt = app.add_option("--seed", c.seed, "seed for all randomness");
  app.add_option("--out", c.out, "output directory");
  app.add_option("--jobs", c.jobs, "sandbox workers (0: one per CPU)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--teacher-endpoint", c.teacher_endpoint,
                 "HTTP endpoint of the external rewrite model");
  app.add_option("--interpreter", c.interpreter, "Python interpreter");
  app.add_option("--corpus", c.corpus, "corpus path or name under <out>/corpus");

  std::string input, name, ingest_name, augment_name, splits = "all", kind, suite = "corpus", dataset_dir,
      rm_path, policy_path;
  std::size_t limit = 0;
  auto* ingest_cmd = app.add_subcommand("ingest", "read a raw problem file");
  ingest_cmd->add_option("--input", input, "line-delimited problem records")
      ->required();
  ingest_cmd->add_option("--name", ingest_name, "corpus name")->default_val("mbpp");

  auto* aug = app.add_subcommand("augment-tests", "add tests that kill surviving mutants");
  aug->add_option("--splits", splits, "comma-separated splits or all");
  aug->add_option("--limit", limit, "at most this many problems (0: all)");
  aug->add_option("--name", augment_name, "output corpus name")
      ->default_val("mbpp_plus");

  auto* bd = app.add_subcommand("build-dataset", "step-level dataset from verified edits");
  bd->add_option("--limit", limit, "at most this many problems per split (0: all)");

  auto* trm = app.add_subcommand("train-rm", "train a reward model");
  trm->add_option("--kind", kind, "prm, orm_original or orm_preference")->required();
  trm->add_option("--suite", suite, "corpus or toy");
  trm->add_option("--dataset", dataset_dir, "dataset directory");

  auto* ppo = app.add_subcommand("train-ppo", "PPO on the toy suite");
  ppo->add_option("--rm", rm_path, "reward model file");
  ppo->add_option("--kind", kind, "orm_compiler");
  ppo->add_option("--policy", policy_path, "initial policy file");
  ppo->add_option("--name", name, "run name");

  auto* ev = app.add_subcommand("evaluate", "pass@k and rejection sampling");
  ev->add_option("--policy", policy_path, "policy file (default: initial policy)");
  ev->add_option("--rm", rm_path, "reward model for best-of-n selection");

  auto* rep = app.add_subcommand("report", "summarize the outputs under --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!c.config_path.empty()) c.config = Config::load(c.config_path);
    if (seed_opt->count() == 0 && c.config.has("seed")) {
      c.seed = static_cast<std::uint64_t>(c.config.get_int("seed", 7));
    }
    c.config.set("seed", std::to_string(c.seed));
    fs::create_directories(c.out);
    if (*ingest_cmd) return cmd_ingest(c, input, ingest_name);
    if (*aug) return cmd_augment(c, splits, limit, augment_name);
    if (*bd) return cmd_build_dataset(c, limit);
    if (*trm) return cmd_train_rm(c, kind, suite, dataset_dir);
    if (*ppo) return cmd_train_ppo(c, rm_path, kind, policy_path, name);
    if (*ev) return cmd_evaluate(c, policy_path, rm_path);
    if (*rep) return cmd_report(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed record: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("prlcoder");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace prl::cli
