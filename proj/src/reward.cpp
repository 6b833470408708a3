#include "prl/reward.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "prl/errors.hpp"
#include "prl/mutator.hpp"
#include "prl/util.hpp"

namespace prl {

namespace {

constexpr std::string_view kKindNames[] = {"prm", "orm_original",
                                           "orm_preference", "orm_compiler"};
constexpr std::string_view kModelMagic = "prl-reward-model v1";

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                : std::exp(z) / (1.0 + std::exp(z));
}

double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng() % i]);
  }
}

// AdamW restricted to the parameters a minibatch touched; untouched
// parameters keep their moments and skip decay for that step.
class LazyAdamW {
 public:
  LazyAdamW(std::size_t n, double lr, double weight_decay)
      : m_(n, 0.0), v_(n, 0.0), lr_(lr), wd_(weight_decay) {}

  void step(std::vector<double>& params, const std::vector<double>& grad,
            const std::vector<std::size_t>& touched) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (const auto i : touched) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr_ * wd_ * params[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<double> m_, v_;
  double lr_, wd_;
  std::uint64_t t_ = 0;
};

void check_finite(double loss) {
  if (!std::isfinite(loss)) throw NonFiniteLoss("reward model loss diverged");
}

std::vector<std::size_t> touched_params(const RewardModel& model,
                                        const std::vector<FeatureVector>& xs,
                                        const std::vector<std::size_t>& rows,
                                        bool with_bias) {
  std::set<std::uint32_t> cols;
  for (const auto r : rows) cols.insert(xs[r].index.begin(), xs[r].index.end());
  std::vector<std::size_t> out;
  const std::size_t h = model.hidden();
  if (h == 0) {
    out.assign(cols.begin(), cols.end());
    if (with_bias) out.push_back(kFeatureDim);
    return out;
  }
  for (std::size_t r = 0; r < h; ++r) {
    for (const auto c : cols) out.push_back(r * kFeatureDim + c);
  }
  const std::size_t tail = h * kFeatureDim;
  for (std::size_t i = tail; i < model.params().size(); ++i) out.push_back(i);
  return out;
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

std::string_view to_string(RewardKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

RewardKind parse_reward_kind(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kKindNames[i] == name) return static_cast<RewardKind>(i);
  }
  throw InvalidInput("unknown reward model kind: " + std::string(name));
}

ClassMetrics classification_metrics(const std::vector<double>& probabilities,
                                    const std::vector<double>& labels) {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = probabilities[i] >= 0.5;
    const bool pos = labels[i] >= 0.5;
    if (pred && pos) ++tp;
    if (!pred && !pos) ++tn;
    if (pred && !pos) ++fp;
    if (!pred && pos) ++fn;
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
  };
  ClassMetrics m;
  m.count = labels.size();
  m.accuracy = ratio(tp + tn, labels.size());
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall > 0
             ? 2 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.positive_accuracy = m.recall;
  m.negative_accuracy = ratio(tn, tn + fp);
  return m;
}

RewardModel::RewardModel(RewardKind kind, std::size_t hidden)
    : kind_(kind), hidden_(hidden) {
  if (hidden == 0) {
    params_.assign(kFeatureDim + 1, 0.0);
  } else {
    params_.assign(hidden * kFeatureDim + 2 * hidden + 1, 0.0);
  }
}

double RewardModel::logit(const FeatureVector& x) const {
  if (hidden_ == 0) return x.dot(params_.data()) + params_[kFeatureDim];
  const double* b1 = params_.data() + hidden_ * kFeatureDim;
  const double* w2 = b1 + hidden_;
  double out = w2[hidden_];
  for (std::size_t r = 0; r < hidden_; ++r) {
    out += w2[r] * std::tanh(x.dot(params_.data() + r * kFeatureDim) + b1[r]);
  }
  return out;
}

double RewardModel::probability(const FeatureVector& x) const {
  return sigmoid(logit(x));
}

double RewardModel::reward(const FeatureVector& x) const {
  return 2.0 * probability(x) - 1.0;
}

void RewardModel::accumulate_logit_grad(const FeatureVector& x, double scale,
                                        double* grad) const {
  if (hidden_ == 0) {
    for (std::size_t j = 0; j < x.index.size(); ++j) {
      grad[x.index[j]] += scale * x.value[j];
    }
    grad[kFeatureDim] += scale;
    return;
  }
  const std::size_t tail = hidden_ * kFeatureDim;
  const double* b1 = params_.data() + tail;
  const double* w2 = b1 + hidden_;
  for (std::size_t r = 0; r < hidden_; ++r) {
    const double h =
        std::tanh(x.dot(params_.data() + r * kFeatureDim) + b1[r]);
    grad[tail + hidden_ + r] += scale * h;
    const double dz = scale * w2[r] * (1.0 - h * h);
    for (std::size_t j = 0; j < x.index.size(); ++j) {
      grad[r * kFeatureDim + x.index[j]] += dz * x.value[j];
    }
    grad[tail + r] += dz;
  }
  grad[tail + 2 * hidden_] += scale;
}

std::string RewardModel::serialize() const {
  std::ostringstream os;
  os << kModelMagic << "\n";
  os << "kind " << to_string(kind_) << "\n";
  os << "config_hash " << (meta_.config_hash.empty() ? "-" : meta_.config_hash)
     << "\n";
  os << "dim " << kFeatureDim << "\n";
  os << "hidden " << hidden_ << "\n";
  os << "epochs " << meta_.epochs << "\n";
  os << "seed " << meta_.seed << "\n";
  os << "loss " << meta_.loss_curve.size();
  for (const auto l : meta_.loss_curve) os << " " << hexfloat(l);
  os << "\n";
  std::size_t nnz = 0;
  for (const auto p : params_) nnz += p != 0.0;
  os << "params " << params_.size() << " " << nnz << "\n";
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i] != 0.0) os << i << " " << hexfloat(params_[i]) << "\n";
  }
  return os.str();
}

RewardModel RewardModel::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || line != kModelMagic) {
    throw InvalidInput("not a reward model file");
  }
  auto expect = [&](const char* key) {
    std::string k;
    if (!(is >> k) || k != key) {
      throw InvalidInput(std::string("reward model file: expected ") + key);
    }
  };
  auto read_double = [&]() {
    std::string tok;
    is >> tok;
    return std::strtod(tok.c_str(), nullptr);
  };
  std::string kind, hash;
  std::size_t dim = 0, hidden = 0;
  expect("kind");
  is >> kind;
  expect("config_hash");
  is >> hash;
  expect("dim");
  is >> dim;
  if (dim != kFeatureDim) throw InvalidInput("reward model dimension mismatch");
  expect("hidden");
  is >> hidden;
  RewardModel m(parse_reward_kind(kind), hidden);
  m.meta_.config_hash = hash == "-" ? "" : hash;
  expect("epochs");
  is >> m.meta_.epochs;
  expect("seed");
  is >> m.meta_.seed;
  expect("loss");
  std::size_t n = 0;
  is >> n;
  for (std::size_t i = 0; i < n; ++i) m.meta_.loss_curve.push_back(read_double());
  expect("params");
  std::size_t size = 0, nnz = 0;
  is >> size >> nnz;
  if (size != m.params_.size()) throw InvalidInput("reward model size mismatch");
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0;
    is >> i;
    if (!is || i >= size) throw InvalidInput("reward model: bad parameter");
    m.params_[i] = read_double();
  }
  return m;
}

void RewardModel::save(const std::filesystem::path& path) const {
  write_file(path, serialize());
}

RewardModel RewardModel::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

LabeledFeatures featurize_samples(const std::vector<StepSample>& samples,
                                  kernels::Backend backend) {
  std::vector<std::string> prompts, prefixes;
  LabeledFeatures out;
  for (const auto& s : samples) {
    prompts.push_back(s.prompt);
    prefixes.push_back(s.prefix());
    out.y.push_back(s.positive() ? 1.0 : 0.0);
  }
  out.x = kernels::featurize_batch(prompts, prefixes, backend);
  return out;
}

ClassMetrics evaluate_classifier(const RewardModel& model,
                                 const LabeledFeatures& data) {
  std::vector<double> p(data.x.size());
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    p[i] = model.probability(data.x[i]);
  }
  return classification_metrics(p, data.y);
}

TrainResult train_classifier(RewardKind kind, const LabeledFeatures& train,
                             const LabeledFeatures& validation,
                             const TrainHyper& hyper) {
  const auto positives = std::count(train.y.begin(), train.y.end(), 1.0);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(train.y.size())) {
    throw DegenerateData("classifier training data holds a single class");
  }
  TrainResult res;
  res.model = RewardModel(kind, hyper.hidden);
  auto& params = res.model.params();
  if (hyper.hidden > 0) {
    std::mt19937_64 rng(combine_seed(hyper.seed, 0x1417));
    std::normal_distribution<double> init(0.0, 0.1);
    for (auto& p : params) p = init(rng);
  }
  LazyAdamW opt(params.size(), hyper.learning_rate, hyper.weight_decay);
  std::vector<double> grad(params.size(), 0.0);
  std::vector<std::size_t> rows(train.x.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const std::size_t bs = std::max<std::size_t>(1, hyper.batch_size);

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    seeded_shuffle(rows, combine_seed(hyper.seed, epoch));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < rows.size(); start += bs) {
      const std::vector<std::size_t> batch(
          rows.begin() + start, rows.begin() + std::min(rows.size(), start + bs));
      double loss = 0.0;
      if (hyper.hidden == 0) {
        loss = kernels::logistic_loss_grad(train.x, train.y, batch,
                                           params.data(), params[kFeatureDim],
                                           grad.data(), &grad[kFeatureDim],
                                           hyper.backend);
      } else {
        const auto touched = touched_params(res.model, train.x, batch, true);
        for (const auto i : touched) grad[i] = 0.0;
        const double inv = 1.0 / static_cast<double>(batch.size());
        for (const auto r : batch) {
          const double z = res.model.logit(train.x[r]);
          loss += (softplus(z) - train.y[r] * z) * inv;
          res.model.accumulate_logit_grad(train.x[r],
                                          (sigmoid(z) - train.y[r]) * inv,
                                          grad.data());
        }
      }
      check_finite(loss);
      opt.step(params, grad,
               touched_params(res.model, train.x, batch, true));
      epoch_loss += loss * static_cast<double>(batch.size());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(rows.size());
    if (!validation.x.empty()) {
      rec.validation = evaluate_classifier(res.model, validation);
    }
    res.model.meta().loss_curve.push_back(rec.train_loss);
    spdlog::debug("{} epoch {}: loss {:.4f} val acc {:.4f}", to_string(kind),
                  epoch, rec.train_loss, rec.validation.accuracy);
    res.history.push_back(rec);
  }
  res.model.meta().epochs = hyper.epochs;
  res.model.meta().seed = hyper.seed;
  return res;
}

TrainResult train_prm(const DatasetSplit& train,
                      const DatasetSplit& validation,
                      const TrainHyper& hyper) {
  return train_classifier(RewardKind::kPrm,
                          featurize_samples(train.samples, hyper.backend),
                          featurize_samples(validation.samples, hyper.backend),
                          hyper);
}

std::vector<double> SegmentRewardTrace::dense() const {
  std::vector<double> out(length, 0.0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out[positions[i]] = rewards[i];
  }
  return out;
}

std::vector<std::size_t> segment_end_positions(std::string_view code) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (code[i] == '\n') out.push_back(i);
  }
  if (!code.empty() && code.back() != '\n') out.push_back(code.size() - 1);
  return out;
}

std::vector<std::string> cumulative_segments(std::string_view code) {
  std::vector<std::string> out;
  for (const auto end : segment_end_positions(code)) {
    // w_i excludes its terminating newline, like StepSample::prefix().
    const auto len = code[end] == '\n' ? end : end + 1;
    out.emplace_back(code.substr(0, len));
  }
  return out;
}

std::vector<double> score_segments(const RewardModel& model,
                                   std::string_view prompt,
                                   const std::vector<std::string>& segments) {
  std::vector<double> out;
  out.reserve(segments.size());
  for (const auto& w : segments) out.push_back(model.reward(featurize(prompt, w)));
  return out;
}

SegmentRewardTrace score_prm(const RewardModel& model, std::string_view prompt,
                             std::string_view code) {
  SegmentRewardTrace t;
  t.length = code.size();
  t.positions = segment_end_positions(code);
  t.rewards = score_segments(model, prompt, cumulative_segments(code));
  return t;
}

SegmentRewardTrace reward_orm_original(const RewardModel& model,
                                       std::string_view prompt,
                                       std::string_view code) {
  if (code.empty()) throw InvalidInput("empty code has no terminal token");
  SegmentRewardTrace t;
  t.length = code.size();
  t.positions = {code.size() - 1};
  std::string_view body = code;
  if (body.back() == '\n') body.remove_suffix(1);
  t.rewards = {model.reward(featurize(prompt, body))};
  return t;
}

std::vector<StepSample> orm_samples(const Corpus& corpus,
                                    const std::vector<StepSample>& samples) {
  std::vector<StepSample> out;
  std::set<std::pair<int, std::string>> seen;
  auto add = [&](const Problem& p, std::string code, Label label,
                 SampleSource source, std::optional<VerdictStatus> verdict) {
    while (!code.empty() && code.back() == '\n') code.pop_back();
    if (!seen.emplace(p.id, code).second) return;
    StepSample s;
    s.problem_id = p.id;
    s.prompt = p.prompt;
    s.prefix_lines = split(code, '\n');
    s.label = label;
    s.source = source;
    s.verdict = verdict;
    out.push_back(std::move(s));
  };
  std::set<int> refs;
  for (const auto& s : samples) {
    const Problem* p = corpus.find(s.problem_id);
    if (!p) {
      throw InvalidInput("sample for unknown problem " +
                         std::to_string(s.problem_id));
    }
    if (refs.insert(p->id).second) {
      add(*p, p->reference_code, Label::kPositive, SampleSource::kReference,
          std::nullopt);
    }
    if (s.source != SampleSource::kReference) {
      add(*p, reconstruct_program(s, *p), s.label, s.source, s.verdict);
    }
  }
  return out;
}

TrainResult train_orm_original(const std::vector<StepSample>& train,
                               const std::vector<StepSample>& validation,
                               const TrainHyper& hyper) {
  return train_classifier(RewardKind::kOrmOriginal,
                          featurize_samples(train, hyper.backend),
                          featurize_samples(validation, hyper.backend), hyper);
}

double sandbox_rank(const ExecutionVerdict& verdict) {
  return 10.0 * static_cast<double>(verdict.passed_count) +
         (4.0 - static_cast<double>(verdict.status));
}

SnippetRanker sandbox_ranker(const Sandbox& sandbox,
                             const ResourceLimits& limits) {
  return [&sandbox, limits](const Problem& p, const std::string& code) {
    return sandbox_rank(sandbox.verify(code, p.tests, limits));
  };
}

SnippetGenerator edit_generator(std::uint64_t seed) {
  return [seed](const Problem& p, std::size_t m, std::mt19937_64& rng) {
    std::vector<std::string> pool{p.reference_code};
    const auto code = p.code_lines();
    for (const auto& e : edit_problem(p, MutationRuleSet::all(seed), true, true)) {
      pool.push_back(apply_edit(code, e));
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < m && !pool.empty(); ++i) {
      const auto k = rng() % pool.size();
      out.push_back(pool[k]);
      if (pool.size() > m - i) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
  };
}

std::vector<PreferenceGroup> build_preference_groups(
    const Corpus& corpus, const SnippetGenerator& generator,
    const SnippetRanker& ranker, std::size_t m, std::uint64_t seed) {
  std::vector<PreferenceGroup> groups;
  for (const auto& p : corpus.problems()) {
    std::mt19937_64 rng(combine_seed(seed, static_cast<std::uint64_t>(p.id)));
    PreferenceGroup g;
    g.prompt = p.prompt;
    for (auto& code : generator(p, m, rng)) {
      const double rank = ranker(p, code);
      g.snippets.push_back({std::move(code), rank});
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<std::pair<std::size_t, std::size_t>> preference_pairs(
    const std::vector<PreferenceGroup>& groups) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t base = 0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.snippets.size(); ++i) {
      for (std::size_t j = i + 1; j < g.snippets.size(); ++j) {
        const double a = g.snippets[i].rank;
        const double b = g.snippets[j].rank;
        if (a > b) pairs.emplace_back(base + i, base + j);
        if (b > a) pairs.emplace_back(base + j, base + i);
      }
    }
    base += g.snippets.size();
  }
  return pairs;
}

TrainResult train_orm_preference(const std::vector<PreferenceGroup>& groups,
                                 const TrainHyper& hyper) {
  const auto pairs = preference_pairs(groups);
  if (pairs.empty()) {
    throw DegenerateData("no ranked snippet pairs for the preference model");
  }
  std::vector<std::string> prompts, codes;
  for (const auto& g : groups) {
    for (const auto& s : g.snippets) {
      prompts.push_back(g.prompt);
      std::string_view body = s.code;
      while (!body.empty() && body.back() == '\n') body.remove_suffix(1);
      codes.emplace_back(body);
    }
  }
  const auto xs = kernels::featurize_batch(prompts, codes, hyper.backend);
  TrainResult res;
  res.model = RewardModel(RewardKind::kOrmPreference, 0);
  auto& params = res.model.params();
  LazyAdamW opt(params.size(), hyper.learning_rate, hyper.weight_decay);
  std::vector<double> grad(params.size(), 0.0);
  std::vector<std::size_t> rows(pairs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const std::size_t bs = std::max<std::size_t>(1, hyper.batch_size);
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    seeded_shuffle(rows, combine_seed(hyper.seed, epoch));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < rows.size(); start += bs) {
      const std::vector<std::size_t> batch(
          rows.begin() + start, rows.begin() + std::min(rows.size(), start + bs));
      const double loss = kernels::pairwise_loss_grad(
          xs, pairs, batch, params.data(), grad.data(), hyper.backend);
      check_finite(loss);
      std::set<std::size_t> touched;
      for (const auto r : batch) {
        touched.insert(xs[pairs[r].first].index.begin(),
                       xs[pairs[r].first].index.end());
        touched.insert(xs[pairs[r].second].index.begin(),
                       xs[pairs[r].second].index.end());
      }
      opt.step(params, grad, {touched.begin(), touched.end()});
      epoch_loss += loss * static_cast<double>(batch.size());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(rows.size());
    res.model.meta().loss_curve.push_back(rec.train_loss);
    res.history.push_back(rec);
  }
  res.model.meta().epochs = hyper.epochs;
  res.model.meta().seed = hyper.seed;
  return res;
}

SegmentRewardTrace reward_orm_preference(const RewardModel& model,
                                         std::string_view prompt,
                                         std::string_view code) {
  if (code.empty()) throw InvalidInput("empty code has no terminal token");
  SegmentRewardTrace t;
  t.length = code.size();
  t.positions = {code.size() - 1};
  std::string_view body = code;
  while (!body.empty() && body.back() == '\n') body.remove_suffix(1);
  t.rewards = {std::tanh(model.logit(featurize(prompt, body)) / 2.0)};
  return t;
}

double CompilerRewardMap::operator()(VerdictStatus status) const {
  switch (status) {
    case VerdictStatus::kAllPassed:
      return all_passed;
    case VerdictStatus::kTestFailed:
      return test_failed;
    case VerdictStatus::kRuntimeError:
      return runtime_error;
    case VerdictStatus::kCompileError:
      return compile_error;
    case VerdictStatus::kTimeout:
      return timeout;
  }
  return compile_error;
}

double reward_orm_compiler(const ExecutionVerdict& verdict,
                           const CompilerRewardMap& map) {
  return map(verdict.status);
}

}  // namespace prl
