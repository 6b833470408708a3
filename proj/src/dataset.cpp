#include "prl/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <json.hpp>
#include <random>
#include <memory>
#include <set>
#include <sstream>

#include "prl/errors.hpp"
#include "prl/util.hpp"

namespace prl {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view name, const std::string_view (&names)[N],
                const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  throw InvalidInput(std::string("unknown ") + what + ": " +
                     std::string(name));
}

constexpr std::string_view kLabelNames[] = {"positive", "negative"};
constexpr std::string_view kSourceNames[] = {"reference", "mutate",
                                             "refactor"};
constexpr std::string_view kSplitNames[] = {"train", "validation", "test"};

// Portable Fisher-Yates so shuffles do not depend on the standard library.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng() % i]);
  }
}

}  // namespace

std::string_view to_string(Label label) {
  return kLabelNames[static_cast<int>(label)];
}
std::string_view to_string(SampleSource source) {
  return kSourceNames[static_cast<int>(source)];
}
std::string_view to_string(DatasetSplitName name) {
  return kSplitNames[static_cast<int>(name)];
}
Label parse_label(std::string_view name) {
  return parse_enum<Label>(name, kLabelNames, "label");
}
SampleSource parse_sample_source(std::string_view name) {
  return parse_enum<SampleSource>(name, kSourceNames, "sample source");
}
DatasetSplitName parse_dataset_split(std::string_view name) {
  return parse_enum<DatasetSplitName>(name, kSplitNames, "dataset split");
}

std::string StepSample::prefix() const {
  std::string out;
  for (std::size_t i = 0; i < prefix_lines.size(); ++i) {
    if (i) out += '\n';
    out += prefix_lines[i];
  }
  return out;
}

std::vector<StepSample> build_positive_prefixes(const Problem& problem) {
  const auto code = problem.code_lines();
  std::vector<StepSample> out;
  out.reserve(code.line_count());
  for (std::size_t l = 1; l <= code.line_count(); ++l) {
    StepSample s;
    s.problem_id = problem.id;
    s.prompt = problem.prompt;
    s.prefix_lines.assign(code.lines.begin(), code.lines.begin() + l);
    s.label = Label::kPositive;
    s.source = SampleSource::kReference;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<StepSample> build_edit_samples(
    const Problem& problem, const std::vector<LineEdit>& edits,
    const std::vector<ExecutionVerdict>& verdicts) {
  if (edits.size() != verdicts.size()) {
    throw AlignmentError(std::to_string(edits.size()) + " edits but " +
                         std::to_string(verdicts.size()) + " verdicts");
  }
  const auto code = problem.code_lines();
  std::vector<StepSample> out;
  out.reserve(edits.size());
  for (std::size_t k = 0; k < edits.size(); ++k) {
    const auto& e = edits[k];
    if (e.problem_id != problem.id) {
      throw InvalidArgs("edit for problem " + std::to_string(e.problem_id) +
                        " given with problem " + std::to_string(problem.id));
    }
    if (e.line_index >= code.line_count()) {
      throw InvalidArgs("edit line " + std::to_string(e.line_index) +
                        " outside problem " + std::to_string(problem.id));
    }
    StepSample s;
    s.problem_id = problem.id;
    s.prompt = problem.prompt;
    s.prefix_lines.assign(code.lines.begin(),
                          code.lines.begin() + e.line_index);
    s.prefix_lines.push_back(e.edited_line);
    s.verdict = verdicts[k].status;
    s.label = verdicts[k].passed() ? Label::kPositive : Label::kNegative;
    s.source = e.mode == EditMode::kMutate ? SampleSource::kMutate
                                           : SampleSource::kRefactor;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<StepSample> deduplicate(std::vector<StepSample> samples) {
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<StepSample> out;
  out.reserve(samples.size());
  for (auto& s : samples) {
    if (seen.emplace(s.prompt, s.prefix()).second) out.push_back(std::move(s));
  }
  return out;
}

std::string reconstruct_program(const StepSample& sample,
                                const Problem& problem) {
  const auto code = problem.code_lines();
  std::string out;
  for (const auto& l : sample.prefix_lines) out += l + "\n";
  for (std::size_t i = sample.prefix_lines.size(); i < code.line_count();
       ++i) {
    out += code.lines[i] + "\n";
  }
  return out;
}

DatasetSplitMap DatasetSplitMap::seed_default() {
  return DatasetSplitMap({{601, 900, DatasetSplitName::kTrain},
                          {901, 937, DatasetSplitName::kValidation},
                          {938, 974, DatasetSplitName::kTest}});
}

DatasetSplitMap DatasetSplitMap::single(DatasetSplitName name) {
  DatasetSplitMap m;
  m.all_ = name;
  return m;
}

DatasetSplitMap DatasetSplitMap::parse(std::string_view text) {
  if (trim(text).find(':') == std::string_view::npos) {
    return single(parse_dataset_split(trim(text)));
  }
  std::vector<Range> ranges;
  for (const auto& item : split(text, ',')) {
    const auto entry = trim(item);
    if (entry.empty()) continue;
    const auto colon = entry.find(':');
    const auto dash = entry.find('-', 1);
    if (colon == std::string_view::npos || dash == std::string_view::npos ||
        dash > colon) {
      throw ConfigError("bad dataset split range: " + std::string(entry));
    }
    try {
      ranges.push_back(
          {std::stoi(std::string(entry.substr(0, dash))),
           std::stoi(std::string(entry.substr(dash + 1, colon - dash - 1))),
           parse_dataset_split(trim(entry.substr(colon + 1)))});
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad dataset split range: " + std::string(entry));
    }
  }
  return DatasetSplitMap(std::move(ranges));
}

DatasetSplitName DatasetSplitMap::lookup(int problem_id) const {
  if (all_) return *all_;
  for (const auto& r : ranges_) {
    if (problem_id >= r.lo && problem_id <= r.hi) return r.name;
  }
  throw UnmappedId("problem id " + std::to_string(problem_id) +
                   " has no dataset split");
}

std::vector<DatasetSplit> make_splits(const std::vector<StepSample>& samples,
                                      const DatasetSplitMap& map,
                                      std::uint64_t seed) {
  std::vector<DatasetSplit> splits(3);
  for (int i = 0; i < 3; ++i) {
    splits[i].name = static_cast<DatasetSplitName>(i);
  }
  for (const auto& s : samples) {
    auto& d = splits[static_cast<int>(map.lookup(s.problem_id))];
    d.samples.push_back(s);
    (s.positive() ? d.positive_count : d.negative_count)++;
  }
  for (auto& d : splits) {
    seeded_shuffle(d.samples,
                   combine_seed(seed, fnv1a(to_string(d.name))));
  }
  return splits;
}

std::vector<DatasetSplit> emit_splits(const std::vector<StepSample>& samples,
                                      const DatasetSplitMap& map,
                                      std::uint64_t seed,
                                      const std::filesystem::path& dir) {
  auto splits = make_splits(samples, map, seed);
  nlohmann::ordered_json stats;
  for (const auto& d : splits) {
    const std::string name(to_string(d.name));
    write_file(dir / (name + ".jsonl"), to_jsonl(d.samples));
    stats[name] = {{"samples", d.samples.size()},
                   {"positive", d.positive_count},
                   {"negative", d.negative_count}};
    spdlog::info("{}: {} positive / {} negative", name, d.positive_count,
                 d.negative_count);
  }
  write_file(dir / "stats.json", stats.dump(2) + "\n");
  return splits;
}

std::string to_jsonl(const std::vector<StepSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["problem_id"] = s.problem_id;
    j["prompt"] = s.prompt;
    j["prefix"] = s.prefix();
    j["label"] = to_string(s.label);
    j["source"] = to_string(s.source);
    if (s.verdict) {
      j["verdict"] = to_string(*s.verdict);
    } else {
      j["verdict"] = nullptr;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<StepSample> parse_samples(std::string_view jsonl) {
  std::vector<StepSample> out;
  std::size_t index = 0;
  for (const auto& line : split(jsonl, '\n')) {
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      StepSample s;
      s.problem_id = j.at("problem_id").get<int>();
      s.prompt = j.at("prompt").get<std::string>();
      s.prefix_lines = split(j.at("prefix").get<std::string>(), '\n');
      s.label = parse_label(j.at("label").get<std::string>());
      s.source = parse_sample_source(j.at("source").get<std::string>());
      if (j.contains("verdict") && !j["verdict"].is_null()) {
        s.verdict = parse_verdict_status(j["verdict"].get<std::string>());
      }
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(index, e.what());
    } catch (const InvalidInput& e) {
      throw ParseError(index, e.what());
    }
    ++index;
  }
  return out;
}

std::vector<StepSample> load_samples(const std::filesystem::path& path) {
  return parse_samples(read_file(path));
}

double DatasetStats::mutate_negative_fraction() const {
  const auto total = mutate_positive + mutate_negative;
  return total ? static_cast<double>(mutate_negative) / total : 0.0;
}

std::vector<StepSample> build_dataset(const Corpus& corpus,
                                      const MutationRuleSet& rules,
                                      const Sandbox& sandbox,
                                      const ResourceLimits& limits,
                                      const DatasetOptions& options,
                                      DatasetStats* stats) {
  struct PerProblem {
    std::vector<LineEdit> edits;
    std::size_t first_job = 0;
  };
  std::vector<PerProblem> per(corpus.size());
  std::vector<Sandbox::Job> jobs;
  std::unique_ptr<TeacherClient> teacher;
  if (options.teacher_endpoint) {
    teacher = std::make_unique<TeacherClient>(*options.teacher_endpoint);
  }
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    const auto& problem = corpus.problems()[p];
    // A teacher can stand in for the built-in rules entirely.
    if (!teacher || !rules.enabled_rules.empty()) {
      per[p].edits =
          edit_problem(problem, rules, options.mutate, options.refactor);
    }
    per[p].first_job = jobs.size();
    const auto code = problem.code_lines();
    if (teacher) {
      std::vector<EditMode> modes;
      if (options.mutate) modes.push_back(EditMode::kMutate);
      if (options.refactor) modes.push_back(EditMode::kRefactor);
      for (std::size_t i = 0; i < code.lines.size(); ++i) {
        if (is_skipped_line(code.lines[i])) continue;
        for (const auto mode : modes) {
          try {
            auto e = teacher->rewrite(code.lines[i], code, mode, problem.prompt);
            e.problem_id = problem.id;
            e.line_index = i;
            per[p].edits.push_back(std::move(e));
          } catch (const EditIdenticalToOriginal& ex) {
            spdlog::debug("teacher edit skipped: {}", ex.what());
          } catch (const MalformedTeacherResponse& ex) {
            spdlog::warn("teacher edit skipped for problem {} line {}: {}",
                         problem.id, i, ex.what());
          }
        }
      }
    }
    for (const auto& e : per[p].edits) {
      jobs.push_back({apply_edit(code, e), &problem.tests});
    }
  }
  spdlog::info("verifying {} edits over {} problems", jobs.size(),
               corpus.size());
  const auto verdicts = sandbox.verify_batch(jobs, limits);

  DatasetStats st;
  std::vector<StepSample> samples;
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    const auto& problem = corpus.problems()[p];
    auto positives = build_positive_prefixes(problem);
    const auto begin = verdicts.begin() +
                       static_cast<std::ptrdiff_t>(per[p].first_job);
    const std::vector<ExecutionVerdict> mine(
        begin, begin + static_cast<std::ptrdiff_t>(per[p].edits.size()));
    auto edited = build_edit_samples(problem, per[p].edits, mine);
    if (options.reference_ratio > 0.0) {
      const auto keep = static_cast<std::size_t>(
          options.reference_ratio * static_cast<double>(edited.size()));
      if (positives.size() > keep) {
        seeded_shuffle(positives, combine_seed(options.seed, problem.id));
        positives.resize(keep);
      }
    }
    for (auto& s : positives) samples.push_back(std::move(s));
    for (auto& s : edited) samples.push_back(std::move(s));
  }
  const auto before = samples.size();
  samples = deduplicate(std::move(samples));
  st.duplicates_dropped = before - samples.size();
  for (const auto& s : samples) {
    switch (s.source) {
      case SampleSource::kReference:
        ++st.reference_positives;
        break;
      case SampleSource::kMutate:
        (s.positive() ? st.mutate_positive : st.mutate_negative)++;
        break;
      case SampleSource::kRefactor:
        (s.positive() ? st.refactor_positive : st.refactor_negative)++;
        break;
    }
  }
  if (stats) *stats = st;
  return samples;
}

}  // namespace prl
