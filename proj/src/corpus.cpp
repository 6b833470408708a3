#include "prl/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "prl/errors.hpp"
#include "prl/pylex.hpp"
#include "prl/util.hpp"

namespace prl {
namespace {

using nlohmann::json;

// Lexical state carried from one physical line to the next.
struct ScanState {
  int bracket_depth = 0;
  char triple_quote = 0;  // quote char of an open triple-quoted string
  bool backslash_continuation = false;

  bool continuation() const {
    return bracket_depth > 0 || triple_quote != 0 || backslash_continuation;
  }
};

void advance(ScanState& st, std::string_view line) {
  st.backslash_continuation = false;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (st.triple_quote != 0) {
      if (c == '\\') {
        i += 2;
        continue;
      }
      if (line.substr(i, 3) == std::string(3, st.triple_quote)) {
        st.triple_quote = 0;
        i += 3;
        continue;
      }
      ++i;
      continue;
    }
    if (c == '#') return;
    if (c == '"' || c == '\'') {
      if (line.substr(i, 3) == std::string(3, c)) {
        st.triple_quote = c;
        i += 3;
        continue;
      }
      // Single-quoted strings cannot span lines; skip to the closing quote.
      ++i;
      while (i < line.size() && line[i] != c) {
        i += (line[i] == '\\') ? 2 : 1;
      }
      ++i;
      continue;
    }
    if (c == '(' || c == '[' || c == '{') ++st.bracket_depth;
    if ((c == ')' || c == ']' || c == '}') && st.bracket_depth > 0) {
      --st.bracket_depth;
    }
    if (c == '\\' && i + 1 == line.size()) st.backslash_continuation = true;
    ++i;
  }
}

std::string expand_tabs(std::string_view ws) {
  std::string out;
  for (const char c : ws) out += (c == '\t') ? std::string(4, ' ') : " ";
  return out;
}

std::string_view rstrip(std::string_view s) {
  const auto e = s.find_last_not_of(" \t\r\f\v");
  return e == std::string_view::npos ? std::string_view{} : s.substr(0, e + 1);
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kSftSeed:
      return "sft_seed";
    case Split::kRlTrain:
      return "rl_train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "test";
}

std::string_view to_string(TestOrigin origin) {
  return origin == TestOrigin::kSeed ? "seed" : "augmented";
}

Split parse_split(std::string_view name) {
  if (name == "sft_seed") return Split::kSftSeed;
  if (name == "rl_train") return Split::kRlTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw InvalidInput("unknown split: " + std::string(name));
}

TestOrigin parse_test_origin(std::string_view name) {
  if (name == "seed") return TestOrigin::kSeed;
  if (name == "augmented") return TestOrigin::kAugmented;
  throw InvalidInput("unknown test origin: " + std::string(name));
}

std::string CodeLines::joined() const {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

std::string CodeLines::prefix(std::size_t count) const {
  std::string out;
  for (std::size_t i = 0; i < count && i < lines.size(); ++i) {
    out += lines[i];
    out += '\n';
  }
  return out;
}

CodeLines Problem::code_lines() const { return split_lines(reference_code); }

std::vector<TestCase> Problem::seed_tests() const {
  std::vector<TestCase> out;
  for (const auto& t : tests) {
    if (t.origin == TestOrigin::kSeed) out.push_back(t);
  }
  return out;
}

std::string normalize(std::string_view source) {
  std::vector<std::string> out;
  std::vector<std::size_t> widths{0};  // open block indentation widths
  ScanState st;
  const auto raw_lines = split(source, '\n');
  for (std::size_t n = 0; n < raw_lines.size(); ++n) {
    std::string_view line = raw_lines[n];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (st.continuation()) {
      // Inside brackets, a triple-quoted string or after a backslash: not a
      // logical line start, so indentation carries no block structure.
      const bool starts_in_string = st.triple_quote != 0;
      advance(st, line);
      const auto ws = pylex::indent_of(line);
      std::string kept = starts_in_string
                             ? std::string(line)
                             : expand_tabs(ws) +
                                   std::string(line.substr(ws.size()));
      if (st.triple_quote == 0) kept = std::string(rstrip(kept));
      out.push_back(std::move(kept));
      continue;
    }

    const auto body = rstrip(line);
    const auto ws = pylex::indent_of(body);
    const auto content = body.substr(ws.size());
    if (content.empty()) {
      out.emplace_back();
      continue;
    }
    const bool has_tab = ws.find('\t') != std::string_view::npos;
    const bool has_space = ws.find(' ') != std::string_view::npos;
    if (has_tab && has_space) throw MixedIndentationUnresolvable(n + 1);
    const std::size_t width = expand_tabs(ws).size();

    std::size_t level = 0;
    if (content.front() == '#') {
      // Comments do not open or close blocks; place at the deepest open
      // block not wider than the comment.
      for (std::size_t k = 0; k < widths.size(); ++k) {
        if (widths[k] <= width) level = k;
      }
    } else {
      if (width > widths.back()) {
        widths.push_back(width);
      } else {
        while (width < widths.back()) widths.pop_back();
        if (width != widths.back()) throw MixedIndentationUnresolvable(n + 1);
      }
      level = widths.size() - 1;
    }
    out.push_back(std::string(4 * level, ' ') + std::string(content));
    advance(st, content);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  if (out.empty()) return {};
  std::string result;
  for (const auto& l : out) {
    result += l;
    result += '\n';
  }
  return result;
}

CodeLines split_lines(std::string_view source) {
  if (!source.empty() && source.back() == '\n') source.remove_suffix(1);
  return CodeLines{split(source, '\n')};
}

std::string render_prompt(std::string_view prompt_template,
                          std::string_view description,
                          const std::vector<TestCase>& tests) {
  std::vector<std::string> seed;
  for (const auto& t : tests) {
    if (t.origin == TestOrigin::kSeed && seed.size() < 3) {
      seed.push_back(t.assertion);
    }
  }
  std::string joined;
  for (std::size_t i = 0; i < seed.size(); ++i) {
    if (i) joined += '\n';
    joined += seed[i];
  }
  std::string out;
  std::size_t i = 0;
  while (i < prompt_template.size()) {
    if (prompt_template[i] == '{') {
      const auto close = prompt_template.find('}', i);
      if (close != std::string_view::npos) {
        const auto key = prompt_template.substr(i + 1, close - i - 1);
        if (key == "description") {
          out += description;
        } else if (key == "tests") {
          out += joined;
        } else if (key.size() == 5 && key.substr(0, 4) == "test" &&
                   key[4] >= '0' && key[4] <= '2') {
          const auto k = static_cast<std::size_t>(key[4] - '0');
          if (k < seed.size()) out += seed[k];
        } else {
          out += prompt_template.substr(i, close - i + 1);
        }
        i = close + 1;
        continue;
      }
    }
    out += prompt_template[i++];
  }
  return out;
}

SplitMap SplitMap::mbpp_default() {
  return SplitMap({{601, 974, Split::kSftSeed},
                   {101, 500, Split::kRlTrain},
                   {501, 600, Split::kValidation},
                   {1, 100, Split::kTest}});
}

SplitMap SplitMap::parse(std::string_view text) {
  std::vector<Range> ranges;
  for (const auto& item : split(text, ',')) {
    const auto entry = trim(item);
    if (entry.empty()) continue;
    const auto colon = entry.find(':');
    const auto dash = entry.find('-', 1);
    if (colon == std::string_view::npos || dash == std::string_view::npos ||
        dash > colon) {
      throw ConfigError("bad split range: " + std::string(entry));
    }
    try {
      ranges.push_back({std::stoi(std::string(entry.substr(0, dash))),
                        std::stoi(std::string(
                            entry.substr(dash + 1, colon - dash - 1))),
                        parse_split(trim(entry.substr(colon + 1)))});
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad split range: " + std::string(entry));
    }
  }
  return SplitMap(std::move(ranges));
}

std::optional<Split> SplitMap::find(int id) const {
  for (const auto& r : ranges_) {
    if (id >= r.lo && id <= r.hi) return r.split;
  }
  return std::nullopt;
}

Split SplitMap::lookup(int id) const {
  if (const auto s = find(id)) return *s;
  throw UnmappedId("problem id " + std::to_string(id) +
                   " is outside every split range");
}

Corpus::Corpus(std::vector<Problem> problems) : problems_(std::move(problems)) {
  for (std::size_t i = 0; i < problems_.size(); ++i) {
    if (!index_.emplace(problems_[i].id, i).second) {
      throw DuplicateId("duplicate problem id " +
                        std::to_string(problems_[i].id));
    }
  }
}

const Problem* Corpus::find(int id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &problems_[it->second];
}

Corpus Corpus::filter(Split split) const {
  std::vector<Problem> out;
  std::copy_if(problems_.begin(), problems_.end(), std::back_inserter(out),
               [split](const Problem& p) { return p.split == split; });
  return Corpus(std::move(out));
}

Corpus Corpus::head(std::size_t count) const {
  const auto n = std::min(count, problems_.size());
  return Corpus(std::vector<Problem>(problems_.begin(),
                                     problems_.begin() +
                                         static_cast<std::ptrdiff_t>(n)));
}

Corpus ingest_text(std::string_view text, std::string_view prompt_template) {
  std::vector<Problem> problems;
  std::size_t record = 0;
  for (const auto& raw : split(text, '\n')) {
    if (trim(raw).empty()) continue;
    const std::size_t index = record++;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::exception& e) {
      throw ParseError(index, e.what());
    }
    for (const char* field : {"task_id", "text", "code", "test_list"}) {
      if (!j.contains(field)) {
        throw ParseError(index, std::string("missing field ") + field);
      }
    }
    Problem p;
    try {
      p.id = j.at("task_id").get<int>();
      p.description = j.at("text").get<std::string>();
      const auto& tests = j.at("test_list");
      std::vector<std::string> origins;
      if (j.contains("test_origin")) {
        origins = j.at("test_origin").get<std::vector<std::string>>();
      }
      for (std::size_t t = 0; t < tests.size(); ++t) {
        TestCase tc{tests[t].get<std::string>(), TestOrigin::kSeed};
        if (t < origins.size()) tc.origin = parse_test_origin(origins[t]);
        p.tests.push_back(std::move(tc));
      }
      if (j.contains("split")) {
        p.split = parse_split(j.at("split").get<std::string>());
      }
    } catch (const json::exception& e) {
      throw ParseError(index, e.what());
    } catch (const InvalidInput& e) {
      throw ParseError(index, e.what());
    }
    if (p.tests.empty()) throw ParseError(index, "empty test_list");
    try {
      p.reference_code = normalize(j.at("code").get<std::string>());
    } catch (const MixedIndentationUnresolvable& e) {
      spdlog::warn("skipping task {}: {}", p.id, e.what());
      continue;
    } catch (const json::exception& e) {
      throw ParseError(index, e.what());
    }
    if (p.reference_code.empty()) {
      spdlog::warn("skipping task {}: empty code", p.id);
      continue;
    }
    p.prompt = render_prompt(prompt_template, p.description, p.tests);
    problems.push_back(std::move(p));
  }
  return Corpus(std::move(problems));
}

Corpus ingest(const std::filesystem::path& path,
              std::string_view prompt_template) {
  return ingest_text(read_file(path), prompt_template);
}

Corpus assign_splits(const Corpus& corpus, const SplitMap& map) {
  std::vector<Problem> out = corpus.problems();
  for (auto& p : out) p.split = map.lookup(p.id);
  return Corpus(std::move(out));
}

std::string serialize(const Corpus& corpus) {
  std::string out;
  for (const auto& p : corpus.problems()) {
    json j;
    j["task_id"] = p.id;
    j["text"] = p.description;
    j["code"] = p.reference_code;
    json tests = json::array();
    json origins = json::array();
    for (const auto& t : p.tests) {
      tests.push_back(t.assertion);
      origins.push_back(std::string(to_string(t.origin)));
    }
    j["test_list"] = tests;
    j["test_origin"] = origins;
    j["split"] = std::string(to_string(p.split));
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, serialize(corpus));
}

}  // namespace prl
