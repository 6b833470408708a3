#include "prl/toy_env.hpp"

#include <algorithm>

#include "prl/errors.hpp"
#include "prl/pylex.hpp"
#include "prl/util.hpp"

namespace prl::rl {

namespace {

const std::vector<std::string>& base_vocabulary() {
  static const std::vector<std::string> kVocab = {
      "<eos>", "\n",    "<indent>", "<dedent>",
      // keywords
      "return", "if", "elif", "else", "for", "in", "range", "not", "and",
      "or", "True", "False", "None", "pass", "break", "continue", "is",
      // builtins
      "len", "abs", "max", "min", "sum",
      // identifiers
      "a", "b", "x", "s", "i", "r", "n", "y",
      // operators and punctuation
      "+", "-", "*", "//", "%", "<", "<=", ">", ">=", "==", "!=", "=", "+=",
      "-=", "*=", "(", ")", ":", ",", "[", "]",
      // literals
      "-3", "-2", "-1", "0", "1", "2", "3"};
  return kVocab;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& w : split(text, ' ')) {
    if (w.empty()) continue;
    out.push_back(w == "\\n" ? "\n" : w);
  }
  return out;
}

ToyEnvironment::Task make_task(int id, const char* name, const char* header,
                               const char* description, const char* body,
                               std::vector<std::string> tests) {
  return {id, name, header, description, words(body), std::move(tests)};
}

}  // namespace

ToyEnvironment ToyEnvironment::standard(std::size_t max_length) {
  std::vector<Task> tasks = {
      make_task(1, "add", "def f(a, b):", "Return the sum of a and b.",
                "return a + b",
                {"assert f(1, 2) == 3", "assert f(-2, 5) == 3",
                 "assert f(0, 0) == 0", "assert f(4, -1) == 3"}),
      make_task(2, "max2", "def f(a, b):",
                "Return the larger of a and b.",
                "if a > b : \\n <indent> return a \\n <dedent> return b",
                {"assert f(3, 1) == 3", "assert f(1, 3) == 3",
                 "assert f(-2, -5) == -2", "assert f(2, 2) == 2"}),
      make_task(3, "abs_diff", "def f(a, b):",
                "Return the absolute difference of a and b.",
                "return abs ( a - b )",
                {"assert f(5, 2) == 3", "assert f(2, 5) == 3",
                 "assert f(-1, 1) == 2", "assert f(4, 4) == 0"}),
      make_task(4, "sum_list", "def f(s):",
                "Return the sum of the numbers in list s using a loop.",
                "r = 0 \\n for x in s : \\n <indent> r += x \\n <dedent> "
                "return r",
                {"assert f([1, 2, 3]) == 6", "assert f([]) == 0",
                 "assert f([-1, 5]) == 4", "assert f([7]) == 7"}),
      make_task(5, "count_pos", "def f(s):",
                "Count the positive numbers in list s.",
                // One-line body: a nested block repeats the ": \\n <indent>"
                // context, which a three-token policy cannot tell apart.
                "r = 0 \\n for x in s : \\n <indent> if x > 0 : r += 1 \\n "
                "<dedent> return r",
                {"assert f([1, -2, 3]) == 2", "assert f([]) == 0",
                 "assert f([0, 0]) == 0", "assert f([5, 6, 7]) == 3"}),
      make_task(6, "sign", "def f(x):",
                "Return -1 for negative x, 0 for zero and 1 for positive x.",
                "if x < 0 : \\n <indent> return -1 \\n <dedent> return min ( "
                "x , 1 )",
                {"assert f(5) == 1", "assert f(-3) == -1", "assert f(0) == 0",
                 "assert f(1) == 1"}),
      make_task(7, "clamp", "def f(x):",
                "Clamp x to the range 0 to 3.",
                "return max ( 0 , min ( x , 3 ) )",
                {"assert f(5) == 3", "assert f(-2) == 0", "assert f(2) == 2",
                 "assert f(3) == 3"}),
      make_task(8, "double", "def f(x):", "Return twice x.", "return x * 2",
                {"assert f(3) == 6", "assert f(-2) == -4", "assert f(0) == 0",
                 "assert f(1) == 2"}),
      make_task(9, "is_even", "def f(x):",
                "Return True when x is even.", "return x % 2 == 0",
                {"assert f(4) is True", "assert f(3) is False",
                 "assert f(0) is True", "assert f(-1) is False"}),
      make_task(10, "max_list", "def f(s):",
                "Return the largest element of the non-empty list s.",
                "return max ( s )",
                {"assert f([1, 5, 2]) == 5", "assert f([-3]) == -3",
                 "assert f([2, 2, 1]) == 2", "assert f([-5, -1]) == -1"}),
      make_task(11, "sum_sq", "def f(s):",
                "Return the sum of the squares of the numbers in list s.",
                "r = 0 \\n for x in s : \\n <indent> r += x * x \\n <dedent> "
                "return r",
                {"assert f([1, 2]) == 5", "assert f([]) == 0",
                 "assert f([-3]) == 9", "assert f([2, 2, 1]) == 9"}),
      make_task(12, "range_sum", "def f(x):",
                "Return the sum of the integers from 0 up to but excluding x.",
                "return sum ( range ( x ) )",
                {"assert f(4) == 6", "assert f(1) == 0", "assert f(0) == 0",
                 "assert f(5) == 10"}),
  };
  return ToyEnvironment(std::move(tasks), max_length);
}

ToyEnvironment::ToyEnvironment(std::vector<Task> tasks, std::size_t max_length)
    : tasks_(std::move(tasks)),
      vocab_(base_vocabulary()),
      max_length_(max_length) {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const auto& t = tasks_[i];
    Problem p;
    p.id = t.id;
    p.description = t.description;
    for (const auto& a : t.tests) p.tests.push_back({a, TestOrigin::kSeed});
    p.reference_code = normalize(render(i, reference_tokens(i)));
    p.prompt = render_prompt(kDefaultPromptTemplate, p.description, p.tests);
    p.split = Split::kRlTrain;
    problems_.push_back(std::move(p));
  }
}

std::optional<int> ToyEnvironment::find_token(std::string_view word) const {
  const auto it = std::find(vocab_.begin(), vocab_.end(), word);
  if (it == vocab_.end()) return std::nullopt;
  return static_cast<int>(it - vocab_.begin());
}

int ToyEnvironment::token_id(std::string_view word) const {
  if (auto id = find_token(word)) return *id;
  throw InvalidInput("token outside the toy vocabulary: " + std::string(word));
}

std::vector<int> ToyEnvironment::reference_tokens(std::size_t task) const {
  std::vector<int> out;
  for (const auto& w : tasks_[task].reference) out.push_back(token_id(w));
  out.push_back(kEos);
  return out;
}

std::vector<std::string> ToyEnvironment::render_lines(
    const std::vector<int>& tokens) const {
  std::vector<std::string> lines;
  int level = 1;
  std::string line;
  bool at_start = true;
  auto flush = [&]() {
    lines.push_back(std::string(4 * static_cast<std::size_t>(level), ' ') +
                    line);
    line.clear();
    at_start = true;
  };
  bool any = false;
  for (const int tok : tokens) {
    if (tok == kEos) break;
    any = true;
    if (tok == kNewline) {
      flush();
      continue;
    }
    if (tok == kIndent || tok == kDedent) {
      if (at_start) {
        level = tok == kIndent ? level + 1 : std::max(1, level - 1);
        continue;
      }
      // Mid-line indentation is malformed and renders as a syntax error.
      if (!line.empty()) line += ' ';
      line += '$';
      continue;
    }
    if (!line.empty()) line += ' ';
    line += vocab_[static_cast<std::size_t>(tok)];
    at_start = false;
  }
  if (any && (!line.empty() || !at_start)) flush();
  return lines;
}

std::string ToyEnvironment::render(std::size_t task,
                                   const std::vector<int>& tokens) const {
  std::string out = tasks_[task].header + "\n";
  for (const auto& l : render_lines(tokens)) out += l + "\n";
  return out;
}

std::optional<std::vector<int>> ToyEnvironment::tokenize(
    std::size_t task, std::string_view program) const {
  const auto lines = split(program, '\n');
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first >= lines.size() || trim(lines[first]) != tasks_[task].header) {
    return std::nullopt;
  }
  std::vector<int> out;
  std::size_t level = 1;
  bool first_body = true;
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (trim(line).empty()) continue;
    const auto width = pylex::indent_of(line).size();
    if (width % 4 != 0 || width < 4) return std::nullopt;
    const auto depth = width / 4;
    if (!first_body) out.push_back(kNewline);
    first_body = false;
    if (depth == level + 1) {
      out.push_back(kIndent);
    } else if (depth > level + 1) {
      return std::nullopt;
    }
    for (std::size_t d = depth; d < level; ++d) out.push_back(kDedent);
    level = depth;
    const auto toks = pylex::lex_line(line);
    for (std::size_t k = 0; k < toks.size(); ++k) {
      const auto& t = toks[k];
      if (t.kind == pylex::Kind::kComment) continue;
      std::string word = t.text;
      // A minus directly in front of a number after an operator, an opening
      // bracket, a keyword or at the start is part of the literal.
      if (t.is_op("-") && k + 1 < toks.size() &&
          toks[k + 1].kind == pylex::Kind::kNumber &&
          toks[k + 1].begin == t.end) {
        const bool unary =
            k == 0 || toks[k - 1].kind == pylex::Kind::kOp ||
            (toks[k - 1].kind == pylex::Kind::kName &&
             pylex::is_keyword(toks[k - 1].text));
        const bool closes = k > 0 && (toks[k - 1].is_op(")") ||
                                      toks[k - 1].is_op("]"));
        if (unary && !closes) {
          word = "-" + toks[k + 1].text;
          ++k;
        }
      }
      const auto id = find_token(word);
      if (!id || *id <= kDedent) return std::nullopt;
      out.push_back(*id);
    }
  }
  out.push_back(kEos);
  return out;
}

}  // namespace prl::rl
