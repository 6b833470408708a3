#include "prl/mutator.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <set>

#include "prl/errors.hpp"
#include "prl/pylex.hpp"
#include "prl/util.hpp"

namespace prl {
namespace {

using pylex::Kind;
using pylex::Token;

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

// A line split into indentation, code tokens and an optional comment.
struct LineView {
  std::string_view line;
  std::vector<Token> toks;  // comment excluded
  std::optional<Token> comment;

  explicit LineView(std::string_view l) : line(l) {
    toks = pylex::lex_line(l);
    if (!toks.empty() && toks.back().kind == Kind::kComment) {
      comment = toks.back();
      toks.pop_back();
    }
  }

  std::size_t size() const { return toks.size(); }
  std::string_view indent() const { return pylex::indent_of(line); }
  std::string_view text(std::size_t first, std::size_t last) const {
    return line.substr(toks[first].begin, toks[last].end - toks[first].begin);
  }
  // End of the code portion (before any comment).
  std::size_t code_end() const { return toks.empty() ? 0 : toks.back().end; }
  std::string tail() const {
    return comment ? std::string(line.substr(code_end())) : std::string();
  }
  bool first_is(std::string_view kw) const {
    return !toks.empty() && toks.front().is_name(kw);
  }
};

struct Span {
  std::size_t begin;
  std::size_t end;
  std::string replacement;
};

std::string replace_spans(std::string_view line, std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.begin < b.begin; });
  std::string out;
  std::size_t pos = 0;
  for (const auto& s : spans) {
    out += line.substr(pos, s.begin - pos);
    out += s.replacement;
    pos = s.end;
  }
  out += line.substr(pos);
  return out;
}

bool is_value_keyword(std::string_view n) {
  return n == "True" || n == "False" || n == "None";
}

// Token that can end an operand, so a following `-`/`*` is binary.
bool ends_operand(const Token& t) {
  switch (t.kind) {
    case Kind::kName:
      return !pylex::is_keyword(t.text) || is_value_keyword(t.text);
    case Kind::kNumber:
    case Kind::kString:
      return true;
    case Kind::kOp:
      return t.text == ")" || t.text == "]" || t.text == "}";
    default:
      return false;
  }
}

bool is_open(const Token& t) {
  return t.kind == Kind::kOp &&
         (t.text == "(" || t.text == "[" || t.text == "{");
}
bool is_close(const Token& t) {
  return t.kind == Kind::kOp &&
         (t.text == ")" || t.text == "]" || t.text == "}");
}

// Index one past the bracket group opened at `i`, or size when unbalanced.
std::size_t group_end(const std::vector<Token>& toks, std::size_t i) {
  int depth = 0;
  for (std::size_t k = i; k < toks.size(); ++k) {
    if (is_open(toks[k])) ++depth;
    if (is_close(toks[k]) && --depth == 0) return k + 1;
  }
  return toks.size();
}

// Index of the bracket opening the group that closes at `i`, or npos.
std::size_t group_begin(const std::vector<Token>& toks, std::size_t i) {
  int depth = 0;
  for (std::size_t k = i + 1; k-- > 0;) {
    if (is_close(toks[k])) ++depth;
    if (is_open(toks[k]) && --depth == 0) return k;
  }
  return std::string::npos;
}

std::vector<int> depths(const std::vector<Token>& toks) {
  std::vector<int> d(toks.size());
  int depth = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (is_close(toks[i])) depth = std::max(0, depth - 1);
    d[i] = depth;
    if (is_open(toks[i])) ++depth;
  }
  return d;
}

// A primary: atom followed by attribute, call and subscript trailers.
// Returns `i` when no primary starts at `i`.
std::size_t primary_end(const std::vector<Token>& toks, std::size_t i) {
  if (i >= toks.size()) return i;
  const auto& t = toks[i];
  std::size_t k = i;
  if (t.kind == Kind::kName) {
    if (pylex::is_keyword(t.text) && !is_value_keyword(t.text)) return i;
    k = i + 1;
  } else if (t.kind == Kind::kNumber) {
    k = i + 1;
  } else if (t.kind == Kind::kString) {
    k = i + 1;
    while (k < toks.size() && toks[k].kind == Kind::kString) ++k;
  } else if (is_open(t)) {
    k = group_end(toks, i);
    if (k > toks.size() || !is_close(toks[k - 1])) return i;
  } else {
    return i;
  }
  while (k < toks.size()) {
    if (toks[k].is_op(".") && k + 1 < toks.size() &&
        toks[k + 1].kind == Kind::kName) {
      k += 2;
    } else if (toks[k].is_op("(") || toks[k].is_op("[")) {
      const auto e = group_end(toks, k);
      if (!is_close(toks[e - 1])) return k;
      k = e;
    } else {
      break;
    }
  }
  return k;
}

bool is_any_name(const Token& t, std::initializer_list<std::string_view> ns) {
  if (t.kind != Kind::kName) return false;
  for (auto n : ns) {
    if (t.text == n) return true;
  }
  return false;
}

std::set<std::string> scope_names(const CodeLines& ctx) {
  std::set<std::string> names;
  for (const auto& line : ctx.lines) {
    const auto toks = pylex::lex_line(line);
    const auto d = depths(toks);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const auto& t = toks[i];
      if (t.is_name("def") || t.is_name("lambda")) {
        // Parameters: names directly after `(`, `,`, `*` or `**`.
        for (std::size_t k = i + 1; k < toks.size(); ++k) {
          if (toks[k].kind != Kind::kName || pylex::is_keyword(toks[k].text)) {
            continue;
          }
          const auto& prev = toks[k - 1];
          if (prev.is_op("(") || prev.is_op(",") || prev.is_op("*") ||
              prev.is_op("**") || (t.is_name("lambda") && k == i + 1)) {
            names.insert(toks[k].text);
          }
        }
      }
      if (t.is_name("for")) {
        for (std::size_t k = i + 1; k < toks.size() && !toks[k].is_name("in");
             ++k) {
          if (toks[k].kind == Kind::kName && !pylex::is_keyword(toks[k].text)) {
            names.insert(toks[k].text);
          }
        }
      }
      if ((t.is_name("as") || t.is_name("global") || t.is_name("nonlocal")) &&
          i + 1 < toks.size() && toks[i + 1].kind == Kind::kName) {
        names.insert(toks[i + 1].text);
      }
      if (d[i] == 0 && t.kind == Kind::kOp &&
          (t.text == "=" || pylex::is_augmented_assign(t.text))) {
        for (std::size_t k = 0; k < i; ++k) {
          if (toks[k].kind == Kind::kName && !pylex::is_keyword(toks[k].text) &&
              (k == 0 || !toks[k - 1].is_op("."))) {
            names.insert(toks[k].text);
          }
        }
      }
    }
  }
  return names;
}

using RuleFn = std::optional<std::string> (*)(const LineView&,
                                              const CodeLines&, Rng&);

// ---------------------------------------------------------------- mutations

std::optional<std::string> arith_swap(const LineView& v, const CodeLines&,
                                      Rng& rng) {
  static const std::pair<std::string_view, std::string_view> kSwaps[] = {
      {"+", "-"},   {"-", "+"},   {"*", "//"},  {"//", "*"},
      {"+=", "-="}, {"-=", "+="}, {"*=", "//="}, {"//=", "*="}};
  std::vector<std::pair<std::size_t, std::string_view>> cands;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& t = v.toks[i];
    if (t.kind != Kind::kOp) continue;
    for (const auto& [from, to] : kSwaps) {
      if (t.text != from) continue;
      const bool augmented = from.back() == '=';
      if (!augmented && (i == 0 || !ends_operand(v.toks[i - 1]))) continue;
      cands.emplace_back(i, to);
    }
  }
  if (cands.empty()) return std::nullopt;
  const auto& [i, to] = cands[pick(rng, cands.size())];
  return replace_spans(v.line, {{v.toks[i].begin, v.toks[i].end,
                                 std::string(to)}});
}

std::optional<std::string> comparison_flip(const LineView& v,
                                           const CodeLines&, Rng& rng) {
  std::vector<std::size_t> cands;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.toks[i].kind == Kind::kOp && pylex::is_comparison_op(v.toks[i].text)) {
      cands.push_back(i);
    }
  }
  if (cands.empty()) return std::nullopt;
  const auto i = cands[pick(rng, cands.size())];
  const auto& op = v.toks[i].text;
  const std::string to = op == "<"    ? "<="
                         : op == "<=" ? "<"
                         : op == ">"  ? ">="
                         : op == ">=" ? ">"
                         : op == "==" ? "!="
                                      : "==";
  return replace_spans(v.line, {{v.toks[i].begin, v.toks[i].end, to}});
}

bool has_boolean_expr(const LineView& v, std::size_t from) {
  for (std::size_t i = from; i < v.size(); ++i) {
    const auto& t = v.toks[i];
    if (t.kind == Kind::kOp && pylex::is_comparison_op(t.text)) return true;
    if (is_any_name(t, {"and", "or", "in", "is", "True", "False"})) {
      return true;
    }
  }
  return false;
}

std::size_t last_depth0_assign(const LineView& v) {
  const auto d = depths(v.toks);
  std::size_t at = std::string::npos;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (d[i] == 0 && v.toks[i].kind == Kind::kOp &&
        (v.toks[i].text == "=" || pylex::is_augmented_assign(v.toks[i].text))) {
      at = i;
    }
  }
  return at;
}

std::optional<std::string> boolean_negation(const LineView& v,
                                            const CodeLines&, Rng&) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.toks[i].is_name("not") && i + 1 < v.size()) {
      return replace_spans(v.line, {{v.toks[i].begin, v.toks[i + 1].begin, ""}});
    }
  }
  if (v.size() < 3) return std::nullopt;
  const auto& first = v.toks.front();
  const auto& last = v.toks.back();
  if ((first.is_name("if") || first.is_name("elif") ||
       first.is_name("while")) &&
      last.is_op(":")) {
    return std::string(v.line.substr(0, first.end)) + " not (" +
           std::string(v.text(1, v.size() - 2)) + ")" +
           std::string(v.line.substr(last.begin));
  }
  if (first.is_name("return") && has_boolean_expr(v, 1)) {
    return std::string(v.line.substr(0, first.end)) + " not (" +
           std::string(v.text(1, v.size() - 1)) + ")" + v.tail();
  }
  const auto eq = last_depth0_assign(v);
  if (eq != std::string::npos && v.toks[eq].is_op("=") && eq + 1 < v.size() &&
      has_boolean_expr(v, eq + 1)) {
    return std::string(v.line.substr(0, v.toks[eq].end)) + " not (" +
           std::string(v.text(eq + 1, v.size() - 1)) + ")" + v.tail();
  }
  return std::nullopt;
}

std::optional<std::string> boundary_constant(const LineView& v,
                                             const CodeLines&, Rng& rng) {
  std::vector<std::size_t> cands;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (pylex::is_integer_literal(v.toks[i])) cands.push_back(i);
  }
  if (cands.empty()) return std::nullopt;
  const auto i = cands[pick(rng, cands.size())];
  const bool up = rng() % 2 == 0;
  std::string digits;
  for (char c : v.toks[i].text) {
    if (c != '_') digits += c;
  }
  long long value = 0;
  try {
    value = std::stoll(digits);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  const long long edited = up ? value + 1 : value - 1;
  return replace_spans(v.line,
                       {{v.toks[i].begin, v.toks[i].end, std::to_string(edited)}});
}

std::optional<std::string> identifier_swap(const LineView& v,
                                           const CodeLines& ctx, Rng& rng) {
  const auto scope = scope_names(ctx);
  const auto d = depths(v.toks);
  std::vector<std::string> distinct;
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& t = v.toks[i];
    if (t.kind != Kind::kName || pylex::is_keyword(t.text) ||
        !scope.count(t.text)) {
      continue;
    }
    if (i > 0 && v.toks[i - 1].is_op(".")) continue;
    if (i + 1 < v.size() && v.toks[i + 1].is_op("(")) continue;
    if (i + 1 < v.size() && d[i] > 0 && v.toks[i + 1].is_op("=")) continue;
    sites.push_back(i);
    if (std::find(distinct.begin(), distinct.end(), t.text) == distinct.end()) {
      distinct.push_back(t.text);
    }
  }
  if (distinct.size() < 2) return std::nullopt;
  const auto a = pick(rng, distinct.size());
  const auto b = (a + 1 + pick(rng, distinct.size() - 1)) % distinct.size();
  std::vector<Span> spans;
  for (const auto i : sites) {
    const auto& t = v.toks[i];
    if (t.text == distinct[a]) spans.push_back({t.begin, t.end, distinct[b]});
    if (t.text == distinct[b]) spans.push_back({t.begin, t.end, distinct[a]});
  }
  return replace_spans(v.line, std::move(spans));
}

bool is_compound_or_control(const LineView& v) {
  if (v.toks.empty()) return true;
  static const std::initializer_list<std::string_view> kNo = {
      "if",   "elif",   "else",    "for",   "while",  "def",    "class",
      "try",  "except", "finally", "with",  "return", "pass",   "break",
      "continue", "raise", "import", "from", "global", "nonlocal", "async",
      "yield", "lambda"};
  return is_any_name(v.toks.front(), kNo) || v.toks.front().is_op("@") ||
         v.toks.back().is_op(":");
}

std::optional<std::string> early_return(const LineView& v, const CodeLines&,
                                        Rng&) {
  if (is_compound_or_control(v)) return std::nullopt;
  const auto eq = last_depth0_assign(v);
  std::string value = "None";
  if (eq != std::string::npos && eq + 1 < v.size()) {
    value = std::string(v.text(eq + 1, v.size() - 1));
  }
  return std::string(v.indent()) + "return " + value;
}

std::optional<std::string> statement_deletion(const LineView& v,
                                              const CodeLines&, Rng&) {
  if (v.toks.empty() || (v.size() == 1 && v.toks[0].is_name("pass"))) {
    return std::nullopt;
  }
  return std::string(v.indent()) + "pass";
}

// ------------------------------------------------------------- refactorings

bool may_precede_operand(const std::vector<Token>& toks, std::size_t s) {
  if (s == 0) return true;
  const auto& p = toks[s - 1];
  if (p.kind == Kind::kOp) {
    return p.text == "(" || p.text == "[" || p.text == "{" || p.text == "," ||
           p.text == "=" || p.text == ":" || pylex::is_comparison_op(p.text) ||
           pylex::is_augmented_assign(p.text);
  }
  return is_any_name(p, {"return", "if", "elif", "while", "in", "and", "or",
                         "not", "else", "yield", "assert"});
}

bool may_follow_operand(const std::vector<Token>& toks, std::size_t e) {
  if (e >= toks.size()) return true;
  const auto& f = toks[e];
  if (f.kind == Kind::kOp) {
    return f.text == ")" || f.text == "]" || f.text == "}" || f.text == "," ||
           f.text == ":" || pylex::is_comparison_op(f.text);
  }
  return is_any_name(f, {"if", "else", "for", "and", "or", "in", "not", "is"});
}

std::optional<std::string> commutative_swap(const LineView& v,
                                            const CodeLines&, Rng& rng) {
  const auto& toks = v.toks;
  struct Cand {
    std::size_t lb, op, re;
  };
  std::vector<Cand> cands;
  for (std::size_t j = 1; j + 1 < toks.size(); ++j) {
    if (!(toks[j].is_op("+") || toks[j].is_op("*"))) continue;
    if (!ends_operand(toks[j - 1])) continue;
    std::size_t lb = std::string::npos;
    for (std::size_t s = 0; s < j; ++s) {
      if (s > 0 && toks[s - 1].is_op(".")) continue;
      if (primary_end(toks, s) == j) {
        lb = s;
        break;
      }
    }
    if (lb == std::string::npos) continue;
    const auto re = primary_end(toks, j + 1);
    if (re == j + 1) continue;
    if (!may_precede_operand(toks, lb) || !may_follow_operand(toks, re)) {
      continue;
    }
    cands.push_back({lb, j, re});
  }
  if (cands.empty()) return std::nullopt;
  const auto c = cands[pick(rng, cands.size())];
  const auto left = v.text(c.lb, c.op - 1);
  const auto right = v.text(c.op + 1, c.re - 1);
  const auto middle = v.line.substr(toks[c.op - 1].end,
                                    toks[c.op + 1].begin - toks[c.op - 1].end);
  return std::string(v.line.substr(0, toks[c.lb].begin)) + std::string(right) +
         std::string(middle) + std::string(left) +
         std::string(v.line.substr(toks[c.re - 1].end));
}

bool is_boundary_token(const Token& t) {
  if (t.kind == Kind::kOp) {
    return t.text == "," || t.text == "=" || t.text == ":" || t.text == ";" ||
           t.text == ":=" || pylex::is_augmented_assign(t.text);
  }
  return is_any_name(t, {"and", "or", "not", "if", "elif", "while", "return",
                         "else", "lambda", "assert", "yield", "for"});
}

bool is_comparison_like(const Token& t) {
  return (t.kind == Kind::kOp && pylex::is_comparison_op(t.text)) ||
         is_any_name(t, {"in", "is"});
}

std::optional<std::string> comparison_negation(const LineView& v,
                                               const CodeLines&, Rng& rng) {
  const auto& toks = v.toks;
  struct Cand {
    std::size_t lb, op;
  };
  std::vector<Cand> cands;
  for (std::size_t j = 0; j < toks.size(); ++j) {
    if (!(toks[j].kind == Kind::kOp && pylex::is_comparison_op(toks[j].text))) {
      continue;
    }
    // Left operand boundary.
    std::size_t lb = j;
    bool ok = true;
    for (std::size_t k = j; k-- > 0;) {
      if (is_close(toks[k])) {
        const auto open = group_begin(toks, k);
        if (open == std::string::npos) {
          ok = false;
          break;
        }
        lb = open;
        k = open;
        continue;
      }
      if (is_open(toks[k]) || is_boundary_token(toks[k])) break;
      if (is_comparison_like(toks[k])) {
        ok = false;
        break;
      }
      lb = k;
    }
    if (!ok || lb == j) continue;
    // Right operand must not chain into another comparison.
    for (std::size_t k = j + 1; k < toks.size(); ++k) {
      if (is_open(toks[k])) {
        k = group_end(toks, k) - 1;
        continue;
      }
      if (is_close(toks[k]) || is_boundary_token(toks[k])) break;
      if (is_comparison_like(toks[k])) {
        ok = false;
        break;
      }
    }
    if (!ok || j + 1 >= toks.size()) continue;
    cands.push_back({lb, j});
  }
  if (cands.empty()) return std::nullopt;
  const auto c = cands[pick(rng, cands.size())];
  const auto& op = toks[c.op].text;
  const std::string flipped = op == "<"    ? ">="
                              : op == "<=" ? ">"
                              : op == ">"  ? "<="
                              : op == ">=" ? "<"
                              : op == "==" ? "!="
                                           : "==";
  return replace_spans(v.line, {{toks[c.lb].begin, toks[c.lb].begin, "not "},
                                {toks[c.op].begin, toks[c.op].end, flipped}});
}

std::optional<std::string> augmented_expansion(const LineView& v,
                                               const CodeLines&, Rng&) {
  const auto& toks = v.toks;
  const auto te = primary_end(toks, 0);
  if (te == 0 || te + 1 >= toks.size()) return std::nullopt;
  const auto& op = toks[te];
  if (op.kind != Kind::kOp || !pylex::is_augmented_assign(op.text)) {
    return std::nullopt;
  }
  const auto target = v.text(0, te - 1);
  auto rhs = std::string(v.text(te + 1, toks.size() - 1));
  if (!(te + 2 == toks.size() || primary_end(toks, te + 1) == toks.size())) {
    rhs = "(" + rhs + ")";
  }
  const auto binop = op.text.substr(0, op.text.size() - 1);
  return std::string(v.indent()) + std::string(target) + " = " +
         std::string(target) + " " + binop + " " + rhs + v.tail();
}

std::optional<std::string> redundant_parens(const LineView& v,
                                            const CodeLines&, Rng&) {
  const auto& toks = v.toks;
  if (toks.empty() || is_any_name(toks.front(), {"def", "class", "for"})) {
    return std::nullopt;
  }
  const auto eq = last_depth0_assign(v);
  if (eq != std::string::npos && toks[eq].is_op("=") && eq + 1 < toks.size() &&
      !toks.back().is_op(":")) {
    return std::string(v.line.substr(0, toks[eq + 1].begin)) + "(" +
           std::string(v.text(eq + 1, toks.size() - 1)) + ")" + v.tail();
  }
  if (toks.front().is_name("return") && toks.size() > 1) {
    return std::string(v.line.substr(0, toks[1].begin)) + "(" +
           std::string(v.text(1, toks.size() - 1)) + ")" + v.tail();
  }
  if (is_any_name(toks.front(), {"if", "elif", "while"}) &&
      toks.back().is_op(":") && toks.size() > 2) {
    return std::string(v.line.substr(0, toks[1].begin)) + "(" +
           std::string(v.text(1, toks.size() - 2)) + ")" +
           std::string(v.line.substr(toks.back().begin));
  }
  return std::nullopt;
}

std::optional<std::string> literal_rewrite(const LineView& v, const CodeLines&,
                                           Rng& rng) {
  std::vector<std::size_t> cands;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (is_any_name(v.toks[i], {"True", "False"})) cands.push_back(i);
  }
  if (cands.empty()) return std::nullopt;
  const auto i = cands[pick(rng, cands.size())];
  return replace_spans(v.line,
                       {{v.toks[i].begin, v.toks[i].end,
                         v.toks[i].text == "True" ? "(1==1)" : "(1==0)"}});
}

struct Rule {
  std::string_view name;
  RuleFn fn;
};

constexpr Rule kMutationTable[] = {
    {"arith_swap", arith_swap},
    {"comparison_flip", comparison_flip},
    {"boolean_negation", boolean_negation},
    {"boundary_constant", boundary_constant},
    {"identifier_swap", identifier_swap},
    {"early_return", early_return},
    {"statement_deletion", statement_deletion}};

constexpr Rule kRefactorTable[] = {
    {"commutative_swap", commutative_swap},
    {"comparison_negation", comparison_negation},
    {"augmented_expansion", augmented_expansion},
    {"redundant_parens", redundant_parens},
    {"literal_rewrite", literal_rewrite}};

std::string strip_ws(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ' && c != '\t') out += c;
  }
  return out;
}

template <std::size_t N>
std::vector<LineEdit> apply_rules(const Rule (&table)[N], EditMode mode,
                                  std::string_view line,
                                  const CodeLines& context,
                                  const MutationRuleSet& rules) {
  if (rules.enabled_rules.empty()) {
    throw InvalidArgs("rule set has no enabled rules");
  }
  std::vector<LineEdit> edits;
  if (!is_skipped_line(line)) {
    const LineView view(line);
    const auto line_seed = combine_seed(rules.rng_seed, fnv1a(line));
    for (const auto& rule : table) {
      if (!rules.enabled(rule.name)) continue;
      Rng rng(combine_seed(line_seed, fnv1a(rule.name)));
      auto edited = rule.fn(view, context, rng);
      if (!edited || strip_ws(*edited) == strip_ws(line)) continue;
      const bool dup = std::any_of(edits.begin(), edits.end(), [&](auto& e) {
        return e.edited_line == *edited;
      });
      if (dup) continue;
      edits.push_back({0, 0, std::string(line), std::move(*edited), mode,
                       "rule:" + std::string(rule.name)});
    }
  }
  if (edits.empty()) {
    throw NoApplicableRule("no enabled rule applies to: " + std::string(line));
  }
  if (edits.size() > rules.max_edits_per_line) {
    // Seeded subset, kept in rule order.
    Rng rng(combine_seed(rules.rng_seed, fnv1a(line) ^ 0x5e1ec7ULL));
    std::vector<std::size_t> idx(edits.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < rules.max_edits_per_line; ++i) {
      std::swap(idx[i], idx[i + pick(rng, idx.size() - i)]);
    }
    idx.resize(rules.max_edits_per_line);
    std::sort(idx.begin(), idx.end());
    std::vector<LineEdit> kept;
    for (const auto i : idx) kept.push_back(std::move(edits[i]));
    edits = std::move(kept);
  }
  return edits;
}

}  // namespace

std::string_view to_string(EditMode mode) {
  return mode == EditMode::kMutate ? "mutate" : "refactor";
}

EditMode parse_edit_mode(std::string_view name) {
  if (name == "mutate") return EditMode::kMutate;
  if (name == "refactor") return EditMode::kRefactor;
  throw InvalidInput("unknown edit mode: " + std::string(name));
}

MutationRuleSet MutationRuleSet::all(std::uint64_t seed) {
  MutationRuleSet rs;
  for (auto r : kMutationRules) rs.enabled_rules.emplace_back(r);
  for (auto r : kRefactorRules) rs.enabled_rules.emplace_back(r);
  rs.rng_seed = seed;
  return rs;
}

bool MutationRuleSet::enabled(std::string_view rule) const {
  return std::find(enabled_rules.begin(), enabled_rules.end(), rule) !=
         enabled_rules.end();
}

bool is_skipped_line(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#' || starts_with_word(t, "import") ||
         starts_with_word(t, "from");
}

std::vector<LineEdit> mutate_line(std::string_view line,
                                  const CodeLines& context,
                                  const MutationRuleSet& rules) {
  return apply_rules(kMutationTable, EditMode::kMutate, line, context, rules);
}

std::vector<LineEdit> refactor_line(std::string_view line,
                                    const CodeLines& context,
                                    const MutationRuleSet& rules) {
  return apply_rules(kRefactorTable, EditMode::kRefactor, line, context,
                     rules);
}

std::vector<LineEdit> edit_problem(const Problem& problem,
                                   const MutationRuleSet& rules, bool mutate,
                                   bool refactor) {
  const auto code = problem.code_lines();
  std::vector<LineEdit> out;
  for (std::size_t i = 0; i < code.line_count(); ++i) {
    const auto& line = code.lines[i];
    if (is_skipped_line(line)) continue;
    for (const bool use_mutate : {true, false}) {
      if (use_mutate ? !mutate : !refactor) continue;
      std::vector<LineEdit> edits;
      try {
        edits = use_mutate ? mutate_line(line, code, rules)
                           : refactor_line(line, code, rules);
      } catch (const NoApplicableRule&) {
        continue;
      }
      for (auto& e : edits) {
        e.problem_id = problem.id;
        e.line_index = i;
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

std::string apply_edit(const CodeLines& code, const LineEdit& edit) {
  if (edit.line_index >= code.line_count()) {
    throw InvalidArgs("edit line index " + std::to_string(edit.line_index) +
                      " out of range");
  }
  std::string out;
  for (std::size_t i = 0; i < code.line_count(); ++i) {
    out += (i == edit.line_index) ? edit.edited_line : code.lines[i];
    out += '\n';
  }
  return out;
}

}  // namespace prl
