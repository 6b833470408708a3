#include "prl/pylex.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace prl::pylex {
namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False",  "None",   "True",    "and",      "as",       "assert", "async",
    "await",  "break",  "class",   "continue", "def",      "del",    "elif",
    "else",   "except", "finally", "for",      "from",     "global", "if",
    "import", "in",     "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",   "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest first so greedy matching picks `**=` over `**` over `*`.
constexpr std::array<std::string_view, 47> kOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=",
    "<=",  ">=",  "<<",  ">>",  "+=",  "-=", "*=", "/=", "%=", "&=", "|=",
    "^=",  "@=",  "+",   "-",   "*",   "/",  "%",  "@",  "<",  ">",  "=",
    "&",   "|",   "^",   "~",   "(",   ")",  "[",  "]",  "{",  "}",  ",",
    ":",   ".",   ";"};

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_name_char(char c) {
  return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

bool is_string_prefix(std::string_view p) {
  std::string lower(p);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lower == "r" || lower == "b" || lower == "f" || lower == "u" ||
         lower == "rb" || lower == "br" || lower == "fr" || lower == "rf";
}

std::size_t scan_string(std::string_view line, std::size_t quote_pos) {
  const char q = line[quote_pos];
  const bool triple = line.substr(quote_pos, 3) == std::string(3, q);
  std::size_t i = quote_pos + (triple ? 3 : 1);
  while (i < line.size()) {
    if (line[i] == '\\') {
      i += 2;
      continue;
    }
    if (triple) {
      if (line.substr(i, 3) == std::string(3, q)) return i + 3;
    } else if (line[i] == q) {
      return i + 1;
    }
    ++i;
  }
  return line.size();
}

}  // namespace

std::vector<Token> lex_line(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
      ++i;
      continue;
    }
    if (c == '#') {
      out.push_back({Kind::kComment, std::string(line.substr(i)), i,
                     line.size()});
      break;
    }
    if (c == '"' || c == '\'') {
      const auto end = scan_string(line, i);
      out.push_back({Kind::kString, std::string(line.substr(i, end - i)), i,
                     end});
      i = end;
      continue;
    }
    if (is_name_start(c)) {
      std::size_t j = i;
      while (j < line.size() && is_name_char(line[j])) ++j;
      if (j < line.size() && (line[j] == '"' || line[j] == '\'') &&
          is_string_prefix(line.substr(i, j - i))) {
        const auto end = scan_string(line, j);
        out.push_back({Kind::kString, std::string(line.substr(i, end - i)),
                       i, end});
        i = end;
        continue;
      }
      out.push_back({Kind::kName, std::string(line.substr(i, j - i)), i, j});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < line.size() &&
         std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i;
      while (j < line.size()) {
        const char d = line[j];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' ||
            d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') && j > i &&
                   (line[j - 1] == 'e' || line[j - 1] == 'E') &&
                   !(line[i] == '0' && i + 1 < line.size() &&
                     (line[i + 1] == 'x' || line[i + 1] == 'X'))) {
          ++j;
        } else {
          break;
        }
      }
      out.push_back({Kind::kNumber, std::string(line.substr(i, j - i)), i, j});
      i = j;
      continue;
    }
    bool matched = false;
    for (const auto op : kOps) {
      if (line.substr(i, op.size()) == op) {
        out.push_back({Kind::kOp, std::string(op), i, i + op.size()});
        i += op.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      // Stray character (e.g. `!`, `$`, backslash): keep it as an operator
      // token so spans stay contiguous.
      out.push_back({Kind::kOp, std::string(1, c), i, i + 1});
      ++i;
    }
  }
  return out;
}

bool is_keyword(std::string_view name) {
  return std::find(kKeywords.begin(), kKeywords.end(), name) !=
         kKeywords.end();
}

bool is_comparison_op(std::string_view op) {
  return op == "<" || op == "<=" || op == ">" || op == ">=" || op == "==" ||
         op == "!=";
}

bool is_augmented_assign(std::string_view op) {
  return op.size() >= 2 && op.back() == '=' && op != "==" && op != "!=" &&
         op != "<=" && op != ">=" && op != ":=";
}

bool is_integer_literal(const Token& tok) {
  if (tok.kind != Kind::kNumber) return false;
  return std::all_of(tok.text.begin(), tok.text.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string_view indent_of(std::string_view line) {
  const auto n = line.find_first_not_of(" \t");
  return n == std::string_view::npos ? line : line.substr(0, n);
}

}  // namespace prl::pylex
