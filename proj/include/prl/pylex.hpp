#ifndef PRL_PYLEX_HPP_
#define PRL_PYLEX_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace prl::pylex {

enum class Kind { kName, kNumber, kString, kOp, kComment };

struct Token {
  Kind kind;
  std::string text;
  std::size_t begin;  // byte offsets into the lexed line
  std::size_t end;

  bool is(Kind k, std::string_view t) const { return kind == k && text == t; }
  bool is_op(std::string_view t) const { return is(Kind::kOp, t); }
  bool is_name(std::string_view t) const { return is(Kind::kName, t); }
};

// Lexes one physical line of Python. Unterminated strings run to the end of
// the line. Never throws.
std::vector<Token> lex_line(std::string_view line);

bool is_keyword(std::string_view name);
bool is_comparison_op(std::string_view op);
bool is_augmented_assign(std::string_view op);
bool is_integer_literal(const Token& tok);

// Leading whitespace of a line.
std::string_view indent_of(std::string_view line);

}  // namespace prl::pylex

#endif  // PRL_PYLEX_HPP_
