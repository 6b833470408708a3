#ifndef PRL_TOY_ENV_HPP_
#define PRL_TOY_ENV_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prl/corpus.hpp"

namespace prl::rl {

// A small program-synthesis suite. The policy writes the body of a fixed
// function header one token at a time; indentation is expressed with
// <indent>/<dedent> tokens at the start of a line.
class ToyEnvironment {
 public:
  struct Task {
    int id = 0;
    std::string name;
    std::string header;  // "def f(a, b):"
    std::string description;
    std::vector<std::string> reference;  // body tokens, without <eos>
    std::vector<std::string> tests;
  };

  static constexpr int kEos = 0;
  static constexpr int kNewline = 1;
  static constexpr int kIndent = 2;
  static constexpr int kDedent = 3;

  // The default twelve-task suite.
  static ToyEnvironment standard(std::size_t max_length = 64);
  ToyEnvironment(std::vector<Task> tasks, std::size_t max_length);

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::size_t max_length() const { return max_length_; }
  std::size_t task_count() const { return tasks_.size(); }
  const Task& task(std::size_t i) const { return tasks_[i]; }
  // Problems in corpus form (ids 1..n, prompts rendered, reference code in
  // normalized form); index i matches task(i).
  const std::vector<Problem>& problems() const { return problems_; }
  Corpus corpus() const { return Corpus(problems_); }

  // Throws InvalidInput for words outside the vocabulary.
  int token_id(std::string_view word) const;
  std::optional<int> find_token(std::string_view word) const;

  // Header plus rendered body. Tokens after <eos> are ignored.
  std::string render(std::size_t task, const std::vector<int>& tokens) const;
  // Body lines only, one string per line, indentation applied.
  std::vector<std::string> render_lines(const std::vector<int>& tokens) const;

  // Token ids for the body of a full program in this task's form; nullopt
  // when the program uses something the vocabulary cannot express. The
  // result ends with <eos>.
  std::optional<std::vector<int>> tokenize(std::size_t task,
                                           std::string_view program) const;

  std::vector<int> reference_tokens(std::size_t task) const;

 private:
  std::vector<Task> tasks_;
  std::vector<std::string> vocab_;
  std::vector<Problem> problems_;
  std::size_t max_length_;
};

}  // namespace prl::rl

#endif  // PRL_TOY_ENV_HPP_
