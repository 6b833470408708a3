// Writes the offline MBPP-format corpus used by the tests and examples.
#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

#include "prl/errors.hpp"
#include "prl/synth_corpus.hpp"
#include "prl/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic MBPP-format corpus"};
  int count = 974;
  std::uint64_t seed = 7;
  std::string out;
  std::string interpreter;
  app.add_option("--count", count, "Number of tasks (ids 1..count)");
  app.add_option("--seed", seed, "Variant seed");
  app.add_option("--out", out, "Output JSONL path")->required();
  app.add_option("--interpreter", interpreter, "Python interpreter");
  CLI11_PARSE(app, argc, argv);
  try {
    prl::Sandbox::Options opts;
    if (!interpreter.empty()) opts.interpreter = interpreter;
    prl::Sandbox sandbox(opts);
    const auto tasks = prl::synth_tasks(count, seed);
    prl::write_file(out, prl::synth_corpus_jsonl(tasks, sandbox));
    spdlog::info("wrote {} tasks from {} families to {}", tasks.size(),
                 prl::synth_family_count(), out);
  } catch (const prl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
