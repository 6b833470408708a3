#ifndef PRL_SYNTH_CORPUS_HPP_
#define PRL_SYNTH_CORPUS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "prl/sandbox.hpp"

namespace prl {

// One generated task before its expected outputs are known.
struct SynthTask {
  int id = 0;
  std::string family;
  std::string description;
  std::string function_name;
  std::string code;
  std::vector<std::string> seed_args;  // call argument lists, e.g. "[1, 2], 3"
};

// Deterministic MBPP-format tasks with ids 1..count, cycling through a fixed
// set of parameterized Python problem families.
std::vector<SynthTask> synth_tasks(int count, std::uint64_t seed);
std::size_t synth_family_count();

// Executes each reference once to record `assert f(args) == <repr>` seed
// tests, returning JSONL in the ingest format. Tasks whose reference raises
// on a seed input are dropped.
std::string synth_corpus_jsonl(const std::vector<SynthTask>& tasks,
                               const Sandbox& sandbox);

}  // namespace prl

#endif  // PRL_SYNTH_CORPUS_HPP_
