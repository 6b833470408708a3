#ifndef PRL_CLI_HPP_
#define PRL_CLI_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace prl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the prlcoder binary: ingest, augment-tests,
// build-dataset, train-rm, train-ppo, evaluate, report.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

// --corpus value: an existing path, or a name resolved to
// <out>/corpus/<name>.jsonl.
std::filesystem::path resolve_corpus(const std::string& value,
                                     const std::filesystem::path& out);

// Provenance record written next to every run's outputs.
struct Manifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string config;  // canonical text
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path (relative to out) -> sha256
  std::map<std::string, std::string> parameters;

  std::string to_json() const;
};

}  // namespace prl::cli

#endif  // PRL_CLI_HPP_
