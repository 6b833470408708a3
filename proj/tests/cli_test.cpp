#include "prl/cli.hpp"

#include <cstdlib>
#include <filesystem>

#include <json.hpp>
#include <gtest/gtest.h>

#include "prl/util.hpp"

namespace prl::cli {
namespace {

namespace fs = std::filesystem;

std::string record(int id, const std::string& body, const std::string& test) {
  nlohmann::json j;
  j["task_id"] = id;
  j["text"] = "Task " + std::to_string(id);
  j["code"] = "def f(x):\n    y = x " + body + "\n    return y\n";
  j["test_list"] = {test};
  return j.dump() + "\n";
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("prl_cli_test_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::string text;
    text += record(601, "+ 1", "assert f(1) == 2");
    text += record(602, "* 2", "assert f(3) == 6");
    text += record(901, "- 1", "assert f(1) == 0");
    text += record(938, "+ 5", "assert f(0) == 5");
    write_file(dir_ / "raw.jsonl", text);
    write_file(dir_ / "run.cfg",
               "sandbox.wall_ms = 1000\n"
               "eval.n = 4\n"
               "eval.k = 1,2\n"
               "eval.rejection_rounds = 1\n"
               "rm.epochs = 3\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  int cli(std::vector<std::string> args) {
    std::vector<std::string> full = {"--out", (dir_ / "out").string(), "--config",
                                     (dir_ / "run.cfg").string()};
    full.insert(full.end(), args.begin(), args.end());
    return run(full);
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"no-such-subcommand"}), kExitUsage);
  EXPECT_EQ(run(std::vector<std::string>{}), kExitUsage);
  EXPECT_EQ(run({"ingest"}), kExitUsage);  // --input is required
  EXPECT_EQ(run({"--seed", "abc", "report"}), kExitUsage);
  EXPECT_EQ(run({"--help"}), kExitOk);
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string bin = PRLCODER_BIN;
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " bogus >/dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system(
                (bin + " --out " + (dir_ / "o").string() +
                 " build-dataset --corpus missing >/dev/null 2>&1")
                    .c_str())),
            1);
}

TEST_F(CliTest, DomainErrorsExitOne) {
  EXPECT_EQ(cli({"build-dataset", "--corpus", "nowhere"}), kExitDomain);
  EXPECT_EQ(cli({"train-rm", "--kind", "orm_compiler"}), kExitDomain);
  EXPECT_EQ(cli({"train-ppo"}), kExitDomain);
  write_file(dir_ / "bad.cfg", "this line has no equals\n");
  EXPECT_EQ(run({"--config", (dir_ / "bad.cfg").string(), "report"}), kExitDomain);
}

TEST_F(CliTest, IngestResolvesCorpusByName) {
  ASSERT_EQ(cli({"ingest", "--input", (dir_ / "raw.jsonl").string(), "--name", "tiny"}),
            kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "corpus" / "tiny.jsonl"));
  EXPECT_EQ(resolve_corpus("tiny", dir_ / "out"), dir_ / "out" / "corpus" / "tiny.jsonl");
  EXPECT_TRUE(fs::exists(dir_ / "out" / "manifests" / "ingest.json"));
}

TEST_F(CliTest, BuildDatasetIsByteIdentical) {
  const auto corpus = (dir_ / "raw.jsonl").string();
  ASSERT_EQ(cli({"--seed", "7", "--corpus", corpus, "build-dataset"}), kExitOk);
  const auto out = dir_ / "out";
  std::vector<std::string> first;
  for (const auto* f : {"dataset/train.jsonl", "dataset/validation.jsonl",
                        "dataset/test.jsonl", "dataset/stats.json",
                        "manifests/build-dataset.json"}) {
    first.push_back(read_file(out / f));
  }
  ASSERT_EQ(cli({"--seed", "7", "--corpus", corpus, "build-dataset"}), kExitOk);
  std::size_t i = 0;
  for (const auto* f : {"dataset/train.jsonl", "dataset/validation.jsonl",
                        "dataset/test.jsonl", "dataset/stats.json",
                        "manifests/build-dataset.json"}) {
    EXPECT_EQ(read_file(out / f), first[i++]) << f;
  }
  const auto manifest =
      nlohmann::json::parse(read_file(out / "manifests" / "build-dataset.json"));
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 64u);
  EXPECT_EQ(manifest["outputs"]["dataset/train.jsonl"],
            sha256_hex(read_file(out / "dataset" / "train.jsonl")));
  EXPECT_EQ(manifest["inputs"].size(), 1u);
}

TEST_F(CliTest, TrainRmThenEvaluate) {
  const auto corpus = (dir_ / "raw.jsonl").string();
  ASSERT_EQ(cli({"--corpus", corpus, "build-dataset"}), kExitOk);
  ASSERT_EQ(cli({"train-rm", "--kind", "prm"}), kExitOk);
  const auto model = dir_ / "out" / "models" / "prm.txt";
  ASSERT_TRUE(fs::exists(model));
  ASSERT_EQ(cli({"evaluate", "--rm", model.string()}), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "eval" / "table.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "eval" / "rejection.json"));
  ASSERT_EQ(cli({"report"}), kExitOk);
  const auto report = read_file(dir_ / "out" / "report" / "report.md");
  EXPECT_NE(report.find("pass@1"), std::string::npos);
  EXPECT_NE(report.find("total variation"), std::string::npos);
}

}  // namespace
}  // namespace prl::cli
