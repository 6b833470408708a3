#include "prl/util.hpp"

#include <filesystem>

#include <gtest/gtest.h>

#include "prl/errors.hpp"

namespace prl {
namespace {

TEST(HashTest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(HashTest, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(HashTest, CombineSeedIsOrderSensitive) {
  EXPECT_NE(combine_seed(1, 2), combine_seed(2, 1));
  EXPECT_EQ(combine_seed(7, 3), combine_seed(7, 3));
}

TEST(StringTest, TrimAndSplit) {
  EXPECT_EQ(trim("  a b \t\n"), "a b");
  EXPECT_EQ(trim(""), "");
  const auto parts = split("a,,b", ',');
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1], "");
  EXPECT_TRUE(starts_with_word("import os", "import"));
  EXPECT_FALSE(starts_with_word("imports", "import"));
}

TEST(FileTest, RoundTripAndMissing) {
  const auto dir = std::filesystem::temp_directory_path() / "prl_util_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "x.txt";
  write_file(path, "hello\n");
  EXPECT_EQ(read_file(path), "hello\n");
  EXPECT_EQ(sha256_file(path), sha256_hex("hello\n"));
  EXPECT_THROW(read_file(dir / "missing"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(ConfigTest, ParsesTypedValues) {
  const auto c = Config::parse(
      "# comment\n"
      "ppo.beta = 0.1\n"
      "ppo.steps=40  # trailing\n"
      "flag = true\n"
      "name = prm\n");
  EXPECT_DOUBLE_EQ(c.get_double("ppo.beta", 0), 0.1);
  EXPECT_EQ(c.get_int("ppo.steps", 0), 40);
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_EQ(c.get_string("name", ""), "prm");
  EXPECT_EQ(c.get_int("absent", 9), 9);
}

TEST(ConfigTest, BadValuesThrow) {
  EXPECT_THROW(Config::parse("no equals sign\n"), ConfigError);
  const auto c = Config::parse("x = abc\n");
  EXPECT_THROW(c.get_double("x", 0), ConfigError);
  EXPECT_THROW(c.get_int("x", 0), ConfigError);
  EXPECT_THROW(c.get_bool("x", false), ConfigError);
}

TEST(ConfigTest, CanonicalFormIgnoresLayout) {
  const auto a = Config::parse("b = 2\na = 1\n");
  const auto b = Config::parse("# x\na=1\n\nb   =   2\n");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), Config::parse("a = 1\n").hash());
}

}  // namespace
}  // namespace prl
