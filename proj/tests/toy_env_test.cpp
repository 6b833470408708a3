#include "prl/toy_env.hpp"

#include <gtest/gtest.h>

#include "prl/errors.hpp"
#include "prl/sandbox.hpp"

namespace prl::rl {
namespace {

TEST(ToyEnvTest, SuiteShape) {
  const auto env = ToyEnvironment::standard();
  EXPECT_GE(env.task_count(), 10u);
  EXPECT_EQ(env.problems().size(), env.task_count());
  EXPECT_EQ(env.vocabulary()[ToyEnvironment::kEos], "<eos>");
  EXPECT_EQ(env.corpus().size(), env.task_count());
}

TEST(ToyEnvTest, ReferencesPassTheirTests) {
  const auto env = ToyEnvironment::standard();
  Sandbox sandbox;
  ResourceLimits lim;
  lim.wall = std::chrono::milliseconds(1000);
  for (std::size_t i = 0; i < env.task_count(); ++i) {
    const auto program = env.render(i, env.reference_tokens(i));
    EXPECT_EQ(program, env.problems()[i].reference_code);
    EXPECT_TRUE(sandbox.verify(program, env.problems()[i].tests, lim).passed())
        << program;
  }
}

TEST(ToyEnvTest, TokenizeInvertsRender) {
  const auto env = ToyEnvironment::standard();
  for (std::size_t i = 0; i < env.task_count(); ++i) {
    const auto tokens = env.reference_tokens(i);
    EXPECT_EQ(tokens.back(), ToyEnvironment::kEos);
    const auto back = env.tokenize(i, env.render(i, tokens));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, tokens);
  }
  EXPECT_FALSE(env.tokenize(0, "def nope():\n    return zzz_unknown\n").has_value());
}

TEST(ToyEnvTest, TokensAfterEosAreIgnored) {
  const auto env = ToyEnvironment::standard();
  auto tokens = env.reference_tokens(0);
  const auto base = env.render(0, tokens);
  tokens.push_back(ToyEnvironment::kNewline);
  tokens.push_back(env.token_id("return"));
  EXPECT_EQ(env.render(0, tokens), base);
  EXPECT_THROW(env.token_id("not-a-token"), InvalidInput);
  EXPECT_FALSE(env.find_token("not-a-token").has_value());
}

}  // namespace
}  // namespace prl::rl
