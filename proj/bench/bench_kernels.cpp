// Serial reference vs OpenMP for each kernel. Arg 0 is serial, 1 is OpenMP.

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "prl/kernels.hpp"

namespace prl {
namespace {

using kernels::Backend;

Backend backend_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Backend::kSerial : Backend::kOpenMP;
}

struct Corpus {
  std::vector<std::string> prompts;
  std::vector<std::string> prefixes;
};

const Corpus& text_corpus() {
  static const Corpus c = [] {
    Corpus out;
    std::mt19937_64 rng(1);
    const char* words[] = {"def", "f(x):", "return", "x", "+", "1", "for",
                           "i", "in", "range(n):", "if", "<", "total", "="};
    for (int i = 0; i < 2000; ++i) {
      out.prompts.push_back("Write a function number " + std::to_string(i % 50));
      std::string prefix;
      const int lines = 1 + static_cast<int>(rng() % 8);
      for (int l = 0; l < lines; ++l) {
        for (int w = 0; w < 6; ++w) {
          prefix += words[rng() % std::size(words)];
          prefix += ' ';
        }
        prefix += '\n';
      }
      out.prefixes.push_back(prefix);
    }
    return out;
  }();
  return c;
}

const std::vector<FeatureVector>& features() {
  static const auto xs = kernels::featurize_batch(
      text_corpus().prompts, text_corpus().prefixes, Backend::kSerial);
  return xs;
}

void BM_FeaturizeBatch(benchmark::State& state) {
  const auto& c = text_corpus();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::featurize_batch(c.prompts, c.prefixes, backend_of(state)));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(c.prompts.size()));
}
BENCHMARK(BM_FeaturizeBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LogisticLossGrad(benchmark::State& state) {
  const auto& xs = features();
  std::vector<double> y(xs.size());
  std::vector<std::size_t> rows(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    y[i] = static_cast<double>(i % 2);
    rows[i] = i;
  }
  std::vector<double> w(kFeatureDim, 0.01), g(kFeatureDim);
  double gb = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::logistic_loss_grad(
        xs, y, rows, w.data(), 0.0, g.data(), &gb, backend_of(state)));
  }
}
BENCHMARK(BM_LogisticLossGrad)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PairwiseLossGrad(benchmark::State& state) {
  const auto& xs = features();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < xs.size(); i += 2) pairs.emplace_back(i, i + 1);
  std::vector<std::size_t> rows(pairs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  std::vector<double> w(kFeatureDim, 0.01), g(kFeatureDim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::pairwise_loss_grad(
        xs, pairs, rows, w.data(), g.data(), backend_of(state)));
  }
}
BENCHMARK(BM_PairwiseLossGrad)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GaeBatch(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> rewards, values;
  std::vector<std::size_t> offsets{0};
  for (int i = 0; i < 20000; ++i) {
    const std::size_t len = 1 + rng() % 64;
    for (std::size_t t = 0; t < len; ++t) {
      rewards.push_back(n(rng));
      values.push_back(n(rng));
    }
    values.push_back(0.0);
    offsets.push_back(rewards.size());
  }
  std::vector<double> adv(rewards.size());
  for (auto _ : state) {
    kernels::gae_batch(rewards, values, offsets, 0.99, 0.95, adv.data(),
                       backend_of(state));
    benchmark::DoNotOptimize(adv.data());
  }
}
BENCHMARK(BM_GaeBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace prl

BENCHMARK_MAIN();
