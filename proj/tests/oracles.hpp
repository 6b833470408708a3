#ifndef PRL_TESTS_ORACLES_HPP_
#define PRL_TESTS_ORACLES_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "prl/features.hpp"

// Independent reference computations used by the unit and acceptance tests.
namespace prl::oracle {

// Fraction of the k-subsets of n samples (the first c correct) that contain
// at least one correct sample, by enumerating every subset.
inline double pass_at_k_enumerate(int n, int c, int k) {
  std::uint64_t subsets = 0, hits = 0;
  const std::uint32_t correct = (1u << c) - 1u;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    ++subsets;
    hits += (mask & correct) != 0;
  }
  return static_cast<double>(hits) / static_cast<double>(subsets);
}

// A_t = sum_l (gamma lambda)^l delta_{t+l}, written as the explicit double
// sum. values has length T + 1.
inline std::vector<double> gae_double_sum(const std::vector<double>& rewards,
                                          const std::vector<double>& values,
                                          double gamma, double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t l = 0; t + l < n; ++l) {
      const std::size_t u = t + l;
      const double delta = rewards[u] + gamma * values[u + 1] - values[u];
      sum += std::pow(gamma * lambda, static_cast<double>(l)) * delta;
    }
    adv[t] = sum;
  }
  return adv;
}

// Central differences of f over the listed coordinates of params.
inline std::vector<double> finite_difference(
    std::vector<double>& params, const std::vector<std::size_t>& coords,
    const std::function<double()>& f, double h = 1e-6) {
  std::vector<double> out;
  for (const auto i : coords) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f();
    params[i] = keep - h;
    const double down = f();
    params[i] = keep;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

// ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const std::vector<double>& a,
                             const std::vector<double>& b,
                             double floor = 1e-8) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

// Sparse vector over a small random support inside [0, dim).
inline FeatureVector random_features(std::mt19937_64& rng, std::uint32_t dim,
                                     std::size_t nnz) {
  std::vector<std::uint32_t> idx;
  while (idx.size() < nnz) {
    const auto i = static_cast<std::uint32_t>(rng() % dim);
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureVector x;
  x.index = idx;
  for (std::size_t k = 0; k < nnz; ++k) x.value.push_back(g(rng));
  return x;
}

}  // namespace prl::oracle

#endif  // PRL_TESTS_ORACLES_HPP_
