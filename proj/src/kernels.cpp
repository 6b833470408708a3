#include "prl/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace prl::kernels {

namespace {

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

bool parallel(Backend backend) { return backend == Backend::kOpenMP; }

}  // namespace

std::vector<FeatureVector> featurize_batch(
    const std::vector<std::string>& prompts,
    const std::vector<std::string>& prefixes, Backend backend) {
  const auto n = static_cast<std::ptrdiff_t>(prefixes.size());
  std::vector<FeatureVector> out(prefixes.size());
#pragma omp parallel for schedule(dynamic, 16) if (parallel(backend))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = featurize(prompts[i], prefixes[i]);
  }
  return out;
}

void score_batch(const std::vector<FeatureVector>& xs,
                 const std::vector<std::size_t>& rows, const double* w,
                 double b, double* out, Backend backend) {
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static) if (parallel(backend))
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[k] = xs[rows[k]].dot(w) + b;
  }
}

double logistic_loss_grad(const std::vector<FeatureVector>& xs,
                          const std::vector<double>& y,
                          const std::vector<std::size_t>& rows,
                          const double* w, double b, double* grad_w,
                          double* grad_b, Backend backend) {
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  std::vector<double> residual(rows.size());
  std::vector<double> loss(rows.size());
#pragma omp parallel for schedule(static) if (parallel(backend))
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& x = xs[rows[k]];
    const double z = x.dot(w) + b;
    const double t = y[rows[k]];
    // BCE with logits: softplus(z) - t z.
    loss[k] = softplus(z) - t * z;
    residual[k] = sigmoid(z) - t;
  }
  std::fill(grad_w, grad_w + kFeatureDim, 0.0);
  double total = 0.0;
  double gb = 0.0;
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(n);
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& x = xs[rows[k]];
    const double r = residual[k] * inv;
    for (std::size_t j = 0; j < x.index.size(); ++j) {
      grad_w[x.index[j]] += r * x.value[j];
    }
    gb += r;
    total += loss[k];
  }
  *grad_b = gb;
  return total * inv;
}

double pairwise_loss_grad(
    const std::vector<FeatureVector>& xs,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    const std::vector<std::size_t>& rows, const double* w, double* grad_w,
    Backend backend) {
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  std::vector<double> coef(rows.size());
  std::vector<double> loss(rows.size());
#pragma omp parallel for schedule(static) if (parallel(backend))
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto [hi, lo] = pairs[rows[k]];
    const double d = xs[hi].dot(w) - xs[lo].dot(w);
    loss[k] = softplus(-d);
    coef[k] = -sigmoid(-d);  // d loss / d d
  }
  std::fill(grad_w, grad_w + kFeatureDim, 0.0);
  double total = 0.0;
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(n);
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto [hi, lo] = pairs[rows[k]];
    const double c = coef[k] * inv;
    for (std::size_t j = 0; j < xs[hi].index.size(); ++j) {
      grad_w[xs[hi].index[j]] += c * xs[hi].value[j];
    }
    for (std::size_t j = 0; j < xs[lo].index.size(); ++j) {
      grad_w[xs[lo].index[j]] -= c * xs[lo].value[j];
    }
    total += loss[k];
  }
  return total * inv;
}

void gae_batch(const std::vector<double>& rewards,
               const std::vector<double>& values,
               const std::vector<std::size_t>& offsets, double gamma,
               double lambda, double* advantages, Backend backend) {
  const auto trajectories = static_cast<std::ptrdiff_t>(offsets.size()) - 1;
#pragma omp parallel for schedule(dynamic, 8) if (parallel(backend))
  for (std::ptrdiff_t i = 0; i < trajectories; ++i) {
    const std::size_t begin = offsets[i];
    const std::size_t end = offsets[i + 1];
    const std::size_t vbase = begin + static_cast<std::size_t>(i);
    double next = 0.0;
    for (std::size_t t = end; t-- > begin;) {
      const std::size_t v = vbase + (t - begin);
      const double delta = rewards[t] + gamma * values[v + 1] - values[v];
      next = delta + gamma * lambda * next;
      advantages[t] = next;
    }
  }
}

}  // namespace prl::kernels
