#ifndef PRL_KERNELS_HPP_
#define PRL_KERNELS_HPP_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "prl/features.hpp"

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version; the OpenMP version parallelizes the per-item work and
// reduces in item order, so both return bit-identical results.
namespace prl::kernels {

enum class Backend { kSerial, kOpenMP };

std::vector<FeatureVector> featurize_batch(
    const std::vector<std::string>& prompts,
    const std::vector<std::string>& prefixes, Backend backend);

// out[k] = w . xs[rows[k]] + b
void score_batch(const std::vector<FeatureVector>& xs,
                 const std::vector<std::size_t>& rows, const double* w,
                 double b, double* out, Backend backend);

// Mean binary cross-entropy of sigmoid(w.x + b) against y over `rows`.
// grad_w (length kFeatureDim) and grad_b are overwritten.
double logistic_loss_grad(const std::vector<FeatureVector>& xs,
                          const std::vector<double>& y,
                          const std::vector<std::size_t>& rows,
                          const double* w, double b, double* grad_w,
                          double* grad_b, Backend backend);

// Mean Bradley-Terry loss -log sigmoid(w.x_better - w.x_worse) over the
// selected pairs (indices into xs). grad_w is overwritten.
double pairwise_loss_grad(
    const std::vector<FeatureVector>& xs,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
    const std::vector<std::size_t>& rows, const double* w, double* grad_w,
    Backend backend);

// Generalized advantage estimation over a batch of trajectories stored back
// to back. values has one extra bootstrap entry per trajectory (0 for
// terminal). offsets[i]..offsets[i+1] delimits trajectory i in rewards and
// advantages; trajectory i's values start at offsets[i] + i.
void gae_batch(const std::vector<double>& rewards,
               const std::vector<double>& values,
               const std::vector<std::size_t>& offsets, double gamma,
               double lambda, double* advantages, Backend backend);

}  // namespace prl::kernels

#endif  // PRL_KERNELS_HPP_
