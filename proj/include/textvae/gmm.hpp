#pragma once

#include <cstdint>
#include <vector>

#include "textvae/tensor.hpp"

namespace textvae {

// Diagonal-covariance Gaussian mixture.
struct GmmState {
  Tensor weights;  // 1 x C, sums to 1
  Tensor means;    // C x D
  Tensor vars;     // C x D, floored
};

struct GmmResult {
  GmmState state;
  std::vector<int> assignments;            // argmax responsibility per row
  std::vector<double> log_likelihood_curve;  // one entry per EM iteration
};

// EM to convergence (log-likelihood gain < tol or max_iters). Components are
// seeded from random data rows; a component whose weight collapses below 1e-8
// is re-seeded the same way.
GmmResult gmm_fit(const Tensor& codes, int components, std::uint64_t seed,
                  int max_iters = 200, double tol = 1e-6,
                  double var_floor = 1e-6);

// Argmax-responsibility component per row of `codes` under a fitted mixture.
std::vector<int> gmm_assign(const GmmState& state, const Tensor& codes);

// Best cluster-to-label assignment accuracy (percent) by exhaustive
// permutation; number of distinct labels must be <= 8 and match components.
double cluster_accuracy(const std::vector<int>& assignments,
                        const std::vector<int>& labels, int components);

}  // namespace textvae
