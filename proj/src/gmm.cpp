#include "textvae/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "textvae/errors.hpp"
#include "textvae/rng.hpp"

namespace textvae {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double component_log_pdf(const Tensor& x, int xi, const GmmState& s, int c) {
  double acc = 0.0;
  for (int d = 0; d < x.cols(); ++d) {
    double diff = x(xi, d) - s.means(c, d);
    double v = s.vars(c, d);
    acc += diff * diff / v + std::log(v) + kLog2Pi;
  }
  return -0.5 * acc;
}

void seed_component(GmmState& s, int c, const Tensor& codes,
                    const std::vector<double>& global_var, Rng& rng) {
  int row = rng.uniform_int(codes.rows());
  for (int d = 0; d < codes.cols(); ++d) {
    s.means(c, d) = codes(row, d);
    s.vars(c, d) = global_var[static_cast<std::size_t>(d)];
  }
}

}  // namespace

GmmResult gmm_fit(const Tensor& codes, int components, std::uint64_t seed,
                  int max_iters, double tol, double var_floor) {
  int n = codes.rows(), dim = codes.cols();
  if (components < 1) throw ContractError("gmm_fit: need components >= 1");
  if (n < components)
    throw ContractError("gmm_fit: fewer data rows than components");

  std::vector<double> global_var(static_cast<std::size_t>(dim));
  for (int d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += codes(i, d);
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      double diff = codes(i, d) - mean;
      var += diff * diff;
    }
    global_var[static_cast<std::size_t>(d)] = std::max(var / n, var_floor);
  }

  Rng rng(seed);
  GmmResult res;
  GmmState& s = res.state;
  s.weights = Tensor(1, components, 1.0 / components);
  s.means = Tensor(components, dim);
  s.vars = Tensor(components, dim);
  for (int c = 0; c < components; ++c) seed_component(s, c, codes, global_var, rng);

  Tensor resp(n, components);  // responsibilities, rows sum to 1
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iters; ++iter) {
    // E step in the log domain.
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      std::vector<double> lp(static_cast<std::size_t>(components));
      for (int c = 0; c < components; ++c) {
        lp[static_cast<std::size_t>(c)] =
            std::log(s.weights(0, c)) + component_log_pdf(codes, i, s, c);
        mx = std::max(mx, lp[static_cast<std::size_t>(c)]);
      }
      double z = 0.0;
      for (int c = 0; c < components; ++c)
        z += std::exp(lp[static_cast<std::size_t>(c)] - mx);
      double lse = mx + std::log(z);
      ll += lse;
      for (int c = 0; c < components; ++c)
        resp(i, c) = std::exp(lp[static_cast<std::size_t>(c)] - lse);
    }
    res.log_likelihood_curve.push_back(ll);

    // M step.
    bool reseeded = false;
    for (int c = 0; c < components; ++c) {
      double nc = 0.0;
      for (int i = 0; i < n; ++i) nc += resp(i, c);
      double w = nc / n;
      if (w < 1e-8) {
        seed_component(s, c, codes, global_var, rng);
        s.weights(0, c) = 1.0 / n;
        reseeded = true;
        continue;
      }
      s.weights(0, c) = w;
      for (int d = 0; d < dim; ++d) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += resp(i, c) * codes(i, d);
        mean /= nc;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
          double diff = codes(i, d) - mean;
          var += resp(i, c) * diff * diff;
        }
        s.means(c, d) = mean;
        s.vars(c, d) = std::max(var / nc, var_floor);
      }
    }
    // Renormalize in case a re-seed perturbed the weight simplex.
    double wsum = 0.0;
    for (int c = 0; c < components; ++c) wsum += s.weights(0, c);
    for (int c = 0; c < components; ++c) s.weights(0, c) /= wsum;

    if (!reseeded && ll - prev_ll < tol && iter > 0) break;
    prev_ll = ll;
  }

  res.assignments.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < components; ++c) {
      double lp = std::log(s.weights(0, c)) + component_log_pdf(codes, i, s, c);
      if (lp > best_lp) {
        best_lp = lp;
        best = c;
      }
    }
    res.assignments[static_cast<std::size_t>(i)] = best;
  }
  return res;
}

std::vector<int> gmm_assign(const GmmState& state, const Tensor& codes) {
  if (codes.cols() != state.means.cols())
    throw DimensionError("gmm_assign: code dimension " +
                         std::to_string(codes.cols()) + " vs mixture " +
                         std::to_string(state.means.cols()));
  int components = state.means.rows();
  std::vector<int> out(static_cast<std::size_t>(codes.rows()));
  for (int i = 0; i < codes.rows(); ++i) {
    int best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < components; ++c) {
      double lp = std::log(state.weights(0, c)) +
                  component_log_pdf(codes, i, state, c);
      if (lp > best_lp) {
        best_lp = lp;
        best = c;
      }
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

double cluster_accuracy(const std::vector<int>& assignments,
                        const std::vector<int>& labels, int components) {
  if (assignments.size() != labels.size() || assignments.empty())
    throw ContractError("cluster_accuracy: size mismatch");
  if (components > 8)
    throw ContractError("cluster_accuracy: exhaustive matching supports <= 8 classes");
  for (int l : labels)
    if (l < 0 || l >= components)
      throw ContractError("cluster_accuracy: label outside [0, components)");

  std::vector<int> perm(static_cast<std::size_t>(components));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (perm[static_cast<std::size_t>(assignments[i])] == labels[i]) ++hits;
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 100.0 * static_cast<double>(best) / static_cast<double>(labels.size());
}

}  // namespace textvae
