#include "textvae/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "textvae/errors.hpp"

namespace textvae {
namespace {

constexpr double kLogPi = 1.1447298858494002;

// Per-row -log p(x|z) for a grid of candidate codes (rows of zs), chunked to
// bound graph size.
std::vector<double> nll_for_codes(const SeqVae& m, const std::vector<int>& sent,
                                  const Tensor& zs, int chunk = 256) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(zs.rows()));
  for (int lo = 0; lo < zs.rows(); lo += chunk) {
    int n = std::min(chunk, zs.rows() - lo);
    Tensor zc(n, zs.cols());
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < zs.cols(); ++c) zc(r, c) = zs(lo + r, c);
    Graph g;
    ModelVars mv = lift_model(g, m, false, false);
    Var z = g.constant(std::move(zc));
    Batch rep(static_cast<std::size_t>(n), sent);
    Var nll = decode_nll(g, m, mv, z, rep, false, nullptr);
    const Tensor& v = nll.value();
    for (int r = 0; r < n; ++r) out.push_back(v(r, 0));
  }
  return out;
}

void check_oracle_dims(const SeqVae& m, int order) {
  if (m.dims.latent > 2)
    throw ContractError(
        "quadrature oracle requires latent_dim <= 2 (exact integration is the "
        "point)");
  if (order < 16) throw ContractError("quadrature order must be >= 16");
}

double logsumexp(const std::vector<double>& v) {
  double mx = v.front();
  for (double x : v) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

HermiteRule gauss_hermite(int order) {
  if (order < 1) throw ContractError("gauss_hermite: order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 0; i + 1 < order; ++i) {
    double off = std::sqrt((i + 1) / 2.0);
    jacobi(i, i + 1) = off;
    jacobi(i + 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw NumericError("gauss_hermite: eigendecomposition failed");
  HermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const double sqrt_pi = std::sqrt(M_PI);
  for (int i = 0; i < order; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = sqrt_pi * v0 * v0;
  }
  return rule;
}

double quadrature_log_marginal(const SeqVae& m, const std::vector<int>& sentence,
                               int order) {
  check_oracle_dims(m, order);
  HermiteRule rule = gauss_hermite(order);
  const double r2 = std::sqrt(2.0);
  int dim = m.dims.latent;

  if (dim == 1) {
    Tensor zs(order, 1);
    for (int i = 0; i < order; ++i) zs(i, 0) = r2 * rule.nodes[static_cast<std::size_t>(i)];
    std::vector<double> nll = nll_for_codes(m, sentence, zs);
    std::vector<double> terms(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i)
      terms[static_cast<std::size_t>(i)] =
          std::log(rule.weights[static_cast<std::size_t>(i)]) - 0.5 * kLogPi -
          nll[static_cast<std::size_t>(i)];
    return logsumexp(terms);
  }

  Tensor zs(order * order, 2);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j) {
      zs(i * order + j, 0) = r2 * rule.nodes[static_cast<std::size_t>(i)];
      zs(i * order + j, 1) = r2 * rule.nodes[static_cast<std::size_t>(j)];
    }
  std::vector<double> nll = nll_for_codes(m, sentence, zs);
  std::vector<double> terms(static_cast<std::size_t>(order) * order);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j)
      terms[static_cast<std::size_t>(i * order + j)] =
          std::log(rule.weights[static_cast<std::size_t>(i)]) +
          std::log(rule.weights[static_cast<std::size_t>(j)]) - kLogPi -
          nll[static_cast<std::size_t>(i * order + j)];
  return logsumexp(terms);
}

double expected_recon_nll_quadrature(const SeqVae& m,
                                     const std::vector<int>& sentence,
                                     int order) {
  check_oracle_dims(m, order);
  HermiteRule rule = gauss_hermite(order);
  Posterior post = encode_plain(m, Batch{sentence});
  const double r2 = std::sqrt(2.0);
  const double sqrt_pi = std::sqrt(M_PI);
  int dim = m.dims.latent;

  if (dim == 1) {
    double mu = post.mu(0, 0);
    double sigma = std::exp(0.5 * post.log_var(0, 0));
    Tensor zs(order, 1);
    for (int i = 0; i < order; ++i)
      zs(i, 0) = mu + r2 * sigma * rule.nodes[static_cast<std::size_t>(i)];
    std::vector<double> nll = nll_for_codes(m, sentence, zs);
    double acc = 0.0;
    for (int i = 0; i < order; ++i)
      acc += rule.weights[static_cast<std::size_t>(i)] / sqrt_pi *
             nll[static_cast<std::size_t>(i)];
    return acc;
  }

  double mu0 = post.mu(0, 0), mu1 = post.mu(0, 1);
  double s0 = std::exp(0.5 * post.log_var(0, 0));
  double s1 = std::exp(0.5 * post.log_var(0, 1));
  Tensor zs(order * order, 2);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j) {
      zs(i * order + j, 0) = mu0 + r2 * s0 * rule.nodes[static_cast<std::size_t>(i)];
      zs(i * order + j, 1) = mu1 + r2 * s1 * rule.nodes[static_cast<std::size_t>(j)];
    }
  std::vector<double> nll = nll_for_codes(m, sentence, zs);
  double acc = 0.0;
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j)
      acc += rule.weights[static_cast<std::size_t>(i)] *
             rule.weights[static_cast<std::size_t>(j)] / M_PI *
             nll[static_cast<std::size_t>(i * order + j)];
  return acc;
}

}  // namespace textvae
