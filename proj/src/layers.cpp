#include "textvae/layers.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "textvae/errors.hpp"

namespace textvae {
namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor uniform_tensor(int rows, int cols, double bound, Rng& rng) {
  Tensor t(rows, cols);
  for (int i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

LstmParams init_lstm(int in, int hidden, Rng& rng) {
  if (in <= 0 || hidden <= 0) throw ConfigError("init_lstm: sizes must be positive");
  LstmParams p;
  p.w_x = uniform_tensor(in, 4 * hidden, 0.01, rng);
  p.w_h = uniform_tensor(hidden, 4 * hidden, 0.01, rng);
  p.b = uniform_tensor(1, 4 * hidden, 0.01, rng);
  return p;
}

LinearParams init_linear(int in, int out, Rng& rng) {
  if (in <= 0 || out <= 0) throw ConfigError("init_linear: sizes must be positive");
  LinearParams p;
  p.w = uniform_tensor(in, out, 0.01, rng);
  p.b = uniform_tensor(1, out, 0.01, rng);
  return p;
}

Tensor init_embedding(int vocab, int dim, Rng& rng) {
  if (vocab <= 0 || dim <= 0)
    throw ConfigError("init_embedding: sizes must be positive");
  return uniform_tensor(vocab, dim, 0.1, rng);
}

LstmVars lift(Graph& g, const LstmParams& p, bool requires_grad) {
  return {g.leaf(p.w_x, requires_grad), g.leaf(p.w_h, requires_grad),
          g.leaf(p.b, requires_grad)};
}

LinearVars lift(Graph& g, const LinearParams& p, bool requires_grad) {
  return {g.leaf(p.w, requires_grad), g.leaf(p.b, requires_grad)};
}

LstmState lstm_step(Graph& g, const LstmVars& p, Var x, const LstmState& s) {
  int hdim = p.w_h.value().rows();
  Var pre = g.add_rowwise(g.add(g.matmul(x, p.w_x), g.matmul(s.h, p.w_h)), p.b);
  Var gi = g.sigmoid(g.slice_cols(pre, 0, hdim));
  Var gf = g.sigmoid(g.slice_cols(pre, hdim, hdim));
  Var gc = g.tanh(g.slice_cols(pre, 2 * hdim, hdim));
  Var go = g.sigmoid(g.slice_cols(pre, 3 * hdim, hdim));
  Var c_next = g.add(g.mul(gf, s.c), g.mul(gi, gc));
  Var h_next = g.mul(go, g.tanh(c_next));
  return {h_next, c_next};
}

LstmStateT lstm_step_plain(const LstmParams& p, const Tensor& x,
                           const LstmStateT& s) {
  int hdim = p.hidden();
  int batch = x.rows();
  if (s.h.rows() != batch || s.h.cols() != hdim || !s.h.same_shape(s.c))
    throw DimensionError("lstm_step_plain: state shape mismatch");

  Tensor pre(batch, 4 * hdim);
  Eigen::Map<EMat>(pre.data(), batch, 4 * hdim).noalias() =
      Eigen::Map<const EMat>(x.data(), x.rows(), x.cols()) *
          Eigen::Map<const EMat>(p.w_x.data(), p.w_x.rows(), p.w_x.cols()) +
      Eigen::Map<const EMat>(s.h.data(), s.h.rows(), s.h.cols()) *
          Eigen::Map<const EMat>(p.w_h.data(), p.w_h.rows(), p.w_h.cols());

  auto sig = [](double v) {
    return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  };
  LstmStateT out{Tensor(batch, hdim), Tensor(batch, hdim)};
  for (int r = 0; r < batch; ++r) {
    for (int j = 0; j < hdim; ++j) {
      double gi = sig(pre(r, j) + p.b(0, j));
      double gf = sig(pre(r, hdim + j) + p.b(0, hdim + j));
      double gc = std::tanh(pre(r, 2 * hdim + j) + p.b(0, 2 * hdim + j));
      double go = sig(pre(r, 3 * hdim + j) + p.b(0, 3 * hdim + j));
      double c = gf * s.c(r, j) + gi * gc;
      out.c(r, j) = c;
      out.h(r, j) = go * std::tanh(c);
    }
  }
  out.h.require_finite("lstm_step_plain");
  return out;
}

Var linear(Graph& g, const LinearVars& p, Var x) {
  return g.add_rowwise(g.matmul(x, p.w), p.b);
}

Tensor linear_plain(const LinearParams& p, const Tensor& x) {
  if (x.cols() != p.w.rows()) throw DimensionError("linear_plain: shape mismatch");
  Tensor out(x.rows(), p.w.cols());
  Eigen::Map<EMat>(out.data(), out.rows(), out.cols()).noalias() =
      Eigen::Map<const EMat>(x.data(), x.rows(), x.cols()) *
      Eigen::Map<const EMat>(p.w.data(), p.w.rows(), p.w.cols());
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) += p.b(0, c);
  out.require_finite("linear_plain");
  return out;
}

}  // namespace textvae
