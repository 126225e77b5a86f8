#include <cmath>

#include "doctest.h"
#include "textvae/layers.hpp"

using namespace textvae;

namespace {

// Scalar-at-a-time LSTM cell, gate order [i | f | g | o], written without any
// of the library's linear algebra.
void reference_lstm(const LstmParams& p, const Tensor& x, const Tensor& h,
                    const Tensor& c, Tensor& h_out, Tensor& c_out) {
  int B = x.rows(), in = x.cols(), H = p.hidden();
  h_out = Tensor(B, H);
  c_out = Tensor(B, H);
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < H; ++j) {
      double pre[4];
      for (int gate = 0; gate < 4; ++gate) {
        int col = gate * H + j;
        double acc = p.b(0, col);
        for (int k = 0; k < in; ++k) acc += x(b, k) * p.w_x(k, col);
        for (int k = 0; k < H; ++k) acc += h(b, k) * p.w_h(k, col);
        pre[gate] = acc;
      }
      double i = sigmoid(pre[0]);
      double f = sigmoid(pre[1]);
      double gg = std::tanh(pre[2]);
      double o = sigmoid(pre[3]);
      c_out(b, j) = f * c(b, j) + i * gg;
      h_out(b, j) = o * std::tanh(c_out(b, j));
    }
  }
}

}  // namespace

TEST_CASE("lstm_step matches a scalar reference cell") {
  Rng rng(5);
  const int B = 3, in = 4, H = 6;
  LstmParams p = init_lstm(in, H, rng);
  // widen the weights so the gates leave their linear region
  for (auto* t : {&p.w_x, &p.w_h, &p.b})
    for (long i = 0; i < t->size(); ++i) (*t)[i] = rng.uniform(-0.8, 0.8);
  Tensor x(B, in), h(B, H), c(B, H);
  for (long i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
  for (long i = 0; i < h.size(); ++i) h[i] = rng.uniform(-1, 1);
  for (long i = 0; i < c.size(); ++i) c[i] = rng.uniform(-1, 1);

  Tensor h_ref, c_ref;
  reference_lstm(p, x, h, c, h_ref, c_ref);

  Graph g;
  LstmVars pv = lift(g, p, false);
  LstmState s{g.constant(h), g.constant(c)};
  LstmState out = lstm_step(g, pv, g.constant(x), s);
  const Tensor& h_got = g.value(out.h);
  const Tensor& c_got = g.value(out.c);
  for (long i = 0; i < h_ref.size(); ++i) {
    CHECK(h_got[i] == doctest::Approx(h_ref[i]).epsilon(1e-10));
    CHECK(c_got[i] == doctest::Approx(c_ref[i]).epsilon(1e-10));
  }

  LstmStateT plain = lstm_step_plain(p, x, {h, c});
  for (long i = 0; i < h_ref.size(); ++i) {
    CHECK(plain.h[i] == doctest::Approx(h_got[i]).epsilon(1e-14));
    CHECK(plain.c[i] == doctest::Approx(c_got[i]).epsilon(1e-14));
  }
}

TEST_CASE("linear layer matches manual affine map") {
  Rng rng(9);
  LinearParams p = init_linear(3, 2, rng);
  Tensor x = Tensor::from(2, 3, {1, -2, 0.5, 0, 1, -1});
  Graph g;
  Tensor got = g.value(linear(g, lift(g, p, false), g.constant(x)));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      double want = p.b(0, c);
      for (int k = 0; k < 3; ++k) want += x(r, k) * p.w(k, c);
      CHECK(got(r, c) == doctest::Approx(want).epsilon(1e-14));
    }
  Tensor plain = linear_plain(p, x);
  for (long i = 0; i < got.size(); ++i) CHECK(plain[i] == got[i]);
}

TEST_CASE("initializers draw from the documented ranges") {
  Rng rng(1);
  LstmParams p = init_lstm(8, 16, rng);
  double hi = 0.0;
  for (long i = 0; i < p.w_x.size(); ++i) hi = std::max(hi, std::fabs(p.w_x[i]));
  CHECK(hi <= 0.01);
  CHECK(hi > 0.001);  // actually random, not zeros
  Tensor e = init_embedding(30, 8, rng);
  double ehi = 0.0;
  for (long i = 0; i < e.size(); ++i) ehi = std::max(ehi, std::fabs(e[i]));
  CHECK(ehi <= 0.1);
  CHECK(ehi > 0.01);
}
