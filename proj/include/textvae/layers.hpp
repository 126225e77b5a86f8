#pragma once

#include "textvae/graph.hpp"
#include "textvae/rng.hpp"
#include "textvae/tensor.hpp"

namespace textvae {

// Fused LSTM cell parameters, gate order [input | forget | cell | output].
// w_x: (in x 4H), w_h: (H x 4H), b: (1 x 4H).
struct LstmParams {
  Tensor w_x;
  Tensor w_h;
  Tensor b;
  int hidden() const { return w_h.rows(); }
};

// w: (in x out), b: (1 x out).
struct LinearParams {
  Tensor w;
  Tensor b;
};

// Graph-lifted views of the same parameters.
struct LstmVars {
  Var w_x;
  Var w_h;
  Var b;
};

struct LinearVars {
  Var w;
  Var b;
};

struct LstmState {
  Var h;
  Var c;
};

struct LstmStateT {
  Tensor h;
  Tensor c;
};

LstmParams init_lstm(int in, int hidden, Rng& rng);      // U(-0.01, 0.01)
LinearParams init_linear(int in, int out, Rng& rng);     // U(-0.01, 0.01)
Tensor init_embedding(int vocab, int dim, Rng& rng);     // U(-0.1, 0.1)

LstmVars lift(Graph& g, const LstmParams& p, bool requires_grad);
LinearVars lift(Graph& g, const LinearParams& p, bool requires_grad);

// One step over a batch of rows: x (B x in), state h/c (B x H).
LstmState lstm_step(Graph& g, const LstmVars& p, Var x, const LstmState& s);

// Same recurrence without a tape, for decoding loops.
LstmStateT lstm_step_plain(const LstmParams& p, const Tensor& x,
                           const LstmStateT& s);

Var linear(Graph& g, const LinearVars& p, Var x);
Tensor linear_plain(const LinearParams& p, const Tensor& x);

}  // namespace textvae
