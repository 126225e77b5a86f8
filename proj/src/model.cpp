#include "textvae/model.hpp"

#include <algorithm>
#include <cmath>

#include "textvae/errors.hpp"

namespace textvae {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_dims(const ModelDims& d) {
  if (d.vocab <= 0 || d.embed <= 0 || d.hidden <= 0 || d.latent <= 0)
    throw ConfigError("model dims must all be positive");
}

}  // namespace

SeqVae init_model(const ModelDims& dims, Rng& rng) {
  check_dims(dims);
  SeqVae m;
  m.dims = dims;
  m.enc.embedding = init_embedding(dims.vocab, dims.embed, rng);
  m.enc.lstm = init_lstm(dims.embed, dims.hidden, rng);
  m.enc.mu_head = init_linear(dims.hidden, dims.latent, rng);
  m.enc.logvar_head = init_linear(dims.hidden, dims.latent, rng);
  m.dec.embedding = init_embedding(dims.vocab, dims.embed, rng);
  m.dec.lstm = init_lstm(dims.embed + dims.latent, dims.hidden, rng);
  m.dec.z_to_state = init_linear(dims.latent, 2 * dims.hidden, rng);
  m.dec.out = init_linear(dims.hidden, dims.vocab, rng);
  return m;
}

void reset_decoder(SeqVae& m, Rng& rng) {
  const ModelDims& d = m.dims;
  m.dec.embedding = init_embedding(d.vocab, d.embed, rng);
  m.dec.lstm = init_lstm(d.embed + d.latent, d.hidden, rng);
  m.dec.z_to_state = init_linear(d.latent, 2 * d.hidden, rng);
  m.dec.out = init_linear(d.hidden, d.vocab, rng);
}

std::vector<Tensor*> encoder_tensors(SeqVae& m) {
  return {&m.enc.embedding, &m.enc.lstm.w_x,    &m.enc.lstm.w_h,
          &m.enc.lstm.b,    &m.enc.mu_head.w,   &m.enc.mu_head.b,
          &m.enc.logvar_head.w, &m.enc.logvar_head.b};
}

std::vector<Tensor*> decoder_tensors(SeqVae& m) {
  return {&m.dec.embedding,   &m.dec.lstm.w_x, &m.dec.lstm.w_h,
          &m.dec.lstm.b,      &m.dec.z_to_state.w, &m.dec.z_to_state.b,
          &m.dec.out.w,       &m.dec.out.b};
}

std::vector<const Tensor*> encoder_tensors(const SeqVae& m) {
  auto mut = encoder_tensors(const_cast<SeqVae&>(m));
  return {mut.begin(), mut.end()};
}

std::vector<const Tensor*> decoder_tensors(const SeqVae& m) {
  auto mut = decoder_tensors(const_cast<SeqVae&>(m));
  return {mut.begin(), mut.end()};
}

ModelVars lift_model(Graph& g, const SeqVae& m, bool enc_grad, bool dec_grad) {
  ModelVars mv;
  mv.enc.embedding = g.leaf(m.enc.embedding, enc_grad);
  mv.enc.lstm = lift(g, m.enc.lstm, enc_grad);
  mv.enc.mu_head = lift(g, m.enc.mu_head, enc_grad);
  mv.enc.logvar_head = lift(g, m.enc.logvar_head, enc_grad);
  mv.dec.embedding = g.leaf(m.dec.embedding, dec_grad);
  mv.dec.lstm = lift(g, m.dec.lstm, dec_grad);
  mv.dec.z_to_state = lift(g, m.dec.z_to_state, dec_grad);
  mv.dec.out = lift(g, m.dec.out, dec_grad);
  return mv;
}

std::vector<Var> encoder_vars(const ModelVars& mv) {
  return {mv.enc.embedding,   mv.enc.lstm.w_x,    mv.enc.lstm.w_h,
          mv.enc.lstm.b,      mv.enc.mu_head.w,   mv.enc.mu_head.b,
          mv.enc.logvar_head.w, mv.enc.logvar_head.b};
}

std::vector<Var> decoder_vars(const ModelVars& mv) {
  return {mv.dec.embedding,   mv.dec.lstm.w_x, mv.dec.lstm.w_h,
          mv.dec.lstm.b,      mv.dec.z_to_state.w, mv.dec.z_to_state.b,
          mv.dec.out.w,       mv.dec.out.b};
}

void check_batch(const Batch& batch, int vocab) {
  if (batch.empty()) throw ContractError("empty batch");
  for (const auto& s : batch) {
    if (s.size() < 3)
      throw ContractError(
          "sentence must contain the two markers plus at least one word");
    for (int id : s)
      if (id < 0 || id >= vocab)
        throw ContractError("token id " + std::to_string(id) +
                            " outside vocabulary of " + std::to_string(vocab));
  }
}

namespace {

int max_len(const Batch& batch) {
  std::size_t t = 0;
  for (const auto& s : batch) t = std::max(t, s.size());
  return static_cast<int>(t);
}

// 1 for rows still inside their sentence at step t, else 0; (B x width).
Tensor step_mask(const Batch& batch, int t, int width) {
  Tensor m(static_cast<int>(batch.size()), width);
  for (int b = 0; b < m.rows(); ++b)
    if (t < static_cast<int>(batch[static_cast<std::size_t>(b)].size()))
      for (int c = 0; c < width; ++c) m(b, c) = 1.0;
  return m;
}

bool all_active(const Batch& batch, int t) {
  for (const auto& s : batch)
    if (t >= static_cast<int>(s.size())) return false;
  return true;
}

}  // namespace

PosteriorVars encode_batch(Graph& g, const SeqVae& m, const ModelVars& mv,
                           const Batch& batch) {
  check_batch(batch, m.dims.vocab);
  int bsz = static_cast<int>(batch.size());
  int hid = m.dims.hidden;
  LstmState s{g.zeros(bsz, hid), g.zeros(bsz, hid)};
  int steps = max_len(batch);
  for (int t = 0; t < steps; ++t) {
    std::vector<int> ids(static_cast<std::size_t>(bsz), 0);
    for (int b = 0; b < bsz; ++b) {
      const auto& sent = batch[static_cast<std::size_t>(b)];
      if (t < static_cast<int>(sent.size()))
        ids[static_cast<std::size_t>(b)] = sent[static_cast<std::size_t>(t)];
    }
    Var x = g.gather_rows(mv.enc.embedding, ids);
    LstmState next = lstm_step(g, mv.enc.lstm, x, s);
    if (all_active(batch, t)) {
      s = next;
    } else {
      // Rows past their own end keep their final state.
      Tensor mask = step_mask(batch, t, hid);
      Tensor inv(mask.rows(), mask.cols());
      for (int i = 0; i < mask.size(); ++i) inv[i] = 1.0 - mask[i];
      Var vm = g.constant(mask);
      Var vi = g.constant(inv);
      s.h = g.add(g.mul(vm, next.h), g.mul(vi, s.h));
      s.c = g.add(g.mul(vm, next.c), g.mul(vi, s.c));
    }
  }
  return {linear(g, mv.enc.mu_head, s.h), linear(g, mv.enc.logvar_head, s.h)};
}

Var kl_per_dim(Graph& g, const PosteriorVars& p) {
  Var t = g.add(g.mul(p.mu, p.mu), g.exp(p.log_var));
  t = g.add(t, g.scale(p.log_var, -1.0));
  t = g.add_const(t, -1.0);
  return g.scale(t, 0.5);
}

Var sample_z(Graph& g, const PosteriorVars& p, Rng& rng) {
  const Tensor& mu = p.mu.value();
  Tensor eps(mu.rows(), mu.cols());
  for (int i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  Var sigma = g.exp(g.scale(p.log_var, 0.5));
  return g.add(p.mu, g.mul(sigma, g.constant(std::move(eps))));
}

Var sample_z_repeated(Graph& g, const PosteriorVars& p, int k, Rng& rng) {
  if (k < 1) throw ConfigError("sample_z_repeated: k must be >= 1");
  Var mu = g.repeat_rows(p.mu, k);
  Var sigma = g.exp(g.scale(g.repeat_rows(p.log_var, k), 0.5));
  Tensor eps(mu.rows(), mu.cols());
  for (int i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  return g.add(mu, g.mul(sigma, g.constant(std::move(eps))));
}

Var decode_nll(Graph& g, const SeqVae& m, const ModelVars& mv, Var z,
               const Batch& batch, bool train, Rng* rng) {
  check_batch(batch, m.dims.vocab);
  int bsz = static_cast<int>(batch.size());
  if (z.rows() != bsz || z.cols() != m.dims.latent)
    throw DimensionError("decode_nll: z must be batch x latent");
  if (train && rng == nullptr)
    throw ContractError("decode_nll: training mode needs an rng for dropout");
  int hid = m.dims.hidden;
  double rate = train ? m.dropout : 0.0;

  Var s0 = linear(g, mv.dec.z_to_state, z);
  LstmState s{g.slice_cols(s0, 0, hid), g.slice_cols(s0, hid, hid)};

  Var nll;  // B x 1 accumulator
  int steps = max_len(batch) - 1;
  for (int t = 0; t < steps; ++t) {
    std::vector<int> in_ids(static_cast<std::size_t>(bsz), 0);
    std::vector<int> targets(static_cast<std::size_t>(bsz), 0);
    bool partial = false;
    for (int b = 0; b < bsz; ++b) {
      const auto& sent = batch[static_cast<std::size_t>(b)];
      if (t + 1 < static_cast<int>(sent.size())) {
        in_ids[static_cast<std::size_t>(b)] = sent[static_cast<std::size_t>(t)];
        targets[static_cast<std::size_t>(b)] =
            sent[static_cast<std::size_t>(t) + 1];
      } else {
        partial = true;
      }
    }
    Var x = g.gather_rows(mv.dec.embedding, in_ids);
    if (rate > 0.0) x = g.dropout(x, rate, *rng);
    x = g.concat_cols(x, z);
    s = lstm_step(g, mv.dec.lstm, x, s);
    Var h = rate > 0.0 ? g.dropout(s.h, rate, *rng) : s.h;
    Var xent = g.softmax_xent(linear(g, mv.dec.out, h), targets);
    if (partial) {
      // Padded rows contribute nothing; their state drift is unread.
      Tensor mask(bsz, 1);
      for (int b = 0; b < bsz; ++b)
        if (t + 1 < static_cast<int>(batch[static_cast<std::size_t>(b)].size()))
          mask(b, 0) = 1.0;
      xent = g.mul(xent, g.constant(std::move(mask)));
    }
    nll = nll.defined() ? g.add(nll, xent) : xent;
  }
  return nll;
}

Var gaussian_log_pdf(Graph& g, Var z, Var mu, Var log_var) {
  Var diff = z - mu;
  Var quad = g.mul(g.mul(diff, diff), g.exp(g.scale(log_var, -1.0)));
  Var terms = g.add_const(g.add(quad, log_var), kLog2Pi);
  return g.scale(g.sum_axis1(terms), -0.5);
}

Var standard_normal_log_pdf(Graph& g, Var z) {
  Var terms = g.add_const(g.mul(z, z), kLog2Pi);
  return g.scale(g.sum_axis1(terms), -0.5);
}

Posterior encode_plain(const SeqVae& m, const Batch& batch) {
  Graph g;
  ModelVars mv = lift_model(g, m, false, false);
  PosteriorVars p = encode_batch(g, m, mv, batch);
  return {p.mu.value(), p.log_var.value()};
}

std::vector<int> greedy_decode(const SeqVae& m, const Tensor& z, int max_len,
                               int bos_id, int eos_id) {
  if (z.rows() != 1 || z.cols() != m.dims.latent)
    throw DimensionError("greedy_decode: z must be 1 x latent");
  if (max_len < 0) throw ContractError("greedy_decode: max_len must be >= 0");
  int hid = m.dims.hidden;

  Tensor s0 = linear_plain(m.dec.z_to_state, z);
  LstmStateT s{Tensor(1, hid), Tensor(1, hid)};
  for (int j = 0; j < hid; ++j) {
    s.h(0, j) = s0(0, j);
    s.c(0, j) = s0(0, hid + j);
  }

  std::vector<int> out{bos_id};
  int prev = bos_id;
  for (int t = 0; t < max_len; ++t) {
    Tensor x(1, m.dims.embed + m.dims.latent);
    for (int c = 0; c < m.dims.embed; ++c) x(0, c) = m.dec.embedding(prev, c);
    for (int c = 0; c < m.dims.latent; ++c) x(0, m.dims.embed + c) = z(0, c);
    s = lstm_step_plain(m.dec.lstm, x, s);
    Tensor logits = linear_plain(m.dec.out, s.h);
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c)
      if (logits(0, c) > logits(0, best)) best = c;
    out.push_back(best);
    if (best == eos_id) break;
    prev = best;
  }
  return out;
}

}  // namespace textvae
