#pragma once

#include <vector>

#include "textvae/graph.hpp"
#include "textvae/layers.hpp"
#include "textvae/rng.hpp"
#include "textvae/tensor.hpp"

namespace textvae {

struct ModelDims {
  int vocab = 0;
  int embed = 64;
  int hidden = 128;
  int latent = 32;
};

// q(z|x): unidirectional LSTM over the full marked sentence; mu/log-variance
// heads read the final hidden state.
struct EncoderParams {
  Tensor embedding;
  LstmParams lstm;
  LinearParams mu_head;
  LinearParams logvar_head;
};

// p(x|z): z maps to the initial (h, c) through z_to_state and is concatenated
// to every input embedding; out projects hidden state to vocabulary logits.
struct DecoderParams {
  Tensor embedding;
  LstmParams lstm;
  LinearParams z_to_state;
  LinearParams out;
};

struct SeqVae {
  ModelDims dims;
  EncoderParams enc;
  DecoderParams dec;
  double dropout = 0.5;  // decoder-only: input embeddings and pre-logit state
};

SeqVae init_model(const ModelDims& dims, Rng& rng);
// Fresh random re-init of the decoder half only (embedding, LSTM, z_to_state,
// output head); encoder bits untouched.
void reset_decoder(SeqVae& m, Rng& rng);

// Parameter tensors in declared (checkpoint) order.
std::vector<Tensor*> encoder_tensors(SeqVae& m);
std::vector<Tensor*> decoder_tensors(SeqVae& m);
std::vector<const Tensor*> encoder_tensors(const SeqVae& m);
std::vector<const Tensor*> decoder_tensors(const SeqVae& m);

struct EncoderVars {
  Var embedding;
  LstmVars lstm;
  LinearVars mu_head;
  LinearVars logvar_head;
};

struct DecoderVars {
  Var embedding;
  LstmVars lstm;
  LinearVars z_to_state;
  LinearVars out;
};

struct ModelVars {
  EncoderVars enc;
  DecoderVars dec;
};

// Lifts all parameters onto the graph; grad flags select the trainable half,
// which is how encoder-only / decoder-only update steps are partitioned.
ModelVars lift_model(Graph& g, const SeqVae& m, bool enc_grad, bool dec_grad);

// Same order as encoder_tensors/decoder_tensors.
std::vector<Var> encoder_vars(const ModelVars& mv);
std::vector<Var> decoder_vars(const ModelVars& mv);

// Sentences as id sequences including <s>/</s> markers.
using Batch = std::vector<std::vector<int>>;

// Every sentence must carry the two markers plus at least one word.
void check_batch(const Batch& batch, int vocab);

struct PosteriorVars {
  Var mu;       // B x D
  Var log_var;  // B x D
};

PosteriorVars encode_batch(Graph& g, const SeqVae& m, const ModelVars& mv,
                           const Batch& batch);

// Per-dimension KL(q || N(0,I)): 0.5*(mu^2 + sigma^2 - 1 - log sigma^2), B x D.
Var kl_per_dim(Graph& g, const PosteriorVars& p);

// z = mu + sigma * eps with fresh eps ~ N(0, I); B x D.
Var sample_z(Graph& g, const PosteriorVars& p, Rng& rng);

// k reparameterized draws per row, grouped row-major: output row i*k+j is the
// j-th draw for input row i. (B*k) x D.
Var sample_z_repeated(Graph& g, const PosteriorVars& p, int k, Rng& rng);

// Teacher-forced reconstruction NLL per sentence (token xent summed over the
// sentence including </s>), B x 1. train enables decoder dropout via rng.
Var decode_nll(Graph& g, const SeqVae& m, const ModelVars& mv, Var z,
               const Batch& batch, bool train, Rng* rng);

// Row-wise diagonal-Gaussian log density of z under (mu, log_var); B x 1.
Var gaussian_log_pdf(Graph& g, Var z, Var mu, Var log_var);
// Row-wise log N(z; 0, I); B x 1.
Var standard_normal_log_pdf(Graph& g, Var z);

struct Posterior {
  Tensor mu;
  Tensor log_var;
};

// Forward-only encode through the same graph code path.
Posterior encode_plain(const SeqVae& m, const Batch& batch);

// Argmax decoding from one latent code (1 x D): starts at <s>, stops on </s>
// or after max_len generated tokens. Returned ids include the markers.
std::vector<int> greedy_decode(const SeqVae& m, const Tensor& z, int max_len,
                               int bos_id, int eos_id);

}  // namespace textvae
