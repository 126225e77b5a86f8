#pragma once

#include <cstdint>
#include <vector>

#include "textvae/corpus.hpp"
#include "textvae/model.hpp"

namespace textvae {

// One evaluation record; nats are per sentence.
struct EvalReport {
  double nll = 0.0;       // importance-weighted negative log marginal
  double ppl = 0.0;       // exp(total nll / total predicted tokens)
  double recon = 0.0;     // E_q[-log p(x|z)], one draw per sentence
  double kl = 0.0;        // analytic KL(q || prior)
  double neg_elbo = 0.0;  // recon + kl
  double elbo_ppl = 0.0;  // ppl computed from neg_elbo instead of nll
  double mi = 0.0;        // I(x; z) under q, MC against the aggregate posterior
  int au = 0;             // active units
};

struct EvalOptions {
  int iw_k = 1000;
  int mi_samples = 1000;
  double au_threshold = 0.01;
  int iw_chunk = 250;      // IW draws per graph
  int batch = 64;          // sentences per encode/decode graph
};

// log w_j = log p(x|z_j) + log p(z_j) - log q(z_j|x) for k posterior draws.
std::vector<double> log_importance_weights(const SeqVae& m,
                                           const std::vector<int>& sentence,
                                           int k, Rng& rng, int chunk = 250);

// -(logsumexp(log_w) - log k) over all k draws.
double iw_nll(const SeqVae& m, const std::vector<int>& sentence, int k,
              Rng& rng, int chunk = 250);

// Mean over consecutive disjoint groups of size `group` of the per-group IW
// estimate. Shared draws make the estimate nonincreasing in group size by
// Jensen's inequality — deterministically, not just in expectation.
double grouped_iw_estimate(const std::vector<double>& log_w, int group);

double ppl_from_nll(double total_nll, long long total_tokens);

// Stacked posteriors for a whole corpus (row i = sentence i).
Posterior encode_corpus(const SeqVae& m, const Corpus& corpus, int batch = 64);

// Dimensions whose posterior mean varies across sentences: population variance
// of mu_d above threshold. Needs at least two sentences.
int active_units(const Tensor& mus, double threshold = 0.01);
int active_units(const SeqVae& m, const Corpus& corpus,
                 double threshold = 0.01);

// I_q(x; z) = E_x E_q[log q(z|x)] - E[log q_agg(z)] with the aggregate
// posterior approximated by the sample mixture; z holds one draw per sentence
// and both terms are evaluated at those shared draws.
double mutual_information(const Posterior& post, const Tensor& z);
double mutual_information(const SeqVae& m, const Corpus& sample, Rng& rng);

EvalReport evaluate(const SeqVae& m, const Corpus& corpus,
                    const EvalOptions& opts, std::uint64_t seed);

}  // namespace textvae
