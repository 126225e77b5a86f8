#include "textvae/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "textvae/errors.hpp"

namespace textvae {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double logsumexp(const double* v, int n) {
  double mx = v[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

// log N(z_row; mu_row, diag exp(lv_row)) between rows of plain tensors.
double row_log_pdf(const Tensor& z, int zi, const Tensor& mu, const Tensor& lv,
                   int pi) {
  double acc = 0.0;
  for (int d = 0; d < z.cols(); ++d) {
    double diff = z(zi, d) - mu(pi, d);
    acc += diff * diff * std::exp(-lv(pi, d)) + lv(pi, d) + kLog2Pi;
  }
  return -0.5 * acc;
}

}  // namespace

std::vector<double> log_importance_weights(const SeqVae& m,
                                           const std::vector<int>& sentence,
                                           int k, Rng& rng, int chunk) {
  if (k < 1) throw ContractError("log_importance_weights: k must be >= 1");
  if (chunk < 1) throw ContractError("log_importance_weights: bad chunk");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int done = 0; done < k; done += chunk) {
    int kc = std::min(chunk, k - done);
    Graph g;
    ModelVars mv = lift_model(g, m, false, false);
    PosteriorVars post = encode_batch(g, m, mv, Batch{sentence});
    Var z = sample_z_repeated(g, post, kc, rng);
    Batch rep(static_cast<std::size_t>(kc), sentence);
    Var nll = decode_nll(g, m, mv, z, rep, false, nullptr);
    Var log_q = gaussian_log_pdf(g, z, g.repeat_rows(post.mu, kc),
                                 g.repeat_rows(post.log_var, kc));
    Var log_w = g.add(g.add(g.scale(nll, -1.0), standard_normal_log_pdf(g, z)),
                      g.scale(log_q, -1.0));
    const Tensor& v = log_w.value();
    for (int r = 0; r < v.rows(); ++r) out.push_back(v(r, 0));
  }
  return out;
}

double iw_nll(const SeqVae& m, const std::vector<int>& sentence, int k,
              Rng& rng, int chunk) {
  std::vector<double> lw = log_importance_weights(m, sentence, k, rng, chunk);
  return -(logsumexp(lw.data(), k) - std::log(static_cast<double>(k)));
}

double grouped_iw_estimate(const std::vector<double>& log_w, int group) {
  int n = static_cast<int>(log_w.size());
  if (group < 1 || n % group != 0)
    throw ContractError("grouped_iw_estimate: group must divide sample count");
  double acc = 0.0;
  int groups = n / group;
  for (int gi = 0; gi < groups; ++gi)
    acc += -(logsumexp(log_w.data() + gi * group, group) -
             std::log(static_cast<double>(group)));
  return acc / groups;
}

double ppl_from_nll(double total_nll, long long total_tokens) {
  if (total_tokens <= 0)
    throw ContractError("ppl_from_nll: token count must be positive");
  return std::exp(total_nll / static_cast<double>(total_tokens));
}

Posterior encode_corpus(const SeqVae& m, const Corpus& corpus, int batch) {
  if (corpus.empty()) throw ContractError("encode_corpus: empty corpus");
  if (batch < 1) throw ContractError("encode_corpus: bad batch size");
  int n = corpus.size();
  Posterior out{Tensor(n, m.dims.latent), Tensor(n, m.dims.latent)};
  for (int lo = 0; lo < n; lo += batch) {
    int b = std::min(batch, n - lo);
    Batch group(corpus.sentences.begin() + lo, corpus.sentences.begin() + lo + b);
    Posterior p = encode_plain(m, group);
    for (int r = 0; r < b; ++r)
      for (int d = 0; d < m.dims.latent; ++d) {
        out.mu(lo + r, d) = p.mu(r, d);
        out.log_var(lo + r, d) = p.log_var(r, d);
      }
  }
  return out;
}

int active_units(const Tensor& mus, double threshold) {
  if (mus.rows() < 2)
    throw ContractError("active_units: need at least two sentences");
  int count = 0;
  for (int d = 0; d < mus.cols(); ++d) {
    double mean = 0.0;
    for (int r = 0; r < mus.rows(); ++r) mean += mus(r, d);
    mean /= mus.rows();
    double var = 0.0;
    for (int r = 0; r < mus.rows(); ++r) {
      double diff = mus(r, d) - mean;
      var += diff * diff;
    }
    var /= mus.rows();
    if (var > threshold) ++count;
  }
  return count;
}

int active_units(const SeqVae& m, const Corpus& corpus, double threshold) {
  return active_units(encode_corpus(m, corpus).mu, threshold);
}

double mutual_information(const Posterior& post, const Tensor& z) {
  int n = post.mu.rows();
  if (n < 2) throw ContractError("mutual_information: need sample size >= 2");
  if (!z.same_shape(post.mu))
    throw DimensionError("mutual_information: z must hold one draw per row");

  // Both expectations are evaluated at the same draws (one per sentence), so
  // the per-sample terms pair up: a batch of identical posteriors reports
  // exactly zero instead of Monte Carlo noise.
  double acc = 0.0;
  std::vector<double> comp(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      comp[static_cast<std::size_t>(j)] = row_log_pdf(z, i, post.mu, post.log_var, j);
    double log_qi = comp[static_cast<std::size_t>(i)];
    acc += log_qi - (logsumexp(comp.data(), n) - std::log(static_cast<double>(n)));
  }
  return acc / n;
}

double mutual_information(const SeqVae& m, const Corpus& sample, Rng& rng) {
  Posterior post = encode_corpus(m, sample);
  Tensor z(post.mu.rows(), post.mu.cols());
  for (int i = 0; i < z.rows(); ++i)
    for (int d = 0; d < z.cols(); ++d)
      z(i, d) = post.mu(i, d) + std::exp(0.5 * post.log_var(i, d)) * rng.normal();
  return mutual_information(post, z);
}

EvalReport evaluate(const SeqVae& m, const Corpus& corpus,
                    const EvalOptions& opts, std::uint64_t seed) {
  if (corpus.empty()) throw ContractError("evaluate: empty corpus");
  int n = corpus.size();
  Rng master(seed);
  Posterior post = encode_corpus(m, corpus, opts.batch);

  // One shared posterior draw per sentence feeds both the recon term and the
  // MI estimate; draws come from per-sentence forks so chunking cannot change
  // the result.
  Tensor z(n, m.dims.latent);
  for (int i = 0; i < n; ++i) {
    Rng ri = master.fork(static_cast<std::uint64_t>(i));
    for (int d = 0; d < m.dims.latent; ++d)
      z(i, d) = post.mu(i, d) + std::exp(0.5 * post.log_var(i, d)) * ri.normal();
  }

  double recon_sum = 0.0;
  for (int lo = 0; lo < n; lo += opts.batch) {
    int b = std::min(opts.batch, n - lo);
    Batch group(corpus.sentences.begin() + lo, corpus.sentences.begin() + lo + b);
    Tensor zb(b, m.dims.latent);
    for (int r = 0; r < b; ++r)
      for (int d = 0; d < m.dims.latent; ++d) zb(r, d) = z(lo + r, d);
    Graph g;
    ModelVars mv = lift_model(g, m, false, false);
    Var nll = decode_nll(g, m, mv, g.constant(std::move(zb)), group, false, nullptr);
    recon_sum += nll.value().sum();
  }

  double kl_sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < m.dims.latent; ++d) {
      double mu = post.mu(i, d), lv = post.log_var(i, d);
      kl_sum += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
    }

  double nll_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Rng ri = master.fork(static_cast<std::uint64_t>(n + i));
    nll_sum += iw_nll(m, corpus.sentences[static_cast<std::size_t>(i)],
                      opts.iw_k, ri, opts.iw_chunk);
  }

  int mi_n = std::min(n, std::max(2, opts.mi_samples));
  Posterior mi_post{Tensor(mi_n, m.dims.latent), Tensor(mi_n, m.dims.latent)};
  Tensor mi_z(mi_n, m.dims.latent);
  for (int i = 0; i < mi_n; ++i)
    for (int d = 0; d < m.dims.latent; ++d) {
      mi_post.mu(i, d) = post.mu(i, d);
      mi_post.log_var(i, d) = post.log_var(i, d);
      mi_z(i, d) = z(i, d);
    }

  long long tokens = corpus.predicted_tokens();
  EvalReport rep;
  rep.recon = recon_sum / n;
  rep.kl = kl_sum / n;
  rep.neg_elbo = rep.recon + rep.kl;
  rep.nll = nll_sum / n;
  rep.ppl = ppl_from_nll(nll_sum, tokens);
  rep.elbo_ppl = ppl_from_nll(recon_sum + kl_sum, tokens);
  rep.mi = mutual_information(mi_post, mi_z);
  rep.au = active_units(post.mu, opts.au_threshold);
  return rep;
}

}  // namespace textvae
