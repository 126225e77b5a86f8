#include "textvae/probes.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

#include "textvae/errors.hpp"

namespace textvae {
namespace {

// Marker-free view of a sentence.
std::vector<int> strip_markers(const std::vector<int>& ids, const Vocab& v) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids)
    if (id != v.bos() && id != v.eos() && id != v.pad()) out.push_back(id);
  return out;
}

using NgramCounts = std::map<std::vector<int>, int>;

NgramCounts ngrams(const std::vector<int>& s, int n) {
  NgramCounts c;
  for (int i = 0; i + n <= static_cast<int>(s.size()); ++i)
    ++c[std::vector<int>(s.begin() + i, s.begin() + i + n)];
  return c;
}

int corpus_max_len(const Corpus& c) {
  std::size_t m = 0;
  for (const auto& s : c.sentences) m = std::max(m, s.size());
  return static_cast<int>(m);
}

}  // namespace

double corpus_bleu(const std::vector<std::vector<int>>& hypotheses,
                   const std::vector<std::vector<int>>& references, int max_n) {
  if (hypotheses.size() != references.size())
    throw ContractError("corpus_bleu: hypothesis/reference count mismatch");
  if (hypotheses.empty()) throw ContractError("corpus_bleu: empty corpus");
  if (max_n < 1) throw ContractError("corpus_bleu: max_n must be >= 1");

  long long hyp_len = 0, ref_len = 0;
  std::vector<long long> matched(static_cast<std::size_t>(max_n), 0);
  std::vector<long long> total(static_cast<std::size_t>(max_n), 0);

  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& hyp = hypotheses[i];
    const auto& ref = references[i];
    hyp_len += static_cast<long long>(hyp.size());
    ref_len += static_cast<long long>(ref.size());
    for (int n = 1; n <= max_n; ++n) {
      NgramCounts hc = ngrams(hyp, n);
      NgramCounts rc = ngrams(ref, n);
      for (const auto& [gram, count] : hc) {
        total[static_cast<std::size_t>(n - 1)] += count;
        auto it = rc.find(gram);
        if (it != rc.end())
          matched[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
      }
    }
  }

  double log_prec = 0.0;
  for (int n = 0; n < max_n; ++n) {
    if (matched[static_cast<std::size_t>(n)] == 0 ||
        total[static_cast<std::size_t>(n)] == 0)
      return 0.0;
    log_prec += std::log(static_cast<double>(matched[static_cast<std::size_t>(n)]) /
                         static_cast<double>(total[static_cast<std::size_t>(n)])) /
                max_n;
  }
  double bp = hyp_len >= ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) /
                                       static_cast<double>(hyp_len));
  if (hyp_len == 0) return 0.0;
  return 100.0 * bp * std::exp(log_prec);
}

int word_edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
  std::vector<int> prev(static_cast<std::size_t>(nb) + 1), cur(prev.size());
  for (int j = 0; j <= nb; ++j) prev[static_cast<std::size_t>(j)] = j;
  for (int i = 1; i <= na; ++i) {
    cur[0] = i;
    for (int j = 1; j <= nb; ++j) {
      int sub = prev[static_cast<std::size_t>(j - 1)] +
                (a[static_cast<std::size_t>(i - 1)] == b[static_cast<std::size_t>(j - 1)] ? 0 : 1);
      cur[static_cast<std::size_t>(j)] =
          std::min({sub, prev[static_cast<std::size_t>(j)] + 1,
                    cur[static_cast<std::size_t>(j - 1)] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[static_cast<std::size_t>(nb)];
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ContractError("pearson: need two equal-length lists of size >= 2");
  double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw NumericError("pearson: zero variance makes the correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

double reconstruction_bleu(const SeqVae& m, const Corpus& corpus,
                           const Vocab& vocab, int max_n) {
  if (corpus.empty()) throw ContractError("reconstruction_bleu: empty corpus");
  Posterior post = encode_corpus(m, corpus);
  int cap = 2 * corpus_max_len(corpus);
  std::vector<std::vector<int>> hyps, refs;
  hyps.reserve(static_cast<std::size_t>(corpus.size()));
  refs.reserve(hyps.capacity());
  for (int i = 0; i < corpus.size(); ++i) {
    Tensor z(1, m.dims.latent);
    for (int d = 0; d < m.dims.latent; ++d) z(0, d) = post.mu(i, d);
    std::vector<int> out = greedy_decode(m, z, cap, vocab.bos(), vocab.eos());
    hyps.push_back(strip_markers(out, vocab));
    refs.push_back(strip_markers(corpus.sentences[static_cast<std::size_t>(i)], vocab));
  }
  return corpus_bleu(hyps, refs, max_n);
}

double smoothness_pcc(const SeqVae& m, const Corpus& corpus, int num_pairs,
                      Rng& rng) {
  if (corpus.size() < 2)
    throw ContractError("smoothness_pcc: need at least two sentences");
  if (num_pairs < 2) throw ContractError("smoothness_pcc: need num_pairs >= 2");
  Posterior post = encode_corpus(m, corpus);

  // Edit distance works on marker-free sentences.
  std::vector<std::vector<int>> bare;
  bare.reserve(static_cast<std::size_t>(corpus.size()));
  Vocab v;  // only the reserved ids matter for stripping
  for (const auto& s : corpus.sentences) bare.push_back(strip_markers(s, v));

  std::vector<double> latent_d(static_cast<std::size_t>(num_pairs));
  std::vector<double> edit_d(static_cast<std::size_t>(num_pairs));
  for (int p = 0; p < num_pairs; ++p) {
    int i = rng.uniform_int(corpus.size());
    int j = rng.uniform_int(corpus.size());
    while (j == i) j = rng.uniform_int(corpus.size());
    double sq = 0.0;
    for (int d = 0; d < m.dims.latent; ++d) {
      double diff = post.mu(i, d) - post.mu(j, d);
      sq += diff * diff;
    }
    latent_d[static_cast<std::size_t>(p)] = std::sqrt(sq);
    edit_d[static_cast<std::size_t>(p)] = word_edit_distance(
        bare[static_cast<std::size_t>(i)], bare[static_cast<std::size_t>(j)]);
  }
  return pearson(latent_d, edit_d);
}

double noisy_reconstruction(const SeqVae& m, const Corpus& corpus, int swaps,
                            Rng& rng) {
  if (corpus.empty()) throw ContractError("noisy_reconstruction: empty corpus");
  if (swaps < 0) throw ContractError("noisy_reconstruction: swaps must be >= 0");

  Batch noisy, clean;
  int skipped = 0;
  for (const auto& sent : corpus.sentences) {
    int words = static_cast<int>(sent.size()) - 2;
    if (swaps >= 1 && words < 2) {
      ++skipped;
      continue;
    }
    std::vector<int> pert = sent;
    for (int s = 0; s < swaps; ++s) {
      int i = rng.uniform_int(words);
      int j = rng.uniform_int(words);
      while (j == i) j = rng.uniform_int(words);
      std::swap(pert[static_cast<std::size_t>(1 + i)],
                pert[static_cast<std::size_t>(1 + j)]);
    }
    noisy.push_back(std::move(pert));
    clean.push_back(sent);
  }
  if (skipped > 0)
    std::cerr << "noisy_reconstruction: skipped " << skipped
              << " sentences shorter than 2 words\n";
  if (clean.empty())
    throw ContractError("noisy_reconstruction: no sentence long enough to swap");

  double total = 0.0;
  const int batch = 64;
  for (std::size_t lo = 0; lo < clean.size(); lo += batch) {
    std::size_t hi = std::min(clean.size(), lo + batch);
    Batch nb(noisy.begin() + static_cast<long>(lo), noisy.begin() + static_cast<long>(hi));
    Batch cb(clean.begin() + static_cast<long>(lo), clean.begin() + static_cast<long>(hi));
    Graph g;
    ModelVars mv = lift_model(g, m, false, false);
    PosteriorVars post = encode_batch(g, m, mv, nb);
    Var nll = decode_nll(g, m, mv, post.mu, cb, false, nullptr);
    total += nll.value().sum();
  }
  return total / static_cast<double>(clean.size());
}

std::vector<std::vector<int>> interpolate(const SeqVae& m, const Tensor& z0,
                                          const Tensor& z1, int steps,
                                          const Vocab& vocab, int max_len) {
  if (steps < 2) throw ContractError("interpolate: steps must be >= 2");
  if (!z0.same_shape(z1) || z0.rows() != 1 || z0.cols() != m.dims.latent)
    throw DimensionError("interpolate: z0/z1 must be 1 x latent");
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    double t = static_cast<double>(s) / (steps - 1);
    Tensor z(1, m.dims.latent);
    for (int d = 0; d < m.dims.latent; ++d)
      z(0, d) = (1.0 - t) * z0(0, d) + t * z1(0, d);
    out.push_back(greedy_decode(m, z, max_len, vocab.bos(), vocab.eos()));
  }
  return out;
}

CopyingReport copying_check(const SeqVae& m, const Corpus& train_corpus,
                            int num_samples, const Vocab& vocab, Rng& rng) {
  if (num_samples < 1) throw ContractError("copying_check: num_samples >= 1");
  if (train_corpus.empty()) throw ContractError("copying_check: empty corpus");

  std::vector<std::vector<int>> bare;
  bare.reserve(static_cast<std::size_t>(train_corpus.size()));
  double len_sum = 0.0;
  for (const auto& s : train_corpus.sentences) {
    bare.push_back(strip_markers(s, vocab));
    len_sum += static_cast<double>(bare.back().size());
  }

  int cap = 2 * corpus_max_len(train_corpus);
  double dist_sum = 0.0;
  for (int s = 0; s < num_samples; ++s) {
    Tensor z(1, m.dims.latent);
    for (int d = 0; d < m.dims.latent; ++d) z(0, d) = rng.normal();
    std::vector<int> decoded =
        strip_markers(greedy_decode(m, z, cap, vocab.bos(), vocab.eos()), vocab);
    int best = word_edit_distance(decoded, bare.front());
    for (std::size_t i = 1; i < bare.size(); ++i)
      best = std::min(best, word_edit_distance(decoded, bare[i]));
    dist_sum += best;
  }

  CopyingReport rep;
  rep.mean_min_edit_distance = dist_sum / num_samples;
  rep.avg_train_sentence_len = len_sum / train_corpus.size();
  return rep;
}

}  // namespace textvae
