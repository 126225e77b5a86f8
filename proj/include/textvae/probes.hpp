#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "textvae/corpus.hpp"
#include "textvae/estimators.hpp"
#include "textvae/model.hpp"

namespace textvae {

struct ProbeReport {
  double bleu = 0.0;  // percent
  double pcc = 0.0;
  std::map<int, double> noisy_recon;  // swap count -> nats per sentence
  double copy_edit_distance = 0.0;    // mean over prior samples
  double avg_train_sentence_len = 0.0;
};

// Corpus-level BLEU with clipped counts and brevity penalty, uniform weights
// over 1..max_n grams, no smoothing (any zero n-gram precision gives 0).
// Sequences are marker-free token id lists. Returns percent.
double corpus_bleu(const std::vector<std::vector<int>>& hypotheses,
                   const std::vector<std::vector<int>>& references,
                   int max_n = 4);

int word_edit_distance(const std::vector<int>& a, const std::vector<int>& b);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// encode (posterior mean) -> greedy decode -> BLEU against the original.
double reconstruction_bleu(const SeqVae& m, const Corpus& corpus,
                           const Vocab& vocab, int max_n = 4);

// Pearson correlation between pairwise latent L2 distances and word edit
// distances over sampled sentence pairs.
double smoothness_pcc(const SeqVae& m, const Corpus& corpus, int num_pairs,
                      Rng& rng);

// Encode a k-swap corrupted sentence, then score the CLEAN sentence from that
// code; mean nats over sentences long enough to corrupt.
double noisy_reconstruction(const SeqVae& m, const Corpus& corpus, int swaps,
                            Rng& rng);

// Greedy decodes along the straight line from z0 to z1 (inclusive endpoints).
std::vector<std::vector<int>> interpolate(const SeqVae& m, const Tensor& z0,
                                          const Tensor& z1, int steps,
                                          const Vocab& vocab, int max_len);

struct CopyingReport {
  double mean_min_edit_distance = 0.0;
  double avg_train_sentence_len = 0.0;
};

// Decodes prior samples and reports how far (word edit distance) each lands
// from its nearest training sentence; a memorizing model scores near 0.
CopyingReport copying_check(const SeqVae& m, const Corpus& train_corpus,
                            int num_samples, const Vocab& vocab, Rng& rng);

}  // namespace textvae
