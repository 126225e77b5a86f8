#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace textvae {

// Latent-factor keyword generator. Each sentence draws a discrete factor that
// owns a vocabulary partition plus a set of salient keywords from that
// partition, then interleaves keyword emissions (round-robin, so they recur)
// with a factor-specific successor walk, uniform partition draws, and rare
// global noise. The keyword set is sentence-level state a left-to-right
// model cannot read off a short prefix, so a latent code has real work to
// do; the factor is emitted as a parallel label file.
struct SynthParams {
  int vocab_words = 100;  // content words; reserved markers excluded
  int sentences = 5000;   // training split size
  int min_len = 8;
  int max_len = 16;
  int factors = 2;
  int keywords = 3;           // salient words drawn per sentence
  double p_keyword = 0.50;    // emit the next keyword (round-robin)
  double p_successor = 0.35;  // deterministic factor-specific walk step
  double p_partition = 0.10;  // uniform partition draw; remainder is global
  double val_frac = 0.1;      // extra sentences generated per split
  double test_frac = 0.1;
};

struct SynthSplit {
  std::vector<std::vector<std::string>> sentences;
  std::vector<int> labels;
};

struct SynthCorpus {
  SynthSplit train;
  SynthSplit valid;
  SynthSplit test;
};

SynthCorpus gen_synthetic(const SynthParams& params, std::uint64_t seed);

// Writes <dir>/{train,valid,test}.txt and parallel .labels files.
void write_synth_corpus(const std::string& dir, const SynthCorpus& corpus);

std::vector<int> read_labels(const std::string& path);

}  // namespace textvae
