#include "textvae/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "textvae/errors.hpp"
#include "textvae/rng.hpp"

namespace textvae {
namespace {

std::string word_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%03d", i);
  return buf;
}

SynthSplit gen_split(const SynthParams& p, int count, Rng& rng) {
  SynthSplit split;
  split.sentences.reserve(static_cast<std::size_t>(count));
  split.labels.reserve(static_cast<std::size_t>(count));
  int part = p.vocab_words / p.factors;
  for (int s = 0; s < count; ++s) {
    int factor = rng.uniform_int(p.factors);
    int start = factor * part;
    std::vector<int> kw;
    while (static_cast<int>(kw.size()) < p.keywords) {
      int w = start + rng.uniform_int(part);
      if (std::find(kw.begin(), kw.end(), w) == kw.end()) kw.push_back(w);
    }
    int len = p.min_len + rng.uniform_int(p.max_len - p.min_len + 1);
    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(len));
    int kw_idx = 0;
    int prev = -1;
    for (int t = 0; t < len; ++t) {
      double u = rng.uniform();
      int next;
      if (u < p.p_keyword) {
        next = kw[static_cast<std::size_t>(kw_idx % p.keywords)];
        ++kw_idx;
      } else if (u < p.p_keyword + p.p_successor && prev >= 0) {
        // Factor-specific deterministic walk through the partition.
        int off = prev - start;
        if (off < 0 || off >= part) off = prev % part;
        next = start + (off + 1 + factor) % part;
      } else if (u < p.p_keyword + p.p_successor + p.p_partition || prev < 0) {
        next = start + rng.uniform_int(part);
      } else {
        next = rng.uniform_int(p.vocab_words);
      }
      words.push_back(word_name(next));
      prev = next;
    }
    split.sentences.push_back(std::move(words));
    split.labels.push_back(factor);
  }
  return split;
}

void write_lines(const std::string& path,
                 const std::vector<std::vector<std::string>>& sentences) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out << ' ';
      out << s[i];
    }
    out << '\n';
  }
}

void write_label_file(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (int l : labels) out << l << '\n';
}

}  // namespace

SynthCorpus gen_synthetic(const SynthParams& p, std::uint64_t seed) {
  if (p.vocab_words < 10) throw ConfigError("gen_synthetic: vocab must be >= 10");
  if (p.factors < 1 || p.vocab_words % p.factors != 0)
    throw ConfigError("gen_synthetic: factors must divide the vocab size");
  if (p.min_len < 1 || p.max_len < p.min_len)
    throw ConfigError("gen_synthetic: bad length range");
  if (p.keywords < 1 || p.keywords > p.vocab_words / p.factors)
    throw ConfigError("gen_synthetic: keywords must fit inside one partition");
  if (p.p_keyword < 0 || p.p_successor < 0 || p.p_partition < 0 ||
      p.p_keyword + p.p_successor + p.p_partition > 1.0)
    throw ConfigError("gen_synthetic: emission probabilities must be a simplex");
  if (p.sentences < 1) throw ConfigError("gen_synthetic: need sentences >= 1");

  Rng master(seed);
  Rng train_rng = master.fork(1);
  Rng val_rng = master.fork(2);
  Rng test_rng = master.fork(3);

  SynthCorpus c;
  c.train = gen_split(p, p.sentences, train_rng);
  int n_val = std::max(1, static_cast<int>(std::lround(p.sentences * p.val_frac)));
  int n_test = std::max(1, static_cast<int>(std::lround(p.sentences * p.test_frac)));
  c.valid = gen_split(p, n_val, val_rng);
  c.test = gen_split(p, n_test, test_rng);
  return c;
}

void write_synth_corpus(const std::string& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir);
  write_lines(dir + "/train.txt", corpus.train.sentences);
  write_lines(dir + "/valid.txt", corpus.valid.sentences);
  write_lines(dir + "/test.txt", corpus.test.sentences);
  write_label_file(dir + "/train.labels", corpus.train.labels);
  write_label_file(dir + "/valid.labels", corpus.valid.labels);
  write_label_file(dir + "/test.labels", corpus.test.labels);
}

std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path);
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw FormatError("bad label line: " + line);
    }
  }
  return labels;
}

}  // namespace textvae
