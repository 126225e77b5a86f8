#include "textvae/corpus.hpp"

#include <fstream>
#include <sstream>

#include "textvae/errors.hpp"

namespace textvae {

Vocab::Vocab() {
  add(kPad);
  add(kBos);
  add(kEos);
  add(kUnk);
}

int Vocab::add(const std::string& word) {
  auto [it, inserted] = index_.emplace(word, static_cast<int>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& sentences,
                   int min_count) {
  if (min_count < 1) throw ConfigError("Vocab::build: min_count must be >= 1");
  Vocab v;
  if (min_count == 1) {
    for (const auto& s : sentences)
      for (const auto& w : s) v.add(w);
    return v;
  }
  std::unordered_map<std::string, int> counts;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[w];
  for (const auto& s : sentences)
    for (const auto& w : s)
      if (counts[w] >= min_count) v.add(w);
  return v;
}

Vocab Vocab::from_words(const std::vector<std::string>& words) {
  if (words.size() < 4 || words[0] != kPad || words[1] != kBos ||
      words[2] != kEos || words[3] != kUnk)
    throw FormatError("vocabulary word list must start with the reserved tokens");
  Vocab v;
  for (std::size_t i = 4; i < words.size(); ++i) {
    int before = v.size();
    if (v.add(words[i]) != before)
      throw FormatError("duplicate word in vocabulary list: " + words[i]);
  }
  return v;
}

int Vocab::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? unk() : it->second;
}

const std::string& Vocab::word(int id) const {
  if (id < 0 || id >= size())
    throw ContractError("Vocab::word: id " + std::to_string(id) +
                        " outside vocabulary of " + std::to_string(size()));
  return words_[static_cast<std::size_t>(id)];
}

long long Corpus::predicted_tokens() const {
  long long n = 0;
  for (const auto& s : sentences) n += static_cast<long long>(s.size()) - 1;
  return n;
}

std::vector<std::vector<std::string>> read_tokenized_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> words;
    std::string w;
    while (ls >> w) words.push_back(w);
    if (!words.empty()) out.push_back(std::move(words));
  }
  return out;
}

LoadedCorpus load_corpus(const CorpusSpec& spec) {
  auto train_words = read_tokenized_lines(spec.train);
  if (train_words.empty())
    throw ContractError("load_corpus: empty train split: " + spec.train);
  LoadedCorpus lc;
  lc.vocab = Vocab::build(train_words, spec.min_count);
  lc.train = encode_corpus(train_words, lc.vocab);
  if (!spec.valid.empty())
    lc.valid = encode_corpus(read_tokenized_lines(spec.valid), lc.vocab);
  if (!spec.test.empty())
    lc.test = encode_corpus(read_tokenized_lines(spec.test), lc.vocab);
  return lc;
}

Corpus encode_corpus(const std::vector<std::vector<std::string>>& sentences,
                     const Vocab& vocab) {
  Corpus c;
  c.sentences.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<int> ids;
    ids.reserve(s.size() + 2);
    ids.push_back(vocab.bos());
    for (const auto& w : s) ids.push_back(vocab.id(w));
    ids.push_back(vocab.eos());
    c.sentences.push_back(std::move(ids));
  }
  return c;
}

std::vector<std::string> decode_sentence(const std::vector<int>& ids,
                                         const Vocab& vocab) {
  std::vector<std::string> words;
  for (int id : ids) {
    if (id == vocab.bos() || id == vocab.eos() || id == vocab.pad()) continue;
    words.push_back(vocab.word(id));
  }
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace textvae
