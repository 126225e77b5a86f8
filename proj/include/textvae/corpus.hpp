#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace textvae {

// Word-level vocabulary. Reserved ids: <pad>=0, <s>=1, </s>=2, <unk>=3;
// corpus words follow in first-seen order.
class Vocab {
 public:
  static constexpr const char* kPad = "<pad>";
  static constexpr const char* kBos = "<s>";
  static constexpr const char* kEos = "</s>";
  static constexpr const char* kUnk = "<unk>";

  Vocab();
  static Vocab build(const std::vector<std::vector<std::string>>& sentences,
                     int min_count = 1);
  // Rebuild from a stored word list; the first four entries must be the
  // reserved tokens in id order.
  static Vocab from_words(const std::vector<std::string>& words);

  int size() const { return static_cast<int>(words_.size()); }
  int pad() const { return 0; }
  int bos() const { return 1; }
  int eos() const { return 2; }
  int unk() const { return 3; }
  // Unknown words map to unk().
  int id(const std::string& word) const;
  const std::string& word(int id) const;
  const std::vector<std::string>& words() const { return words_; }

 private:
  int add(const std::string& word);
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Sentences as id sequences, each wrapped as <s> w1 ... wn </s>.
struct Corpus {
  std::vector<std::vector<int>> sentences;
  bool empty() const { return sentences.empty(); }
  int size() const { return static_cast<int>(sentences.size()); }
  // Prediction targets per sentence = length - 1 (everything after <s>,
  // including </s>); summed over the corpus. Perplexity normalizes by this.
  long long predicted_tokens() const;
};

// One sentence per line, whitespace-tokenized. Blank lines are skipped.
std::vector<std::vector<std::string>> read_tokenized_lines(const std::string& path);

struct CorpusSpec {
  std::string train;
  std::string valid;
  std::string test;  // optional; empty path -> empty split
  int min_count = 1;
};

struct LoadedCorpus {
  Vocab vocab;  // built from the train split only
  Corpus train;
  Corpus valid;
  Corpus test;
};

LoadedCorpus load_corpus(const CorpusSpec& spec);

Corpus encode_corpus(const std::vector<std::vector<std::string>>& sentences,
                     const Vocab& vocab);

// Restores the surface form (markers stripped).
std::vector<std::string> decode_sentence(const std::vector<int>& ids,
                                         const Vocab& vocab);

std::string join_words(const std::vector<std::string>& words);

}  // namespace textvae
