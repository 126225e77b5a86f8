#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "textvae/corpus.hpp"
#include "textvae/model.hpp"

namespace textvae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint32_t version = kCheckpointVersion;
  std::string recipe;
  int epoch = 0;
  std::array<std::uint64_t, 4> rng_state{};
  std::uint64_t vocab_hash = 0;  // filled on save from the embedded vocab
};

// FNV-1a over the word list; identifies the vocabulary a model was trained on.
std::uint64_t vocab_fingerprint(const Vocab& vocab);

// Binary format, little-endian: magic, version, model dims, dropout, recipe,
// epoch, RNG state, vocab hash + word list, then every parameter tensor in
// declared encoder/decoder order (rows, cols, row-major doubles), and a footer
// magic so truncation is detectable. Written to a temp file and renamed.
void save_checkpoint(const std::string& path, const SeqVae& model,
                     const Vocab& vocab, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  SeqVae model;
  Vocab vocab;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Throws CompatibilityError naming both fingerprints when `vocab` is not the
// vocabulary the checkpoint was saved with.
void require_vocab_match(const CheckpointMeta& meta, const Vocab& vocab);

}  // namespace textvae
