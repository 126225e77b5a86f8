#include "textvae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "textvae/errors.hpp"
#include "textvae/fsio.hpp"

namespace textvae {
namespace {

constexpr char kMagic[8] = {'T', 'V', 'A', 'E', 'C', 'K', 'P', 'T'};
constexpr char kFooter[8] = {'T', 'V', 'A', 'E', 'E', 'N', 'D', '.'};

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& b, const std::string& s) {
  put_u32(b, static_cast<std::uint32_t>(s.size()));
  b.append(s);
}

void put_tensor(std::string& b, const Tensor& t) {
  put_u32(b, static_cast<std::uint32_t>(t.rows()));
  put_u32(b, static_cast<std::uint32_t>(t.cols()));
  for (double v : t.storage()) put_f64(b, v);
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}

  void expect_bytes(const char* want, int n, const std::string& what) {
    need(static_cast<std::size_t>(n));
    if (std::memcmp(buf_.data() + pos_, want, static_cast<std::size_t>(n)) != 0)
      throw FormatError("checkpoint: bad " + what);
    pos_ += static_cast<std::size_t>(n);
  }

  std::uint32_t get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t get_u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  double get_f64() { return std::bit_cast<double>(get_u64()); }

  std::string get_str() {
    std::uint32_t n = get_u32();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError("checkpoint: truncated file");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

std::uint64_t vocab_fingerprint(const Vocab& vocab) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& w : vocab.words()) {
    for (char c : w) mix(static_cast<unsigned char>(c));
    mix('\n');
  }
  return h;
}

void save_checkpoint(const std::string& path, const SeqVae& model,
                     const Vocab& vocab, const CheckpointMeta& meta) {
  if (meta.epoch < 0)
    throw ContractError("save_checkpoint: negative epoch");
  if (vocab.size() != model.dims.vocab)
    throw ContractError("save_checkpoint: vocab size " +
                        std::to_string(vocab.size()) +
                        " does not match model vocab dim " +
                        std::to_string(model.dims.vocab));
  std::string b;
  b.append(kMagic, sizeof(kMagic));
  put_u32(b, kCheckpointVersion);
  put_u32(b, static_cast<std::uint32_t>(model.dims.vocab));
  put_u32(b, static_cast<std::uint32_t>(model.dims.embed));
  put_u32(b, static_cast<std::uint32_t>(model.dims.hidden));
  put_u32(b, static_cast<std::uint32_t>(model.dims.latent));
  put_f64(b, model.dropout);
  put_str(b, meta.recipe);
  put_u32(b, static_cast<std::uint32_t>(meta.epoch));
  for (std::uint64_t s : meta.rng_state) put_u64(b, s);
  put_u64(b, vocab_fingerprint(vocab));
  put_u32(b, static_cast<std::uint32_t>(vocab.words().size()));
  for (const auto& w : vocab.words()) put_str(b, w);
  for (const Tensor* t : encoder_tensors(model)) put_tensor(b, *t);
  for (const Tensor* t : decoder_tensors(model)) put_tensor(b, *t);
  b.append(kFooter, sizeof(kFooter));
  write_file_atomic(path, b);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::string buf = read_file(path);
  Reader r(buf);
  r.expect_bytes(kMagic, sizeof(kMagic), "magic");
  std::uint32_t version = r.get_u32();
  if (version != kCheckpointVersion)
    throw CompatibilityError("checkpoint format version " +
                             std::to_string(version) + ", this build reads " +
                             std::to_string(kCheckpointVersion));
  ModelDims dims;
  dims.vocab = static_cast<int>(r.get_u32());
  dims.embed = static_cast<int>(r.get_u32());
  dims.hidden = static_cast<int>(r.get_u32());
  dims.latent = static_cast<int>(r.get_u32());
  if (dims.vocab <= 0 || dims.embed <= 0 || dims.hidden <= 0 || dims.latent <= 0)
    throw FormatError("checkpoint: nonpositive model dimension");
  double dropout = r.get_f64();

  CheckpointMeta meta;
  meta.version = version;
  meta.recipe = r.get_str();
  meta.epoch = static_cast<int>(r.get_u32());
  for (auto& s : meta.rng_state) s = r.get_u64();
  meta.vocab_hash = r.get_u64();

  std::uint32_t nwords = r.get_u32();
  std::vector<std::string> words;
  words.reserve(nwords);
  for (std::uint32_t i = 0; i < nwords; ++i) words.push_back(r.get_str());
  Vocab vocab = Vocab::from_words(words);
  if (vocab_fingerprint(vocab) != meta.vocab_hash)
    throw FormatError("checkpoint: embedded vocabulary does not match its hash");
  if (vocab.size() != dims.vocab)
    throw FormatError("checkpoint: vocabulary size " +
                      std::to_string(vocab.size()) +
                      " does not match model vocab dim " +
                      std::to_string(dims.vocab));

  Rng scratch(0);
  SeqVae model = init_model(dims, scratch);
  model.dropout = dropout;
  auto read_into = [&](Tensor* t) {
    int rows = static_cast<int>(r.get_u32());
    int cols = static_cast<int>(r.get_u32());
    if (rows != t->rows() || cols != t->cols())
      throw FormatError("checkpoint: tensor shape " + std::to_string(rows) +
                        "x" + std::to_string(cols) + ", expected " +
                        std::to_string(t->rows()) + "x" +
                        std::to_string(t->cols()));
    for (double& v : t->storage()) v = r.get_f64();
  };
  for (Tensor* t : encoder_tensors(model)) read_into(t);
  for (Tensor* t : decoder_tensors(model)) read_into(t);
  r.expect_bytes(kFooter, sizeof(kFooter), "footer");
  if (!r.exhausted()) throw FormatError("checkpoint: trailing bytes");
  return {std::move(model), std::move(vocab), std::move(meta)};
}

void require_vocab_match(const CheckpointMeta& meta, const Vocab& vocab) {
  std::uint64_t have = vocab_fingerprint(vocab);
  if (have != meta.vocab_hash)
    throw CompatibilityError(
        "vocabulary mismatch: checkpoint was saved with vocabulary " +
        hex(meta.vocab_hash) + ", supplied vocabulary is " + hex(have));
}

}  // namespace textvae
