// Binary index layout, all integers little-endian:
//   "NLIX" | u32 version | u64 vocab size | u64 token count
//   u64 document count | u32 tokenizer-name length | name bytes
//   vocab: (u32 length | bytes) per entry
//   u32 tokens[token count]
//   u64 document boundaries[document count]
//   u32 suffix array[token count]
//   u64 FNV-1a checksum of everything above

#include <array>
#include <cstring>
#include <fstream>

#include "novelty/ngram/suffix_index.hpp"
#include "novelty/util/error.hpp"

namespace novelty::ngram {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) hash_ = (hash_ ^ p[i]) * kFnvPrime;
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void uint(T v) {
    std::array<unsigned char, sizeof(T)> buf{};
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf.data(), buf.size());
  }
  std::uint64_t hash() const noexcept { return hash_; }

 private:
  std::ofstream& out_;
  std::uint64_t hash_ = kFnvOffset;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail(ErrorCode::kFormat, origin_ + ": truncated index file");
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) hash_ = (hash_ ^ p[i]) * kFnvPrime;
  }
  template <typename T>
  T uint() {
    std::array<unsigned char, sizeof(T)> buf{};
    bytes(buf.data(), buf.size());
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
  }
  std::uint64_t hash() const noexcept { return hash_; }
  const std::string& origin() const noexcept { return origin_; }

 private:
  std::ifstream& in_;
  std::string origin_;
  std::uint64_t hash_ = kFnvOffset;
};

}  // namespace

void SuffixIndex::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write index " + path.string(), "out");
  Writer w(out);
  w.bytes(kMagic, sizeof(kMagic));
  w.uint<std::uint32_t>(kFormatVersion);
  w.uint<std::uint64_t>(seq_.vocab.size());
  w.uint<std::uint64_t>(seq_.tokens.size());
  w.uint<std::uint64_t>(seq_.doc_boundaries.size());
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(tokenizer_.size()));
  w.bytes(tokenizer_.data(), tokenizer_.size());
  for (const auto& s : seq_.vocab.strings()) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    w.bytes(s.data(), s.size());
  }
  for (TokenId t : seq_.tokens) w.uint<std::uint32_t>(t);
  for (std::size_t b : seq_.doc_boundaries) w.uint<std::uint64_t>(b);
  for (Position p : sa_) w.uint<std::uint32_t>(p);
  const std::uint64_t checksum = w.hash();
  w.uint<std::uint64_t>(checksum);
  if (!out) fail(ErrorCode::kIo, "failed writing index " + path.string(), "out");
}

SuffixIndex SuffixIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open index " + path.string(), "index");
  Reader r(in, path.string());

  char magic[4];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::kFormat, r.origin() + ": not an index file (bad magic)");
  }
  const auto version = r.uint<std::uint32_t>();
  if (version != kFormatVersion) {
    fail(ErrorCode::kFormat, r.origin() + ": unsupported index version " + std::to_string(version));
  }
  const auto vocab_size = r.uint<std::uint64_t>();
  const auto token_count = r.uint<std::uint64_t>();
  const auto doc_count = r.uint<std::uint64_t>();
  if (token_count == 0 || token_count >= std::numeric_limits<Position>::max() ||
      vocab_size > token_count || doc_count > token_count) {
    fail(ErrorCode::kFormat, r.origin() + ": inconsistent index header");
  }
  const auto name_len = r.uint<std::uint32_t>();
  if (name_len > 256) fail(ErrorCode::kFormat, r.origin() + ": bad tokenizer name");

  SuffixIndex index;
  index.tokenizer_.resize(name_len);
  r.bytes(index.tokenizer_.data(), name_len);

  std::string buf;
  for (std::uint64_t i = 0; i < vocab_size; ++i) {
    const auto len = r.uint<std::uint32_t>();
    if (len > (1u << 20)) fail(ErrorCode::kFormat, r.origin() + ": oversized vocabulary entry");
    buf.resize(len);
    r.bytes(buf.data(), len);
    if (index.seq_.vocab.intern(buf) != i) fail(ErrorCode::kFormat, r.origin() + ": duplicate vocabulary entry");
  }
  index.seq_.tokens.resize(token_count);
  for (auto& t : index.seq_.tokens) t = r.uint<std::uint32_t>();
  index.seq_.doc_boundaries.resize(doc_count);
  for (auto& b : index.seq_.doc_boundaries) b = r.uint<std::uint64_t>();
  index.sa_.resize(token_count);
  for (auto& p : index.sa_) p = r.uint<std::uint32_t>();
  const std::uint64_t expected = r.hash();
  const auto stored = r.uint<std::uint64_t>();
  if (stored != expected) fail(ErrorCode::kFormat, r.origin() + ": checksum mismatch");

  index.seq_.validate();
  std::vector<bool> seen(token_count, false);
  for (Position p : index.sa_) {
    if (p >= token_count || seen[p]) fail(ErrorCode::kFormat, r.origin() + ": suffix array is not a permutation");
    seen[p] = true;
  }
  return index;
}

}  // namespace novelty::ngram
