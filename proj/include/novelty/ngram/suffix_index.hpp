#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "novelty/ngram/token_sequence.hpp"

namespace novelty::ngram {

/// Result of one unbounded-n-gram backoff query.
struct BackoffResult {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;
  /// Order of the n-gram actually used: 1 + length of the context suffix.
  std::uint32_t effective_n = 1;

  double probability() const noexcept {
    return denominator == 0 ? 0.0
                            : static_cast<double>(numerator) / static_cast<double>(denominator);
  }
};

enum class FloorPolicy {
  /// Zero-probability tokens are floored at 1 / (corpus tokens + 1).
  kEpsilon,
  /// Any zero-probability token makes the perplexity infinite.
  kFlag,
};

enum class HistoryMode {
  /// Condition on the whole available history (backing off as needed).
  kFull,
  /// Condition on the previous token only.
  kBigram,
};

FloorPolicy parse_floor_policy(std::string_view name);
HistoryMode parse_history_mode(std::string_view name);

struct PerplexityOptions {
  FloorPolicy floor = FloorPolicy::kEpsilon;
  HistoryMode history = HistoryMode::kFull;
  /// Tokens preceding the expression in its passage. Empty means the
  /// expression is scored standalone.
  std::span<const TokenId> prefix{};
};

struct PerplexityResult {
  /// +infinity when `infinite` is set.
  double value = 1.0;
  bool infinite = false;
  /// Tokens whose backoff probability was zero.
  std::size_t floored_tokens = 0;
  std::vector<BackoffResult> steps;
};

/// Suffix array over a token sequence. N-grams never span a document
/// boundary: each suffix is compared only up to the end of its document, and
/// suffixes with equal truncated content are ordered by start position.
/// Immutable after build; safe for concurrent readers.
class SuffixIndex {
 public:
  using Position = std::uint32_t;

  /// Throws a build error (kArgument) for an empty sequence.
  static SuffixIndex build(TokenSequence seq, std::string tokenizer = std::string(kDefaultTokenizer));

  const TokenSequence& sequence() const noexcept { return seq_; }
  std::span<const Position> suffix_array() const noexcept { return sa_; }
  const std::string& tokenizer_name() const noexcept { return tokenizer_; }
  std::size_t size() const noexcept { return seq_.tokens.size(); }

  /// One past the last token of the document containing `pos`.
  std::size_t document_end(std::size_t pos) const noexcept;

  /// Maps token strings to ids; unseen strings become kUnknownToken.
  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  /// Tokenizes with the index's own scheme, then encodes.
  std::vector<TokenId> encode_text(std::string_view text) const;

  /// Half-open range of suffix-array rows whose suffix starts with `gram`.
  std::pair<std::size_t, std::size_t> find(std::span<const TokenId> gram) const;
  /// Occurrences of `gram` within documents. Empty gram is an argument error.
  std::uint64_t count(std::span<const TokenId> gram) const;

  /// P(w | context) after backing off to the longest suffix of `context` that
  /// occurs in the corpus. The empty suffix has count equal to the corpus size.
  BackoffResult infty_prob(std::span<const TokenId> context, TokenId w) const;

  /// Geometric-mean inverse of consecutive backoff probabilities.
  PerplexityResult perplexity(std::span<const TokenId> expr,
                              const PerplexityOptions& options = {}) const;

  void save(const std::filesystem::path& path) const;
  static SuffixIndex load(const std::filesystem::path& path);

  static constexpr char kMagic[4] = {'N', 'L', 'I', 'X'};
  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  SuffixIndex() = default;
  // <0, 0, >0 comparing the document-truncated suffix at `pos` with `gram`,
  // where 0 means the suffix starts with `gram`.
  int compare_prefix(Position pos, std::span<const TokenId> gram) const noexcept;

  TokenSequence seq_;
  std::vector<Position> sa_;
  std::string tokenizer_;
};

/// Prefix-doubling construction with two-pass radix sort per round;
/// O(n log L) for longest document length L. Exposed for tests.
std::vector<SuffixIndex::Position> build_suffix_array(std::span<const TokenId> tokens,
                                                      std::span<const std::size_t> doc_boundaries,
                                                      std::size_t alphabet_size);

}  // namespace novelty::ngram
