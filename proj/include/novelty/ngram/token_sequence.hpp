#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "novelty/ngram/tokenizer.hpp"

namespace novelty::ngram {

using TokenId = std::uint32_t;

/// Id used for query tokens that do not occur in the corpus vocabulary.
/// It never matches an indexed token.
inline constexpr TokenId kUnknownToken = std::numeric_limits<TokenId>::max();

/// Bidirectional token-string <-> id map. Ids are assigned in first-seen order.
class Vocabulary {
 public:
  TokenId intern(std::string_view token);
  std::optional<TokenId> find(std::string_view token) const;
  /// kUnknownToken when absent.
  TokenId lookup(std::string_view token) const;
  const std::string& text(TokenId id) const;
  std::size_t size() const noexcept { return strings_.size(); }
  const std::vector<std::string>& strings() const noexcept { return strings_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> strings_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> ids_;
};

/// Concatenated documents. `doc_boundaries[d]` is the position one past the
/// last token of document d, so boundaries are strictly increasing and the
/// last equals tokens.size().
struct TokenSequence {
  std::vector<TokenId> tokens;
  Vocabulary vocab;
  std::vector<std::size_t> doc_boundaries;

  std::size_t size() const noexcept { return tokens.size(); }
  /// Throws a format error naming the violated invariant.
  void validate() const;
};

/// Accumulates documents into a TokenSequence with a fixed tokenizer.
class CorpusBuilder {
 public:
  explicit CorpusBuilder(std::string_view scheme = kDefaultTokenizer);

  /// Empty documents (no tokens) are skipped.
  void add_document(std::string_view text);
  const Tokenizer& tokenizer() const noexcept { return *tokenizer_; }
  TokenSequence take() &&;

 private:
  std::unique_ptr<Tokenizer> tokenizer_;
  TokenSequence seq_;
};

/// Tokenizes a single document.
TokenSequence tokenize(std::string_view text, std::string_view scheme = kDefaultTokenizer);

enum class CorpusFormat { kAuto, kLines, kRecords };

CorpusFormat parse_corpus_format(std::string_view name);

/// Reads one document per line, or line-delimited {doc_id, text} records.
/// kAuto picks records for .jsonl/.ndjson files.
TokenSequence read_corpus(const std::filesystem::path& path, std::string_view scheme,
                          CorpusFormat format = CorpusFormat::kAuto);

}  // namespace novelty::ngram
