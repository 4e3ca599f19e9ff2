#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace novelty::ngram {

/// A token and the byte range of the source text it came from.
struct TokenSpan {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string_view name() const noexcept = 0;
  /// Splits valid UTF-8 text. Throws an argument error on malformed input.
  virtual std::vector<TokenSpan> split(std::string_view text) const = 0;

  std::vector<std::string> tokens(std::string_view text) const;
};

inline constexpr std::string_view kDefaultTokenizer = "whitespace_punct";

/// Known schemes:
///   whitespace_punct  whitespace-separated words, every punctuation mark its
///                     own token (default; case preserved)
///   lower_punct       whitespace_punct, case-folded
///   whitespace        whitespace only
///   char              one token per non-space code point
/// "default" is an alias for whitespace_punct. Unknown names raise a config error.
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view scheme);
std::vector<std::string> tokenizer_names();

/// Word tokens are tokens containing at least one letter or digit.
bool is_word_token(std::string_view token);
std::size_t count_word_tokens(const std::vector<TokenSpan>& tokens);

}  // namespace novelty::ngram
