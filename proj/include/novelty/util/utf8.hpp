#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace novelty::utf8 {

/// One decoded code point and the byte range it occupies.
struct CodePoint {
  char32_t value;
  std::size_t begin;
  std::size_t end;
};

bool is_valid(std::string_view text) noexcept;

/// Decodes UTF-8. Malformed sequences decode to U+FFFD, one byte at a time.
std::vector<CodePoint> decode(std::string_view text);
std::u32string to_u32(std::string_view text);
std::string encode(char32_t cp);
std::string encode(std::u32string_view text);

bool is_space(char32_t cp) noexcept;
/// ASCII punctuation plus the Latin-1, General Punctuation and CJK
/// punctuation ranges.
bool is_punct(char32_t cp) noexcept;
/// Anything that is neither space, punctuation nor a control character.
bool is_word(char32_t cp) noexcept;
bool is_digit(char32_t cp) noexcept;
bool is_upper(char32_t cp) noexcept;

/// Simple one-to-one lowercase mapping for ASCII, Latin-1, Latin Extended-A,
/// Greek and Cyrillic. Other code points map to themselves.
char32_t fold_case(char32_t cp) noexcept;
std::string fold_case(std::string_view text);

std::string_view trim(std::string_view text) noexcept;

}  // namespace novelty::utf8
