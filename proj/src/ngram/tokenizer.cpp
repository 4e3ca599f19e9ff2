#include "novelty/ngram/tokenizer.hpp"

#include "novelty/util/error.hpp"
#include "novelty/util/utf8.hpp"

namespace novelty::ngram {
namespace {

void require_valid(std::string_view text) {
  if (!utf8::is_valid(text)) fail(ErrorCode::kArgument, "text is not valid UTF-8", "text");
}

class PunctTokenizer final : public Tokenizer {
 public:
  PunctTokenizer(std::string_view name, bool split_punct, bool lower)
      : name_(name), split_punct_(split_punct), lower_(lower) {}

  std::string_view name() const noexcept override { return name_; }

  std::vector<TokenSpan> split(std::string_view text) const override {
    require_valid(text);
    std::vector<TokenSpan> out;
    const auto cps = utf8::decode(text);
    std::size_t i = 0;
    auto emit = [&](std::size_t begin, std::size_t end) {
      std::string tok(text.substr(begin, end - begin));
      if (lower_) tok = utf8::fold_case(tok);
      out.push_back({std::move(tok), begin, end});
    };
    while (i < cps.size()) {
      const char32_t c = cps[i].value;
      if (utf8::is_space(c) || (!utf8::is_word(c) && !utf8::is_punct(c))) {
        ++i;
        continue;
      }
      if (split_punct_ && utf8::is_punct(c)) {
        emit(cps[i].begin, cps[i].end);
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < cps.size() && !utf8::is_space(cps[j].value) &&
             (utf8::is_word(cps[j].value) || (!split_punct_ && utf8::is_punct(cps[j].value)))) {
        ++j;
      }
      emit(cps[i].begin, cps[j - 1].end);
      i = j;
    }
    return out;
  }

 private:
  std::string name_;
  bool split_punct_;
  bool lower_;
};

class CharTokenizer final : public Tokenizer {
 public:
  std::string_view name() const noexcept override { return "char"; }

  std::vector<TokenSpan> split(std::string_view text) const override {
    require_valid(text);
    std::vector<TokenSpan> out;
    for (const auto& cp : utf8::decode(text)) {
      if (utf8::is_space(cp.value)) continue;
      out.push_back({std::string(text.substr(cp.begin, cp.end - cp.begin)), cp.begin, cp.end});
    }
    return out;
  }
};

}  // namespace

std::vector<std::string> Tokenizer::tokens(std::string_view text) const {
  std::vector<std::string> out;
  for (auto& span : split(text)) out.push_back(std::move(span.text));
  return out;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view scheme) {
  if (scheme == "whitespace_punct" || scheme == "default") {
    return std::make_unique<PunctTokenizer>("whitespace_punct", true, false);
  }
  if (scheme == "lower_punct") return std::make_unique<PunctTokenizer>("lower_punct", true, true);
  if (scheme == "whitespace") return std::make_unique<PunctTokenizer>("whitespace", false, false);
  if (scheme == "char") return std::make_unique<CharTokenizer>();
  fail(ErrorCode::kConfig, "unknown tokenizer scheme '" + std::string(scheme) + "'", "tokenizer");
}

std::vector<std::string> tokenizer_names() {
  return {"whitespace_punct", "lower_punct", "whitespace", "char"};
}

bool is_word_token(std::string_view token) {
  for (const auto& cp : utf8::decode(token)) {
    if (utf8::is_word(cp.value)) return true;
  }
  return false;
}

std::size_t count_word_tokens(const std::vector<TokenSpan>& tokens) {
  std::size_t n = 0;
  for (const auto& t : tokens) n += is_word_token(t.text) ? 1 : 0;
  return n;
}

}  // namespace novelty::ngram
