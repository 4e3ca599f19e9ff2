#include "novelty/ngram/token_sequence.hpp"

#include <fstream>

#include "novelty/util/error.hpp"
#include "novelty/util/io.hpp"

namespace novelty::ngram {

TokenId Vocabulary::intern(std::string_view token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  if (strings_.size() >= kUnknownToken) fail(ErrorCode::kArgument, "vocabulary overflow");
  const auto id = static_cast<TokenId>(strings_.size());
  strings_.emplace_back(token);
  ids_.emplace(std::string(token), id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

TokenId Vocabulary::lookup(std::string_view token) const {
  return find(token).value_or(kUnknownToken);
}

const std::string& Vocabulary::text(TokenId id) const {
  if (id >= strings_.size()) fail(ErrorCode::kArgument, "token id out of range");
  return strings_[id];
}

void TokenSequence::validate() const {
  for (TokenId t : tokens) {
    if (t >= vocab.size()) fail(ErrorCode::kFormat, "token id exceeds vocabulary size");
  }
  std::size_t prev = 0;
  for (std::size_t b : doc_boundaries) {
    if (b <= prev) fail(ErrorCode::kFormat, "document boundaries must be strictly increasing");
    prev = b;
  }
  if (!doc_boundaries.empty() && doc_boundaries.back() > tokens.size()) {
    fail(ErrorCode::kFormat, "document boundary beyond token count");
  }
}

CorpusBuilder::CorpusBuilder(std::string_view scheme) : tokenizer_(make_tokenizer(scheme)) {}

void CorpusBuilder::add_document(std::string_view text) {
  const auto spans = tokenizer_->split(text);
  if (spans.empty()) return;
  for (const auto& s : spans) seq_.tokens.push_back(seq_.vocab.intern(s.text));
  seq_.doc_boundaries.push_back(seq_.tokens.size());
}

TokenSequence CorpusBuilder::take() && { return std::move(seq_); }

TokenSequence tokenize(std::string_view text, std::string_view scheme) {
  CorpusBuilder builder(scheme);
  builder.add_document(text);
  return std::move(builder).take();
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "auto") return CorpusFormat::kAuto;
  if (name == "lines") return CorpusFormat::kLines;
  if (name == "records" || name == "jsonl") return CorpusFormat::kRecords;
  fail(ErrorCode::kConfig, "unknown corpus format '" + std::string(name) + "'", "format");
}

TokenSequence read_corpus(const std::filesystem::path& path, std::string_view scheme,
                          CorpusFormat format) {
  if (format == CorpusFormat::kAuto) {
    const auto ext = path.extension().string();
    format = (ext == ".jsonl" || ext == ".ndjson") ? CorpusFormat::kRecords : CorpusFormat::kLines;
  }
  CorpusBuilder builder(scheme);
  if (format == CorpusFormat::kRecords) {
    for (const auto& rec : io::read_jsonl(path)) builder.add_document(io::require_string(rec, "text"));
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open corpus " + path.string(), "corpus");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      builder.add_document(line);
    }
  }
  return std::move(builder).take();
}

}  // namespace novelty::ngram
