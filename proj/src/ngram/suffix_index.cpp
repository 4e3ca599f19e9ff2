#include "novelty/ngram/suffix_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "novelty/util/error.hpp"

namespace novelty::ngram {

FloorPolicy parse_floor_policy(std::string_view name) {
  if (name == "epsilon") return FloorPolicy::kEpsilon;
  if (name == "flag") return FloorPolicy::kFlag;
  fail(ErrorCode::kConfig, "unknown floor policy '" + std::string(name) + "'", "floor");
}

HistoryMode parse_history_mode(std::string_view name) {
  if (name == "full") return HistoryMode::kFull;
  if (name == "bigram") return HistoryMode::kBigram;
  fail(ErrorCode::kConfig, "unknown history mode '" + std::string(name) + "'", "history");
}

std::vector<SuffixIndex::Position> build_suffix_array(std::span<const TokenId> tokens,
                                                      std::span<const std::size_t> doc_boundaries,
                                                      std::size_t alphabet_size) {
  using Position = SuffixIndex::Position;
  const std::size_t n = tokens.size();
  if (n == 0) return {};
  if (n >= std::numeric_limits<Position>::max()) {
    fail(ErrorCode::kArgument, "corpus too large for 32-bit positions");
  }

  std::vector<Position> doc_end(n);
  std::size_t longest = 0;
  {
    std::size_t start = 0;
    auto fill_doc = [&](std::size_t end) {
      for (std::size_t p = start; p < end; ++p) doc_end[p] = static_cast<Position>(end);
      longest = std::max(longest, end - start);
      start = end;
    };
    for (std::size_t b : doc_boundaries) {
      if (b > start && b <= n) fill_doc(b);
    }
    if (start < n) fill_doc(n);
  }

  std::vector<Position> sa(n);
  std::vector<Position> rank(n);
  std::vector<Position> tmp(n);
  std::vector<Position> key2(n);
  std::vector<Position> bucket;

  // Stable counting sort of `in` by `key` (values < buckets) into `out`.
  auto counting_sort = [&](const std::vector<Position>& in, const std::vector<Position>& key,
                           std::size_t buckets, std::vector<Position>& out) {
    bucket.assign(buckets + 1, 0);
    for (Position p : in) ++bucket[key[p] + 1];
    for (std::size_t i = 1; i <= buckets; ++i) bucket[i] += bucket[i - 1];
    for (Position p : in) out[bucket[key[p]]++] = p;
  };

  std::vector<Position> identity(n);
  for (std::size_t i = 0; i < n; ++i) identity[i] = static_cast<Position>(i);

  std::vector<Position> token_key(tokens.begin(), tokens.end());
  counting_sort(identity, token_key, alphabet_size, sa);
  std::size_t classes = 1;
  rank[sa[0]] = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (tokens[sa[i]] != tokens[sa[i - 1]]) ++classes;
    rank[sa[i]] = static_cast<Position>(classes - 1);
  }

  for (std::size_t k = 1; classes < n && k < longest; k *= 2) {
    for (std::size_t p = 0; p < n; ++p) {
      key2[p] = (p + k < doc_end[p]) ? rank[p + k] + 1 : 0;
    }
    // Identity order first so equal keys end up ordered by position.
    counting_sort(identity, key2, classes + 1, tmp);
    counting_sort(tmp, rank, classes, sa);
    std::vector<Position>& next = tmp;
    classes = 1;
    next[sa[0]] = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (rank[sa[i]] != rank[sa[i - 1]] || key2[sa[i]] != key2[sa[i - 1]]) ++classes;
      next[sa[i]] = static_cast<Position>(classes - 1);
    }
    std::swap(rank, tmp);
  }
  return sa;
}

SuffixIndex SuffixIndex::build(TokenSequence seq, std::string tokenizer) {
  if (seq.tokens.empty()) fail(ErrorCode::kArgument, "cannot build an index over an empty corpus", "corpus");
  seq.validate();
  if (seq.doc_boundaries.empty() || seq.doc_boundaries.back() < seq.tokens.size()) {
    seq.doc_boundaries.push_back(seq.tokens.size());
  }
  SuffixIndex index;
  index.sa_ = build_suffix_array(seq.tokens, seq.doc_boundaries, seq.vocab.size());
  index.seq_ = std::move(seq);
  index.tokenizer_ = std::move(tokenizer);
  return index;
}

std::size_t SuffixIndex::document_end(std::size_t pos) const noexcept {
  const auto& b = seq_.doc_boundaries;
  auto it = std::upper_bound(b.begin(), b.end(), pos);
  return it == b.end() ? seq_.tokens.size() : *it;
}

std::vector<TokenId> SuffixIndex::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(seq_.vocab.lookup(t));
  return out;
}

std::vector<TokenId> SuffixIndex::encode_text(std::string_view text) const {
  const auto tok = make_tokenizer(tokenizer_);
  const auto strings = tok->tokens(text);
  return encode(strings);
}

int SuffixIndex::compare_prefix(Position pos, std::span<const TokenId> gram) const noexcept {
  const std::size_t len = document_end(pos) - pos;
  const std::size_t m = std::min(len, gram.size());
  const TokenId* s = seq_.tokens.data() + pos;
  for (std::size_t i = 0; i < m; ++i) {
    if (s[i] != gram[i]) return s[i] < gram[i] ? -1 : 1;
  }
  return len >= gram.size() ? 0 : -1;
}

std::pair<std::size_t, std::size_t> SuffixIndex::find(std::span<const TokenId> gram) const {
  auto lo = std::partition_point(sa_.begin(), sa_.end(),
                                 [&](Position p) { return compare_prefix(p, gram) < 0; });
  auto hi = std::partition_point(lo, sa_.end(),
                                 [&](Position p) { return compare_prefix(p, gram) <= 0; });
  return {static_cast<std::size_t>(lo - sa_.begin()), static_cast<std::size_t>(hi - sa_.begin())};
}

std::uint64_t SuffixIndex::count(std::span<const TokenId> gram) const {
  if (gram.empty()) fail(ErrorCode::kArgument, "n-gram must be non-empty", "query");
  for (TokenId t : gram) {
    if (t == kUnknownToken) return 0;
  }
  const auto [lo, hi] = find(gram);
  return hi - lo;
}

BackoffResult SuffixIndex::infty_prob(std::span<const TokenId> context, TokenId w) const {
  BackoffResult r;
  r.denominator = seq_.tokens.size();
  std::size_t best = 0;
  for (std::size_t len = 1; len <= context.size(); ++len) {
    const auto c = count(context.subspan(context.size() - len));
    if (c == 0) break;
    best = len;
    r.denominator = c;
  }
  r.effective_n = static_cast<std::uint32_t>(best + 1);
  std::vector<TokenId> gram(context.end() - static_cast<std::ptrdiff_t>(best), context.end());
  gram.push_back(w);
  r.numerator = count(gram);
  return r;
}

PerplexityResult SuffixIndex::perplexity(std::span<const TokenId> expr,
                                         const PerplexityOptions& options) const {
  if (expr.empty()) fail(ErrorCode::kArgument, "expression must be non-empty", "expr");
  PerplexityResult out;
  out.steps.reserve(expr.size());
  std::vector<TokenId> history(options.prefix.begin(), options.prefix.end());
  const double log_floor = -std::log(static_cast<double>(seq_.tokens.size()) + 1.0);
  double log_sum = 0.0;
  for (TokenId w : expr) {
    std::span<const TokenId> context = history;
    if (options.history == HistoryMode::kBigram && context.size() > 1) {
      context = context.subspan(context.size() - 1);
    }
    const auto step = infty_prob(context, w);
    if (step.numerator == 0) {
      ++out.floored_tokens;
      log_sum += log_floor;
    } else {
      log_sum += std::log(static_cast<double>(step.numerator)) -
                 std::log(static_cast<double>(step.denominator));
    }
    out.steps.push_back(step);
    history.push_back(w);
  }
  if (options.floor == FloorPolicy::kFlag && out.floored_tokens > 0) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
  } else {
    out.value = std::exp(-log_sum / static_cast<double>(expr.size()));
  }
  return out;
}

}  // namespace novelty::ngram
