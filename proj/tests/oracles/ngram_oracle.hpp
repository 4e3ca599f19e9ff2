#pragma once

// Brute-force n-gram oracle used to check the suffix index. It scans the
// token sequence directly and never touches the suffix array.

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <algorithm>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using Token = std::uint32_t;
inline constexpr Token kUnknown = 0xFFFFFFFFu;

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 0;
  std::uint32_t n = 1;
};

class NgramOracle {
 public:
  NgramOracle(std::vector<Token> tokens, std::vector<std::size_t> boundaries, std::size_t max_cached = 8)
      : tokens_(std::move(tokens)), boundaries_(std::move(boundaries)), max_cached_(max_cached) {
    if (boundaries_.empty() || boundaries_.back() != tokens_.size()) boundaries_.push_back(tokens_.size());
    std::size_t start = 0;
    for (std::size_t end : boundaries_) {
      for (std::size_t i = start; i < end; ++i) {
        std::vector<Token> g;
        for (std::size_t len = 1; len <= max_cached_ && i + len <= end; ++len) {
          g.push_back(tokens_[i + len - 1]);
          ++table_[g];
        }
      }
      start = end;
    }
  }

  std::uint64_t count(std::span<const Token> g) const {
    if (g.empty()) return tokens_.size();
    if (g.size() <= max_cached_) {
      auto it = table_.find(std::vector<Token>(g.begin(), g.end()));
      return it == table_.end() ? 0 : it->second;
    }
    std::uint64_t c = 0;
    std::size_t start = 0;
    for (std::size_t end : boundaries_) {
      for (std::size_t i = start; i + g.size() <= end; ++i) {
        bool eq = true;
        for (std::size_t k = 0; k < g.size() && eq; ++k) eq = tokens_[i + k] == g[k];
        c += eq ? 1 : 0;
      }
      start = end;
    }
    return c;
  }

  // Longest-first search over context suffixes.
  Ratio infty_prob(std::span<const Token> ctx, Token w) const {
    for (std::size_t len = ctx.size() + 1; len >= 1; --len) {
      auto suffix = ctx.subspan(ctx.size() - (len - 1));
      const auto den = count(suffix);
      if (den > 0) {
        std::vector<Token> g(suffix.begin(), suffix.end());
        g.push_back(w);
        return {count(g), den, static_cast<std::uint32_t>(len)};
      }
    }
    return {0, tokens_.size(), 1};
  }

  // Perplexity with optional floor 1/(N+1); nullopt for the flag policy hit.
  std::optional<double> perplexity(std::span<const Token> expr, bool floor) const {
    long double log_sum = 0;
    std::vector<Token> hist;
    for (Token w : expr) {
      const auto r = infty_prob(hist, w);
      if (r.num == 0) {
        if (!floor) return std::nullopt;
        log_sum += std::log(1.0L / (static_cast<long double>(tokens_.size()) + 1.0L));
      } else {
        log_sum += std::log(static_cast<long double>(r.num) / static_cast<long double>(r.den));
      }
      hist.push_back(w);
    }
    return static_cast<double>(std::exp(-log_sum / static_cast<long double>(expr.size())));
  }

  // Occurrences of g that end exactly at a document end.
  std::uint64_t count_ending_at_boundary(std::span<const Token> g) const {
    std::uint64_t c = 0;
    for (std::size_t end : boundaries_) {
      if (end < g.size()) continue;
      bool eq = true;
      for (std::size_t k = 0; k < g.size() && eq; ++k) eq = tokens_[end - g.size() + k] == g[k];
      std::size_t start_doc = 0;
      for (std::size_t b : boundaries_) {
        if (b < end) start_doc = b;
      }
      if (eq && end - g.size() >= start_doc) ++c;
    }
    return c;
  }

  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& boundaries() const { return boundaries_; }

 private:
  std::vector<Token> tokens_;
  std::vector<std::size_t> boundaries_;
  std::size_t max_cached_;
  struct VecHash {
    std::size_t operator()(const std::vector<Token>& v) const noexcept {
      std::uint64_t h = 1469598103934665603ULL;
      for (Token t : v) h = (h ^ t) * 1099511628211ULL;
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<std::vector<Token>, std::uint64_t, VecHash> table_;
};

/// Random corpus of `n` tokens over `vocab` symbols split into 1..max_docs documents.
struct RandomCorpus {
  std::vector<Token> tokens;
  std::vector<std::size_t> boundaries;
};

inline RandomCorpus random_corpus(std::mt19937_64& rng, std::size_t n, std::size_t vocab,
                                  std::size_t max_docs) {
  RandomCorpus c;
  // Skewed distribution so long repeated n-grams actually occur.
  std::geometric_distribution<std::uint32_t> geo(2.0 / static_cast<double>(vocab + 1));
  for (std::size_t i = 0; i < n; ++i) c.tokens.push_back(std::min<std::uint32_t>(geo(rng), vocab - 1));
  std::uniform_int_distribution<std::size_t> docs(1, max_docs);
  const std::size_t d = std::min(docs(rng), n);
  std::vector<std::size_t> cuts;
  std::uniform_int_distribution<std::size_t> pos(1, n - 1);
  for (std::size_t i = 1; i < d; ++i) cuts.push_back(pos(rng));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  c.boundaries = cuts;
  c.boundaries.push_back(n);
  return c;
}

}  // namespace oracle
