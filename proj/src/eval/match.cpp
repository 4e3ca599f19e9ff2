#include "novelty/eval/match.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "novelty/util/utf8.hpp"

namespace novelty::eval {

std::string normalize(std::string_view text) {
  const auto cps = utf8::decode(text);
  std::size_t first = 0;
  std::size_t last = cps.size();
  auto strip = [](char32_t c) { return utf8::is_space(c) || utf8::is_punct(c); };
  while (first < last && strip(cps[first].value)) ++first;
  while (last > first && strip(cps[last - 1].value)) --last;

  std::u32string out;
  bool pending_space = false;
  for (std::size_t i = first; i < last; ++i) {
    const char32_t c = cps[i].value;
    if (utf8::is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(utf8::fold_case(c));
  }
  return utf8::encode(out);
}

// Bit-parallel LCS (Hyyro 2004), 64-bit blocks with carry propagation.
std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return 0;
  const std::size_t words = (a.size() + 63) / 64;

  std::unordered_map<char32_t, std::size_t> slot;
  std::vector<std::uint64_t> masks;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(a[i], masks.size() / words);
    if (fresh) masks.resize(masks.size() + words, 0);
    masks[it->second * words + i / 64] |= std::uint64_t{1} << (i % 64);
  }

  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  for (char32_t c : b) {
    auto it = slot.find(c);
    if (it == slot.end()) continue;
    const std::uint64_t* m = masks.data() + it->second * words;
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & m[w];
      const std::uint64_t sum = v[w] + u;
      const std::uint64_t sum2 = sum + carry;
      const std::uint64_t next_carry = (sum < v[w]) || (sum2 < sum) ? 1 : 0;
      v[w] = sum2 | (v[w] - u);
      carry = next_carry;
    }
  }
  std::size_t lcs = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t live = ~v[w];
    if (w + 1 == words && a.size() % 64 != 0) live &= (std::uint64_t{1} << (a.size() % 64)) - 1;
    lcs += static_cast<std::size_t>(std::popcount(live));
  }
  return lcs;
}

namespace {

double ratio_u32(std::u32string_view a, std::u32string_view b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(lcs_length(a, b)) / static_cast<double>(total);
}

}  // namespace

double levenshtein_ratio(std::string_view a, std::string_view b) {
  return ratio_u32(utf8::to_u32(a), utf8::to_u32(b));
}

std::string_view to_string(Relation r) noexcept {
  switch (r) {
    case Relation::kNone: return "none";
    case Relation::kEqual: return "equal";
    case Relation::kSubset: return "subset";
    case Relation::kSuperset: return "superset";
    case Relation::kSimilar: return "similar";
  }
  return "none";
}

MatchResult compare_normalized(std::string_view a, std::u32string_view ua, std::string_view b,
                               std::u32string_view ub, double ratio_threshold) {
  MatchResult r;
  if (a.empty() || b.empty()) return r;
  if (a == b) {
    r.relation = Relation::kEqual;
    r.ratio = 1.0;
    return r;
  }
  r.ratio = ratio_u32(ua, ub);
  if (b.find(a) != std::string_view::npos) {
    r.relation = Relation::kSubset;
  } else if (a.find(b) != std::string_view::npos) {
    r.relation = Relation::kSuperset;
  } else if (r.ratio >= ratio_threshold) {
    r.relation = Relation::kSimilar;
  }
  return r;
}

MatchResult compare(std::string_view a, std::string_view b, double ratio_threshold) {
  const std::string na = normalize(a);
  const std::string nb = normalize(b);
  return compare_normalized(na, utf8::to_u32(na), nb, utf8::to_u32(nb), ratio_threshold);
}

bool approx_match(std::string_view a, std::string_view b, double ratio_threshold) {
  return compare(a, b, ratio_threshold).matched();
}

}  // namespace novelty::eval
