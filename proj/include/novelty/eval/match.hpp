#pragma once

#include <string>
#include <string_view>

namespace novelty::eval {

inline constexpr double kDefaultRatioThreshold = 0.90;

/// Case-folds, collapses whitespace runs to one space and strips leading and
/// trailing punctuation and whitespace.
std::string normalize(std::string_view text);

/// Indel-normalized similarity on code points: 2 * LCS / (|a| + |b|),
/// i.e. 1 - indel_distance / (|a| + |b|). Two empty strings give 1.
double levenshtein_ratio(std::string_view a, std::string_view b);

/// Length of the longest common subsequence, counted in code points.
std::size_t lcs_length(std::u32string_view a, std::u32string_view b);

enum class Relation {
  kNone,
  kEqual,
  /// `a` occurs inside `b`.
  kSubset,
  /// `b` occurs inside `a`.
  kSuperset,
  /// Neither contains the other but the ratio clears the threshold.
  kSimilar,
};

std::string_view to_string(Relation r) noexcept;

struct MatchResult {
  Relation relation = Relation::kNone;
  double ratio = 0.0;
  bool matched() const noexcept { return relation != Relation::kNone; }
};

/// Compares normalized forms. Strings that normalize to empty never match.
MatchResult compare(std::string_view a, std::string_view b,
                    double ratio_threshold = kDefaultRatioThreshold);

/// Subset either way, or ratio >= threshold.
bool approx_match(std::string_view a, std::string_view b,
                  double ratio_threshold = kDefaultRatioThreshold);

/// Pre-normalized comparison for hot loops. Both inputs must already be
/// outputs of normalize(); `ua`/`ub` are their code points.
MatchResult compare_normalized(std::string_view a, std::u32string_view ua, std::string_view b,
                               std::u32string_view ub, double ratio_threshold = kDefaultRatioThreshold);

}  // namespace novelty::eval
