#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "novelty/ngram/suffix_index.hpp"
#include "novelty/util/io.hpp"

namespace novelty::segment {

struct Passage {
  std::string passage_id;
  std::string text;
  /// "human" or a model name.
  std::string source;
  /// Human seed passage; equals passage_id for human passages.
  std::string seed_passage_id;

  bool is_human() const noexcept { return source == "human"; }
  /// Whitespace-separated token count.
  std::size_t word_count() const;
};

Passage passage_from_json(const io::Json& j);
io::Json to_json(const Passage& p);
/// Also checks ids are unique and every seed_passage_id names a human passage.
std::vector<Passage> read_passages(const std::filesystem::path& path);
void validate_passages(const std::vector<Passage>& passages);

struct SplitRules {
  /// Code points that end an expression.
  std::u32string punctuation = U".,;:!?—…()";
  /// Quotations with fewer word tokens than this are never split.
  std::size_t quote_min_tokens = 6;
  /// Spans with fewer word tokens are merged into the preceding span.
  /// 1 disables merging.
  std::size_t min_span_tokens = 1;
  bool abbreviations = true;
  std::vector<std::string> abbreviation_list = {
      "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "mt", "vs", "etc", "e.g", "i.e",
      "a.m", "p.m", "gen", "col", "lt", "sgt", "capt", "rev", "hon", "inc", "ltd", "co"};
  std::string tokenizer = std::string(ngram::kDefaultTokenizer);
};

SplitRules split_rules_from_json(const io::Json& j);
io::Json to_json(const SplitRules& r);

struct ExpressionSpan {
  std::string expr_id;
  std::string passage_id;
  /// Byte offsets into the passage text, half-open.
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;
  std::vector<std::string> tokens;
  bool pre_highlighted = false;
};

io::Json to_json(const ExpressionSpan& e);
ExpressionSpan expression_from_json(const io::Json& j);

std::string make_expr_id(std::string_view passage_id, std::size_t ordinal);

/// Ordered, non-overlapping, whitespace-trimmed spans. Spans without any
/// word token are dropped.
std::vector<ExpressionSpan> split_atomic(const Passage& p, const SplitRules& rules = {});

struct NoveltyProfile {
  std::string expr_id;
  /// Smallest n with an n-gram absent from the corpus.
  std::optional<std::uint32_t> n_star;
  double novel_pct = 0.0;
  ngram::PerplexityResult ppl;
  std::optional<double> ppl_log_std;
};

io::Json to_json(const NoveltyProfile& p);
NoveltyProfile profile_from_json(const io::Json& j);

/// Throws an argument error for an empty token list.
NoveltyProfile novelty_profile(std::string_view expr_id, std::span<const ngram::TokenId> tokens,
                               const ngram::SuffixIndex& index,
                               const ngram::PerplexityOptions& ppl_options = {});
NoveltyProfile novelty_profile(const ExpressionSpan& expr, const ngram::SuffixIndex& index,
                               const ngram::PerplexityOptions& ppl_options = {});

inline constexpr double kDefaultSelectThreshold = 0.15;

struct Selection {
  /// Sorted expression ids.
  std::vector<std::string> expr_ids;
  /// Selected share of the input; the target is roughly one half.
  double share = 0.0;
};

/// Selects novel_pct >= threshold. Threshold outside [0, 1] is an argument error.
Selection select_for_annotation(const std::vector<NoveltyProfile>& profiles,
                                double threshold = kDefaultSelectThreshold);

struct ContaminationSample {
  /// 0 beginning, 1 middle, 2 end; -1 when the passage was checked exhaustively.
  int region = 0;
  std::size_t token_start = 0;
  std::string text;
  std::uint64_t count = 0;
};

struct ContaminationReport {
  std::string passage_id;
  bool passed = true;
  /// False when the passage was too short for three regions of n-grams.
  bool full_coverage = true;
  std::size_t gram_size = 0;
  std::uint64_t seed = 0;
  std::vector<ContaminationSample> samples;
  std::vector<ContaminationSample> offending;
};

io::Json to_json(const ContaminationReport& r);

struct ContaminationOptions {
  std::size_t samples_per_region = 5;
  std::size_t gram_size = 15;
  std::uint64_t seed = 0;
};

ContaminationReport contamination_check(const Passage& p, const ngram::SuffixIndex& index,
                                        const ContaminationOptions& options = {});

}  // namespace novelty::segment
