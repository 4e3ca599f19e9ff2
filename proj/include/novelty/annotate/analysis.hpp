#pragma once

#include <optional>
#include <string>
#include <vector>

#include "novelty/annotate/store.hpp"
#include "novelty/eval/match.hpp"

namespace novelty::annotate {

struct CreativeExpression {
  std::string expr_id;
  std::string passage_id;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;
  bool from_highlight = false;
  /// Highlight records folded into this entry, in merge order.
  std::vector<std::string> highlight_ids;
  /// Annotators who highlighted it; sorted, unique.
  std::vector<std::string> highlighters;
};

io::Json to_json(const CreativeExpression& e);

struct DroppedHighlight {
  std::string record_id;
  std::string matched_expr_id;
  eval::Relation relation = eval::Relation::kNone;
  double ratio = 0.0;
};

struct DedupResult {
  /// Rated expressions first, then surviving highlights.
  std::vector<CreativeExpression> expressions;
  /// Highlights absorbed by a rated expression.
  std::vector<DroppedHighlight> dropped;
};

/// Rated expressions are included first. Highlights follow in timestamp
/// order (record id breaks ties); each is compared with the expressions
/// already included for its passage. A match against a rated expression
/// drops it, a match against an earlier highlight folds its annotator into
/// that entry. Surviving highlights get ids "<passage>:h<NNN>".
DedupResult dedup_highlights(const std::vector<HighlightRecord>& highlights,
                             const std::vector<segment::ExpressionSpan>& rated_exprs,
                             const std::vector<segment::Passage>& passages,
                             double ratio_threshold = eval::kDefaultRatioThreshold);

/// Pre-highlighted expressions with at least one rating.
std::vector<segment::ExpressionSpan> rated_expressions(const Dataset& d);
DedupResult dedup_highlights(const Dataset& d);

/// Keeps ratings and highlights made under a non-training assignment, and
/// only the non-training batches. The audit is left as is.
Dataset counted_records(const Dataset& d);

enum class LabelSource { kRating, kHighlight, kAugmented };
std::string_view to_string(LabelSource s) noexcept;

struct CreativeLabel {
  std::string expr_id;
  std::string annotator_id;
  bool creative = false;
  LabelSource source = LabelSource::kRating;
};

io::Json to_json(const CreativeLabel& l);

/// One row per rating (sensical and pragmatic and novel), one per
/// highlighter of each surviving highlight, and with `augment` a false row
/// for every other annotator assigned to that passage. Sorted by expr_id,
/// then annotator.
std::vector<CreativeLabel> creative_labels(const Dataset& d, bool augment = true);

/// Free-marginal multirater kappa from per-item category assignments.
/// Every item needs at least two raters; categories lie in [0, q).
double kappa_free(const std::vector<std::vector<int>>& items, int q = 2);
/// Mean over items of pairwise agreement.
double observed_agreement(const std::vector<std::vector<int>>& items, int q = 2);

struct MissingRating {
  std::string annotator_id;
  std::string passage_id;
  std::string expr_id;
};

struct KappaReport {
  std::string batch_id;
  Dimension dimension = Dimension::kNovel;
  bool is_training = false;
  std::size_t n_items = 0;
  std::size_t n_raters = 0;
  std::optional<double> observed_agreement;
  /// Empty when ratings are incomplete; `missing` then lists the gaps.
  std::optional<double> kappa;
  std::vector<MissingRating> missing;
};

io::Json to_json(const KappaReport& r);

/// Items are the batch's pre-highlighted expressions, raters its assigned
/// annotators. Unknown batch is a not-found error.
KappaReport batch_kappa(const Dataset& d, const std::string& batch_id, Dimension dimension, int q = 2);

struct KappaSummary {
  Dimension dimension = Dimension::kNovel;
  std::vector<KappaReport> batches;
  /// Over complete, non-training batches.
  std::optional<double> mean;
  std::optional<double> sd;
  std::size_t n_used = 0;
};

io::Json to_json(const KappaSummary& s);
KappaSummary kappa_summary(const Dataset& d, Dimension dimension, int q = 2);

}  // namespace novelty::annotate
