#pragma once

#include <filesystem>

#include "novelty/annotate/store.hpp"

namespace novelty::annotate {

inline constexpr int kExportVersion = 1;

struct ExportSummary {
  std::size_t passages = 0;
  std::size_t expressions = 0;
  std::size_t pre_highlighted = 0;
  std::size_t ratings = 0;
  /// Distinct expressions with at least one rating.
  std::size_t rated_expressions = 0;
  std::size_t nesting_violations = 0;
  std::size_t highlights = 0;
  std::size_t highlights_duplicating_prehighlight = 0;
  /// Highlight-derived entries that survive deduplication.
  std::size_t creative_highlights = 0;
  std::size_t creative_label_rows = 0;
  std::size_t creative_label_rows_unaugmented = 0;
};

/// Export form of an expression: offsets, flag and covered text, no tokens.
io::Json expression_record(const segment::ExpressionSpan& e);

io::Json to_json(const ExportSummary& s);
ExportSummary summarize(const Dataset& d);

/// Writes passages, expressions, profiles, batches, ratings, rating_audit,
/// highlights, creative_expressions and creative_labels as versioned
/// .jsonl files plus summary.json. Returns the summary.
ExportSummary export_dataset(const Dataset& d, const std::filesystem::path& dir);
/// Reads the non-derived files written by export_dataset. passages.jsonl is
/// required; any other missing file reads as empty.
Dataset import_dataset(const std::filesystem::path& dir);

}  // namespace novelty::annotate
