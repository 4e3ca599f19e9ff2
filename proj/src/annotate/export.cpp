#include "novelty/annotate/export.hpp"

#include <set>

#include "novelty/annotate/analysis.hpp"
#include "novelty/util/error.hpp"

namespace novelty::annotate {
namespace {

io::Json rating_record(const RatingRecord& r) {
  auto j = to_json(r);
  j["record_id"] = rating_record_id(r.annotator_id, r.expr_id);
  j["nesting_violation"] = r.nesting_violation();
  return j;
}

template <typename T, typename F>
std::vector<io::Json> map_json(const std::vector<T>& items, F f) {
  std::vector<io::Json> out;
  out.reserve(items.size());
  for (const auto& x : items) out.push_back(f(x));
  return out;
}

std::vector<io::Json> read_optional(const std::filesystem::path& path, std::string_view schema) {
  if (!std::filesystem::exists(path)) return {};
  return io::read_versioned_jsonl(path, schema, kExportVersion);
}

}  // namespace

io::Json expression_record(const segment::ExpressionSpan& e) {
  return {{"expr_id", e.expr_id},
          {"passage_id", e.passage_id},
          {"char_start", e.char_start},
          {"char_end", e.char_end},
          {"pre_highlighted", e.pre_highlighted},
          {"text", e.text}};
}

io::Json to_json(const ExportSummary& s) {
  return {{"schema", "novelty.export_summary"},
          {"version", kExportVersion},
          {"passages", s.passages},
          {"expressions", s.expressions},
          {"pre_highlighted", s.pre_highlighted},
          {"ratings", s.ratings},
          {"rated_expressions", s.rated_expressions},
          {"nesting_violations", s.nesting_violations},
          {"highlights", s.highlights},
          {"highlights_duplicating_prehighlight", s.highlights_duplicating_prehighlight},
          {"creative_highlights", s.creative_highlights},
          {"creative_label_rows", s.creative_label_rows},
          {"creative_label_rows_unaugmented", s.creative_label_rows_unaugmented}};
}

ExportSummary summarize(const Dataset& d) {
  ExportSummary s;
  s.passages = d.passages.size();
  s.expressions = d.expressions.size();
  for (const auto& e : d.expressions) s.pre_highlighted += e.pre_highlighted ? 1 : 0;
  s.ratings = d.ratings.size();
  std::set<std::string> rated;
  for (const auto& r : d.ratings) {
    rated.insert(r.expr_id);
    s.nesting_violations += r.nesting_violation() ? 1 : 0;
  }
  s.rated_expressions = rated.size();
  s.highlights = d.highlights.size();
  for (const auto& h : d.highlights) s.highlights_duplicating_prehighlight += h.duplicate_of ? 1 : 0;
  for (const auto& e : dedup_highlights(d).expressions) s.creative_highlights += e.from_highlight ? 1 : 0;
  s.creative_label_rows = creative_labels(d, true).size();
  s.creative_label_rows_unaugmented = creative_labels(d, false).size();
  return s;
}

ExportSummary export_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const char* schema, const std::vector<io::Json>& records) {
    io::write_versioned_jsonl(dir / name, schema, kExportVersion, records);
  };
  write("passages.jsonl", "novelty.passages",
        map_json(d.passages, [](const segment::Passage& p) { return segment::to_json(p); }));
  write("expressions.jsonl", "novelty.expressions", map_json(d.expressions, expression_record));
  write("profiles.jsonl", "novelty.profiles",
        map_json(d.profiles, [](const segment::NoveltyProfile& p) { return segment::to_json(p); }));
  write("batches.jsonl", "novelty.batches", map_json(d.batches, [](const Batch& b) { return to_json(b); }));
  write("ratings.jsonl", "novelty.ratings", map_json(d.ratings, rating_record));
  write("rating_audit.jsonl", "novelty.rating_audit",
        map_json(d.audit, [](const AuditEntry& a) { return to_json(a); }));
  write("highlights.jsonl", "novelty.highlights",
        map_json(d.highlights, [](const HighlightRecord& h) { return to_json(h); }));
  const auto dedup = dedup_highlights(d);
  write("creative_expressions.jsonl", "novelty.creative_expressions",
        map_json(dedup.expressions, [](const CreativeExpression& e) { return to_json(e); }));
  write("creative_labels.jsonl", "novelty.creative_labels",
        map_json(creative_labels(d, true), [](const CreativeLabel& l) { return to_json(l); }));
  const auto summary = summarize(d);
  io::write_file(dir / "summary.json", to_json(summary).dump(2) + "\n");
  return summary;
}

Dataset import_dataset(const std::filesystem::path& dir) {
  const auto passages_path = dir / "passages.jsonl";
  if (!std::filesystem::exists(passages_path)) {
    fail(ErrorCode::kIo, "missing " + passages_path.string(), "dir");
  }
  Dataset d;
  for (const auto& j : io::read_versioned_jsonl(passages_path, "novelty.passages", kExportVersion)) {
    d.passages.push_back(segment::passage_from_json(j));
  }
  for (const auto& j : read_optional(dir / "expressions.jsonl", "novelty.expressions")) {
    d.expressions.push_back(segment::expression_from_json(j));
  }
  for (const auto& j : read_optional(dir / "profiles.jsonl", "novelty.profiles")) {
    d.profiles.push_back(segment::profile_from_json(j));
  }
  for (const auto& j : read_optional(dir / "batches.jsonl", "novelty.batches")) d.batches.push_back(batch_from_json(j));
  for (const auto& j : read_optional(dir / "ratings.jsonl", "novelty.ratings")) d.ratings.push_back(rating_from_json(j));
  for (const auto& j : read_optional(dir / "rating_audit.jsonl", "novelty.rating_audit")) {
    d.audit.push_back(audit_from_json(j));
  }
  for (const auto& j : read_optional(dir / "highlights.jsonl", "novelty.highlights")) {
    d.highlights.push_back(highlight_from_json(j));
  }
  return d;
}

}  // namespace novelty::annotate
