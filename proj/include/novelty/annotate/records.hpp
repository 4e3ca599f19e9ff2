#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "novelty/util/io.hpp"

namespace novelty::annotate {

enum class Dimension { kSensical, kPragmatic, kNovel };

std::string_view to_string(Dimension d) noexcept;
Dimension parse_dimension(std::string_view name);

struct RatingRecord {
  std::string annotator_id;
  std::string expr_id;
  bool sensical = false;
  bool pragmatic = false;
  bool novel = false;
  std::optional<std::string> rationale;
  std::optional<std::string> comment;
  /// ISO-8601, supplied by the client.
  std::string timestamp;

  bool creative() const noexcept { return sensical && pragmatic && novel; }
  /// Pragmatic but not sensical. Stored as given, flagged on export.
  bool nesting_violation() const noexcept { return pragmatic && !sensical; }
  bool value(Dimension d) const noexcept;
};

io::Json to_json(const RatingRecord& r);
/// Format errors for missing or mistyped fields. Does not apply the
/// rationale rule; see validate().
RatingRecord rating_from_json(const io::Json& j);

/// Record-local rules: non-empty ids and timestamp, rationale for novel.
void validate(const RatingRecord& r);

struct HighlightRecord {
  std::string record_id;
  std::string annotator_id;
  std::string passage_id;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string rationale;
  std::string timestamp;
  /// Set by the store when the span equals a pre-highlighted expression.
  std::optional<std::string> duplicate_of;
};

io::Json to_json(const HighlightRecord& h);
HighlightRecord highlight_from_json(const io::Json& j);
void validate(const HighlightRecord& h);

struct Batch {
  std::string batch_id;
  std::vector<std::string> passage_ids;
  std::vector<std::string> assigned_annotators;
  bool is_training = false;
};

io::Json to_json(const Batch& b);
Batch batch_from_json(const io::Json& j);
/// Non-empty passage list without duplicates.
void validate(const Batch& b);

struct AuditEntry {
  std::size_t seq = 0;
  std::string record_id;
  RatingRecord rating;
};

io::Json to_json(const AuditEntry& a);
AuditEntry audit_from_json(const io::Json& j);

std::string rating_record_id(std::string_view annotator_id, std::string_view expr_id);

}  // namespace novelty::annotate
