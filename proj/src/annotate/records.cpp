#include "novelty/annotate/records.hpp"

#include <set>

#include "novelty/util/error.hpp"
#include "novelty/util/utf8.hpp"

namespace novelty::annotate {
namespace {

std::optional<std::string> optional_string(const io::Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(ErrorCode::kFormat, std::string("field '") + key + "' must be a string", key);
  return it->get<std::string>();
}

bool require_bool(const io::Json& j, const char* key) {
  const auto& v = io::require(j, key);
  if (!v.is_boolean()) fail(ErrorCode::kFormat, std::string("field '") + key + "' must be a boolean", key);
  return v.get<bool>();
}

std::size_t require_offset(const io::Json& j, const char* key) {
  const auto& v = io::require(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(ErrorCode::kFormat, std::string("field '") + key + "' must be a non-negative integer", key);
  }
  return v.get<std::size_t>();
}

void require_nonempty(const std::string& value, const char* field) {
  if (utf8::trim(value).empty()) fail(ErrorCode::kValidation, std::string(field) + " must not be empty", field);
}

io::Json nullable(const std::optional<std::string>& s) { return s ? io::Json(*s) : io::Json(nullptr); }

}  // namespace

std::string_view to_string(Dimension d) noexcept {
  switch (d) {
    case Dimension::kSensical:
      return "sensical";
    case Dimension::kPragmatic:
      return "pragmatic";
    case Dimension::kNovel:
      return "novel";
  }
  return "novel";
}

Dimension parse_dimension(std::string_view name) {
  if (name == "sensical") return Dimension::kSensical;
  if (name == "pragmatic") return Dimension::kPragmatic;
  if (name == "novel") return Dimension::kNovel;
  fail(ErrorCode::kArgument, "unknown dimension '" + std::string(name) + "'", "dimension");
}

bool RatingRecord::value(Dimension d) const noexcept {
  switch (d) {
    case Dimension::kSensical:
      return sensical;
    case Dimension::kPragmatic:
      return pragmatic;
    case Dimension::kNovel:
      return novel;
  }
  return novel;
}

io::Json to_json(const RatingRecord& r) {
  return {{"annotator_id", r.annotator_id},
          {"expr_id", r.expr_id},
          {"sensical", r.sensical},
          {"pragmatic", r.pragmatic},
          {"novel", r.novel},
          {"rationale", nullable(r.rationale)},
          {"comment", nullable(r.comment)},
          {"timestamp", r.timestamp}};
}

RatingRecord rating_from_json(const io::Json& j) {
  if (!j.is_object()) fail(ErrorCode::kFormat, "rating must be an object");
  RatingRecord r;
  r.annotator_id = io::require_string(j, "annotator_id");
  r.expr_id = io::require_string(j, "expr_id");
  r.sensical = require_bool(j, "sensical");
  r.pragmatic = require_bool(j, "pragmatic");
  r.novel = require_bool(j, "novel");
  r.rationale = optional_string(j, "rationale");
  r.comment = optional_string(j, "comment");
  r.timestamp = io::require_string(j, "timestamp");
  return r;
}

void validate(const RatingRecord& r) {
  require_nonempty(r.annotator_id, "annotator_id");
  require_nonempty(r.expr_id, "expr_id");
  require_nonempty(r.timestamp, "timestamp");
  if (r.novel && (!r.rationale || utf8::trim(*r.rationale).empty())) {
    fail(ErrorCode::kValidation, "a novel rating requires a rationale", "rationale");
  }
}

io::Json to_json(const HighlightRecord& h) {
  return {{"record_id", h.record_id},
          {"annotator_id", h.annotator_id},
          {"passage_id", h.passage_id},
          {"char_start", h.char_start},
          {"char_end", h.char_end},
          {"rationale", h.rationale},
          {"timestamp", h.timestamp},
          {"duplicate_of", nullable(h.duplicate_of)}};
}

HighlightRecord highlight_from_json(const io::Json& j) {
  if (!j.is_object()) fail(ErrorCode::kFormat, "highlight must be an object");
  HighlightRecord h;
  h.record_id = optional_string(j, "record_id").value_or("");
  h.annotator_id = io::require_string(j, "annotator_id");
  h.passage_id = io::require_string(j, "passage_id");
  h.char_start = require_offset(j, "char_start");
  h.char_end = require_offset(j, "char_end");
  h.rationale = optional_string(j, "rationale").value_or("");
  h.timestamp = io::require_string(j, "timestamp");
  h.duplicate_of = optional_string(j, "duplicate_of");
  return h;
}

void validate(const HighlightRecord& h) {
  require_nonempty(h.annotator_id, "annotator_id");
  require_nonempty(h.passage_id, "passage_id");
  require_nonempty(h.timestamp, "timestamp");
  require_nonempty(h.rationale, "rationale");
  if (h.char_end <= h.char_start) fail(ErrorCode::kValidation, "highlight span is empty", "char_end");
}

io::Json to_json(const Batch& b) {
  return {{"batch_id", b.batch_id},
          {"passage_ids", b.passage_ids},
          {"assigned_annotators", b.assigned_annotators},
          {"is_training", b.is_training}};
}

Batch batch_from_json(const io::Json& j) {
  Batch b;
  b.batch_id = io::require_string(j, "batch_id");
  b.passage_ids = io::require(j, "passage_ids").get<std::vector<std::string>>();
  b.assigned_annotators = j.value("assigned_annotators", std::vector<std::string>{});
  b.is_training = j.value("is_training", false);
  return b;
}

void validate(const Batch& b) {
  require_nonempty(b.batch_id, "batch_id");
  if (b.passage_ids.empty()) fail(ErrorCode::kValidation, "batch " + b.batch_id + " has no passages", "passage_ids");
  std::set<std::string> seen;
  for (const auto& p : b.passage_ids) {
    if (!seen.insert(p).second) {
      fail(ErrorCode::kValidation, "batch " + b.batch_id + " lists passage " + p + " twice", "passage_ids");
    }
  }
  std::set<std::string> people;
  for (const auto& a : b.assigned_annotators) {
    if (!people.insert(a).second) {
      fail(ErrorCode::kValidation, "batch " + b.batch_id + " lists annotator " + a + " twice",
           "assigned_annotators");
    }
  }
}

io::Json to_json(const AuditEntry& a) {
  return {{"seq", a.seq}, {"record_id", a.record_id}, {"rating", to_json(a.rating)}};
}

AuditEntry audit_from_json(const io::Json& j) {
  AuditEntry a;
  a.seq = io::require(j, "seq").get<std::size_t>();
  a.record_id = io::require_string(j, "record_id");
  a.rating = rating_from_json(io::require(j, "rating"));
  return a;
}

std::string rating_record_id(std::string_view annotator_id, std::string_view expr_id) {
  return std::string(annotator_id) + "/" + std::string(expr_id);
}

}  // namespace novelty::annotate
