#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "novelty/annotate/records.hpp"
#include "novelty/segment/segmenter.hpp"

namespace novelty::annotate {

/// Everything the store holds, in export order.
struct Dataset {
  std::vector<segment::Passage> passages;
  /// Sorted by passage, then start offset.
  std::vector<segment::ExpressionSpan> expressions;
  std::vector<segment::NoveltyProfile> profiles;
  std::vector<Batch> batches;
  /// Sorted by expr_id, then annotator.
  std::vector<RatingRecord> ratings;
  /// Sorted by record id.
  std::vector<HighlightRecord> highlights;
  std::vector<AuditEntry> audit;
};

/// Single-file SQLite store in WAL mode. One connection, serialized by an
/// internal mutex, so a Store may be shared across request threads.
class Store {
 public:
  /// Creates the file and schema when missing.
  static Store open(const std::filesystem::path& path);
  static Store in_memory();

  Store(Store&&) noexcept;
  Store& operator=(Store&&) noexcept;
  ~Store();

  void put_passage(const segment::Passage& p);
  /// The passage must exist and the offsets must fall on character
  /// boundaries inside it. A non-empty `text` must equal the covered bytes.
  void put_expression(const segment::ExpressionSpan& e);
  void put_profile(const segment::NoveltyProfile& p);
  void put_batch(const Batch& b);

  /// Upsert keyed by (annotator, expr). Every accepted submission appends
  /// an audit entry. Returns the record id.
  std::string record_rating(const RatingRecord& r);
  /// Returns the stored record with its id and duplicate flag. The same
  /// annotator re-submitting the same span overwrites the earlier record.
  HighlightRecord record_highlight(HighlightRecord h);

  std::vector<segment::Passage> passages() const;
  std::optional<segment::Passage> passage(const std::string& passage_id) const;
  std::vector<segment::ExpressionSpan> expressions() const;
  std::vector<segment::ExpressionSpan> expressions(const std::string& passage_id) const;
  std::optional<segment::ExpressionSpan> expression(const std::string& expr_id) const;
  std::vector<segment::NoveltyProfile> profiles() const;
  std::vector<Batch> batches() const;
  std::optional<Batch> batch(const std::string& batch_id) const;
  /// Union of assigned annotators, sorted.
  std::vector<std::string> annotators() const;
  bool is_assigned(const std::string& annotator_id, const std::string& passage_id) const;
  std::vector<RatingRecord> ratings() const;
  std::vector<RatingRecord> ratings_by(const std::string& annotator_id) const;
  std::vector<HighlightRecord> highlights() const;
  std::vector<AuditEntry> audit() const;

  Dataset snapshot() const;
  /// Loads a dataset into an empty store in one transaction. Ratings are
  /// taken verbatim; when `d.audit` is empty one entry per rating is
  /// written. Duplicate flags on highlights are recomputed.
  void restore(const Dataset& d);
  bool empty() const;

 private:
  struct Impl;
  explicit Store(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace novelty::annotate
