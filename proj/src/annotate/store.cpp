#include "novelty/annotate/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <set>

#include "novelty/util/error.hpp"
#include "novelty/util/utf8.hpp"

namespace novelty::annotate {
namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS passages (passage_id TEXT PRIMARY KEY, body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS expressions (
  expr_id TEXT PRIMARY KEY,
  passage_id TEXT NOT NULL REFERENCES passages(passage_id),
  char_start INTEGER NOT NULL,
  body TEXT NOT NULL);
CREATE INDEX IF NOT EXISTS expressions_by_passage ON expressions(passage_id, char_start);
CREATE TABLE IF NOT EXISTS profiles (
  expr_id TEXT PRIMARY KEY REFERENCES expressions(expr_id), body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS batches (batch_id TEXT PRIMARY KEY, body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS ratings (
  annotator_id TEXT NOT NULL,
  expr_id TEXT NOT NULL REFERENCES expressions(expr_id),
  body TEXT NOT NULL,
  PRIMARY KEY (annotator_id, expr_id));
CREATE TABLE IF NOT EXISTS rating_audit (
  seq INTEGER PRIMARY KEY, record_id TEXT NOT NULL, body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS highlights (
  record_id TEXT PRIMARY KEY,
  annotator_id TEXT NOT NULL,
  passage_id TEXT NOT NULL REFERENCES passages(passage_id),
  char_start INTEGER NOT NULL,
  char_end INTEGER NOT NULL,
  body TEXT NOT NULL);
)sql";

constexpr int kStoreVersion = 1;

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      fail(ErrorCode::kInternal, std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  Statement& bind(int i, const std::string& v) {
    check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, i, v));
    return *this;
  }
  /// True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if (rc == SQLITE_CONSTRAINT) fail(ErrorCode::kConflict, std::string("store constraint: ") + sqlite3_errmsg(db_));
    fail(ErrorCode::kInternal, std::string("sqlite step: ") + sqlite3_errmsg(db_));
  }
  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) fail(ErrorCode::kInternal, std::string("sqlite bind: ") + sqlite3_errmsg(db_));
  }
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown";
    sqlite3_free(err);
    fail(ErrorCode::kInternal, "sqlite: " + msg);
  }
}

class Transaction {
 public:
  explicit Transaction(sqlite3* db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
  Transaction(const Transaction&) = delete;
  Transaction& operator=(const Transaction&) = delete;
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    exec(db_, "COMMIT");
    done_ = true;
  }

 private:
  sqlite3* db_;
  bool done_ = false;
};

bool on_boundary(const std::string& text, std::size_t offset) {
  if (offset > text.size()) return false;
  return offset == text.size() || (static_cast<unsigned char>(text[offset]) & 0xC0) != 0x80;
}

io::Json parse_body(const std::string& body) { return io::Json::parse(body); }

std::string highlight_id(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "hl-%06zu", n);
  return buf;
}

}  // namespace

struct Store::Impl {
  sqlite3* db = nullptr;
  mutable std::mutex mu;

  ~Impl() {
    if (db) sqlite3_close(db);
  }

  void init() {
    sqlite3_busy_timeout(db, 5000);
    exec(db, "PRAGMA foreign_keys = ON");
    exec(db, kSchema);
    Statement q(db, "SELECT value FROM meta WHERE key = 'version'");
    if (q.step()) {
      if (std::stoi(q.text(0)) != kStoreVersion) fail(ErrorCode::kFormat, "store was written by an unsupported version");
    } else {
      Statement ins(db, "INSERT INTO meta(key, value) VALUES ('version', ?)");
      ins.bind(1, std::to_string(kStoreVersion)).step();
    }
  }

  // All methods below expect `mu` to be held.

  std::optional<segment::Passage> passage(const std::string& id) const {
    Statement q(db, "SELECT body FROM passages WHERE passage_id = ?");
    q.bind(1, id);
    if (!q.step()) return std::nullopt;
    return segment::passage_from_json(parse_body(q.text(0)));
  }

  std::optional<segment::ExpressionSpan> expression(const std::string& id) const {
    Statement q(db, "SELECT body FROM expressions WHERE expr_id = ?");
    q.bind(1, id);
    if (!q.step()) return std::nullopt;
    return segment::expression_from_json(parse_body(q.text(0)));
  }

  std::vector<segment::ExpressionSpan> expressions(const std::string* passage_id) const {
    std::vector<segment::ExpressionSpan> out;
    if (passage_id) {
      Statement q(db, "SELECT body FROM expressions WHERE passage_id = ? ORDER BY char_start, expr_id");
      q.bind(1, *passage_id);
      while (q.step()) out.push_back(segment::expression_from_json(parse_body(q.text(0))));
    } else {
      Statement q(db, "SELECT body FROM expressions ORDER BY passage_id, char_start, expr_id");
      while (q.step()) out.push_back(segment::expression_from_json(parse_body(q.text(0))));
    }
    return out;
  }

  std::vector<Batch> batches() const {
    std::vector<Batch> out;
    Statement q(db, "SELECT body FROM batches ORDER BY batch_id");
    while (q.step()) out.push_back(batch_from_json(parse_body(q.text(0))));
    return out;
  }

  bool known_annotator(const std::string& a) const {
    for (const auto& b : batches()) {
      if (std::find(b.assigned_annotators.begin(), b.assigned_annotators.end(), a) != b.assigned_annotators.end()) {
        return true;
      }
    }
    return false;
  }

  bool assigned(const std::string& a, const std::string& passage_id) const {
    for (const auto& b : batches()) {
      const bool has_a =
          std::find(b.assigned_annotators.begin(), b.assigned_annotators.end(), a) != b.assigned_annotators.end();
      const bool has_p = std::find(b.passage_ids.begin(), b.passage_ids.end(), passage_id) != b.passage_ids.end();
      if (has_a && has_p) return true;
    }
    return false;
  }

  void insert_expression(const segment::ExpressionSpan& e) {
    const auto p = passage(e.passage_id);
    if (!p) fail(ErrorCode::kNotFound, "unknown passage " + e.passage_id, "passage_id");
    if (e.char_end <= e.char_start || !on_boundary(p->text, e.char_start) || !on_boundary(p->text, e.char_end)) {
      fail(ErrorCode::kValidation, "expression " + e.expr_id + " has an invalid span", "char_start");
    }
    const auto covered = p->text.substr(e.char_start, e.char_end - e.char_start);
    if (!e.text.empty() && e.text != covered) {
      fail(ErrorCode::kValidation, "expression " + e.expr_id + " text does not match its passage", "text");
    }
    auto stored = e;
    stored.text = covered;
    stored.tokens.clear();
    auto body = segment::to_json(stored);
    body.erase("tokens");
    Statement q(db, "INSERT OR REPLACE INTO expressions(expr_id, passage_id, char_start, body) VALUES (?, ?, ?, ?)");
    q.bind(1, e.expr_id).bind(2, e.passage_id).bind(3, static_cast<std::int64_t>(e.char_start)).bind(4, body.dump());
    q.step();
  }

  void insert_batch(const Batch& b) {
    validate(b);
    for (const auto& pid : b.passage_ids) {
      if (!passage(pid)) fail(ErrorCode::kNotFound, "batch " + b.batch_id + " names unknown passage " + pid, "passage_ids");
    }
    Statement q(db, "INSERT OR REPLACE INTO batches(batch_id, body) VALUES (?, ?)");
    q.bind(1, b.batch_id).bind(2, to_json(b).dump()).step();
  }

  void check_rating(const RatingRecord& r) const {
    validate(r);
    if (!known_annotator(r.annotator_id)) fail(ErrorCode::kNotFound, "unknown annotator " + r.annotator_id, "annotator_id");
    const auto e = expression(r.expr_id);
    if (!e) fail(ErrorCode::kNotFound, "unknown expression " + r.expr_id, "expr_id");
    if (!e->pre_highlighted) fail(ErrorCode::kValidation, "expression " + r.expr_id + " is not pre-highlighted", "expr_id");
    if (!assigned(r.annotator_id, e->passage_id)) {
      fail(ErrorCode::kForbidden, "annotator " + r.annotator_id + " is not assigned to passage " + e->passage_id,
           "expr_id");
    }
  }

  void upsert_rating(const RatingRecord& r) {
    Statement q(db, "INSERT OR REPLACE INTO ratings(annotator_id, expr_id, body) VALUES (?, ?, ?)");
    q.bind(1, r.annotator_id).bind(2, r.expr_id).bind(3, to_json(r).dump()).step();
  }

  void append_audit(std::int64_t seq, const std::string& record_id, const RatingRecord& r) {
    AuditEntry a{static_cast<std::size_t>(seq), record_id, r};
    Statement q(db, "INSERT INTO rating_audit(seq, record_id, body) VALUES (?, ?, ?)");
    q.bind(1, seq).bind(2, record_id).bind(3, to_json(a).dump()).step();
  }

  std::int64_t next_audit_seq() const {
    Statement q(db, "SELECT COALESCE(MAX(seq), 0) + 1 FROM rating_audit");
    q.step();
    return q.integer(0);
  }

  // Validates and fills duplicate_of. Does not assign an id.
  void check_highlight(HighlightRecord& h) const {
    validate(h);
    if (!known_annotator(h.annotator_id)) fail(ErrorCode::kNotFound, "unknown annotator " + h.annotator_id, "annotator_id");
    const auto p = passage(h.passage_id);
    if (!p) fail(ErrorCode::kNotFound, "unknown passage " + h.passage_id, "passage_id");
    if (h.char_end > p->text.size()) {
      fail(ErrorCode::kValidation, "highlight exceeds passage bounds", "char_end");
    }
    if (!on_boundary(p->text, h.char_start) || !on_boundary(p->text, h.char_end)) {
      fail(ErrorCode::kValidation, "highlight offsets split a character", "char_start");
    }
    if (utf8::trim(std::string_view(p->text).substr(h.char_start, h.char_end - h.char_start)).empty()) {
      fail(ErrorCode::kValidation, "highlight covers only whitespace", "char_start");
    }
    if (!assigned(h.annotator_id, h.passage_id)) {
      fail(ErrorCode::kForbidden, "annotator " + h.annotator_id + " is not assigned to passage " + h.passage_id,
           "passage_id");
    }
    h.duplicate_of.reset();
    for (const auto& e : expressions(&h.passage_id)) {
      if (e.pre_highlighted && e.char_start == h.char_start && e.char_end == h.char_end) {
        h.duplicate_of = e.expr_id;
        break;
      }
    }
  }

  bool highlight_exists(const std::string& id) const {
    Statement q(db, "SELECT 1 FROM highlights WHERE record_id = ?");
    q.bind(1, id);
    return q.step();
  }

  void write_highlight(const HighlightRecord& h) {
    Statement q(db,
                "INSERT OR REPLACE INTO highlights(record_id, annotator_id, passage_id, char_start, char_end, body) "
                "VALUES (?, ?, ?, ?, ?, ?)");
    q.bind(1, h.record_id)
        .bind(2, h.annotator_id)
        .bind(3, h.passage_id)
        .bind(4, static_cast<std::int64_t>(h.char_start))
        .bind(5, static_cast<std::int64_t>(h.char_end))
        .bind(6, to_json(h).dump());
    q.step();
  }

  std::int64_t count(const char* table) const {
    Statement q(db, (std::string("SELECT COUNT(*) FROM ") + table).c_str());
    q.step();
    return q.integer(0);
  }
};

Store::Store(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Store::Store(Store&&) noexcept = default;
Store& Store::operator=(Store&&) noexcept = default;
Store::~Store() = default;

Store Store::open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto impl = std::make_unique<Impl>();
  if (sqlite3_open_v2(path.c_str(), &impl->db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    const std::string msg = impl->db ? sqlite3_errmsg(impl->db) : "out of memory";
    fail(ErrorCode::kIo, "cannot open store " + path.string() + ": " + msg, "store");
  }
  exec(impl->db, "PRAGMA journal_mode = WAL");
  exec(impl->db, "PRAGMA synchronous = NORMAL");
  impl->init();
  return Store(std::move(impl));
}

Store Store::in_memory() {
  auto impl = std::make_unique<Impl>();
  if (sqlite3_open(":memory:", &impl->db) != SQLITE_OK) fail(ErrorCode::kInternal, "cannot open in-memory store");
  impl->init();
  return Store(std::move(impl));
}

void Store::put_passage(const segment::Passage& p) {
  if (p.passage_id.empty()) fail(ErrorCode::kValidation, "passage_id must not be empty", "passage_id");
  if (!utf8::is_valid(p.text)) fail(ErrorCode::kValidation, "passage " + p.passage_id + " is not valid UTF-8", "text");
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db, "INSERT OR REPLACE INTO passages(passage_id, body) VALUES (?, ?)");
  q.bind(1, p.passage_id).bind(2, segment::to_json(p).dump()).step();
}

void Store::put_expression(const segment::ExpressionSpan& e) {
  std::lock_guard lock(impl_->mu);
  impl_->insert_expression(e);
}

void Store::put_profile(const segment::NoveltyProfile& p) {
  std::lock_guard lock(impl_->mu);
  if (!impl_->expression(p.expr_id)) fail(ErrorCode::kNotFound, "profile for unknown expression " + p.expr_id, "expr_id");
  Statement q(impl_->db, "INSERT OR REPLACE INTO profiles(expr_id, body) VALUES (?, ?)");
  q.bind(1, p.expr_id).bind(2, segment::to_json(p).dump()).step();
}

void Store::put_batch(const Batch& b) {
  std::lock_guard lock(impl_->mu);
  impl_->insert_batch(b);
}

std::string Store::record_rating(const RatingRecord& r) {
  std::lock_guard lock(impl_->mu);
  impl_->check_rating(r);
  const auto id = rating_record_id(r.annotator_id, r.expr_id);
  Transaction tx(impl_->db);
  impl_->upsert_rating(r);
  impl_->append_audit(impl_->next_audit_seq(), id, r);
  tx.commit();
  return id;
}

HighlightRecord Store::record_highlight(HighlightRecord h) {
  std::lock_guard lock(impl_->mu);
  impl_->check_highlight(h);
  Transaction tx(impl_->db);
  Statement same(impl_->db,
                 "SELECT record_id FROM highlights WHERE annotator_id = ? AND passage_id = ? AND char_start = ? "
                 "AND char_end = ?");
  same.bind(1, h.annotator_id)
      .bind(2, h.passage_id)
      .bind(3, static_cast<std::int64_t>(h.char_start))
      .bind(4, static_cast<std::int64_t>(h.char_end));
  if (same.step()) {
    h.record_id = same.text(0);
  } else {
    auto n = static_cast<std::size_t>(impl_->count("highlights")) + 1;
    while (impl_->highlight_exists(highlight_id(n))) ++n;
    h.record_id = highlight_id(n);
  }
  impl_->write_highlight(h);
  tx.commit();
  return h;
}

std::vector<segment::Passage> Store::passages() const {
  std::lock_guard lock(impl_->mu);
  std::vector<segment::Passage> out;
  Statement q(impl_->db, "SELECT body FROM passages ORDER BY passage_id");
  while (q.step()) out.push_back(segment::passage_from_json(parse_body(q.text(0))));
  return out;
}

std::optional<segment::Passage> Store::passage(const std::string& passage_id) const {
  std::lock_guard lock(impl_->mu);
  return impl_->passage(passage_id);
}

std::vector<segment::ExpressionSpan> Store::expressions() const {
  std::lock_guard lock(impl_->mu);
  return impl_->expressions(nullptr);
}

std::vector<segment::ExpressionSpan> Store::expressions(const std::string& passage_id) const {
  std::lock_guard lock(impl_->mu);
  return impl_->expressions(&passage_id);
}

std::optional<segment::ExpressionSpan> Store::expression(const std::string& expr_id) const {
  std::lock_guard lock(impl_->mu);
  return impl_->expression(expr_id);
}

std::vector<segment::NoveltyProfile> Store::profiles() const {
  std::lock_guard lock(impl_->mu);
  std::vector<segment::NoveltyProfile> out;
  Statement q(impl_->db,
              "SELECT p.body FROM profiles p JOIN expressions e ON e.expr_id = p.expr_id "
              "ORDER BY e.passage_id, e.char_start, e.expr_id");
  while (q.step()) out.push_back(segment::profile_from_json(parse_body(q.text(0))));
  return out;
}

std::vector<Batch> Store::batches() const {
  std::lock_guard lock(impl_->mu);
  return impl_->batches();
}

std::optional<Batch> Store::batch(const std::string& batch_id) const {
  std::lock_guard lock(impl_->mu);
  Statement q(impl_->db, "SELECT body FROM batches WHERE batch_id = ?");
  q.bind(1, batch_id);
  if (!q.step()) return std::nullopt;
  return batch_from_json(parse_body(q.text(0)));
}

std::vector<std::string> Store::annotators() const {
  std::set<std::string> all;
  for (const auto& b : batches()) all.insert(b.assigned_annotators.begin(), b.assigned_annotators.end());
  return {all.begin(), all.end()};
}

bool Store::is_assigned(const std::string& annotator_id, const std::string& passage_id) const {
  std::lock_guard lock(impl_->mu);
  return impl_->assigned(annotator_id, passage_id);
}

std::vector<RatingRecord> Store::ratings() const {
  std::lock_guard lock(impl_->mu);
  std::vector<RatingRecord> out;
  Statement q(impl_->db, "SELECT body FROM ratings ORDER BY expr_id, annotator_id");
  while (q.step()) out.push_back(rating_from_json(parse_body(q.text(0))));
  return out;
}

std::vector<RatingRecord> Store::ratings_by(const std::string& annotator_id) const {
  std::lock_guard lock(impl_->mu);
  std::vector<RatingRecord> out;
  Statement q(impl_->db, "SELECT body FROM ratings WHERE annotator_id = ? ORDER BY expr_id");
  q.bind(1, annotator_id);
  while (q.step()) out.push_back(rating_from_json(parse_body(q.text(0))));
  return out;
}

std::vector<HighlightRecord> Store::highlights() const {
  std::lock_guard lock(impl_->mu);
  std::vector<HighlightRecord> out;
  Statement q(impl_->db, "SELECT body FROM highlights ORDER BY record_id");
  while (q.step()) out.push_back(highlight_from_json(parse_body(q.text(0))));
  return out;
}

std::vector<AuditEntry> Store::audit() const {
  std::lock_guard lock(impl_->mu);
  std::vector<AuditEntry> out;
  Statement q(impl_->db, "SELECT body FROM rating_audit ORDER BY seq");
  while (q.step()) out.push_back(audit_from_json(parse_body(q.text(0))));
  return out;
}

Dataset Store::snapshot() const {
  std::lock_guard lock(impl_->mu);
  // Single connection under the mutex: every read below sees the same state.
  Dataset d;
  {
    Statement q(impl_->db, "SELECT body FROM passages ORDER BY passage_id");
    while (q.step()) d.passages.push_back(segment::passage_from_json(parse_body(q.text(0))));
  }
  d.expressions = impl_->expressions(nullptr);
  {
    Statement q(impl_->db,
                "SELECT p.body FROM profiles p JOIN expressions e ON e.expr_id = p.expr_id "
                "ORDER BY e.passage_id, e.char_start, e.expr_id");
    while (q.step()) d.profiles.push_back(segment::profile_from_json(parse_body(q.text(0))));
  }
  d.batches = impl_->batches();
  {
    Statement q(impl_->db, "SELECT body FROM ratings ORDER BY expr_id, annotator_id");
    while (q.step()) d.ratings.push_back(rating_from_json(parse_body(q.text(0))));
  }
  {
    Statement q(impl_->db, "SELECT body FROM highlights ORDER BY record_id");
    while (q.step()) d.highlights.push_back(highlight_from_json(parse_body(q.text(0))));
  }
  {
    Statement q(impl_->db, "SELECT body FROM rating_audit ORDER BY seq");
    while (q.step()) d.audit.push_back(audit_from_json(parse_body(q.text(0))));
  }
  return d;
}

bool Store::empty() const {
  std::lock_guard lock(impl_->mu);
  for (const char* t : {"passages", "expressions", "batches", "ratings", "highlights", "rating_audit"}) {
    if (impl_->count(t) != 0) return false;
  }
  return true;
}

void Store::restore(const Dataset& d) {
  if (!empty()) fail(ErrorCode::kConflict, "restore needs an empty store", "store");
  segment::validate_passages(d.passages);
  std::lock_guard lock(impl_->mu);
  Transaction tx(impl_->db);
  for (const auto& p : d.passages) {
    if (!utf8::is_valid(p.text)) fail(ErrorCode::kValidation, "passage " + p.passage_id + " is not valid UTF-8", "text");
    Statement q(impl_->db, "INSERT INTO passages(passage_id, body) VALUES (?, ?)");
    q.bind(1, p.passage_id).bind(2, segment::to_json(p).dump()).step();
  }
  for (const auto& e : d.expressions) impl_->insert_expression(e);
  for (const auto& p : d.profiles) {
    if (!impl_->expression(p.expr_id)) fail(ErrorCode::kNotFound, "profile for unknown expression " + p.expr_id, "expr_id");
    Statement q(impl_->db, "INSERT INTO profiles(expr_id, body) VALUES (?, ?)");
    q.bind(1, p.expr_id).bind(2, segment::to_json(p).dump()).step();
  }
  for (const auto& b : d.batches) impl_->insert_batch(b);
  for (const auto& r : d.ratings) {
    impl_->check_rating(r);
    impl_->upsert_rating(r);
  }
  if (d.audit.empty()) {
    std::int64_t seq = 1;
    for (const auto& r : d.ratings) impl_->append_audit(seq++, rating_record_id(r.annotator_id, r.expr_id), r);
  } else {
    for (const auto& a : d.audit) impl_->append_audit(static_cast<std::int64_t>(a.seq), a.record_id, a.rating);
  }
  std::size_t n = 0;
  for (auto h : d.highlights) {
    impl_->check_highlight(h);
    if (h.record_id.empty()) {
      do {
        h.record_id = highlight_id(++n);
      } while (impl_->highlight_exists(h.record_id));
    }
    if (impl_->highlight_exists(h.record_id)) fail(ErrorCode::kConflict, "duplicate highlight id " + h.record_id, "record_id");
    impl_->write_highlight(h);
  }
  tx.commit();
}

}  // namespace novelty::annotate
