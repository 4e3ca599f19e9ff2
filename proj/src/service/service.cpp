#include "novelty/service/service.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <chrono>
#include <set>

#include "novelty/util/error.hpp"

namespace novelty::service {
namespace {

std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(kHex[data[i] >> 4]);
    out.push_back(kHex[data[i] & 0xF]);
  }
  return out;
}

bool from_hex(const std::string& hex, std::string& out) {
  if (hex.size() % 2 != 0) return false;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  out.clear();
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return false;
    out.push_back(static_cast<char>(hi * 16 + lo));
  }
  return true;
}

[[noreturn]] void deny(const std::string& why) { fail(ErrorCode::kAuth, why, "token"); }

}  // namespace

std::int64_t system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

TokenIssuer::TokenIssuer(std::string secret) : secret_(std::move(secret)) {
  if (secret_.empty()) fail(ErrorCode::kConfig, "session secret must not be empty", "secret");
}

std::string TokenIssuer::mac(const std::string& payload) const {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), secret_.data(), static_cast<int>(secret_.size()),
            reinterpret_cast<const unsigned char*>(payload.data()), payload.size(), digest, &len)) {
    fail(ErrorCode::kInternal, "hmac failed");
  }
  return to_hex(digest, len);
}

std::string TokenIssuer::issue(const std::string& annotator_id, std::int64_t expires_at) const {
  if (annotator_id.empty() || annotator_id.find('|') != std::string::npos) {
    fail(ErrorCode::kArgument, "annotator id must be non-empty and must not contain '|'", "annotator");
  }
  const auto payload = annotator_id + "|" + std::to_string(expires_at);
  return to_hex(reinterpret_cast<const unsigned char*>(payload.data()), payload.size()) + "." + mac(payload);
}

std::string TokenIssuer::verify(const std::string& token, std::int64_t now) const {
  const auto dot = token.find('.');
  if (token.empty()) deny("missing session token");
  if (dot == std::string::npos) deny("malformed session token");
  std::string payload;
  if (!from_hex(token.substr(0, dot), payload)) deny("malformed session token");
  const auto expected = mac(payload);
  const auto given = token.substr(dot + 1);
  if (given.size() != expected.size() || CRYPTO_memcmp(given.data(), expected.data(), given.size()) != 0) {
    deny("invalid session token");
  }
  const auto bar = payload.rfind('|');
  if (bar == std::string::npos || bar == 0) deny("malformed session token");
  std::int64_t expiry = 0;
  try {
    expiry = std::stoll(payload.substr(bar + 1));
  } catch (const std::exception&) {
    deny("malformed session token");
  }
  if (now >= expiry) deny("session token expired");
  return payload.substr(0, bar);
}

AnnotationService::AnnotationService(annotate::Store& store, TokenIssuer tokens, Clock clock)
    : store_(store), tokens_(std::move(tokens)), clock_(std::move(clock)) {}

std::string AnnotationService::authenticate(const std::string& token) const {
  return tokens_.verify(token, clock_());
}

io::Json AnnotationService::list_batches(const std::string& token) const {
  const auto who = authenticate(token);
  std::set<std::string> rated;
  for (const auto& r : store_.ratings_by(who)) rated.insert(r.expr_id);
  io::Json out = io::Json::array();
  for (const auto& b : store_.batches()) {
    const auto& people = b.assigned_annotators;
    if (std::find(people.begin(), people.end(), who) == people.end()) continue;
    std::size_t total = 0;
    std::size_t done = 0;
    for (const auto& pid : b.passage_ids) {
      for (const auto& e : store_.expressions(pid)) {
        if (!e.pre_highlighted) continue;
        ++total;
        done += rated.count(e.expr_id);
      }
    }
    const double progress = total == 0 ? 100.0 : 100.0 * static_cast<double>(done) / static_cast<double>(total);
    out.push_back({{"batch_id", b.batch_id},
                   {"passage_ids", b.passage_ids},
                   {"is_training", b.is_training},
                   {"rated", done},
                   {"total", total},
                   {"progress", progress}});
  }
  return out;
}

io::Json AnnotationService::get_passage(const std::string& token, const std::string& passage_id) const {
  const auto who = authenticate(token);
  const auto p = store_.passage(passage_id);
  if (!p) fail(ErrorCode::kNotFound, "unknown passage " + passage_id, "passage_id");
  if (!store_.is_assigned(who, passage_id)) {
    fail(ErrorCode::kForbidden, "passage " + passage_id + " is not assigned to " + who, "passage_id");
  }
  std::set<std::string> rated;
  for (const auto& r : store_.ratings_by(who)) rated.insert(r.expr_id);
  io::Json spans = io::Json::array();
  std::size_t done = 0;
  for (const auto& e : store_.expressions(passage_id)) {
    if (!e.pre_highlighted) continue;
    const bool complete = rated.count(e.expr_id) > 0;
    done += complete ? 1 : 0;
    spans.push_back({{"expr_id", e.expr_id},
                     {"char_start", e.char_start},
                     {"char_end", e.char_end},
                     {"text", e.text},
                     {"complete", complete}});
  }
  io::Json own = io::Json::array();
  for (const auto& h : store_.highlights()) {
    if (h.annotator_id != who || h.passage_id != passage_id) continue;
    own.push_back({{"record_id", h.record_id},
                   {"char_start", h.char_start},
                   {"char_end", h.char_end},
                   {"rationale", h.rationale},
                   {"duplicate_of", h.duplicate_of ? io::Json(*h.duplicate_of) : io::Json(nullptr)}});
  }
  return {{"passage_id", p->passage_id},
          {"text", p->text},
          {"checksum", io::sha256_hex(p->text)},
          {"spans", spans},
          {"completed", done},
          {"total", spans.size()},
          {"highlights", own}};
}

namespace {

io::Json with_annotator(const io::Json& body, const std::string& who) {
  if (!body.is_object()) fail(ErrorCode::kFormat, "request body must be a JSON object");
  auto j = body;
  if (j.contains("annotator_id") && !j["annotator_id"].is_null()) {
    if (!j["annotator_id"].is_string() || j["annotator_id"].get<std::string>() != who) {
      fail(ErrorCode::kForbidden, "annotator_id does not match the session", "annotator_id");
    }
  }
  j["annotator_id"] = who;
  return j;
}

}  // namespace

io::Json AnnotationService::submit_rating(const std::string& token, const io::Json& body) {
  const auto who = authenticate(token);
  const auto r = annotate::rating_from_json(with_annotator(body, who));
  const auto id = store_.record_rating(r);
  return {{"record_id", id}, {"nesting_violation", r.nesting_violation()}};
}

io::Json AnnotationService::submit_highlight(const std::string& token, const io::Json& body) {
  const auto who = authenticate(token);
  auto j = with_annotator(body, who);
  j.erase("record_id");
  j.erase("duplicate_of");
  const auto h = store_.record_highlight(annotate::highlight_from_json(j));
  return {{"record_id", h.record_id}, {"duplicate_of", h.duplicate_of ? io::Json(*h.duplicate_of) : io::Json(nullptr)}};
}

io::Json AnnotationService::complete_batch(const std::string& token, const std::string& batch_id) const {
  const auto who = authenticate(token);
  const auto b = store_.batch(batch_id);
  if (!b) fail(ErrorCode::kNotFound, "unknown batch " + batch_id, "batch_id");
  const auto& people = b->assigned_annotators;
  if (std::find(people.begin(), people.end(), who) == people.end()) {
    fail(ErrorCode::kForbidden, "batch " + batch_id + " is not assigned to " + who, "batch_id");
  }
  std::set<std::string> rated;
  for (const auto& r : store_.ratings_by(who)) rated.insert(r.expr_id);
  io::Json missing = io::Json::array();
  for (const auto& pid : b->passage_ids) {
    for (const auto& e : store_.expressions(pid)) {
      if (e.pre_highlighted && !rated.count(e.expr_id)) missing.push_back({{"passage_id", pid}, {"expr_id", e.expr_id}});
    }
  }
  return {{"batch_id", batch_id}, {"accepted", missing.empty()}, {"is_training", b->is_training}, {"missing", missing}};
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kArgument:
    case ErrorCode::kFormat:
      return 400;
    case ErrorCode::kAuth:
      return 401;
    case ErrorCode::kForbidden:
      return 403;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kValidation:
      return 422;
    case ErrorCode::kConfig:
    case ErrorCode::kIo:
    case ErrorCode::kInternal:
      return 500;
  }
  return 500;
}

io::Json error_body(const Error& e) {
  return {{"code", to_string(e.code())},
          {"message", e.what()},
          {"field", e.field().empty() ? io::Json(nullptr) : io::Json(e.field())}};
}

}  // namespace novelty::service
