#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "novelty/annotate/store.hpp"
#include "novelty/util/error.hpp"
#include "novelty/util/io.hpp"

namespace novelty::service {

using Clock = std::function<std::int64_t()>;
/// Seconds since the epoch from the system clock.
std::int64_t system_now();

/// HMAC-SHA256 signed tokens: hex(annotator|expiry) "." hex(mac).
class TokenIssuer {
 public:
  /// Empty secret is a config error.
  explicit TokenIssuer(std::string secret);

  std::string issue(const std::string& annotator_id, std::int64_t expires_at) const;
  /// Annotator id, or an auth error for malformed, forged or expired tokens.
  std::string verify(const std::string& token, std::int64_t now) const;

 private:
  std::string mac(const std::string& payload) const;
  std::string secret_;
};

/// Transport-independent handlers. Every method returns the response body;
/// failures are novelty::Error with a machine-readable code.
class AnnotationService {
 public:
  AnnotationService(annotate::Store& store, TokenIssuer tokens, Clock clock = system_now);

  std::string authenticate(const std::string& token) const;

  io::Json list_batches(const std::string& token) const;
  /// Text, checksum, pre-highlighted spans with completion for this
  /// annotator, and the annotator's own highlights. The passage source is
  /// never included.
  io::Json get_passage(const std::string& token, const std::string& passage_id) const;
  io::Json submit_rating(const std::string& token, const io::Json& body);
  io::Json submit_highlight(const std::string& token, const io::Json& body);
  /// {"accepted": bool, "is_training": bool, "missing": [...]}.
  io::Json complete_batch(const std::string& token, const std::string& batch_id) const;

 private:
  annotate::Store& store_;
  TokenIssuer tokens_;
  Clock clock_;
};

/// Numeric HTTP status for an error code.
int http_status(ErrorCode code) noexcept;
io::Json error_body(const Error& e);

}  // namespace novelty::service
