#pragma once

#include <memory>
#include <string>

#include "novelty/service/service.hpp"

namespace novelty::service {

struct ServerConfig {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
};

/// Routes under /v1:
///   GET  /v1/batches
///   GET  /v1/passages/{id}
///   POST /v1/ratings
///   POST /v1/highlights
///   POST /v1/batches/{id}/complete
/// The token travels as "Authorization: Bearer <token>".
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the port. Config error when binding fails.
  int bind(const ServerConfig& config);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace novelty::service
