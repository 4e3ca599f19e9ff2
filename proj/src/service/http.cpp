#include "novelty/service/http.hpp"

#include <httplib.h>

#include "novelty/util/error.hpp"

namespace novelty::service {
namespace {

std::string bearer(const httplib::Request& req) {
  const auto h = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (h.size() > kPrefix.size() && h.compare(0, kPrefix.size(), kPrefix) == 0) return h.substr(kPrefix.size());
  return {};
}

void reply(httplib::Response& res, int status, const io::Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

io::Json parse_body(const httplib::Request& req) {
  try {
    return io::Json::parse(req.body);
  } catch (const io::Json::parse_error&) {
    fail(ErrorCode::kFormat, "request body is not valid JSON", "body");
  }
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply(res, http_status(e.code()), error_body(e));
    } catch (const io::Json::exception& e) {
      reply(res, 400, error_body(Error(ErrorCode::kFormat, e.what())));
    } catch (const std::exception& e) {
      reply(res, 500, error_body(Error(ErrorCode::kInternal, e.what())));
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  AnnotationService& service;
  httplib::Server server;

  explicit Impl(AnnotationService& s) : service(s) {
    server.Get("/v1/batches", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, {{"batches", service.list_batches(bearer(req))}});
               }));
    server.Get(R"(/v1/passages/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, service.get_passage(bearer(req), req.matches[1]));
               }));
    server.Post("/v1/ratings", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, 201, service.submit_rating(bearer(req), parse_body(req)));
                }));
    server.Post("/v1/highlights", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, 201, service.submit_highlight(bearer(req), parse_body(req)));
                }));
    server.Post(R"(/v1/batches/([^/]+)/complete)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto out = service.complete_batch(bearer(req), req.matches[1]);
                  reply(res, out["accepted"].get<bool>() ? 200 : 409, out);
                }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      const auto code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kFormat;
      reply(res, res.status, error_body(Error(code, "no such route")));
    });
  }
};

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const ServerConfig& config) {
  int port = config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(config.host);
  } else if (!impl_->server.bind_to_port(config.host, port)) {
    port = -1;
  }
  if (port < 0) fail(ErrorCode::kConfig, "cannot bind " + config.host + ":" + std::to_string(config.port), "bind");
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace novelty::service
