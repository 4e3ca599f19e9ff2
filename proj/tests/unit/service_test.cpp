#include <doctest.h>
#include <httplib.h>

#include <thread>

#include "novelty/annotate/export.hpp"
#include "novelty/service/http.hpp"
#include "support/annotate_fixture.hpp"
#include "support/temp_dir.hpp"

using namespace novelty;
using namespace novelty::service;
using novelty::io::Json;

namespace {

constexpr std::int64_t kNow = 1'700'000'000;

void populate(annotate::Store& s) {
  fixture::populate(s);
  // Make b1 hold six pre-highlights and add a passage with none.
  auto p2 = s.passage("p2").value();
  s.put_expression(fixture::span(p2, "Nothing else moved", "p2:003", true));
  s.put_passage({"p4", "Plain words here.", "gpt-5", "p1"});
  s.put_expression(fixture::span(s.passage("p4").value(), "Plain words here", "p4:000", false));
  s.put_batch({"b4", {"p4"}, {"a1"}, false});
}

struct Running {
  annotate::Store store;
  TokenIssuer tokens{"test-secret"};
  AnnotationService service;
  HttpServer http;
  int port = 0;
  std::thread thread;

  explicit Running(annotate::Store s)
      : store(std::move(s)), service(store, tokens, [] { return kNow; }), http(service) {
    port = http.bind({"127.0.0.1", 0});
    thread = std::thread([this] { http.listen(); });
  }
  ~Running() {
    http.stop();
    thread.join();
  }

  std::string token(const std::string& who) const { return tokens.issue(who, kNow + 3600); }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_connection_timeout(5);
    return c;
  }

  httplib::Result get(const std::string& who, const std::string& path) const {
    auto c = client();
    return c.Get(path.c_str(), {{"Authorization", "Bearer " + token(who)}});
  }
  httplib::Result post(const std::string& who, const std::string& path, const std::string& body) const {
    auto c = client();
    return c.Post(path.c_str(), {{"Authorization", "Bearer " + token(who)}}, body, "application/json");
  }
};

std::unique_ptr<Running> start() {
  auto s = annotate::Store::in_memory();
  populate(s);
  return std::make_unique<Running>(std::move(s));
}

Json rating_body(const std::string& expr, bool s, bool p, bool n, const char* rationale = "fresh",
                 const char* ts = "2025-01-01T00:00:00Z") {
  Json j = {{"expr_id", expr}, {"sensical", s}, {"pragmatic", p}, {"novel", n}, {"timestamp", ts}};
  if (rationale) j["rationale"] = rationale;
  return j;
}

Json highlight_body(const std::string& passage_text, const std::string& span, const char* ts = "2025-01-02T00:00:00Z") {
  const auto at = passage_text.find(span);
  return {{"passage_id", "p1"}, {"char_start", at}, {"char_end", at + span.size()}, {"rationale", "vivid"}, {"timestamp", ts}};
}

}  // namespace

TEST_CASE("session tokens") {
  TokenIssuer t("secret");
  const auto tok = t.issue("a1", 100);
  CHECK(t.verify(tok, 99) == "a1");
  CHECK_THROWS_AS(t.verify(tok, 100), Error);
  CHECK_THROWS_AS(TokenIssuer("other").verify(tok, 50), Error);
  auto forged = tok;
  forged[0] = forged[0] == '6' ? '7' : '6';
  CHECK_THROWS_AS(t.verify(forged, 50), Error);
  CHECK_THROWS_AS(t.verify("", 50), Error);
  CHECK_THROWS_AS(t.verify("nodot", 50), Error);
  CHECK_THROWS_AS(TokenIssuer(""), Error);
  try {
    t.verify(forged, 50);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAuth);
  }
}

TEST_CASE("GET /v1/batches") {
  auto srv = start();
  auto res = srv->get("a9", "/v1/batches");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body)["batches"].empty());

  res = srv->get("a1", "/v1/batches");
  auto batches = Json::parse(res->body)["batches"];
  REQUIRE(batches.size() == 3);
  CHECK(batches[0]["batch_id"] == "b1");
  CHECK(batches[0]["progress"] == 0.0);
  CHECK(batches[0]["total"] == 6);

  for (const char* e : {"p1:000", "p1:001", "p2:001"}) {
    CHECK(srv->post("a1", "/v1/ratings", rating_body(e, true, true, false).dump())->status == 201);
  }
  batches = Json::parse(srv->get("a1", "/v1/batches")->body)["batches"];
  CHECK(batches[0]["progress"] == 50.0);
  CHECK(batches[0]["rated"] == 3);

  httplib::Client c = srv->client();
  res = c.Get("/v1/batches");
  CHECK(res->status == 401);
  const auto err = Json::parse(res->body);
  CHECK(err["code"] == "auth");
  CHECK(err.contains("message"));
  CHECK(err["field"] == "token");
}

TEST_CASE("GET /v1/passages/{id}") {
  auto srv = start();
  auto res = srv->get("a1", "/v1/passages/p1");
  REQUIRE(res->status == 200);
  auto view = Json::parse(res->body);
  const std::string text = view["text"];
  CHECK(view["checksum"] == io::sha256_hex(text));
  REQUIRE(view["spans"].size() == 3);
  std::size_t last = 0;
  for (const auto& s : view["spans"]) {
    const std::size_t a = s["char_start"];
    const std::size_t b = s["char_end"];
    CHECK(a >= last);
    last = b;
    CHECK(text.substr(a, b - a) == s["text"].get<std::string>());
    CHECK(s["complete"] == false);
  }
  CHECK_FALSE(view.contains("source"));

  // Blinding: nothing in the model passage view reveals its origin.
  const auto p2 = srv->get("a1", "/v1/passages/p2")->body;
  CHECK(p2.find("olmo") == std::string::npos);
  CHECK(p2.find("source") == std::string::npos);
  CHECK(p2.find("seed") == std::string::npos);

  CHECK(Json::parse(srv->get("a1", "/v1/passages/p4")->body)["spans"].empty());
  CHECK(srv->get("a4", "/v1/passages/p1")->status == 403);
  CHECK(srv->get("a1", "/v1/passages/zz")->status == 404);

  srv->post("a1", "/v1/ratings", rating_body("p1:001", true, true, false).dump());
  view = Json::parse(srv->get("a1", "/v1/passages/p1")->body);
  CHECK(view["spans"][0]["complete"] == false);
  CHECK(view["spans"][1]["complete"] == true);
  CHECK(view["completed"] == 1);
  // Completion is per annotator.
  CHECK(Json::parse(srv->get("a2", "/v1/passages/p1")->body)["completed"] == 0);
}

TEST_CASE("POST /v1/ratings") {
  auto srv = start();
  auto res = srv->post("a1", "/v1/ratings", rating_body("p1:000", true, true, true).dump());
  CHECK(res->status == 201);
  CHECK(Json::parse(res->body)["record_id"] == "a1/p1:000");

  res = srv->post("a1", "/v1/ratings", rating_body("p1:000", true, true, true, "").dump());
  CHECK(res->status == 422);
  auto err = Json::parse(res->body);
  CHECK(err["code"] == "validation");
  CHECK(err["field"] == "rationale");

  res = srv->post("a1", "/v1/ratings", rating_body("p1:000", false, true, false, nullptr).dump());
  CHECK(res->status == 201);
  CHECK(Json::parse(res->body)["nesting_violation"] == true);

  CHECK(srv->post("a1", "/v1/ratings", "{not json")->status == 400);
  CHECK(srv->post("a1", "/v1/ratings", Json{{"expr_id", "p1:000"}}.dump())->status == 400);
  auto other = rating_body("p1:000", true, true, false);
  other["annotator_id"] = "a2";
  CHECK(srv->post("a1", "/v1/ratings", other.dump())->status == 403);
  CHECK(srv->post("a1", "/v1/ratings", rating_body("p1:999", true, true, false).dump())->status == 404);
  CHECK(srv->post("a4", "/v1/ratings", rating_body("p1:000", true, true, false).dump())->status == 403);
  CHECK(srv->store.ratings().size() == 1);
  CHECK(srv->store.audit().size() == 2);
}

TEST_CASE("POST /v1/highlights") {
  auto srv = start();
  auto res = srv->post("a2", "/v1/highlights", highlight_body(fixture::kP1, "dark watex").dump());
  CHECK(res->status == 201);
  auto ack = Json::parse(res->body);
  CHECK(ack["record_id"] == "hl-000001");
  CHECK(ack["duplicate_of"].is_null());

  res = srv->post("a2", "/v1/highlights", highlight_body(fixture::kP1, "Dark water rose").dump());
  CHECK(Json::parse(res->body)["duplicate_of"] == "p1:002");

  auto bad = highlight_body(fixture::kP1, "shore.");
  bad["char_end"] = 10000;
  res = srv->post("a2", "/v1/highlights", bad.dump());
  CHECK(res->status == 422);
  CHECK(Json::parse(res->body)["field"] == "char_end");

  const auto view = Json::parse(srv->get("a2", "/v1/passages/p1")->body);
  CHECK(view["highlights"].size() == 2);
  CHECK(Json::parse(srv->get("a1", "/v1/passages/p1")->body)["highlights"].empty());
}

TEST_CASE("POST /v1/batches/{id}/complete") {
  auto srv = start();
  const std::vector<std::string> all = {"p1:000", "p1:001", "p1:002", "p2:001", "p2:002", "p2:003"};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    srv->post("a1", "/v1/ratings", rating_body(all[i], true, true, false).dump());
  }
  auto res = srv->post("a1", "/v1/batches/b1/complete", "");
  CHECK(res->status == 409);
  auto body = Json::parse(res->body);
  CHECK(body["accepted"] == false);
  REQUIRE(body["missing"].size() == 1);
  CHECK(body["missing"][0] == Json{{"passage_id", "p2"}, {"expr_id", "p2:003"}});

  srv->post("a1", "/v1/ratings", rating_body("p2:003", true, true, false).dump());
  res = srv->post("a1", "/v1/batches/b1/complete", "");
  CHECK(res->status == 200);
  body = Json::parse(res->body);
  CHECK(body["accepted"] == true);
  CHECK(body["is_training"] == false);

  srv->post("a1", "/v1/ratings", rating_body("p3:000", true, true, false).dump());
  body = Json::parse(srv->post("a1", "/v1/batches/train/complete", "")->body);
  CHECK(body["accepted"] == true);
  CHECK(body["is_training"] == true);

  CHECK(srv->post("a1", "/v1/batches/nope/complete", "")->status == 404);
  CHECK(srv->post("a4", "/v1/batches/b1/complete", "")->status == 403);
  CHECK(Json::parse(srv->get("a1", "/v1/unknown")->body)["code"] == "not_found");
}

TEST_CASE("replaying a request sequence yields the same export") {
  support::TempDir dir("replay");
  auto run = [&](const std::string& out) {
    auto srv = start();
    srv->post("a1", "/v1/ratings", rating_body("p1:000", true, true, true).dump());
    srv->post("a2", "/v1/ratings", rating_body("p1:000", true, false, false, nullptr).dump());
    srv->post("a1", "/v1/ratings", rating_body("p1:000", true, true, false, nullptr, "2025-01-01T00:01:00Z").dump());
    srv->post("a3", "/v1/highlights", highlight_body(fixture::kP1, "dark watex on the shore").dump());
    srv->post("a2", "/v1/highlights", highlight_body(fixture::kP1, "dark watex on the", "2025-01-03").dump());
    srv->post("a1", "/v1/ratings", rating_body("p1:001", true, true, true, "").dump());
    annotate::export_dataset(srv->store.snapshot(), dir / out);
  };
  run("one");
  run("two");
  for (const auto& e : std::filesystem::directory_iterator(dir / "one")) {
    CHECK(io::read_file(e.path()) == io::read_file(dir / "two" / e.path().filename().string()));
  }
  const auto labels = io::read_versioned_jsonl(dir / "one" / "creative_labels.jsonl", "novelty.creative_labels");
  CHECK(labels.size() == 5);
}

TEST_CASE("concurrent annotator sessions") {
  support::TempDir dir("service_concurrent");
  auto s = annotate::Store::open(dir / "store.db");
  populate(s);
  Running srv(std::move(s));
  const std::vector<std::string> exprs = {"p1:000", "p1:001", "p1:002", "p2:001", "p2:002", "p2:003"};
  std::vector<std::thread> threads;
  std::atomic<int> created{0};
  for (const char* who : {"a1", "a2", "a3"}) {
    threads.emplace_back([&, who] {
      for (const auto& e : exprs) {
        auto res = srv.post(who, "/v1/ratings", rating_body(e, true, true, false).dump());
        if (res && res->status == 201) ++created;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(created == 18);
  CHECK(srv.store.ratings().size() == 18);
  for (const char* who : {"a1", "a2", "a3"}) {
    CHECK(srv.post(who, "/v1/batches/b1/complete", "")->status == 200);
  }
}
