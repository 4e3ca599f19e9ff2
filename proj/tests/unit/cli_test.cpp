#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <set>

#include "novelty/cli/cli.hpp"
#include "novelty/service/service.hpp"
#include "novelty/util/io.hpp"
#include "support/temp_dir.hpp"
#include "support/toy_pipeline.hpp"

using novelty::io::Json;
using support::cli;

namespace {

const std::filesystem::path kGoldenDir = "tests/golden/toy";

// Last line of the error stream that parses as a JSON object.
Json last_json_line(const std::string& err) {
  Json found;
  std::istringstream in(err);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() != '{') continue;
    auto j = Json::parse(line, nullptr, false);
    if (!j.is_discarded()) found = j;
  }
  return found;
}

bool numeric_file(const std::string& rel) { return rel == "fit.json" || rel == "fit_source.json" || rel == "prefs.json"; }

bool golden_candidate(const std::string& rel) {
  if (rel.size() >= 13 && rel.compare(rel.size() - 13, 13, "manifest.json") == 0) return false;
  return rel != "index.nlix";
}

bool close(const Json& a, const Json& b, double tol, std::string& where) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    if (std::abs(x - y) <= tol * (1.0 + std::max(std::abs(x), std::abs(y)))) return true;
    where = std::to_string(x) + " vs " + std::to_string(y);
    return false;
  }
  if (a.type() != b.type()) {
    where = a.dump() + " vs " + b.dump();
    return false;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) return where = "key sets differ", false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !close(it.value(), b.at(it.key()), tol, where)) return where = it.key() + ": " + where, false;
    }
    return true;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) return where = "lengths differ", false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!close(a[i], b[i], tol, where)) return false;
    }
    return true;
  }
  if (a != b) where = a.dump() + " vs " + b.dump();
  return a == b;
}

}  // namespace

TEST_CASE("help prints usage and exits 0") {
  auto r = cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("Usage: novelty") != std::string::npos);
  for (const char* sub : {"index", "segment", "annotate", "eval", "stats"}) CHECK(r.out.find(sub) != std::string::npos);
  r = cli({"segment", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--threshold") != std::string::npos);
}

TEST_CASE("missing required flag exits 1 naming it") {
  const auto r = cli({"index", "count", "--query", "a b"});
  CHECK(r.code == novelty::cli::kExitValidation);
  CHECK(r.err.find("--index") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("unknown flag prints usage on the error stream") {
  auto r = cli({"index", "count", "--index", "CMakeLists.txt", "--query", "a", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage:") != std::string::npos);
  CHECK(r.err.find("--bogus") != std::string::npos);
  r = cli({});
  CHECK(r.code == 1);
  r = cli({"stats"});
  CHECK(r.code == 1);
}

TEST_CASE("module errors become structured logs with exit 1") {
  unsetenv("NOVELTY_STORE");
  auto r = cli({"annotate", "kappa", "--dimension", "novel"});
  CHECK(r.code == 1);
  auto log = last_json_line(r.err);
  CHECK(log.at("level") == "error");
  CHECK(log.at("code") == "argument");
  CHECK(log.at("field") == "--store");

  support::TempDir tmp("cli_missing_store");
  r = cli({"annotate", "serve", "--store", (tmp / "none.db").string(), "--secret", "x"});
  CHECK(r.code == 1);
  CHECK(last_json_line(r.err).at("code") == "not_found");
}

TEST_CASE("index subcommands and the stream manifest") {
  support::TempDir tmp("cli_index");
  novelty::io::write_file(tmp / "corpus.txt", "abc");
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  auto r = cli({"index", "build", "--corpus", (tmp / "corpus.txt").string(), "--out", (tmp / "i.nlix").string()});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out).at("tokens") == 1);
  const auto manifest = Json::parse(novelty::io::read_file(tmp / "i.nlix.manifest.json"));
  CHECK(manifest.at("subcommand") == "index build");
  CHECK(manifest.at("inputs").at((tmp / "corpus.txt").generic_string()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(manifest.at("started_at") == "2023-11-14T22:13:20Z");
  CHECK(manifest.at("config").at("tokenizer") == "whitespace_punct");
  CHECK(manifest.at("outputs").size() == 1);

  novelty::io::write_file(tmp / "corpus.txt", "a b c\na b d\n");
  REQUIRE(cli({"index", "build", "--corpus", (tmp / "corpus.txt").string(), "--out", (tmp / "i.nlix").string()}).code ==
          0);
  r = cli({"index", "count", "--index", (tmp / "i.nlix").string(), "--query", "a b"});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out).at("count") == 2);
  const auto stream_manifest = last_json_line(r.err);
  CHECK(stream_manifest.at("schema") == "novelty.manifest");
  CHECK(stream_manifest.at("subcommand") == "index count");

  r = cli({"index", "ppl", "--index", (tmp / "i.nlix").string(), "--expr", "a b c"});
  REQUIRE(r.code == 0);
  const auto ppl = Json::parse(r.out);
  // P(a) = 2/6, P(b|a) = 1, P(c|a b) = 1/2.
  CHECK(ppl.at("ppl").get<double>() == doctest::Approx(std::cbrt(6.0)).epsilon(1e-12));
  CHECK(ppl.at("steps").at(2).at("effective_n") == 3);

  r = cli({"index", "ppl", "--index", (tmp / "i.nlix").string(), "--expr", "z", "--floor", "flag"});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out).at("ppl").is_null());
  CHECK(Json::parse(r.out).at("infinite") == true);
}

TEST_CASE("config file supplies options and flags override it") {
  support::TempDir tmp("cli_config");
  const auto work = tmp / "w";
  novelty::io::write_file(tmp / "c.txt", "the cat sat\n");
  novelty::io::write_file(tmp / "p.jsonl", R"({"passage_id":"p","text":"the cat sat. a dog ran.","source":"human"})"
                                           "\n");
  REQUIRE(cli({"index", "build", "--corpus", (tmp / "c.txt").string(), "--out", (tmp / "i.nlix").string()}).code == 0);
  novelty::io::write_file(tmp / "run.ini", "[segment]\nthreshold = 0.5\nseed = 5\n");
  const auto r = cli({"--config", (tmp / "run.ini").string(), "segment", "--passages", (tmp / "p.jsonl").string(),
                      "--index", (tmp / "i.nlix").string(), "--out", work.string(), "--seed", "9"});
  REQUIRE(r.code == 0);
  const auto m = Json::parse(novelty::io::read_file(work / "manifest.json"));
  CHECK(m.at("config").at("threshold") == "0.5");
  CHECK(m.at("config").at("seed") == "9");
  CHECK(m.at("seed") == 9);
  const auto sel = Json::parse(novelty::io::read_file(work / "selection.json"));
  CHECK(sel.at("threshold") == 0.5);
  CHECK(sel.at("expr_ids") == Json::array({"p:001"}));
}

TEST_CASE("store path falls back to NOVELTY_STORE") {
  support::TempDir tmp("cli_env");
  const auto work = support::run_toy_pipeline(tmp / "toy");
  REQUIRE(work.back().result.code == 0);
  ::setenv("NOVELTY_STORE", (tmp / "toy" / "store.db").c_str(), 1);
  const auto r = cli({"annotate", "export", "--out", (tmp / "exp").string()});
  ::unsetenv("NOVELTY_STORE");
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out).at("ratings") == 36);
  CHECK(novelty::io::read_file(tmp / "exp" / "ratings.jsonl") ==
        novelty::io::read_file(tmp / "toy" / "export" / "ratings.jsonl"));
}

TEST_CASE("token secrets stay out of the manifest") {
  const auto r = cli({"annotate", "token", "--secret", "s3cr3t", "--annotator", "a1", "--expires-at", "2000000000"});
  REQUIRE(r.code == 0);
  auto token = r.out;
  while (!token.empty() && token.back() == '\n') token.pop_back();
  CHECK(novelty::service::TokenIssuer("s3cr3t").verify(token, 1900000000) == "a1");
  CHECK(r.err.find("s3cr3t") == std::string::npos);
  CHECK(last_json_line(r.err).at("config").at("secret") == "<redacted>");
}

TEST_CASE("import refuses a non-empty store") {
  support::TempDir tmp("cli_import");
  const auto steps = support::run_toy_pipeline(tmp / "toy");
  REQUIRE(steps.back().result.code == 0);
  const auto r = cli({"annotate", "import", "--store", (tmp / "toy" / "store.db").string(), "--dir",
                      (tmp / "toy" / "segment").string()});
  CHECK(r.code == 1);
  CHECK(last_json_line(r.err).at("code") == "conflict");
}

TEST_CASE("toy pipeline matches the hand-labeled novelty fixture") {
  support::TempDir tmp("cli_labels");
  const auto steps = support::run_toy_pipeline(tmp / "toy");
  REQUIRE(steps.size() == 12);
  for (const auto& s : steps) {
    INFO(s.name << ": " << s.result.err);
    REQUIRE(s.result.code == 0);
  }
  const auto labels = Json::parse(novelty::io::read_file("tests/golden/toy_novelty_labels.json"));
  std::map<std::string, Json> profiles, expressions;
  for (const auto& j : novelty::io::read_versioned_jsonl(tmp / "toy" / "segment" / "profiles.jsonl", "novelty.profiles")) {
    profiles[j.at("expr_id")] = j;
  }
  for (const auto& j :
       novelty::io::read_versioned_jsonl(tmp / "toy" / "segment" / "expressions.jsonl", "novelty.expressions")) {
    expressions[j.at("expr_id")] = j;
  }
  REQUIRE(profiles.size() == labels.at("expressions").size());
  const double threshold = labels.at("threshold");
  std::set<std::string> expected_selected;
  for (const auto& l : labels.at("expressions")) {
    const std::string id = l.at("expr_id");
    INFO(id);
    REQUIRE(profiles.count(id));
    CHECK(expressions.at(id).at("text") == l.at("text"));
    CHECK(profiles.at(id).at("n_star") == l.at("n_star"));
    const int absent = l.at("absent"), grams = l.at("grams");
    const double pct = grams == 0 ? 0.0 : static_cast<double>(absent) / grams;
    CHECK(profiles.at(id).at("novel_pct").get<double>() == pct);
    CHECK(expressions.at(id).at("pre_highlighted") == (pct >= threshold));
    if (pct >= threshold) expected_selected.insert(id);
  }
  const auto sel = Json::parse(novelty::io::read_file(tmp / "toy" / "segment" / "selection.json"));
  CHECK(sel.at("expr_ids").get<std::set<std::string>>() == expected_selected);

  std::set<std::string> failed;
  for (const auto& j :
       novelty::io::read_versioned_jsonl(tmp / "toy" / "segment" / "contamination.jsonl", "novelty.contamination")) {
    if (!j.at("passed").get<bool>()) failed.insert(j.at("passage_id"));
  }
  CHECK(failed == labels.at("contaminated").get<std::set<std::string>>());
}

TEST_CASE("toy pipeline reproduces the golden outputs") {
  support::TempDir tmp("cli_golden");
  const auto steps = support::run_toy_pipeline(tmp / "toy");
  REQUIRE(steps.size() == 12);
  REQUIRE(steps.back().result.code == 0);
  const auto files = support::snapshot_files(tmp / "toy");

  if (std::getenv("NOVELTY_UPDATE_GOLDEN") != nullptr) {
    std::filesystem::remove_all(kGoldenDir);
    for (const auto& [rel, bytes] : files) {
      if (golden_candidate(rel)) novelty::io::write_file(kGoldenDir / rel, bytes);
    }
    MESSAGE("golden files rewritten");
    return;
  }
  std::set<std::string> expected;
  for (const auto& e : std::filesystem::recursive_directory_iterator(kGoldenDir)) {
    if (e.is_regular_file()) expected.insert(std::filesystem::relative(e.path(), kGoldenDir).generic_string());
  }
  REQUIRE_FALSE(expected.empty());
  for (const auto& rel : expected) {
    INFO(rel);
    REQUIRE(files.count(rel));
    const auto golden = novelty::io::read_file(kGoldenDir / rel);
    if (numeric_file(rel)) {
      std::string where;
      CHECK_MESSAGE(close(Json::parse(files.at(rel)), Json::parse(golden), 1e-6, where), where);
    } else {
      CHECK(files.at(rel) == golden);
    }
  }
  for (const auto& [rel, bytes] : files) {
    if (golden_candidate(rel)) CHECK_MESSAGE(expected.count(rel), "output without a golden file: " << rel);
  }
}
