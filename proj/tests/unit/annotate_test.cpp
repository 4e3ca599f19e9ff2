#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "novelty/annotate/analysis.hpp"
#include "novelty/annotate/export.hpp"
#include "novelty/util/error.hpp"
#include "oracles/edit_oracle.hpp"
#include "oracles/kappa_oracle.hpp"
#include "support/annotate_fixture.hpp"
#include "support/temp_dir.hpp"

using namespace novelty;
using namespace novelty::annotate;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInternal;
}

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.field();
  }
  return "";
}

Store fixture_store() {
  auto s = Store::in_memory();
  fixture::populate(s);
  return s;
}

HighlightRecord highlight(const std::string& annotator, const std::string& passage, const std::string& text,
                          const std::string& ts = "2025-01-02T00:00:00Z") {
  const std::string body = passage == "p1" ? fixture::kP1 : passage == "p2" ? fixture::kP2 : fixture::kP3;
  HighlightRecord h;
  h.annotator_id = annotator;
  h.passage_id = passage;
  h.char_start = body.find(text);
  h.char_end = h.char_start + text.size();
  h.rationale = "vivid";
  h.timestamp = ts;
  return h;
}

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    out[e.path().filename().string()] = io::read_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("record_rating accepts and upserts") {
  auto s = fixture_store();
  const auto id = s.record_rating(fixture::rating("a1", "p1:000", true, true, true));
  CHECK(id == "a1/p1:000");
  CHECK(s.ratings().size() == 1);

  auto again = fixture::rating("a1", "p1:000", true, false, false, "2025-01-01T00:05:00Z");
  CHECK(s.record_rating(again) == id);
  const auto live = s.ratings();
  REQUIRE(live.size() == 1);
  CHECK_FALSE(live[0].pragmatic);
  const auto audit = s.audit();
  REQUIRE(audit.size() == 2);
  CHECK(audit[0].rating.pragmatic);
  CHECK(audit[1].seq == 2);
}

TEST_CASE("record_rating rejects invalid records") {
  auto s = fixture_store();
  auto no_reason = fixture::rating("a1", "p1:000", true, true, true);
  no_reason.rationale = "";
  CHECK(code_of([&] { s.record_rating(no_reason); }) == ErrorCode::kValidation);
  CHECK(field_of([&] { s.record_rating(no_reason); }) == "rationale");
  no_reason.rationale = "   ";
  CHECK(code_of([&] { s.record_rating(no_reason); }) == ErrorCode::kValidation);
  no_reason.rationale.reset();
  CHECK(code_of([&] { s.record_rating(no_reason); }) == ErrorCode::kValidation);

  // Not novel: rationale optional.
  CHECK_NOTHROW(s.record_rating(fixture::rating("a1", "p1:001", true, true, false)));

  CHECK(code_of([&] { s.record_rating(fixture::rating("a1", "p9:000", true, true, false)); }) ==
        ErrorCode::kNotFound);
  CHECK(code_of([&] { s.record_rating(fixture::rating("zz", "p1:000", true, true, false)); }) ==
        ErrorCode::kNotFound);
  CHECK(code_of([&] { s.record_rating(fixture::rating("a4", "p1:000", true, true, false)); }) ==
        ErrorCode::kForbidden);
  CHECK(code_of([&] { s.record_rating(fixture::rating("a1", "p1:003", true, true, false)); }) ==
        ErrorCode::kValidation);
  CHECK(s.ratings().size() == 1);
  CHECK(s.audit().size() == 1);
}

TEST_CASE("nesting violations are stored and flagged") {
  auto s = fixture_store();
  s.record_rating(fixture::rating("a1", "p1:000", false, true, false));
  const auto r = s.ratings().at(0);
  CHECK(r.nesting_violation());
  CHECK(summarize(s.snapshot()).nesting_violations == 1);
}

TEST_CASE("record_highlight") {
  auto s = fixture_store();
  const auto h = s.record_highlight(highlight("a1", "p1", "dark watex on the shore"));
  CHECK(h.record_id == "hl-000001");
  CHECK_FALSE(h.duplicate_of.has_value());

  auto out_of_bounds = highlight("a1", "p1", "shore.");
  out_of_bounds.char_end += 5;
  CHECK(code_of([&] { s.record_highlight(out_of_bounds); }) == ErrorCode::kValidation);
  auto empty = highlight("a1", "p1", "shore");
  empty.char_end = empty.char_start;
  CHECK(code_of([&] { s.record_highlight(empty); }) == ErrorCode::kValidation);
  auto no_reason = highlight("a1", "p1", "shore");
  no_reason.rationale = "";
  CHECK(field_of([&] { s.record_highlight(no_reason); }) == "rationale");
  CHECK(code_of([&] { s.record_highlight(highlight("a4", "p1", "shore")); }) == ErrorCode::kForbidden);
  auto elsewhere = highlight("a1", "p1", "shore");
  elsewhere.passage_id = "p7";
  CHECK(code_of([&] { s.record_highlight(elsewhere); }) == ErrorCode::kNotFound);

  const auto dup = s.record_highlight(highlight("a2", "p1", "Dark water rose"));
  REQUIRE(dup.duplicate_of.has_value());
  CHECK(*dup.duplicate_of == "p1:002");
  // A non-pre-highlighted expression is not a duplicate target.
  CHECK_FALSE(s.record_highlight(highlight("a2", "p1", "We saw dark watex on the shore")).duplicate_of);

  const auto again = s.record_highlight(highlight("a1", "p1", "dark watex on the shore", "2025-02-01T00:00:00Z"));
  CHECK(again.record_id == h.record_id);
  CHECK(s.highlights().size() == 3);
}

TEST_CASE("dedup_highlights applies subset and ratio rules") {
  const segment::Passage p{"p", "Like the severed hand of a giant. dark water. dark watex. the stars. the starz.",
                           "human", "p"};
  auto sp = [&](const std::string& t, const std::string& id) { return fixture::span(p, t, id, true); };
  const std::vector<segment::ExpressionSpan> rated = {sp("Like the severed hand of a giant", "p:000"),
                                                      sp("dark water", "p:001"), sp("the stars", "p:002")};
  auto hl = [&](const std::string& t, const std::string& id, const std::string& who, const std::string& ts) {
    HighlightRecord h;
    h.record_id = id;
    h.annotator_id = who;
    h.passage_id = "p";
    h.char_start = p.text.find(t);
    h.char_end = h.char_start + t.size();
    h.rationale = "r";
    h.timestamp = ts;
    return h;
  };
  CHECK(oracle::edit_ratio(U"dark watex", U"dark water") == doctest::Approx(0.9));
  const double r89 = oracle::edit_ratio(U"the starz", U"the stars");
  CHECK(r89 < 0.9);
  CHECK(r89 > 0.885);

  const std::vector<HighlightRecord> hs = {hl("the severed hand", "h1", "a1", "t1"),
                                           hl("dark watex", "h2", "a1", "t2"),
                                           hl("the starz", "h3", "a2", "t3"),
                                           hl("the starz", "h4", "a3", "t4")};
  const auto d = dedup_highlights(hs, rated, {p});
  REQUIRE(d.expressions.size() == 4);
  CHECK(d.expressions[3].expr_id == "p:h000");
  CHECK(d.expressions[3].text == "the starz");
  CHECK(d.expressions[3].highlighters == std::vector<std::string>{"a2", "a3"});
  CHECK(d.expressions[3].highlight_ids == std::vector<std::string>{"h3", "h4"});
  REQUIRE(d.dropped.size() == 2);
  CHECK(d.dropped[0].record_id == "h1");
  CHECK(d.dropped[0].relation == eval::Relation::kSubset);
  CHECK(d.dropped[1].relation == eval::Relation::kSimilar);
  CHECK(d.dropped[1].matched_expr_id == "p:001");

  // A superset of a rated expression is dropped too.
  const auto sup = dedup_highlights({hl("dark water. dark watex", "h9", "a1", "t")}, rated, {p});
  REQUIRE(sup.dropped.size() == 1);
  CHECK(sup.dropped[0].relation == eval::Relation::kSuperset);
}

TEST_CASE("dedup_highlights is independent of input order") {
  const segment::Passage p{"p", "one two three four five six seven eight nine ten eleven twelve", "human", "p"};
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<HighlightRecord> hs;
    const std::size_t n = 1 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      HighlightRecord h;
      h.record_id = "h" + std::to_string(i);
      h.annotator_id = "a" + std::to_string(rng() % 3);
      h.passage_id = "p";
      h.char_start = rng() % (p.text.size() - 1);
      h.char_end = h.char_start + 1 + rng() % (p.text.size() - h.char_start);
      h.rationale = "r";
      h.timestamp = "t" + std::to_string(rng() % 4);
      hs.push_back(h);
    }
    const auto base = dedup_highlights(hs, {}, {p});
    std::shuffle(hs.begin(), hs.end(), rng);
    const auto shuffled = dedup_highlights(hs, {}, {p});
    REQUIRE(base.expressions.size() == shuffled.expressions.size());
    for (std::size_t i = 0; i < base.expressions.size(); ++i) {
      CHECK(to_json(base.expressions[i]) == to_json(shuffled.expressions[i]));
    }
    // No two surviving expressions match each other.
    for (std::size_t i = 0; i < base.expressions.size(); ++i) {
      for (std::size_t j = i + 1; j < base.expressions.size(); ++j) {
        CHECK_FALSE(eval::approx_match(base.expressions[i].text, base.expressions[j].text));
      }
    }
  }
}

TEST_CASE("creative labels") {
  auto s = fixture_store();
  s.record_rating(fixture::rating("a1", "p1:000", true, true, true));
  s.record_rating(fixture::rating("a2", "p1:000", true, false, true));
  s.record_highlight(highlight("a1", "p1", "dark watex on the shore"));
  s.record_highlight(highlight("a2", "p1", "dark watex on the shore", "2025-01-03T00:00:00Z"));
  const auto d = s.snapshot();
  const auto labels = creative_labels(d);
  REQUIRE(labels.size() == 5);
  CHECK(labels[0].expr_id == "p1:000");
  CHECK(labels[0].creative);
  CHECK_FALSE(labels[1].creative);
  CHECK(labels[2].expr_id == "p1:h000");
  CHECK(labels[2].source == LabelSource::kHighlight);
  CHECK(labels[3].source == LabelSource::kHighlight);
  CHECK(labels[4].annotator_id == "a3");
  CHECK(labels[4].source == LabelSource::kAugmented);
  CHECK_FALSE(labels[4].creative);
  CHECK(creative_labels(d, false).size() == 4);

  // Pure function of the records.
  const auto again = creative_labels(s.snapshot());
  REQUIRE(again.size() == labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(to_json(again[i]) == to_json(labels[i]));
}

TEST_CASE("kappa_free examples") {
  CHECK(kappa_free({{1, 1, 1}, {0, 0, 0}, {1, 1, 1}}) == 1.0);
  CHECK(kappa_free({{1, 1}, {0, 1}, {0, 0}, {1, 0}}) == 0.0);
  // Pairwise agreement per item: 1, 1, 1/3, 1/3 -> P = 2/3 -> kappa = 1/3.
  const std::vector<std::vector<int>> hand = {{1, 1, 1}, {0, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  const double po = (1.0 + 1.0 + 1.0 / 3.0 + 1.0 / 3.0) / 4.0;
  CHECK(std::abs(observed_agreement(hand) - po) < 1e-12);
  CHECK(std::abs(kappa_free(hand) - (po - 0.5) / 0.5) < 1e-12);
  CHECK_THROWS_AS(kappa_free({{1}}), Error);
  CHECK_THROWS_AS(kappa_free({{1, 2}}), Error);
}

TEST_CASE("kappa_free properties") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const int q = 2 + static_cast<int>(rng() % 3);
    const std::size_t m = 2 + rng() % 5;
    std::vector<std::vector<int>> items(1 + rng() % 20);
    for (auto& item : items) {
      for (std::size_t r = 0; r < m; ++r) item.push_back(static_cast<int>(rng() % static_cast<unsigned>(q)));
    }
    const double k = kappa_free(items, q);
    CHECK(std::abs(k - oracle::kappa_free_counts(items, q)) < 1e-12);
    CHECK(k <= 1.0 + 1e-15);
    auto relabeled = items;
    for (auto& item : relabeled) {
      for (auto& c : item) c = q - 1 - c;
    }
    CHECK(std::abs(kappa_free(relabeled, q) - k) < 1e-15);
    auto unanimous = items;
    for (auto& item : unanimous) std::fill(item.begin(), item.end(), item[0]);
    CHECK(kappa_free(unanimous, q) == 1.0);
  }
}

TEST_CASE("batch_kappa reports missing ratings") {
  auto s = fixture_store();
  s.record_rating(fixture::rating("a1", "p1:000", true, true, true));
  const auto r = batch_kappa(s.snapshot(), "b1", Dimension::kNovel);
  CHECK_FALSE(r.kappa);
  CHECK(r.n_items == 5);
  CHECK(r.missing.size() == 14);
  CHECK(r.missing[0].annotator_id == "a2");
  CHECK(r.missing[0].expr_id == "p1:000");
  CHECK_THROWS_AS(batch_kappa(s.snapshot(), "nope", Dimension::kNovel), Error);

  for (const char* a : {"a1", "a2", "a3"}) {
    for (const char* e : {"p1:000", "p1:001", "p1:002", "p2:001", "p2:002"}) {
      const bool novel = std::string(e) != "p2:002" || std::string(a) == "a1";
      s.record_rating(fixture::rating(a, e, true, true, novel));
    }
  }
  const auto full = batch_kappa(s.snapshot(), "b1", Dimension::kNovel);
  REQUIRE(full.kappa);
  const double po = (4.0 + 1.0 / 3.0) / 5.0;
  CHECK(std::abs(*full.kappa - (po - 0.5) / 0.5) < 1e-12);
  CHECK(*batch_kappa(s.snapshot(), "b1", Dimension::kPragmatic).kappa == 1.0);

  const auto summary = kappa_summary(s.snapshot(), Dimension::kNovel);
  CHECK(summary.batches.size() == 3);
  CHECK(summary.n_used == 1);
  CHECK(*summary.mean == *full.kappa);
}

TEST_CASE("export of an empty store") {
  support::TempDir dir("export_empty");
  auto s = Store::in_memory();
  export_dataset(s.snapshot(), dir.path());
  for (const char* name : {"passages", "expressions", "profiles", "batches", "ratings", "rating_audit", "highlights",
                           "creative_expressions", "creative_labels"}) {
    const auto text = io::read_file(dir / (std::string(name) + ".jsonl"));
    CHECK(text == "{\"schema\":\"novelty." + std::string(name) + "\",\"version\":1}\n");
  }
  CHECK(std::filesystem::exists(dir / "summary.json"));
}

TEST_CASE("export of one rating") {
  support::TempDir dir("export_one");
  auto s = fixture_store();
  s.record_rating(fixture::rating("a1", "p1:000", true, true, true));
  export_dataset(s.snapshot(), dir.path());
  const auto rows = io::read_versioned_jsonl(dir / "ratings.jsonl", "novelty.ratings");
  REQUIRE(rows.size() == 1);
  const auto exprs = io::read_versioned_jsonl(dir / "expressions.jsonl", "novelty.expressions");
  const auto hit = std::find_if(exprs.begin(), exprs.end(), [&](const io::Json& e) { return e["expr_id"] == rows[0]["expr_id"]; });
  REQUIRE(hit != exprs.end());
  CHECK((*hit)["pre_highlighted"] == true);
  for (const char* key : {"expr_id", "passage_id", "char_start", "char_end", "pre_highlighted"}) CHECK(hit->contains(key));
  CHECK_THROWS_AS(io::read_versioned_jsonl(dir / "ratings.jsonl", "novelty.highlights"), Error);
}

TEST_CASE("import then export is byte-identical") {
  support::TempDir dir("roundtrip");
  auto s = Store::open(dir / "store.db");
  fixture::populate(s);
  segment::NoveltyProfile prof;
  prof.expr_id = "p1:000";
  prof.n_star = 3;
  prof.novel_pct = 0.25;
  prof.ppl.value = 41.5;
  prof.ppl_log_std = 0.3;
  s.put_profile(prof);
  s.record_rating(fixture::rating("a1", "p1:000", true, true, true));
  s.record_rating(fixture::rating("a1", "p1:000", true, false, true, "2025-01-01T01:00:00Z"));
  s.record_rating(fixture::rating("a2", "p2:001", false, true, false));
  s.record_highlight(highlight("a3", "p1", "dark watex on the shore"));
  s.record_highlight(highlight("a2", "p1", "Dark water rose"));
  export_dataset(s.snapshot(), dir / "first");

  auto fresh = Store::open(dir / "fresh.db");
  fresh.restore(import_dataset(dir / "first"));
  export_dataset(fresh.snapshot(), dir / "second");
  const auto a = read_dir(dir / "first");
  const auto b = read_dir(dir / "second");
  CHECK(a.size() == 10);
  CHECK(a == b);
  CHECK_THROWS_AS(fresh.restore(import_dataset(dir / "first")), Error);

  // Reopening the file store sees the same state.
  const auto reopened = Store::open(dir / "fresh.db");
  CHECK(reopened.ratings().size() == 2);
  CHECK(reopened.audit().size() == 3);
}

TEST_CASE("concurrent writers are serialized") {
  support::TempDir dir("concurrent");
  auto s = Store::open(dir / "store.db");
  fixture::populate(s);
  const std::vector<std::string> exprs = {"p1:000", "p1:001", "p1:002", "p2:001", "p2:002"};
  std::vector<std::thread> threads;
  for (const char* a : {"a1", "a2", "a3"}) {
    threads.emplace_back([&, a] {
      for (int round = 0; round < 4; ++round) {
        for (const auto& e : exprs) s.record_rating(fixture::rating(a, e, true, round % 2 == 0, false));
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(s.ratings().size() == 15);
  CHECK(s.audit().size() == 60);
  for (const auto& r : s.ratings()) CHECK(r.pragmatic == false);
}
