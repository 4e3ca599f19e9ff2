#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "novelty/segment/segmenter.hpp"
#include "novelty/util/error.hpp"
#include "novelty/util/utf8.hpp"
#include "oracles/ngram_oracle.hpp"

using namespace novelty;
using namespace novelty::segment;

namespace {

Passage passage(std::string text, std::string id = "p1") {
  return Passage{id, std::move(text), "human", id};
}

std::vector<std::string> texts(const std::vector<ExpressionSpan>& spans) {
  std::vector<std::string> out;
  for (const auto& s : spans) out.push_back(s.text);
  return out;
}

std::vector<std::string> split_texts(std::string text, const SplitRules& rules = {}) {
  return texts(split_atomic(passage(std::move(text)), rules));
}

ngram::SuffixIndex index_of(std::string_view text) { return ngram::SuffixIndex::build(ngram::tokenize(text)); }

std::string words(std::size_t from, std::size_t to) {
  std::string s;
  for (std::size_t i = from; i < to; ++i) s += (i > from ? " w" : "w") + std::to_string(i);
  return s;
}

}  // namespace

TEST_CASE("split_atomic worked examples") {
  CHECK(split_texts("He ran. She stayed, watching.") == std::vector<std::string>{"He ran", "She stayed", "watching"});
  const auto one = split_atomic(passage("One sentence only"));
  REQUIRE(one.size() == 1);
  CHECK(one[0].char_start == 0);
  CHECK(one[0].char_end == 17);
  CHECK(split_texts("Dr. Smith left.") == std::vector<std::string>{"Dr. Smith left"});
}

TEST_CASE("split_atomic heuristics") {
  CHECK(split_texts("It cost 3.50, then 1,000 more: a lot.") ==
        std::vector<std::string>{"It cost 3.50", "then 1,000 more", "a lot"});
  CHECK(split_texts("He said \"stop, now\" and left.") == std::vector<std::string>{"He said \"stop, now\" and left"});
  CHECK(split_texts("She wrote “one, two, three, four, five, six” twice.") ==
        std::vector<std::string>{"She wrote “one", "two", "three", "four", "five", "six” twice"});
  CHECK(split_texts("J. R. walked; (quietly) home… e.g. here") ==
        std::vector<std::string>{"J. R. walked", "quietly", "home", "e.g. here"});
  CHECK(split_texts("Wait—no! Why?") == std::vector<std::string>{"Wait", "no", "Why"});
  CHECK(split_texts("...!!").empty());

  SplitRules no_abbrev;
  no_abbrev.abbreviations = false;
  CHECK(split_texts("Dr. Smith left.", no_abbrev) == std::vector<std::string>{"Dr", "Smith left"});
}

TEST_CASE("merging short spans") {
  SplitRules rules;
  rules.min_span_tokens = 3;
  CHECK(split_texts("He ran. She stayed, watching.", rules) ==
        std::vector<std::string>{"He ran. She stayed, watching"});
  CHECK(split_texts("The tall man ran off, quickly.", rules) ==
        std::vector<std::string>{"The tall man ran off, quickly"});
  CHECK(split_texts("The tall man ran off. And then the rain began.", rules) ==
        std::vector<std::string>{"The tall man ran off", "And then the rain began"});
}

TEST_CASE("expression ids and offsets") {
  const auto p = passage("Ash fell. The town slept, dreaming of rain.", "story-7");
  const auto spans = split_atomic(p);
  REQUIRE(spans.size() == 3);
  CHECK(spans[0].expr_id == "story-7:000");
  CHECK(spans[2].expr_id == "story-7:002");
  for (const auto& s : spans) {
    CHECK(p.text.substr(s.char_start, s.char_end - s.char_start) == s.text);
    CHECK(s.tokens == ngram::make_tokenizer("default")->tokens(s.text));
  }
  CHECK(p.word_count() == 8);
}

TEST_CASE("spans are ordered, disjoint and leave no words behind") {
  std::mt19937_64 rng(17);
  const char* pieces[] = {"the", "Dr.", "3.5", "night", ",", ".", "!", "—", "“", "”", "\"", "(", ")", "…",
                          "é", "a", "quiet", "e.g.", "K.", ";", "  ", "\n"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    for (std::size_t i = 0, n = 1 + rng() % 40; i < n; ++i) {
      text += pieces[rng() % std::size(pieces)];
      if (rng() % 3) text += ' ';
    }
    SplitRules rules;
    rules.min_span_tokens = 1 + rng() % 3;
    const auto spans = split_atomic(passage(text), rules);
    std::size_t prev_end = 0;
    for (const auto& s : spans) {
      REQUIRE(s.char_start >= prev_end);
      REQUIRE(s.char_start < s.char_end);
      REQUIRE(s.char_end <= text.size());
      CHECK(utf8::trim(s.text) == s.text);
      const auto gap = std::string_view(text).substr(prev_end, s.char_start - prev_end);
      CHECK(ngram::count_word_tokens(ngram::make_tokenizer("default")->split(gap)) == 0);
      prev_end = s.char_end;
    }
    const auto tail = std::string_view(text).substr(prev_end);
    CHECK(ngram::count_word_tokens(ngram::make_tokenizer("default")->split(tail)) == 0);
  }
}

TEST_CASE("novelty_profile worked examples") {
  const auto idx = index_of("a b c x");
  const auto p1 = novelty_profile("e1", idx.encode_text("x a b"), idx);
  REQUIRE(p1.n_star.has_value());
  CHECK(*p1.n_star == 2);
  CHECK(p1.novel_pct == 0.5);

  const auto p2 = novelty_profile("e2", idx.encode_text("a b"), idx);
  CHECK_FALSE(p2.n_star.has_value());
  CHECK(p2.novel_pct == 0.0);

  const auto p3 = novelty_profile("e3", idx.encode_text("q"), idx);
  CHECK(*p3.n_star == 1);
  CHECK(p3.novel_pct == 1.0);

  CHECK_THROWS_AS(novelty_profile("e4", std::vector<ngram::TokenId>{}, idx), Error);
}

TEST_CASE("profile records round-trip, including null fields") {
  NoveltyProfile a;
  a.expr_id = "p:003";
  a.novel_pct = 0.0;
  a.ppl.infinite = true;
  a.ppl.value = std::numeric_limits<double>::infinity();
  a.ppl.floored_tokens = 2;
  const auto j = to_json(a);
  CHECK(j.at("n_star").is_null());
  CHECK(j.at("ppl").is_null());
  const auto b = profile_from_json(io::Json::parse(j.dump()));
  CHECK_FALSE(b.n_star.has_value());
  CHECK(b.ppl.infinite);
  CHECK(std::isinf(b.ppl.value));
  CHECK(b.ppl.floored_tokens == 2);
  CHECK_FALSE(b.ppl_log_std.has_value());

  NoveltyProfile c;
  c.expr_id = "p:004";
  c.n_star = 3;
  c.novel_pct = 0.25;
  c.ppl.value = 41.5;
  c.ppl_log_std = -0.75;
  const auto d = profile_from_json(to_json(c));
  CHECK(d.n_star == std::optional<std::uint32_t>(3));
  CHECK(d.novel_pct == 0.25);
  CHECK(d.ppl.value == 41.5);
  CHECK_FALSE(d.ppl.infinite);
  CHECK(d.ppl_log_std == std::optional<double>(-0.75));

  auto missing = j;
  missing.erase("n_star");
  CHECK_THROWS_AS(profile_from_json(missing), Error);
}

TEST_CASE("novel_pct matches the oracle and respects containment") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t vocab = 2 + rng() % 6;
    const auto corpus = oracle::random_corpus(rng, 10 + rng() % 200, vocab, 4);
    ngram::TokenSequence seq;
    for (std::size_t v = 0; v < vocab + 1; ++v) seq.vocab.intern("t" + std::to_string(v));
    seq.tokens = corpus.tokens;
    seq.doc_boundaries = corpus.boundaries;
    const auto idx = ngram::SuffixIndex::build(std::move(seq));
    const oracle::NgramOracle orc(corpus.tokens, corpus.boundaries);

    std::vector<ngram::TokenId> expr;
    for (std::size_t i = 0, n = 1 + rng() % 8; i < n; ++i) expr.push_back(static_cast<ngram::TokenId>(rng() % (vocab + 1)));
    const auto prof = novelty_profile("e", expr, idx);

    std::optional<std::uint32_t> n_star;
    double pct = 0.0;
    for (std::size_t n = 1; n <= expr.size() && !n_star; ++n) {
      std::size_t zero = 0;
      for (std::size_t i = 0; i + n <= expr.size(); ++i) {
        if (orc.count(std::span<const std::uint32_t>(expr).subspan(i, n)) == 0) ++zero;
      }
      if (zero > 0) {
        n_star = static_cast<std::uint32_t>(n);
        pct = static_cast<double>(zero) / static_cast<double>(expr.size() - n + 1);
      }
    }
    CHECK(prof.n_star == n_star);
    CHECK(prof.novel_pct == pct);
    CHECK((prof.n_star.has_value() == (prof.novel_pct > 0.0)));

    if (!prof.n_star && expr.size() > 1) {
      const std::size_t from = rng() % expr.size();
      const std::size_t len = 1 + rng() % (expr.size() - from);
      const auto sub = novelty_profile("s", std::span<const ngram::TokenId>(expr).subspan(from, len), idx);
      CHECK_FALSE(sub.n_star.has_value());
    }
  }
}

TEST_CASE("select_for_annotation") {
  std::vector<NoveltyProfile> profiles(4);
  const double pcts[] = {0.0, 0.14, 0.15, 0.5};
  for (std::size_t i = 0; i < 4; ++i) {
    profiles[i].expr_id = "e" + std::to_string(i);
    profiles[i].novel_pct = pcts[i];
  }
  const auto s = select_for_annotation(profiles);
  CHECK(s.expr_ids == std::vector<std::string>{"e2", "e3"});
  CHECK(s.share == 0.5);

  CHECK(select_for_annotation(profiles, 0.0).expr_ids.size() == 4);
  CHECK_THROWS_AS(select_for_annotation(profiles, 1.5), Error);
  CHECK_THROWS_AS(select_for_annotation(profiles, -0.1), Error);

  std::vector<NoveltyProfile> none(3);
  CHECK(select_for_annotation(none).expr_ids.empty());

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto shuffled = profiles;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(select_for_annotation(shuffled).expr_ids == s.expr_ids);
  }
  // Selecting again from the selected profiles changes nothing.
  std::vector<NoveltyProfile> chosen;
  for (const auto& p : profiles) {
    if (std::count(s.expr_ids.begin(), s.expr_ids.end(), p.expr_id)) chosen.push_back(p);
  }
  CHECK(select_for_annotation(chosen).expr_ids == s.expr_ids);
}

TEST_CASE("contamination_check") {
  const auto held_out = passage(words(0, 60), "held");
  const auto corpus_text = words(100, 400);

  SUBCASE("absent passage passes with 15 zero counts") {
    const auto idx = index_of(corpus_text);
    const auto r = contamination_check(held_out, idx, {5, 15, 1});
    CHECK(r.passed);
    CHECK(r.full_coverage);
    REQUIRE(r.samples.size() == 15);
    for (const auto& s : r.samples) CHECK(s.count == 0);
    for (int region = 0; region < 3; ++region) {
      CHECK(std::count_if(r.samples.begin(), r.samples.end(), [&](const auto& s) { return s.region == region; }) == 5);
    }
  }
  SUBCASE("verbatim copy fails on every sample") {
    const auto idx = index_of(corpus_text + " " + held_out.text);
    const auto r = contamination_check(held_out, idx, {5, 15, 1});
    CHECK_FALSE(r.passed);
    CHECK(r.offending.size() == 15);
    for (const auto& s : r.samples) CHECK(s.count >= 1);
  }
  SUBCASE("one overlapping 15-gram is reported alone") {
    ngram::CorpusBuilder b;
    b.add_document(corpus_text);
    b.add_document(words(20, 35));
    const auto idx = ngram::SuffixIndex::build(std::move(b).take());
    std::uint64_t seed = 0;
    for (;; ++seed) {
      const auto r = contamination_check(held_out, idx, {5, 15, seed});
      if (std::any_of(r.samples.begin(), r.samples.end(), [](const auto& s) { return s.token_start == 20; })) break;
    }
    const auto r = contamination_check(held_out, idx, {5, 15, seed});
    CHECK_FALSE(r.passed);
    REQUIRE(r.offending.size() == 1);
    CHECK(r.offending[0].token_start == 20);
    CHECK(r.offending[0].text == words(20, 35));
  }
  SUBCASE("short passages are checked exhaustively") {
    const auto idx = index_of(corpus_text);
    const auto r = contamination_check(passage(words(0, 20)), idx, {5, 15, 1});
    CHECK_FALSE(r.full_coverage);
    CHECK(r.samples.size() == 6);
    CHECK(r.passed);
  }
  SUBCASE("same seed, same samples") {
    const auto idx = index_of(corpus_text);
    const auto a = contamination_check(held_out, idx, {5, 15, 42});
    const auto b = contamination_check(held_out, idx, {5, 15, 42});
    CHECK(to_json(a) == to_json(b));
  }
}

TEST_CASE("passage validation") {
  std::vector<Passage> ps = {passage("x", "h1"), Passage{"m1", "y", "olmo", "h1"}};
  CHECK_NOTHROW(validate_passages(ps));
  ps.push_back(Passage{"m2", "z", "olmo", "m1"});
  CHECK_THROWS_AS(validate_passages(ps), Error);
}
