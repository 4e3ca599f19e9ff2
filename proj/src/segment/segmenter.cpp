#include "novelty/segment/segmenter.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "novelty/util/error.hpp"
#include "novelty/util/utf8.hpp"

namespace novelty::segment {

std::size_t Passage::word_count() const {
  std::size_t words = 0;
  bool in_word = false;
  for (const auto& cp : utf8::decode(text)) {
    const bool space = utf8::is_space(cp.value);
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

Passage passage_from_json(const io::Json& j) {
  Passage p;
  p.passage_id = io::require_string(j, "passage_id");
  p.text = io::require_string(j, "text");
  p.source = j.value("source", std::string("human"));
  p.seed_passage_id = j.value("seed_passage_id", p.passage_id);
  if (p.passage_id.empty()) fail(ErrorCode::kFormat, "empty passage_id", "passage_id");
  if (!utf8::is_valid(p.text)) fail(ErrorCode::kFormat, "passage " + p.passage_id + " is not valid UTF-8", "text");
  return p;
}

io::Json to_json(const Passage& p) {
  return {{"passage_id", p.passage_id},
          {"text", p.text},
          {"source", p.source},
          {"seed_passage_id", p.seed_passage_id},
          {"word_count", p.word_count()}};
}

void validate_passages(const std::vector<Passage>& passages) {
  std::unordered_map<std::string, const Passage*> by_id;
  for (const auto& p : passages) {
    if (!by_id.emplace(p.passage_id, &p).second) {
      fail(ErrorCode::kValidation, "duplicate passage_id " + p.passage_id, "passage_id");
    }
  }
  for (const auto& p : passages) {
    auto it = by_id.find(p.seed_passage_id);
    if (it == by_id.end() || !it->second->is_human()) {
      fail(ErrorCode::kValidation,
           "passage " + p.passage_id + ": seed_passage_id " + p.seed_passage_id + " is not a human passage",
           "seed_passage_id");
    }
  }
}

std::vector<Passage> read_passages(const std::filesystem::path& path) {
  std::vector<Passage> out;
  for (const auto& j : io::read_versioned_jsonl(path, "novelty.passages")) out.push_back(passage_from_json(j));
  validate_passages(out);
  return out;
}

SplitRules split_rules_from_json(const io::Json& j) {
  SplitRules r;
  if (j.contains("punctuation")) r.punctuation = utf8::to_u32(j.at("punctuation").get<std::string>());
  r.quote_min_tokens = j.value("quote_min_tokens", r.quote_min_tokens);
  r.min_span_tokens = j.value("min_span_tokens", r.min_span_tokens);
  r.abbreviations = j.value("abbreviations", r.abbreviations);
  if (j.contains("abbreviation_list")) r.abbreviation_list = j.at("abbreviation_list").get<std::vector<std::string>>();
  r.tokenizer = j.value("tokenizer", r.tokenizer);
  return r;
}

io::Json to_json(const SplitRules& r) {
  return {{"punctuation", utf8::encode(r.punctuation)},
          {"quote_min_tokens", r.quote_min_tokens},
          {"min_span_tokens", r.min_span_tokens},
          {"abbreviations", r.abbreviations},
          {"abbreviation_list", r.abbreviation_list},
          {"tokenizer", r.tokenizer}};
}

io::Json to_json(const ExpressionSpan& e) {
  return {{"expr_id", e.expr_id},
          {"passage_id", e.passage_id},
          {"char_start", e.char_start},
          {"char_end", e.char_end},
          {"text", e.text},
          {"tokens", e.tokens},
          {"pre_highlighted", e.pre_highlighted}};
}

ExpressionSpan expression_from_json(const io::Json& j) {
  ExpressionSpan e;
  e.expr_id = io::require_string(j, "expr_id");
  e.passage_id = io::require_string(j, "passage_id");
  e.char_start = io::require(j, "char_start").get<std::size_t>();
  e.char_end = io::require(j, "char_end").get<std::size_t>();
  e.text = j.value("text", std::string());
  if (j.contains("tokens")) e.tokens = j.at("tokens").get<std::vector<std::string>>();
  e.pre_highlighted = j.value("pre_highlighted", false);
  return e;
}

std::string make_expr_id(std::string_view passage_id, std::size_t ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", ordinal);
  return std::string(passage_id) + ":" + buf;
}

namespace {

bool is_quote_open(char32_t c) { return c == U'"' || c == U'“' || c == U'«' || c == U'‘'; }

char32_t closer_for(char32_t open) {
  switch (open) {
    case U'“': return U'”';
    case U'«': return U'»';
    case U'‘': return U'’';
    default: return U'"';
  }
}

char32_t opener_for(char32_t close) {
  switch (close) {
    case U'”': return U'“';
    case U'»': return U'«';
    case U'’': return U'‘';
    default: return close == U'"' ? U'"' : 0;
  }
}

// Marks code points strictly inside short quotations.
std::vector<bool> protected_positions(const std::vector<utf8::CodePoint>& cps, std::string_view text,
                                      const SplitRules& rules, const ngram::Tokenizer& tok) {
  std::vector<bool> prot(cps.size(), false);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t open = cps[i].value;
    // Curly single quotes double as apostrophes; only treat them as quotes
    // when they follow a space or start the text.
    if (!is_quote_open(open)) continue;
    if (open == U'‘' && i > 0 && !utf8::is_space(cps[i - 1].value)) continue;
    const char32_t close = closer_for(open);
    std::size_t j = i + 1;
    while (j < cps.size() && cps[j].value != close) ++j;
    if (j == cps.size()) continue;
    const auto inner = text.substr(cps[i].end, cps[j].begin - cps[i].end);
    if (ngram::count_word_tokens(tok.split(inner)) < rules.quote_min_tokens) {
      for (std::size_t k = i + 1; k < j; ++k) prot[k] = true;
    }
    i = j;
  }
  return prot;
}

bool is_alnum(char32_t c) { return utf8::is_word(c) && !utf8::is_punct(c); }

bool keeps_period(const std::vector<utf8::CodePoint>& cps, std::size_t i, const SplitRules& rules,
                  const std::unordered_set<std::string>& abbrevs) {
  if (i + 1 < cps.size() && is_alnum(cps[i + 1].value)) return true;
  if (!rules.abbreviations) return false;
  std::size_t b = i;
  while (b > 0 && (is_alnum(cps[b - 1].value) || cps[b - 1].value == U'.')) --b;
  if (b == i) return false;
  std::u32string word;
  for (std::size_t k = b; k < i; ++k) word.push_back(cps[k].value);
  if (word.size() == 1 && utf8::is_upper(word[0])) return true;
  std::u32string folded;
  for (char32_t c : word) folded.push_back(utf8::fold_case(c));
  return abbrevs.count(utf8::encode(folded)) > 0;
}

bool is_split_point(const std::vector<utf8::CodePoint>& cps, std::size_t i, const SplitRules& rules,
                    const std::unordered_set<std::string>& abbrevs) {
  const char32_t c = cps[i].value;
  if (rules.punctuation.find(c) == std::u32string::npos) return false;
  const bool digit_before = i > 0 && utf8::is_digit(cps[i - 1].value);
  const bool digit_after = i + 1 < cps.size() && utf8::is_digit(cps[i + 1].value);
  if ((c == U'.' || c == U',' || c == U':') && digit_before && digit_after) return false;
  if (c == U'.') return !keeps_period(cps, i, rules, abbrevs);
  return true;
}

struct Range {
  std::size_t begin;
  std::size_t end;
};

// Trims whitespace and unbalanced quote marks from both ends.
Range tidy(std::string_view text, Range r) {
  for (;;) {
    const auto cps = utf8::decode(text.substr(r.begin, r.end - r.begin));
    if (cps.empty()) return {r.begin, r.begin};
    std::size_t first = 0;
    std::size_t last = cps.size();
    while (first < last && utf8::is_space(cps[first].value)) ++first;
    while (last > first && utf8::is_space(cps[last - 1].value)) --last;
    bool changed = first != 0 || last != cps.size();
    if (first < last) {
      const char32_t lead = cps[first].value;
      if (is_quote_open(lead)) {
        const char32_t close = closer_for(lead);
        bool has_close = false;
        for (std::size_t k = first + 1; k < last; ++k) has_close |= cps[k].value == close;
        if (!has_close) {
          ++first;
          changed = true;
        }
      }
    }
    if (first < last) {
      const char32_t tail = cps[last - 1].value;
      const char32_t open = opener_for(tail);
      if (open != 0) {
        bool has_open = false;
        for (std::size_t k = first; k + 1 < last; ++k) has_open |= cps[k].value == open;
        if (!has_open) {
          --last;
          changed = true;
        }
      }
    }
    const Range next = first < last ? Range{r.begin + cps[first].begin, r.begin + cps[last - 1].end}
                                    : Range{r.begin, r.begin};
    if (!changed || next.begin == next.end) return next;
    r = next;
  }
}

}  // namespace

std::vector<ExpressionSpan> split_atomic(const Passage& p, const SplitRules& rules) {
  const auto tok = ngram::make_tokenizer(rules.tokenizer);
  const std::string_view text = p.text;
  const auto cps = utf8::decode(text);
  std::unordered_set<std::string> abbrevs;
  for (const auto& a : rules.abbreviation_list) abbrevs.insert(utf8::fold_case(a));
  const auto prot = protected_positions(cps, text, rules, *tok);

  std::vector<Range> raw;
  std::size_t start = 0;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (prot[i] || !is_split_point(cps, i, rules, abbrevs)) continue;
    raw.push_back({start, cps[i].begin});
    start = cps[i].end;
  }
  raw.push_back({start, text.size()});

  std::vector<Range> spans;
  std::vector<std::size_t> words;
  auto word_tokens = [&](Range r) { return ngram::count_word_tokens(tok->split(text.substr(r.begin, r.end - r.begin))); };
  for (Range r : raw) {
    r = tidy(text, r);
    if (r.begin == r.end) continue;
    const std::size_t w = word_tokens(r);
    if (w == 0) continue;
    spans.push_back(r);
    words.push_back(w);
  }

  if (rules.min_span_tokens > 1 && spans.size() > 1) {
    std::vector<Range> merged;
    std::vector<std::size_t> merged_words;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (words[i] < rules.min_span_tokens && !merged.empty()) {
        merged.back().end = spans[i].end;
        merged_words.back() += words[i];
      } else {
        merged.push_back(spans[i]);
        merged_words.push_back(words[i]);
      }
    }
    // A short leading span joins the one after it.
    if (merged.size() > 1 && merged_words[0] < rules.min_span_tokens) {
      merged[1].begin = merged[0].begin;
      merged.erase(merged.begin());
    }
    spans = std::move(merged);
  }

  std::vector<ExpressionSpan> out;
  out.reserve(spans.size());
  for (const Range& r : spans) {
    ExpressionSpan e;
    e.expr_id = make_expr_id(p.passage_id, out.size());
    e.passage_id = p.passage_id;
    e.char_start = r.begin;
    e.char_end = r.end;
    e.text = std::string(text.substr(r.begin, r.end - r.begin));
    e.tokens = tok->tokens(e.text);
    out.push_back(std::move(e));
  }
  return out;
}

io::Json to_json(const NoveltyProfile& p) {
  io::Json j;
  j["expr_id"] = p.expr_id;
  j["n_star"] = p.n_star ? io::Json(*p.n_star) : io::Json(nullptr);
  j["novel_pct"] = p.novel_pct;
  j["ppl"] = p.ppl.infinite ? io::Json(nullptr) : io::Json(p.ppl.value);
  j["ppl_infinite"] = p.ppl.infinite;
  j["floored_tokens"] = p.ppl.floored_tokens;
  j["ppl_log_std"] = p.ppl_log_std ? io::Json(*p.ppl_log_std) : io::Json(nullptr);
  return j;
}

NoveltyProfile profile_from_json(const io::Json& j) {
  NoveltyProfile p;
  p.expr_id = io::require_string(j, "expr_id");
  // n_star and ppl are null when absent from the corpus or infinite.
  auto nullable = [&](const char* key) -> const io::Json& {
    auto it = j.find(key);
    if (it == j.end()) fail(ErrorCode::kFormat, std::string("missing field '") + key + "'", key);
    return *it;
  };
  const auto& ns = nullable("n_star");
  if (!ns.is_null()) p.n_star = ns.get<std::uint32_t>();
  p.novel_pct = io::require(j, "novel_pct").get<double>();
  p.ppl.infinite = j.value("ppl_infinite", false);
  const auto& ppl = nullable("ppl");
  p.ppl.value = ppl.is_null() ? std::numeric_limits<double>::infinity() : ppl.get<double>();
  if (ppl.is_null()) p.ppl.infinite = true;
  p.ppl.floored_tokens = j.value("floored_tokens", std::size_t{0});
  if (j.contains("ppl_log_std") && !j.at("ppl_log_std").is_null()) p.ppl_log_std = j.at("ppl_log_std").get<double>();
  return p;
}

NoveltyProfile novelty_profile(std::string_view expr_id, std::span<const ngram::TokenId> tokens,
                               const ngram::SuffixIndex& index, const ngram::PerplexityOptions& ppl_options) {
  if (tokens.empty()) fail(ErrorCode::kArgument, "expression " + std::string(expr_id) + " has no tokens", "tokens");
  NoveltyProfile out;
  out.expr_id = std::string(expr_id);
  const std::size_t len = tokens.size();
  for (std::size_t n = 1; n <= len; ++n) {
    std::size_t absent = 0;
    for (std::size_t i = 0; i + n <= len; ++i) {
      if (index.count(tokens.subspan(i, n)) == 0) ++absent;
    }
    if (absent > 0) {
      out.n_star = static_cast<std::uint32_t>(n);
      out.novel_pct = static_cast<double>(absent) / static_cast<double>(len - n + 1);
      break;
    }
  }
  out.ppl = index.perplexity(tokens, ppl_options);
  out.ppl.steps.clear();
  return out;
}

NoveltyProfile novelty_profile(const ExpressionSpan& expr, const ngram::SuffixIndex& index,
                               const ngram::PerplexityOptions& ppl_options) {
  const auto ids = index.encode(expr.tokens);
  return novelty_profile(expr.expr_id, ids, index, ppl_options);
}

Selection select_for_annotation(const std::vector<NoveltyProfile>& profiles, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorCode::kArgument, "threshold must lie in [0, 1]", "threshold");
  }
  std::set<std::string> chosen;
  for (const auto& p : profiles) {
    if (p.novel_pct >= threshold) chosen.insert(p.expr_id);
  }
  Selection s;
  s.expr_ids.assign(chosen.begin(), chosen.end());
  s.share = profiles.empty() ? 0.0 : static_cast<double>(s.expr_ids.size()) / static_cast<double>(profiles.size());
  return s;
}

io::Json to_json(const ContaminationReport& r) {
  auto samples = [](const std::vector<ContaminationSample>& v) {
    io::Json arr = io::Json::array();
    for (const auto& s : v) {
      arr.push_back({{"region", s.region}, {"token_start", s.token_start}, {"text", s.text}, {"count", s.count}});
    }
    return arr;
  };
  return {{"passage_id", r.passage_id},
          {"passed", r.passed},
          {"full_coverage", r.full_coverage},
          {"gram_size", r.gram_size},
          {"seed", r.seed},
          {"samples", samples(r.samples)},
          {"offending", samples(r.offending)}};
}

ContaminationReport contamination_check(const Passage& p, const ngram::SuffixIndex& index,
                                        const ContaminationOptions& options) {
  if (options.gram_size == 0) fail(ErrorCode::kArgument, "gram size must be positive", "n");
  const auto tok = ngram::make_tokenizer(index.tokenizer_name());
  const auto strings = tok->tokens(p.text);
  const auto ids = index.encode(strings);
  const std::size_t n = options.gram_size;
  const std::size_t k = options.samples_per_region;

  ContaminationReport report;
  report.passage_id = p.passage_id;
  report.gram_size = n;
  report.seed = options.seed;

  auto add_sample = [&](int region, std::size_t start, std::size_t len) {
    ContaminationSample s;
    s.region = region;
    s.token_start = start;
    for (std::size_t i = start; i < start + len; ++i) {
      if (i > start) s.text += ' ';
      s.text += strings[i];
    }
    s.count = index.count(std::span<const ngram::TokenId>(ids).subspan(start, len));
    if (s.count > 0) report.offending.push_back(s);
    report.samples.push_back(std::move(s));
  };

  if (ids.empty()) {
    report.full_coverage = false;
  } else if (ids.size() < 3 * n) {
    report.full_coverage = false;
    const std::size_t len = std::min(n, ids.size());
    for (std::size_t start = 0; start + len <= ids.size(); ++start) add_sample(-1, start, len);
  } else {
    // Partial Fisher-Yates over each third of the n-gram start positions.
    std::mt19937_64 rng(options.seed);
    const std::size_t starts = ids.size() - n + 1;
    for (int region = 0; region < 3; ++region) {
      const std::size_t lo = starts * static_cast<std::size_t>(region) / 3;
      const std::size_t hi = starts * static_cast<std::size_t>(region + 1) / 3;
      std::vector<std::size_t> pool(hi - lo);
      for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = lo + i;
      const std::size_t take = std::min(k, pool.size());
      for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      std::vector<std::size_t> picked(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
      std::sort(picked.begin(), picked.end());
      for (std::size_t s : picked) add_sample(region, s, n);
    }
  }
  report.passed = report.offending.empty();
  return report;
}

}  // namespace novelty::segment
