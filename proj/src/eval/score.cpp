#include "novelty/eval/score.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "novelty/util/error.hpp"
#include "novelty/util/utf8.hpp"

namespace novelty::eval {
namespace {

struct Normalized {
  std::string text;
  std::u32string code_points;
};

Normalized prepare(std::string_view s) {
  Normalized n;
  n.text = normalize(s);
  n.code_points = utf8::to_u32(n.text);
  return n;
}

double quantile7(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string_view to_string(Task t) noexcept { return t == Task::kNovel ? "novel" : "non_pragmatic"; }

Task parse_task(std::string_view name) {
  if (name == "novel") return Task::kNovel;
  if (name == "non_pragmatic" || name == "non-pragmatic") return Task::kNonPragmatic;
  fail(ErrorCode::kArgument, "unknown task '" + std::string(name) + "'", "task");
}

std::string_view to_string(MatchMode m) noexcept { return m == MatchMode::kManyToOne ? "many_to_one" : "collapse"; }

MatchMode parse_match_mode(std::string_view name) {
  if (name == "many_to_one") return MatchMode::kManyToOne;
  if (name == "collapse") return MatchMode::kCollapsePerGold;
  fail(ErrorCode::kArgument, "unknown match mode '" + std::string(name) + "'", "mode");
}

PredictionSet prediction_from_json(const io::Json& j) {
  PredictionSet p;
  p.passage_id = io::require_string(j, "passage_id");
  p.task = parse_task(io::require_string(j, "task"));
  p.predictor_id = j.value("predictor_id", std::string());
  const auto& list = io::require(j, "expressions");
  if (!list.is_array()) fail(ErrorCode::kFormat, "expressions must be a list", "expressions");
  for (const auto& e : list) {
    if (!e.is_string() || utf8::trim(e.get<std::string>()).empty()) {
      fail(ErrorCode::kValidation, "predicted expressions must be non-empty strings", "expressions");
    }
    p.expressions.push_back(e.get<std::string>());
  }
  return p;
}

io::Json to_json(const PredictionSet& p) {
  return {{"passage_id", p.passage_id},
          {"task", to_string(p.task)},
          {"predictor_id", p.predictor_id},
          {"expressions", p.expressions}};
}

std::vector<PredictionSet> read_predictions(const std::filesystem::path& path) {
  std::vector<PredictionSet> out;
  for (const auto& j : io::read_versioned_jsonl(path, "novelty.predictions")) out.push_back(prediction_from_json(j));
  return out;
}

double Counts::precision() const noexcept {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double Counts::recall() const noexcept {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Counts::f1() const noexcept {
  const auto denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Counts score_passage(const std::vector<std::string>& predictions, const std::vector<std::string>& gold,
                     MatchMode mode, double ratio_threshold) {
  std::vector<Normalized> g;
  g.reserve(gold.size());
  for (const auto& s : gold) g.push_back(prepare(s));

  std::set<std::string> seen;
  std::vector<bool> hit(g.size(), false);
  std::vector<bool> credited(g.size(), false);
  Counts c;
  for (const auto& raw : predictions) {
    const auto p = prepare(raw);
    if (!seen.insert(p.text).second) continue;
    std::vector<std::size_t> matches;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (compare_normalized(p.text, p.code_points, g[i].text, g[i].code_points, ratio_threshold).matched()) {
        matches.push_back(i);
      }
    }
    if (matches.empty()) {
      ++c.fp;
      continue;
    }
    for (auto i : matches) hit[i] = true;
    if (mode == MatchMode::kManyToOne) {
      ++c.tp;
      continue;
    }
    auto fresh = std::find_if(matches.begin(), matches.end(), [&](std::size_t i) { return !credited[i]; });
    if (fresh != matches.end()) {
      credited[*fresh] = true;
      ++c.tp;
    }
  }
  for (bool h : hit) c.fn += h ? 0 : 1;
  return c;
}

ConfidenceInterval bootstrap_ci(const std::vector<Counts>& per_passage, std::size_t resamples, std::uint64_t seed,
                                double level) {
  if (per_passage.size() < 2) fail(ErrorCode::kArgument, "bootstrap needs at least two passages", "passages");
  if (resamples == 0) fail(ErrorCode::kArgument, "resamples must be positive", "resamples");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCode::kArgument, "level must lie in (0, 1)", "level");
  Counts total;
  for (const auto& c : per_passage) total += c;
  const double point = total.f1();

  std::mt19937_64 rng(seed);
  const auto n = per_passage.size();
  std::vector<double> stats(resamples);
  for (auto& s : stats) {
    Counts sum;
    for (std::size_t i = 0; i < n; ++i) sum += per_passage[rng() % n];
    s = sum.f1();
  }
  std::sort(stats.begin(), stats.end());
  const double alpha = (1.0 - level) / 2.0;
  ConfidenceInterval ci{quantile7(stats, alpha), quantile7(stats, 1.0 - alpha)};
  ci.low = std::min(ci.low, point);
  ci.high = std::max(ci.high, point);
  return ci;
}

io::Json to_json(const GoldPassage& g) {
  io::Json items = io::Json::array();
  for (std::size_t i = 0; i < g.expressions.size(); ++i) {
    items.push_back({{"expr_id", i < g.expr_ids.size() ? g.expr_ids[i] : std::string()}, {"text", g.expressions[i]}});
  }
  return {{"passage_id", g.passage_id}, {"task", to_string(g.task)}, {"split", g.split}, {"expressions", items}};
}

GoldPassage gold_from_json(const io::Json& j) {
  GoldPassage g;
  g.passage_id = io::require_string(j, "passage_id");
  g.task = parse_task(io::require_string(j, "task"));
  g.split = j.value("split", std::string());
  for (const auto& e : io::require(j, "expressions")) {
    if (e.is_string()) {
      g.expr_ids.emplace_back();
      g.expressions.push_back(e.get<std::string>());
    } else {
      g.expr_ids.push_back(e.value("expr_id", std::string()));
      g.expressions.push_back(io::require_string(e, "text"));
    }
  }
  return g;
}

io::Json to_json(const EvalReport& r) {
  io::Json passages = io::Json::array();
  for (const auto& p : r.passages) {
    passages.push_back({{"passage_id", p.passage_id}, {"tp", p.counts.tp}, {"fp", p.counts.fp}, {"fn", p.counts.fn}});
  }
  return {{"schema", "novelty.eval_report"},
          {"version", 1},
          {"task", to_string(r.task)},
          {"predictor_id", r.predictor_id},
          {"match_mode", to_string(r.mode)},
          {"gold_aggregation", "union"},
          {"tp", r.counts.tp},
          {"fp", r.counts.fp},
          {"fn", r.counts.fn},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"ci_low", r.ci.low},
          {"ci_high", r.ci.high},
          {"ci_method", "percentile bootstrap over passages"},
          {"resamples", r.resamples},
          {"seed", r.seed},
          {"passages", passages}};
}

std::string format_table(const std::vector<EvalReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %-14s %6s %6s %6s %7s %7s %7s  %s\n", "predictor", "task", "tp", "fp", "fn",
                "P", "R", "F1", "95% CI");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-24s %-14s %6zu %6zu %6zu %7.4f %7.4f %7.4f  [%.4f, %.4f]\n",
                  r.predictor_id.c_str(), std::string(to_string(r.task)).c_str(), r.counts.tp, r.counts.fp,
                  r.counts.fn, r.precision, r.recall, r.f1, r.ci.low, r.ci.high);
    out += line;
  }
  return out;
}

EvalReport score_predictions(const std::vector<PredictionSet>& predictions, const std::vector<GoldPassage>& gold,
                             const ScoreOptions& options) {
  if (gold.empty()) fail(ErrorCode::kArgument, "gold set is empty", "gold");
  EvalReport r;
  r.task = gold.front().task;
  r.mode = options.mode;
  r.resamples = options.resamples;
  r.seed = options.seed;

  std::map<std::string, std::vector<std::string>> by_passage;
  for (const auto& g : gold) {
    if (g.task != r.task) fail(ErrorCode::kValidation, "gold mixes tasks", "gold");
    by_passage[g.passage_id];
  }
  for (const auto& p : predictions) {
    if (p.task != r.task) fail(ErrorCode::kValidation, "prediction task does not match the gold task", "task");
    if (r.predictor_id.empty()) r.predictor_id = p.predictor_id;
    if (p.predictor_id != r.predictor_id) fail(ErrorCode::kValidation, "predictions mix predictors", "predictor_id");
    auto it = by_passage.find(p.passage_id);
    if (it == by_passage.end()) fail(ErrorCode::kNotFound, "no gold for passage " + p.passage_id, "passage_id");
    it->second.insert(it->second.end(), p.expressions.begin(), p.expressions.end());
  }

  std::vector<Counts> per;
  for (const auto& g : gold) {
    const auto c = score_passage(by_passage[g.passage_id], g.expressions, options.mode, options.ratio_threshold);
    r.passages.push_back({g.passage_id, c});
    r.counts += c;
    per.push_back(c);
  }
  r.precision = r.counts.precision();
  r.recall = r.counts.recall();
  r.f1 = r.counts.f1();
  if (per.size() >= 2) {
    r.ci = bootstrap_ci(per, options.resamples, options.seed, options.level);
  } else {
    r.ci = {r.f1, r.f1};
  }
  return r;
}

double random_guess_precision(const RandomGuessConfig& config, std::uint64_t seed) {
  if (config.gold > config.pool || config.passages == 0 || config.pool == 0) {
    fail(ErrorCode::kArgument, "invalid random-guess configuration");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::string> pool(config.pool);
  for (auto& s : pool) {
    s.resize(20);
    for (auto& ch : s) ch = static_cast<char>('a' + rng() % 26);
  }
  std::vector<std::size_t> order(config.pool);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  std::vector<std::vector<std::string>> gold(config.passages);
  for (std::size_t i = 0; i < config.gold; ++i) gold[i % config.passages].push_back(pool[order[i]]);
  Counts total;
  for (const auto& g : gold) {
    std::vector<std::string> preds;
    for (std::size_t k = 0; k < config.predictions_per_passage; ++k) preds.push_back(pool[rng() % config.pool]);
    total += score_passage(preds, g);
  }
  return total.precision();
}

}  // namespace novelty::eval
