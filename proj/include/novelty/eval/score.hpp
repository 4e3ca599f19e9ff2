#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "novelty/eval/match.hpp"
#include "novelty/util/io.hpp"

namespace novelty::eval {

enum class Task { kNovel, kNonPragmatic };
std::string_view to_string(Task t) noexcept;
Task parse_task(std::string_view name);

struct PredictionSet {
  std::string passage_id;
  Task task = Task::kNovel;
  std::string predictor_id;
  std::vector<std::string> expressions;
};

/// Rejects empty or blank expression strings.
PredictionSet prediction_from_json(const io::Json& j);
io::Json to_json(const PredictionSet& p);
std::vector<PredictionSet> read_predictions(const std::filesystem::path& path);

enum class MatchMode {
  /// Every prediction matching some gold item is a TP.
  kManyToOne,
  /// Predictions matching an already-matched gold item are discarded.
  kCollapsePerGold,
};
std::string_view to_string(MatchMode m) noexcept;
MatchMode parse_match_mode(std::string_view name);

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  /// 0 when undefined.
  double precision() const noexcept;
  double recall() const noexcept;
  double f1() const noexcept;
};

/// Predictions are deduplicated on their normalized form first.
Counts score_passage(const std::vector<std::string>& predictions, const std::vector<std::string>& gold,
                     MatchMode mode = MatchMode::kManyToOne, double ratio_threshold = kDefaultRatioThreshold);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap over passages of the micro-F1. The interval is
/// widened to contain the point estimate. Fewer than two passages is an
/// argument error.
ConfidenceInterval bootstrap_ci(const std::vector<Counts>& per_passage, std::size_t resamples = 10000,
                                std::uint64_t seed = 0, double level = 0.95);

struct GoldPassage {
  std::string passage_id;
  Task task = Task::kNovel;
  std::string split;
  std::vector<std::string> expr_ids;
  std::vector<std::string> expressions;
};

io::Json to_json(const GoldPassage& g);
GoldPassage gold_from_json(const io::Json& j);

struct ScoreOptions {
  MatchMode mode = MatchMode::kManyToOne;
  double ratio_threshold = kDefaultRatioThreshold;
  std::size_t resamples = 10000;
  std::uint64_t seed = 0;
  double level = 0.95;
};

struct PassageScore {
  std::string passage_id;
  Counts counts;
};

struct EvalReport {
  Task task = Task::kNovel;
  std::string predictor_id;
  MatchMode mode = MatchMode::kManyToOne;
  Counts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfidenceInterval ci;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
  std::vector<PassageScore> passages;
};

io::Json to_json(const EvalReport& r);
/// Fixed-width text table, one line per report.
std::string format_table(const std::vector<EvalReport>& reports);

/// Scores one predictor against `gold` (every gold passage counts, with no
/// predictions meaning all FN). Predictions for passages absent from
/// `gold` raise not-found; sets for the same passage are merged. All sets
/// must share the predictor and the gold task.
EvalReport score_predictions(const std::vector<PredictionSet>& predictions, const std::vector<GoldPassage>& gold,
                             const ScoreOptions& options = {});

struct RandomGuessConfig {
  std::size_t pool = 2500;
  std::size_t gold = 400;
  std::size_t passages = 100;
  std::size_t predictions_per_passage = 4;
};

/// Gold items are spread over passages; each passage's predictions are
/// drawn uniformly from the whole pool. Returns micro precision.
double random_guess_precision(const RandomGuessConfig& config, std::uint64_t seed);

}  // namespace novelty::eval
