#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "novelty/stats/glmm.hpp"
#include "novelty/stats/table.hpp"

namespace novelty::stats {

struct ExpressionPoint {
  std::string expr_id;
  double ppl_log_std = 0.0;
  /// Judged creative by at least one annotator.
  bool creative = false;
};

/// One point per expression: the standardized perplexity of its first row and
/// whether any row is creative. Rows with a missing perplexity are skipped.
std::vector<ExpressionPoint> expression_points(const ObservationTable& table, const std::string& expr_col = "expr_id",
                                               const std::string& ppl_col = "ppl_log_std",
                                               const std::string& label_col = "creative");

struct QuartileReport {
  std::size_t n_expressions = 0;
  std::size_t n_creative = 0;
  std::size_t n_top_quartile = 0;
  double q1 = 0.0;
  double q3 = 0.0;
  double mean = 0.0;
  /// Share of expressions with ppl_log_std >= Q3 that no annotator judged creative.
  double top_quartile_not_creative = 0.0;
  /// Share of creative expressions with ppl_log_std below the mean.
  double creative_below_mean = 0.0;
  /// Share of creative expressions with ppl_log_std <= Q1.
  double creative_lowest_quartile = 0.0;
};

/// Quartiles are type-7 sample quantiles over all points. Shares with an empty
/// denominator are 0.
QuartileReport quartile_report(const std::vector<ExpressionPoint>& points);
io::Json to_json(const QuartileReport& r);

struct PreferencePair {
  std::string pair_id;
  bool preferred_a = false;
  double nov_a = 0, nov_b = 0;
  double prag_a = 0, prag_b = 0;
  double words_a = 1, words_b = 1;
  /// Grouping ids such as annotator, seed author, author.
  std::map<std::string, std::string> groups;

  double delta_nov() const { return nov_a / words_a - nov_b / words_b; }
  double delta_prag() const { return prag_a / words_a - prag_b / words_b; }
};

/// Records carry pair_id, preferred ("A"/"B" or boolean preferred_a), the
/// counts nov_a, nov_b, prag_a, prag_b and word counts words_a, words_b.
/// Every other string field is kept as a grouping id.
PreferencePair preference_from_json(const io::Json& j);
std::vector<PreferencePair> read_preferences(const std::filesystem::path& path);

struct PreferenceOptions {
  /// Random-intercept terms, e.g. {"annotator", "seed_author/author"}.
  std::vector<std::string> groups;
  /// z-score the per-word deltas before fitting.
  bool standardize = true;
  FitOptions fit;
};

struct PreferenceFit {
  ModelFit fit;
  std::vector<std::string> dropped;
  std::map<std::string, std::pair<double, double>> scaling;
  std::string formula;
};

PreferenceFit fit_preference_model(const std::vector<PreferencePair>& pairs, const PreferenceOptions& options = {});
io::Json to_json(const PreferenceFit& f);

struct CurvePoint {
  std::string level;
  double x = 0.0;
  double eta = 0.0;
  double p = 0.0;
  double p_low = 0.0;
  double p_high = 0.0;
};

/// Population-level predicted probabilities along `covariate` for each level
/// of `factor` (or a single curve when factor is empty). Other covariates are
/// held at 0 and random intercepts at 0. Bands are Wald intervals on eta.
std::vector<CurvePoint> predicted_curves(const ModelFit& fit, const std::string& covariate, const std::string& factor,
                                         double from, double to, std::size_t steps, double level = 0.95);
std::string curves_csv(const std::vector<CurvePoint>& points);

}  // namespace novelty::stats
