#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "novelty/stats/formula.hpp"
#include "novelty/util/io.hpp"

namespace novelty::stats {

struct FitOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
  /// |beta| above this after an unpenalized fit is treated as separation.
  double separation_threshold = 15.0;
  /// Normal prior sd on non-intercept coefficients for the fallback fit.
  double penalty_sd = 2.5;
  /// Starting value for every random-intercept sd.
  double initial_sd = 0.5;
  /// sd below this is reported as a boundary fit.
  double boundary_sd = 1e-4;
  /// Ignore the grouping factors entirely (plain logistic regression).
  bool fixed_only = false;
};

struct FixedEffect {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
  double odds_ratio() const;
};

struct GroupEstimate {
  std::string name;
  std::size_t n_levels = 0;
  double sd = 0.0;
  double variance() const noexcept { return sd * sd; }
  bool boundary = false;
  /// Conditional modes of the intercepts, one per level.
  std::vector<std::string> levels;
  std::vector<double> modes;
};

struct ModelFit {
  std::string formula;
  std::vector<FixedEffect> fixed;
  Eigen::MatrixXd vcov;
  std::vector<GroupEstimate> groups;
  double log_likelihood = 0.0;
  double aic = 0.0;
  bool converged = false;
  bool penalized = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::size_t n_obs = 0;
  std::map<std::string, std::string> reference;
  std::map<std::string, std::vector<std::string>> factor_levels;
  std::vector<std::string> warnings;

  Eigen::VectorXd beta() const;
  int index_of(const std::string& name) const;
  /// Throws not_found for an unknown coefficient name.
  const FixedEffect& coefficient(const std::string& name) const;
};

io::Json to_json(const ModelFit& fit);
ModelFit model_fit_from_json(const io::Json& j);

/// Laplace approximation to the marginal log-likelihood of a logistic model
/// with independent normal random intercepts, plus its exact gradient.
/// Parameters are (beta, sd_1..sd_K); the sds enter with their sign, the
/// likelihood being even in each.
class LaplaceObjective {
 public:
  explicit LaplaceObjective(const Design& design, std::vector<double> prior_precision = {});

  std::size_t dimension() const noexcept { return p_ + k_; }
  double value(const Eigen::VectorXd& theta);
  double value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad);
  /// Conditional modes of the spherical effects at the last evaluation.
  const Eigen::VectorXd& modes() const noexcept { return v_; }
  std::size_t q() const noexcept { return q_; }

 private:
  void solve_modes(const Eigen::VectorXd& theta);
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad);

  const Design& d_;
  std::size_t n_, p_, k_, q_;
  std::vector<std::size_t> offset_;
  std::vector<double> prior_;
  Eigen::VectorXd v_;
  Eigen::VectorXd eta_, mu_, w_;
};

/// Throws a validation error when every outcome is identical.
ModelFit fit_glmm(const Design& design, const FitOptions& options = {});
ModelFit fit_glmm(const ObservationTable& table, const std::string& formula, const FitOptions& options = {},
                  const DesignOptions& design_options = {});

/// Plain logistic regression by iteratively reweighted least squares;
/// starting values for the mixed fit.
Eigen::VectorXd irls_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int max_iter = 100,
                              const std::vector<double>& prior_precision = {});

/// Fixed-effects probability for one design row.
double predict_probability(const ModelFit& fit, const Eigen::VectorXd& x);

double wald_p(double z);

}  // namespace novelty::stats
