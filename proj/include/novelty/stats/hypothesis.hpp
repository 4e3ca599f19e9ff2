#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "novelty/stats/glmm.hpp"

namespace novelty::stats {

struct WaldTest {
  double estimate = 0.0;
  double se = 0.0;
  double chi_square = 0.0;
  int df = 1;
  double p = 1.0;
};

/// Wald test of c'beta = 0. Dimension mismatch is an argument error; zero or
/// non-finite variance is a singular-covariance error.
WaldTest linear_hypothesis(const ModelFit& fit, const Eigen::VectorXd& c);

/// Joint test of rows of C (C beta = 0) with df = rows.
WaldTest linear_hypothesis(const ModelFit& fit, const Eigen::MatrixXd& C);

/// Parses "a + b:c - 2*d [= 0]" over coefficient names into a contrast vector.
Eigen::VectorXd parse_contrast(const ModelFit& fit, std::string_view expr);

double normal_quantile(double p);
double chi_square_upper_tail(double x, int df);

struct SourceContrast {
  std::string level;
  std::string reference;
  double estimate = 0.0;
  double se = 0.0;
  double odds_ratio = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
  double p = 1.0;
};

/// Each level of `factor` against the fit's reference level on the log-odds
/// scale, numeric covariates held at 0. The reference row is OR 1.
std::vector<SourceContrast> source_contrasts(const ModelFit& fit, const std::string& factor, double level = 0.95);

io::Json to_json(const WaldTest& t);
io::Json to_json(const SourceContrast& c);

}  // namespace novelty::stats
