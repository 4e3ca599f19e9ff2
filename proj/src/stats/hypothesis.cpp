#include "novelty/stats/hypothesis.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cctype>
#include <cmath>

#include "novelty/util/error.hpp"

namespace novelty::stats {

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<double>(), p); }

double chi_square_upper_tail(double x, int df) {
  if (x <= 0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

WaldTest linear_hypothesis(const ModelFit& fit, const Eigen::VectorXd& c) {
  Eigen::MatrixXd C = c.transpose();
  return linear_hypothesis(fit, C);
}

WaldTest linear_hypothesis(const ModelFit& fit, const Eigen::MatrixXd& C) {
  const auto p = static_cast<Eigen::Index>(fit.fixed.size());
  if (C.cols() != p || C.rows() == 0) {
    fail(ErrorCode::kArgument, "contrast has " + std::to_string(C.cols()) + " columns, model has " +
                                   std::to_string(p) + " coefficients", "contrast");
  }
  const Eigen::VectorXd est = C * fit.beta();
  const Eigen::MatrixXd V = C * fit.vcov * C.transpose();
  if (!V.allFinite()) fail(ErrorCode::kValidation, "covariance of the contrast is not finite", "contrast");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
    fail(ErrorCode::kValidation, "covariance of the contrast is singular", "contrast");
  }
  WaldTest t;
  t.df = static_cast<int>(C.rows());
  t.chi_square = est.dot(ldlt.solve(est));
  t.p = chi_square_upper_tail(t.chi_square, t.df);
  t.estimate = est[0];
  t.se = std::sqrt(V(0, 0));
  return t;
}

Eigen::VectorXd parse_contrast(const ModelFit& fit, std::string_view expr) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fit.fixed.size()));
  if (auto eq = expr.find('='); eq != std::string_view::npos) {
    auto rhs = expr.substr(eq + 1);
    while (!rhs.empty() && std::isspace(static_cast<unsigned char>(rhs.front()))) rhs.remove_prefix(1);
    while (!rhs.empty() && std::isspace(static_cast<unsigned char>(rhs.back()))) rhs.remove_suffix(1);
    if (rhs != "0") fail(ErrorCode::kArgument, "only hypotheses of the form ... = 0 are supported", "contrast");
    expr = expr.substr(0, eq);
  }
  std::size_t i = 0;
  auto skip = [&] {
    while (i < expr.size() && std::isspace(static_cast<unsigned char>(expr[i]))) ++i;
  };
  bool any = false;
  double sign = 1.0;
  for (;;) {
    skip();
    if (i >= expr.size()) break;
    if (expr[i] == '+' || expr[i] == '-') {
      sign = expr[i] == '-' ? -1.0 : 1.0;
      ++i;
      skip();
    } else if (any) {
      fail(ErrorCode::kArgument, "expected '+' or '-' in contrast '" + std::string(expr) + "'", "contrast");
    }
    double weight = 1.0;
    std::size_t start = i;
    while (i < expr.size() && (std::isdigit(static_cast<unsigned char>(expr[i])) || expr[i] == '.')) ++i;
    skip();
    if (i > start && i < expr.size() && expr[i] == '*') {
      weight = std::stod(std::string(expr.substr(start, i - start)));
      ++i;
      skip();
      start = i;
    } else {
      i = start;
    }
    // Longest coefficient name at this position; names may contain '-'.
    int j = -1;
    std::size_t best = 0;
    for (std::size_t k = 0; k < fit.fixed.size(); ++k) {
      const auto& name = fit.fixed[k].name;
      if (name.size() <= best || expr.substr(start, name.size()) != name) continue;
      const std::size_t after = start + name.size();
      if (after < expr.size() && expr[after] != '+' && expr[after] != '-' &&
          !std::isspace(static_cast<unsigned char>(expr[after]))) {
        continue;
      }
      j = static_cast<int>(k);
      best = name.size();
    }
    if (j < 0) {
      std::size_t end = start;
      while (end < expr.size() && !std::isspace(static_cast<unsigned char>(expr[end])) && expr[end] != '+') ++end;
      fail(ErrorCode::kNotFound, "no coefficient named '" + std::string(expr.substr(start, end - start)) + "'",
           "contrast");
    }
    i = start + best;
    c[j] += sign * weight;
    sign = 1.0;
    any = true;
  }
  if (!any) fail(ErrorCode::kArgument, "empty contrast", "contrast");
  return c;
}

std::vector<SourceContrast> source_contrasts(const ModelFit& fit, const std::string& factor, double level) {
  auto ref = fit.reference.find(factor);
  auto levels = fit.factor_levels.find(factor);
  if (ref == fit.reference.end() || levels == fit.factor_levels.end()) {
    fail(ErrorCode::kNotFound, "model has no categorical term '" + factor + "'", "factor");
  }
  const double z = normal_quantile(0.5 + level / 2.0);
  std::vector<SourceContrast> out;
  SourceContrast self;
  self.level = ref->second;
  self.reference = ref->second;
  out.push_back(self);
  for (const auto& l : levels->second) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fit.fixed.size()));
    const int j = fit.index_of(factor + l);
    if (j < 0) fail(ErrorCode::kNotFound, "no coefficient named '" + factor + l + "'", "factor");
    c[j] = 1.0;
    const auto t = linear_hypothesis(fit, c);
    SourceContrast s;
    s.level = l;
    s.reference = ref->second;
    s.estimate = t.estimate;
    s.se = t.se;
    s.odds_ratio = std::exp(t.estimate);
    s.ci_low = std::exp(t.estimate - z * t.se);
    s.ci_high = std::exp(t.estimate + z * t.se);
    s.p = t.p;
    out.push_back(s);
  }
  return out;
}

io::Json to_json(const WaldTest& t) {
  return {{"estimate", t.estimate}, {"se", t.se}, {"chi_square", t.chi_square}, {"df", t.df}, {"p", t.p}};
}

io::Json to_json(const SourceContrast& c) {
  return {{"contrast", c.level + " / " + c.reference},
          {"level", c.level},
          {"reference", c.reference},
          {"estimate", c.estimate},
          {"se", c.se},
          {"odds_ratio", c.odds_ratio},
          {"ci_low", c.ci_low},
          {"ci_high", c.ci_high},
          {"p", c.p}};
}

}  // namespace novelty::stats
