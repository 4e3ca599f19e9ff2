#pragma once

// Likelihood evaluators and grid searches written without the library's
// design matrices or solvers.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Bernoulli log-likelihood of y given linear predictors.
inline double bernoulli_ll(const std::vector<double>& y, const std::vector<double>& eta) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * eta[i] - log1pexp(eta[i]);
  return s;
}

/// Laplace log-likelihood for y ~ b0 + u[g], u ~ N(0, sigma^2), each group
/// handled by a scalar Newton solve.
inline double laplace_single_factor(const std::vector<double>& y, const std::vector<int>& g, int levels, double b0,
                                    double sigma) {
  double total = 0;
  for (int l = 0; l < levels; ++l) {
    std::vector<double> yl;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (g[i] == l) yl.push_back(y[i]);
    }
    double v = 0;
    for (int it = 0; it < 100; ++it) {
      double grad = -v, hess = -1;
      for (double yi : yl) {
        const double m = 1 / (1 + std::exp(-(b0 + sigma * v)));
        grad += sigma * (yi - m);
        hess -= sigma * sigma * m * (1 - m);
      }
      const double step = grad / hess;
      v -= step;
      if (std::abs(step) < 1e-14) break;
    }
    double ll = -0.5 * v * v, h = 1;
    for (double yi : yl) {
      const double e = b0 + sigma * v;
      const double m = 1 / (1 + std::exp(-e));
      ll += yi * e - log1pexp(e);
      h += sigma * sigma * m * (1 - m);
    }
    total += ll - 0.5 * std::log(h);
  }
  return total;
}

/// Zooming grid search for the maximum of f over a box in two dimensions.
inline std::pair<double, double> grid_max(const std::function<double(double, double)>& f, double ax, double bx,
                                          double ay, double by, int rounds = 12, int points = 41) {
  double best_x = 0.5 * (ax + bx), best_y = 0.5 * (ay + by);
  for (int r = 0; r < rounds; ++r) {
    double best = -INFINITY;
    for (int i = 0; i < points; ++i) {
      const double x = ax + (bx - ax) * i / (points - 1);
      for (int j = 0; j < points; ++j) {
        const double y = ay + (by - ay) * j / (points - 1);
        const double v = f(x, y);
        if (v > best) {
          best = v;
          best_x = x;
          best_y = y;
        }
      }
    }
    const double wx = (bx - ax) / 8, wy = (by - ay) / 8;
    ax = best_x - wx;
    bx = best_x + wx;
    ay = best_y - wy;
    by = best_y + wy;
  }
  return {best_x, best_y};
}

}  // namespace oracle
