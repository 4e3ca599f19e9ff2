#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "novelty/stats/table.hpp"

namespace novelty::stats {

/// Product of variables, e.g. {"ppl_log_std", "gen_source"} for ppl_log_std:gen_source.
using Term = std::vector<std::string>;

/// R-style model formula restricted to fixed effects and random intercepts:
///   y ~ a + b + a:b + c*d + (1|g) + (1|h/k) [+ 0]
/// `h/k` expands to the factors h and h:k.
struct Formula {
  std::string response;
  bool intercept = true;
  std::vector<Term> fixed;
  std::vector<Term> groups;

  static Formula parse(std::string_view text);
  std::string to_string() const;
};

std::string term_name(const Term& t);

struct DesignOptions {
  /// Reference level per categorical column. Default: "human" when present,
  /// otherwise the alphabetically first level.
  std::map<std::string, std::string> reference;
};

struct GroupFactor {
  std::string name;
  std::vector<std::string> levels;
  /// Level index per observation.
  std::vector<int> index;
};

struct Design {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
  std::vector<GroupFactor> groups;
  /// Reference level per categorical fixed-effect variable.
  std::map<std::string, std::string> reference;
  /// Non-reference levels per categorical fixed-effect variable.
  std::map<std::string, std::vector<std::string>> factor_levels;
  std::vector<std::string> warnings;

  std::size_t n() const noexcept { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(X.cols()); }
  int column_index(const std::string& name) const;
};

/// Treatment coding; numeric columns enter as-is. Missing values in any used
/// column are a validation error naming the column and row.
Design build_design(const ObservationTable& table, const Formula& formula, const DesignOptions& options = {});

}  // namespace novelty::stats
