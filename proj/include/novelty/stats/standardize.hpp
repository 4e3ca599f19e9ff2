#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace novelty::stats {

enum class InfinityPolicy {
  /// Infinite entries get no standardized value and are counted.
  kExclude,
  /// Any infinite entry is an argument error.
  kError,
};

InfinityPolicy parse_infinity_policy(std::string_view name);

struct Standardized {
  std::vector<std::optional<double>> values;
  /// Mean and population sd of the finite logs.
  double mean = 0.0;
  double sd = 0.0;
  std::size_t excluded = 0;
};

/// z-scores of log(values). Non-positive finite values are an argument error;
/// equal finite values give an sd-zero error.
Standardized log_standardize(std::span<const double> values, InfinityPolicy policy = InfinityPolicy::kExclude);

/// Applies an existing mean/sd to new values (e.g. highlights scored after the
/// profiles were standardized).
std::optional<double> apply_log_standardize(double value, double mean, double sd);

/// R type-7 sample quantile of unsorted data; p in [0, 1].
double quantile7(std::vector<double> data, double p);

}  // namespace novelty::stats
