#include "novelty/stats/standardize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "novelty/util/error.hpp"

namespace novelty::stats {

InfinityPolicy parse_infinity_policy(std::string_view name) {
  if (name == "exclude") return InfinityPolicy::kExclude;
  if (name == "error") return InfinityPolicy::kError;
  fail(ErrorCode::kConfig, "unknown infinity policy '" + std::string(name) + "'", "infinity");
}

Standardized log_standardize(std::span<const double> values, InfinityPolicy policy) {
  Standardized out;
  out.values.resize(values.size());
  std::vector<double> logs;
  for (double v : values) {
    if (std::isinf(v) && v > 0) {
      if (policy == InfinityPolicy::kError) fail(ErrorCode::kArgument, "infinite value under policy 'error'", "values");
      ++out.excluded;
      continue;
    }
    if (!(v > 0)) fail(ErrorCode::kArgument, "log-standardization needs positive values", "values");
    logs.push_back(std::log(v));
  }
  if (logs.empty()) fail(ErrorCode::kArgument, "no finite values to standardize", "values");
  long double sum = 0;
  for (double l : logs) sum += l;
  out.mean = static_cast<double>(sum / static_cast<long double>(logs.size()));
  long double ss = 0;
  for (double l : logs) ss += (l - out.mean) * static_cast<long double>(l - out.mean);
  out.sd = static_cast<double>(std::sqrt(ss / static_cast<long double>(logs.size())));
  if (!(out.sd > 0)) fail(ErrorCode::kArgument, "standard deviation is zero", "values");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isinf(values[i])) continue;
    out.values[i] = (std::log(values[i]) - out.mean) / out.sd;
  }
  return out;
}

std::optional<double> apply_log_standardize(double value, double mean, double sd) {
  if (!(value > 0) || std::isinf(value)) return std::nullopt;
  return (std::log(value) - mean) / sd;
}

double quantile7(std::vector<double> data, double p) {
  if (data.empty()) fail(ErrorCode::kArgument, "quantile of empty data", "values");
  std::sort(data.begin(), data.end());
  const double h = (static_cast<double>(data.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, data.size() - 1);
  return data[lo] + (h - static_cast<double>(lo)) * (data[hi] - data[lo]);
}

}  // namespace novelty::stats
