#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

/// Straightforward bootstrap: tp/fp/fn triples, minstd engine, nearest-rank
/// percentiles.
inline std::pair<double, double> naive_bootstrap(const std::vector<std::array<long, 3>>& passages, int resamples,
                                                 unsigned seed) {
  std::minstd_rand rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, passages.size() - 1);
  std::vector<double> f1s;
  for (int b = 0; b < resamples; ++b) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < passages.size(); ++i) {
      const auto& c = passages[pick(rng)];
      tp += c[0];
      fp += c[1];
      fn += c[2];
    }
    const long denom = 2 * tp + fp + fn;
    f1s.push_back(denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom));
  }
  std::sort(f1s.begin(), f1s.end());
  auto rank = [&](double p) {
    auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(f1s.size())));
    return f1s[std::max<std::size_t>(k, 1) - 1];
  };
  return {rank(0.025), rank(0.975)};
}

}  // namespace oracle
