/*
 * Copyright 2026 The relsynth Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relsynth/error.hpp"

namespace relsynth::stats {

/// Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)| of two empirical
/// CDFs.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("KS statistic needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double sup = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j == y.size() || (i < x.size() && x[i] <= y[j])) {
      v = x[i];
    } else {
      v = y[j];
    }
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return sup;
}

/// (1 - KS) * 100.
inline double ks_complement(std::span<const double> real, std::span<const double> synth) {
  return (1.0 - ks_statistic(real, synth)) * 100.0;
}

/// Total variation between the empirical distributions of two label samples.
template <typename Label>
double tv_distance(std::span<const Label> a, std::span<const Label> b) {
  if (a.empty() || b.empty()) throw DataError("TV distance needs two nonempty samples");
  std::map<Label, std::pair<double, double>> mass;
  for (const auto& v : a) mass[v].first += 1.0;
  for (const auto& v : b) mass[v].second += 1.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double total = 0.0;
  for (const auto& [label, m] : mass) total += std::abs(m.first / na - m.second / nb);
  return 0.5 * total;
}

inline double tv_complement(std::span<const std::string> real, std::span<const std::string> synth) {
  return (1.0 - tv_distance(real, synth)) * 100.0;
}

struct Correlation {
  double rho = 0.0;
  bool degenerate = false;  // a side had zero variance; rho set to 0
};

inline Correlation pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n != b.size() || n < 2) throw DataError("Pearson correlation needs two aligned samples of size >= 2");
  // Constant columns are caught up front: rounding in the mean can leave a
  // tiny nonzero spread that would otherwise yield a spurious +-1.
  auto constant = [](std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo == *hi;
  };
  if (constant(a) || constant(b)) return {0.0, true};
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

/// Linear-interpolation quantile of a sorted sample (the "type 7" rule).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace relsynth::stats
