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

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "relsynth/error.hpp"

namespace relsynth {

/// Variance schedule of the forward process. Arrays are indexed by the
/// timestep t = 1..T; index 0 holds the t = 0 values (alpha_bar = 1).
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> beta_tilde;  // posterior variance; beta_tilde[1] = beta[1]
  std::vector<double> sigma;       // reverse-step noise scale, sigma^2 = beta_tilde
};

inline constexpr double kCosineOffset = 0.008;
inline constexpr double kMaxBeta = 0.999;

/// Builds the schedule from a list of betas (1-based after the leading 0).
inline NoiseSchedule schedule_from_betas(const std::vector<double>& betas) {
  NoiseSchedule s;
  s.steps = static_cast<int>(betas.size());
  const std::size_t n = betas.size() + 1;
  s.beta.assign(n, 0.0);
  s.alpha.assign(n, 1.0);
  s.alpha_bar.assign(n, 1.0);
  s.beta_tilde.assign(n, 0.0);
  s.sigma.assign(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) {
    s.beta[t] = betas[t - 1];
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    s.beta_tilde[t] = t == 1 ? s.beta[1]
                             : (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]) * s.beta[t];
    s.sigma[t] = std::sqrt(s.beta_tilde[t]);
  }
  return s;
}

/// Cosine schedule: alpha_bar(t) = f(t)/f(0) with
/// f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2), s = 0.008, and
/// beta_t = 1 - alpha_bar(t)/alpha_bar(t-1) clipped to 0.999. The stored
/// alpha_bar is the running product of the clipped betas.
inline NoiseSchedule make_cosine_schedule(int steps) {
  if (steps < 1) throw ValidationError("diffusion needs at least one timestep");
  const double T = static_cast<double>(steps);
  auto f = [&](double t) {
    const double c = std::cos(((t / T + kCosineOffset) / (1.0 + kCosineOffset)) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0.0);
  std::vector<double> betas;
  betas.reserve(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    const double prev = f(t - 1.0) / f0;
    const double cur = f(static_cast<double>(t)) / f0;
    betas.push_back(std::min(1.0 - cur / prev, kMaxBeta));
  }
  return schedule_from_betas(betas);
}

inline NoiseSchedule make_schedule(const std::string& kind, int steps) {
  if (kind == "cosine") return make_cosine_schedule(steps);
  throw UsageError("unknown noise schedule '" + kind + "'");
}

/// Closed-form q(x_t | x_0): sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
inline std::vector<double> forward_sample(std::span<const double> x0, int t,
                                          std::span<const double> eps, const NoiseSchedule& sched) {
  if (x0.size() != eps.size()) throw ValidationError("noise and data dimensions differ");
  if (t < 1 || t > sched.steps) throw ValidationError("timestep out of range");
  const double a = std::sqrt(sched.alpha_bar[static_cast<std::size_t>(t)]);
  const double b = std::sqrt(1.0 - sched.alpha_bar[static_cast<std::size_t>(t)]);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

}  // namespace relsynth
