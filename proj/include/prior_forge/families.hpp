// Copyright 2026 The prior-forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "prior_forge/error.hpp"
#include "prior_forge/grid_density.hpp"
#include "prior_forge/special.hpp"

// Closed-form densities and kernels used as pool components and priors.
namespace prior_forge::family {

inline constexpr Interval kUnitInterval{0.0, 1.0};
inline constexpr Interval kPositiveHalfLine{0.0, kInfinity};
inline constexpr Interval kRealLine{-kInfinity, kInfinity};

/// Beta(a, b) kernel x^(a-1) (1-x)^(b-1); a, b may be <= 0 (improper).
inline LogFunction beta_kernel_fn(double a, double b, double log_scale = 0.0) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("beta kernel: non-finite exponent");
  return [a, b, log_scale](double x) {
    if (x < 0.0 || x > 1.0) return -kInfinity;
    return xlogy(a - 1.0, x) + xlog1my(b - 1.0, x) + log_scale;
  };
}

/// Normalized Beta(a, b) density on [0, 1].
inline GridDensity beta(double a, double b, const GridSpec& spec = {}) {
  const double norm = log_beta(a, b);
  return GridDensity::from_log_function(kUnitInterval, beta_kernel_fn(a, b, -norm), spec, true);
}

/// Unnormalized Beta kernel; improper when a <= 0 or b <= 0.
inline GridDensity beta_kernel(double a, double b, const GridSpec& spec = {}) {
  return GridDensity::from_log_function(kUnitInterval, beta_kernel_fn(a, b), spec, false);
}

/// Normalized Gamma(shape, scale) density on [0, inf).
inline GridDensity gamma(double shape, double scale, const GridSpec& spec = {}) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw DomainError("gamma: shape and scale must be positive");
  const double norm = log_gamma(shape) + shape * std::log(scale);
  auto fn = [shape, scale, norm](double x) {
    if (x < 0.0) return -kInfinity;
    return xlogy(shape - 1.0, x) - x / scale - norm;
  };
  return GridDensity::from_log_function(kPositiveHalfLine, fn, spec, true);
}

/// Normalized Normal(mean, sd) density on the real line.
inline GridDensity normal(double mean, double sd, const GridSpec& spec = {}) {
  if (!(sd > 0.0) || !std::isfinite(mean)) throw DomainError("normal: need finite mean and sd > 0");
  const double norm = std::log(sd) + 0.5 * std::log(2.0 * std::numbers::pi);
  auto fn = [mean, sd, norm](double x) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z - norm;
  };
  return GridDensity::from_log_function(kRealLine, fn, spec, true);
}

/// Constant log density 0 on `domain`; improper on unbounded domains.
inline GridDensity flat(const Interval& domain, const GridSpec& spec = {}) {
  auto fn = [domain](double x) { return (x < domain.lo || x > domain.hi) ? -kInfinity : 0.0; };
  return GridDensity::from_log_function(domain, fn, spec, false);
}

/// Exponential tilt exp(slope * x) on `domain`.
inline GridDensity exponential_tilt(double slope, const Interval& domain, const GridSpec& spec = {}) {
  if (!std::isfinite(slope)) throw DomainError("exponential tilt: non-finite slope");
  auto fn = [slope, domain](double x) {
    return (x < domain.lo || x > domain.hi) ? -kInfinity : slope * x;
  };
  return GridDensity::from_log_function(domain, fn, spec, false);
}

/// Power kernel x^(power) on (0, inf): the scale-invariant family of objective priors.
inline GridDensity power_kernel(double power, const GridSpec& spec = {}) {
  auto fn = [power](double x) { return x < 0.0 ? -kInfinity : xlogy(power, x); };
  return GridDensity::from_log_function(kPositiveHalfLine, fn, spec, false);
}

}  // namespace prior_forge::family
