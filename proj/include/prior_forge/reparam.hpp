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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prior_forge/error.hpp"
#include "prior_forge/parallel.hpp"
#include "prior_forge/random.hpp"
#include "prior_forge/sparse_multinomial.hpp"
#include "prior_forge/special.hpp"

namespace prior_forge {

namespace detail {

inline constexpr std::size_t kDrawBlock = 4096;

// Fills `count` rows of `cols` values; block b of kDrawBlock rows draws from
// stream.child(b), so output does not depend on the thread count.
template <class Row>
SampleMatrix blocked_draws(std::size_t count, std::size_t cols, const RandomStream& stream, Row row) {
  SampleMatrix out{count, cols, std::vector<double>(count * cols)};
  const std::size_t blocks = (count + kDrawBlock - 1) / kDrawBlock;
  parallel_map(blocks, [&](std::size_t b) {
    Sampler s(stream.child(b));
    const std::size_t end = std::min(count, (b + 1) * kDrawBlock);
    for (std::size_t i = b * kDrawBlock; i < end; ++i) row(s, out.row(i));
    return 0;
  });
  return out;
}

}  // namespace detail

/// Independent psi_j ~ Gamma(a, beta) (shape, scale), returned as
/// theta_j = psi_j / sum psi.
inline SampleMatrix gamma_normalize_sample(double a, double beta, std::size_t m, std::size_t count,
                                           const RandomStream& stream) {
  detail::require_positive_parameter(a, "gamma normalization: a");
  detail::require_positive_parameter(beta, "gamma normalization: beta");
  if (m < 2) throw DomainError("gamma normalization: need m >= 2");
  if (count == 0) throw DomainError("gamma normalization: count must be positive");
  return detail::blocked_draws(count, m, stream, [a, beta](Sampler& s, std::span<double> row) {
    double sum = 0.0;
    for (double& v : row) {
      v = s.gamma(a, beta);
      sum += v;
    }
    if (sum > 0.0 && std::isfinite(sum)) {
      for (double& v : row) v /= sum;
      return;
    }
    // Every psi underflowed or overflowed: redraw in log space.
    double mx = -kInfinity;
    for (double& v : row) {
      v = std::log(beta) + s.log_standard_gamma(a);
      mx = std::max(mx, v);
    }
    Sampler::normalize_log_weights(row, mx);
  });
}

/// log P(X = x | sum X = n) for independent X_j ~ Poisson(psi_j).
inline double poisson_conditional_log_pmf(std::span<const long long> counts, std::span<const double> psi) {
  if (counts.size() != psi.size() || counts.empty()) {
    throw InputError("poisson conditional: counts and rates must have equal, positive length");
  }
  double total_rate = 0.0;
  long long n = 0;
  double joint = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw InputError("poisson conditional: counts must be >= 0");
    detail::require_positive_parameter(psi[j], "poisson conditional: rate");
    joint += xlogy(double(counts[j]), psi[j]) - psi[j] - log_gamma(double(counts[j]) + 1.0);
    total_rate += psi[j];
    n += counts[j];
  }
  const double total = xlogy(double(n), total_rate) - total_rate - log_gamma(double(n) + 1.0);
  return joint - total;
}

/// Multinomial log pmf, including the multinomial coefficient.
inline double multinomial_log_pmf(std::span<const long long> counts, std::span<const double> theta) {
  if (counts.size() != theta.size() || counts.empty()) {
    throw InputError("multinomial pmf: counts and probabilities must have equal, positive length");
  }
  long long n = 0;
  double s = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw InputError("multinomial pmf: counts must be >= 0");
    if (!(theta[j] >= 0.0)) throw InputError("multinomial pmf: probabilities must be >= 0");
    s += xlogy(double(counts[j]), theta[j]) - log_gamma(double(counts[j]) + 1.0);
    n += counts[j];
  }
  return s + log_gamma(double(n) + 1.0);
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `sample` and `cdf`.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InputError("ks: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = double(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
  }
  return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_critical_1pct(std::size_t n) {
  const double r = std::sqrt(double(n));
  return 1.628 / (r + 0.12 + 0.11 / r);
}

namespace detail {

// Raw moments E[X^k], k = 1..4, of Beta(a, b).
inline std::array<double, 5> beta_raw_moments(double a, double b) {
  std::array<double, 5> m{1.0, 0.0, 0.0, 0.0, 0.0};
  for (int k = 1; k <= 4; ++k) m[k] = m[k - 1] * (a + k - 1) / (a + b + k - 1);
  return m;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments sample_moments(std::span<const double> x) {
  CompensatedSum s;
  for (double v : x) s.add(v);
  const double mean = s.value() / double(x.size());
  CompensatedSum q;
  for (double v : x) q.add((v - mean) * (v - mean));
  return Moments{mean, q.value() / double(x.size() - 1)};
}

}  // namespace detail

/// Agreement of one beta's marginal with Beta(a, (m-1) a).
struct MarginalCheck {
  double beta = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
  double ks = 0.0;
  double ks_critical = 0.0;

  double mean_z(const BetaParams& p) const { return (mean - p.mean()) / mean_se; }
  double variance_z(const BetaParams& p) const { return (variance - p.variance()) / variance_se; }
  bool moments_ok(const BetaParams& p) const {
    return std::fabs(mean_z(p)) <= 4.0 && std::fabs(variance_z(p)) <= 4.0;
  }
  bool ks_ok() const { return ks < ks_critical; }
};

/// Moment agreement between the samples of two betas.
struct CrossBetaCheck {
  double beta_i = 0.0;
  double beta_j = 0.0;
  double mean_diff = 0.0;
  double mean_se = 0.0;
  double variance_diff = 0.0;
  double variance_se = 0.0;

  bool ok() const {
    return std::fabs(mean_diff) <= 4.0 * mean_se && std::fabs(variance_diff) <= 4.0 * variance_se;
  }
};

struct EquivalenceReport {
  double a = 0.0;
  std::size_t m = 0;
  std::size_t count = 0;
  BetaParams marginal;
  std::vector<MarginalCheck> per_beta;
  std::vector<CrossBetaCheck> cross;

  bool passed() const {
    return std::all_of(per_beta.begin(), per_beta.end(),
                       [&](const MarginalCheck& c) { return c.moments_ok(marginal) && c.ks_ok(); }) &&
           std::all_of(cross.begin(), cross.end(), [](const CrossBetaCheck& c) { return c.ok(); });
  }
};

/// Compares the first coordinate of gamma-normalized vectors with the
/// Dirichlet(a,...,a) marginal Beta(a, (m-1) a), for each beta. Beta k draws
/// from stream.child(k).
inline EquivalenceReport dirichlet_equivalence_report(double a, std::size_t m, std::size_t count,
                                                      const std::vector<double>& betas,
                                                      const RandomStream& stream) {
  if (betas.empty()) throw InputError("equivalence: need at least one beta");
  if (count < 2) throw InputError("equivalence: need at least two draws");
  EquivalenceReport r;
  r.a = a;
  r.m = m;
  r.count = count;
  r.marginal = BetaParams{a, double(m - 1) * a};
  const auto mom = detail::beta_raw_moments(r.marginal.a, r.marginal.b);
  const double mu = mom[1];
  const double var = mom[2] - mu * mu;
  const double mu4 = mom[4] - 4.0 * mu * mom[3] + 6.0 * mu * mu * mom[2] - 3.0 * mu * mu * mu * mu;
  const double n = double(count);
  const double mean_se = std::sqrt(var / n);
  const double var_se = std::sqrt(std::max(0.0, mu4 - var * var) / n);
  const auto p = r.marginal;

  for (std::size_t k = 0; k < betas.size(); ++k) {
    const auto draws = gamma_normalize_sample(a, betas[k], m, count, stream.child(k));
    std::vector<double> first(count);
    for (std::size_t i = 0; i < count; ++i) first[i] = draws(i, 0);
    const auto sm = detail::sample_moments(first);
    MarginalCheck c;
    c.beta = betas[k];
    c.mean = sm.mean;
    c.variance = sm.variance;
    c.mean_se = mean_se;
    c.variance_se = var_se;
    c.ks = ks_statistic(std::move(first), [p](double x) { return beta_cdf(x, p.a, p.b); });
    c.ks_critical = ks_critical_1pct(count);
    r.per_beta.push_back(c);
  }
  for (std::size_t i = 0; i < r.per_beta.size(); ++i) {
    for (std::size_t j = i + 1; j < r.per_beta.size(); ++j) {
      const auto& x = r.per_beta[i];
      const auto& y = r.per_beta[j];
      r.cross.push_back(CrossBetaCheck{x.beta, y.beta, x.mean - y.mean, std::sqrt(2.0) * mean_se,
                                       x.variance - y.variance, std::sqrt(2.0) * var_se});
    }
  }
  return r;
}

/// Ordered-multinomial parameters and the probability vector they induce.
struct StickBreakingSample {
  std::vector<double> xi;
  std::vector<double> theta;
};

/// theta_k = xi_k prod_{j<k} (1 - xi_j) for k < m; theta_m = 1 - sum of the
/// others, clamped at 0.
inline StickBreakingSample stick_break(std::span<const double> xi) {
  if (xi.empty()) throw DomainError("stick break: need at least one xi");
  StickBreakingSample s{std::vector<double>(xi.begin(), xi.end()), std::vector<double>(xi.size() + 1)};
  double remaining = 1.0;
  double used = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (!(xi[k] > 0.0 && xi[k] < 1.0)) throw DomainError("stick break: every xi must lie in (0, 1)");
    s.theta[k] = xi[k] * remaining;
    remaining *= 1.0 - xi[k];
    used += s.theta[k];
  }
  s.theta.back() = std::max(0.0, 1.0 - used);
  return s;
}

/// Per-cell summary of the ordered prior with independent Beta(1/2, 1/2) xi.
struct OrderedCell {
  std::size_t k = 0;  // 1-based
  double analytic_mean = 0.0;
  double empirical_mean = 0.0;
  double empirical_median = 0.0;
  double mean_se = 0.0;
};

struct OrderedDiagnostics {
  std::size_t m = 0;
  std::size_t count = 0;
  std::vector<OrderedCell> cells;
  std::optional<std::size_t> k_star;  // first k with empirical mean < 1/m
  double max_simplex_error = 0.0;     // max |sum theta - 1|
  double min_component = 0.0;
};

inline OrderedDiagnostics ordered_prior_diagnostics(std::size_t m, std::size_t count,
                                                    const RandomStream& stream) {
  if (m < 2) throw DomainError("ordered prior: need m >= 2");
  if (count < 2) throw DomainError("ordered prior: need at least two draws");
  const auto draws = detail::blocked_draws(count, m, stream, [m](Sampler& s, std::span<double> row) {
    std::vector<double> xi(m - 1);
    for (double& v : xi) {
      do {
        v = s.beta(0.5, 0.5);
      } while (!(v > 0.0 && v < 1.0));
    }
    const auto sb = stick_break(xi);
    std::copy(sb.theta.begin(), sb.theta.end(), row.begin());
  });
  OrderedDiagnostics d;
  d.m = m;
  d.count = count;
  d.min_component = kInfinity;
  for (std::size_t i = 0; i < count; ++i) {
    detail::CompensatedSum s;
    for (double v : draws.row(i)) {
      s.add(v);
      d.min_component = std::min(d.min_component, v);
    }
    d.max_simplex_error = std::max(d.max_simplex_error, std::fabs(s.value() - 1.0));
  }
  std::vector<double> column(count);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < count; ++i) column[i] = draws(i, k);
    const auto mom = detail::sample_moments(column);
    auto mid = column.begin() + std::ptrdiff_t(count / 2);
    std::nth_element(column.begin(), mid, column.end());
    double median = *mid;
    if (count % 2 == 0) median = 0.5 * (median + *std::max_element(column.begin(), mid));
    OrderedCell c;
    c.k = k + 1;
    c.analytic_mean = std::ldexp(1.0, -int(std::min(k + 1, m - 1)));
    c.empirical_mean = mom.mean;
    c.empirical_median = median;
    c.mean_se = std::sqrt(mom.variance / double(count));
    if (!d.k_star && c.empirical_mean < 1.0 / double(m)) d.k_star = c.k;
    d.cells.push_back(c);
  }
  return d;
}

}  // namespace prior_forge
