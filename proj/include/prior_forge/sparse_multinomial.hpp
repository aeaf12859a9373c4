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
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prior_forge/error.hpp"
#include "prior_forge/grid_density.hpp"
#include "prior_forge/parallel.hpp"
#include "prior_forge/propriety.hpp"
#include "prior_forge/quadrature.hpp"
#include "prior_forge/special.hpp"

namespace prior_forge {

/// Multinomial counts n_1..n_m.
class CountVector {
 public:
  explicit CountVector(std::vector<long long> counts) : counts_(std::move(counts)) {
    if (counts_.size() < 2) throw InputError("count vector: need m >= 2 cells");
    for (long long c : counts_) {
      if (c < 0) throw InputError("count vector: counts must be >= 0");
      n_ += c;
      if (c > 0) ++r0_;
    }
  }

  /// r0 - 1 singleton cells, one cell holding n - r0 + 1, the rest empty.
  static CountVector canonical(std::size_t m, long long n, long long r0) {
    if (m < 2) throw InputError("canonical counts: need m >= 2");
    if (n < 0 || r0 < 0) throw InputError("canonical counts: n and r0 must be >= 0");
    if (r0 > n || r0 > static_cast<long long>(m)) {
      throw InputError("canonical counts: need r0 <= min(m, n)");
    }
    if (n > 0 && r0 == 0) throw InputError("canonical counts: n > 0 needs r0 >= 1");
    std::vector<long long> c(m, 0);
    for (long long i = 0; i + 1 < r0; ++i) c[std::size_t(i)] = 1;
    if (r0 > 0) c[std::size_t(r0 - 1)] = n - r0 + 1;
    return CountVector(std::move(c));
  }

  const std::vector<long long>& counts() const { return counts_; }
  std::size_t m() const { return counts_.size(); }
  long long n() const { return n_; }
  long long r0() const { return r0_; }
  long long operator[](std::size_t i) const { return counts_[i]; }

  /// Non-zero counts with multiplicities, in increasing order.
  std::map<long long, long long> histogram() const {
    std::map<long long, long long> h;
    for (long long c : counts_) {
      if (c > 0) ++h[c];
    }
    return h;
  }

 private:
  std::vector<long long> counts_;
  long long n_ = 0;
  long long r0_ = 0;
};

/// Dirichlet(n_1 + a, ..., n_m + a): conjugate posterior under Dirichlet(a,...,a).
inline std::vector<double> dirichlet_posterior(const CountVector& data, double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("dirichlet posterior: a must be positive");
  std::vector<double> out(data.m());
  for (std::size_t i = 0; i < data.m(); ++i) out[i] = double(data[i]) + a;
  return out;
}

/// Posterior under the Jeffreys prior Dirichlet(1/2, ..., 1/2).
inline std::vector<double> jeffreys_posterior(const CountVector& data) {
  return dirichlet_posterior(data, 0.5);
}

struct BetaParams {
  double a = 0.0;
  double b = 0.0;

  double mean() const { return a / (a + b); }
  double variance() const { return a * b / ((a + b) * (a + b) * (a + b + 1.0)); }
};

/// Beta marginal of cell i under a Dirichlet with the given parameters.
inline BetaParams cell_posterior_marginal(std::span<const double> params, std::size_t i) {
  if (i >= params.size()) throw InputError("cell marginal: cell index out of range");
  double rest = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (!(params[j] > 0.0)) throw DomainError("cell marginal: parameters must be positive");
    if (j != i) rest += params[j];
  }
  return BetaParams{params[i], rest};
}

namespace detail {

// ln Gamma(a + k) - ln Gamma(a) for integer k >= 0.
inline double log_rising(double a, long long k) {
  if (k <= 64) {
    double s = 0.0;
    for (long long j = 0; j < k; ++j) s += std::log(a + double(j));
    return s;
  }
  return log_gamma(a + double(k)) - log_gamma(a);
}

}  // namespace detail

/// log[ Gamma(ma)/Gamma(ma+n) * prod_i Gamma(a+n_i)/Gamma(a) ]: the
/// Dirichlet-multinomial likelihood of a without the multinomial coefficient.
/// Depends on the counts only through their multiset.
inline double dm_log_marginal(const CountVector& data, double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("dm marginal: a must be positive");
  if (data.n() == 0) return 0.0;
  double s = -detail::log_rising(double(data.m()) * a, data.n());
  for (const auto& [count, mult] : data.histogram()) s += double(mult) * detail::log_rising(a, count);
  return s;
}

/// Hyperprior on the total prior weight v = m a.
struct HyperPriorSpec {
  enum class Kind { flat_in_a, flat_in_log_a, pareto_v, grid_file };

  Kind kind = Kind::pareto_v;
  double a_max = kInfinity;                // truncation of a; v <= m * a_max
  std::shared_ptr<const GridDensity> grid; // log density in v for grid_file
  std::string source;                      // grid file path, for labels

  static HyperPriorSpec flat_in_a(double a_max = kInfinity) { return {Kind::flat_in_a, a_max, {}, {}}; }
  static HyperPriorSpec flat_in_log_a(double a_max = kInfinity) {
    return {Kind::flat_in_log_a, a_max, {}, {}};
  }
  static HyperPriorSpec pareto_v(double a_max = kInfinity) { return {Kind::pareto_v, a_max, {}, {}}; }
  static HyperPriorSpec from_grid(GridDensity density_in_v, std::string source,
                                  double a_max = kInfinity) {
    if (density_in_v.domain().lo < 0.0) {
      throw InputError("hyperprior grid: v-domain must lie in [0, inf)");
    }
    return {Kind::grid_file, a_max, std::make_shared<const GridDensity>(std::move(density_in_v)),
            std::move(source)};
  }

  /// Parses flat-in-a, flat-in-log-a or pareto-v.
  static HyperPriorSpec parse(const std::string& name, double a_max = kInfinity) {
    if (name == "flat-in-a") return flat_in_a(a_max);
    if (name == "flat-in-log-a") return flat_in_log_a(a_max);
    if (name == "pareto-v") return pareto_v(a_max);
    throw InputError("unknown hyperprior '" + name + "' (expected flat-in-a, flat-in-log-a, pareto-v)");
  }

  std::string name() const {
    switch (kind) {
      case Kind::flat_in_a: return "flat-in-a";
      case Kind::flat_in_log_a: return "flat-in-log-a";
      case Kind::pareto_v: return "pareto-v";
      case Kind::grid_file: return "grid:" + source;
    }
    return "unknown";
  }

  /// Proper before truncation. Flat kinds are improper on (0, inf).
  bool declared_proper() const {
    if (std::isfinite(a_max)) return kind != Kind::flat_in_log_a;
    return kind == Kind::pareto_v || (kind == Kind::grid_file && grid->normalized());
  }

  Interval v_domain(std::size_t m) const {
    double hi = std::isfinite(a_max) ? double(m) * a_max : kInfinity;
    double lo = 0.0;
    if (kind == Kind::grid_file) {
      lo = std::max(lo, grid->domain().lo);
      hi = std::min(hi, grid->domain().hi);
    }
    if (!(lo < hi)) throw InputError("hyperprior: empty v-domain");
    return Interval{lo, hi};
  }

  /// Log hyperprior density in v, up to a constant.
  LogFunction log_density_v() const {
    switch (kind) {
      case Kind::flat_in_a: return [](double v) { return v > 0.0 ? 0.0 : -kInfinity; };
      case Kind::flat_in_log_a:
        return [](double v) { return v > 0.0 ? -std::log(v) : -kInfinity; };
      case Kind::pareto_v:
        return [](double v) { return v >= 0.0 ? -2.0 * std::log1p(v) : -kInfinity; };
      case Kind::grid_file: return interpolated_log_function(*grid);
    }
    throw InputError("hyperprior: unknown kind");
  }
};

/// Grid for the v-posterior: log-spaced nodes on (v_lo, v_hi).
struct VGridSpec {
  double v_lo = 1e-4;
  double v_hi = 1e4;
  std::size_t nodes = 2049;
  double tolerance = 1e-10;
};

struct VSummary {
  double mode = 0.0;
  double median = 0.0;
  double mean = 0.0;  // +inf when the posterior mean diverges
  double q05 = 0.0;
  double q95 = 0.0;
};

/// Posterior of v = m a. `summary` is present only for proper posteriors.
struct VPosterior {
  GridDensity density;
  ProprietyVerdict verdict;
  std::optional<VSummary> summary;
  std::string hyperprior;
};

/// Unnormalized log posterior of v: log pi(v) + dm_log_marginal(data, v/m).
inline GridDensity v_posterior_kernel(const CountVector& data, const HyperPriorSpec& hyper,
                                      const VGridSpec& grid = {}) {
  if (!(grid.v_lo > 0.0) || !(grid.v_lo < grid.v_hi) || grid.nodes < kMinGridNodes) {
    throw InputError("v-grid: need 0 < v_lo < v_hi and at least 16 nodes");
  }
  const Interval domain = hyper.v_domain(data.m());
  const double lo = std::max(grid.v_lo, domain.lo);
  const double hi = std::min(grid.v_hi, domain.hi);
  if (!(lo < hi)) throw InputError("v-grid: grid range misses the hyperprior domain");
  auto nodes = geomspace(lo, hi, grid.nodes);
  nodes.front() = lo;
  nodes.back() = hi;
  const double m = double(data.m());
  auto log_prior = hyper.log_density_v();
  auto fn = [data, m, log_prior = std::move(log_prior), domain](double v) {
    if (!(v > 0.0) || v < domain.lo || v > domain.hi || !std::isfinite(v)) return -kInfinity;
    const double lp = log_prior(v);
    if (lp == -kInfinity) return -kInfinity;
    return lp + dm_log_marginal(data, v / m);
  };
  return GridDensity::tabulate(domain, std::move(nodes), std::move(fn), false);
}

/// Posterior of the total prior weight v under the hyperprior.
inline VPosterior v_posterior(const CountVector& data, const HyperPriorSpec& hyper,
                              const VGridSpec& grid = {}) {
  auto kernel = v_posterior_kernel(data, hyper, grid);
  auto verdict = verdict_of(integrate(kernel, grid.tolerance));
  VPosterior out{kernel, verdict, std::nullopt, hyper.name()};
  if (!verdict.proper) return out;
  out.density = kernel.shifted(-std::log(verdict.mass.value), true);
  const CdfTable table(out.density, grid.tolerance);
  VSummary s;
  s.mode = mode(out.density);
  s.median = table.quantile(0.5);
  s.q05 = table.quantile(0.05);
  s.q95 = table.quantile(0.95);
  const auto& fn = *out.density.log_function();
  const auto first = integrate_function(
      [&fn](double v) {
        const double l = fn(v);
        return l == -kInfinity ? 0.0 : v * std::exp(l);
      },
      out.density.domain(), grid.tolerance, out.density.hints());
  if (first.diverged) {
    s.mean = kInfinity;
  } else if (first.converged) {
    s.mean = first.value;
  } else {
    throw NumericalError("v posterior: mean did not converge (" + first.diagnostic + ")");
  }
  out.summary = s;
  return out;
}

/// One (m, n, r0) configuration of the summary table.
struct VConfig {
  std::size_t m = 0;
  long long n = 0;
  long long r0 = 0;
};

struct VSummaryRow {
  VConfig config;
  std::string hyperprior;
  bool proper = false;
  std::optional<VSummary> summary;
  std::string diagnostics;
};

/// v-posterior summaries for the canonical count vector of each config.
inline std::vector<VSummaryRow> v_summary_table(const std::vector<VConfig>& configs,
                                                const HyperPriorSpec& hyper,
                                                const VGridSpec& grid = {}) {
  for (const auto& c : configs) CountVector::canonical(c.m, c.n, c.r0);
  return parallel_map(configs.size(), [&](std::size_t i) {
    const auto& c = configs[i];
    const auto post = v_posterior(CountVector::canonical(c.m, c.n, c.r0), hyper, grid);
    return VSummaryRow{c, post.hyperprior, post.verdict.proper, post.summary,
                       post.verdict.diagnostics};
  });
}

/// Posterior mean and central 95% interval of one cell probability.
struct CellEstimate {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct CellComparison {
  std::size_t cell = 0;
  long long count = 0;
  CellEstimate jeffreys;
  std::optional<CellEstimate> conditional;   // Dirichlet(a_point) prior
  std::optional<CellEstimate> hierarchical;  // integrated over the v-posterior
};

struct PriorComparison {
  std::optional<CellComparison> observed;    // first cell with a positive count
  std::optional<CellComparison> unobserved;  // first empty cell
  std::optional<double> a_point;
  std::string hyperprior;
  bool hierarchical_proper = false;
  std::string hierarchical_diagnostics;
};

namespace detail {

inline CellEstimate beta_estimate(const BetaParams& p) {
  return CellEstimate{p.mean(), beta_quantile(0.025, p.a, p.b), beta_quantile(0.975, p.a, p.b)};
}

// Quantile of the mixture over v of Beta(c + v/m, n - c + (m-1) v/m), with the
// v-posterior discretized at K equal-probability midpoints.
class CellMixture {
 public:
  CellMixture(const CdfTable& table, double m, double n, double c, std::size_t k = 512) : m_(m), n_(n), c_(c) {
    for (std::size_t j = 0; j < k; ++j) v_.push_back(table.quantile((double(j) + 0.5) / double(k)));
  }

  double cdf(double theta) const {
    double s = 0.0;
    for (double v : v_) {
      const double a = v / m_;
      s += beta_cdf(theta, c_ + a, n_ - c_ + (m_ - 1.0) * a);
    }
    return s / double(v_.size());
  }

  // Bisection in log(theta / (1 - theta)).
  double quantile(double p) const {
    double lo = -745.0;
    double hi = 745.0;
    if (cdf(1.0 / (1.0 + std::exp(-lo))) >= p) return 0.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double theta = 1.0 / (1.0 + std::exp(-mid));
      if (cdf(theta) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo < 1e-10) break;
    }
    return 1.0 / (1.0 + std::exp(-0.5 * (lo + hi)));
  }

 private:
  double m_;
  double n_;
  double c_;
  std::vector<double> v_;
};

}  // namespace detail

/// Jeffreys, fixed-a and hierarchical posteriors for one observed and one
/// unobserved cell.
inline PriorComparison compare_priors(const CountVector& data, const HyperPriorSpec& hyper,
                                      std::optional<double> a_point = std::nullopt,
                                      const VGridSpec& grid = {}) {
  if (a_point && (!(*a_point > 0.0) || !std::isfinite(*a_point))) {
    throw DomainError("compare: a_point must be positive");
  }
  PriorComparison out;
  out.a_point = a_point;
  out.hyperprior = hyper.name();
  const auto& counts = data.counts();
  auto first = [&](bool observed) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if ((counts[i] > 0) == observed) return i;
    }
    return std::nullopt;
  };
  const auto post = v_posterior(data, hyper, grid);
  out.hierarchical_proper = post.verdict.proper;
  out.hierarchical_diagnostics = post.verdict.diagnostics;
  std::optional<CdfTable> table;
  if (post.verdict.proper) table.emplace(post.density, grid.tolerance);
  const double m = double(data.m());
  const double n = double(data.n());

  auto compare_cell = [&](std::size_t i) {
    CellComparison c;
    c.cell = i;
    c.count = counts[i];
    c.jeffreys = detail::beta_estimate(cell_posterior_marginal(jeffreys_posterior(data), i));
    if (a_point) {
      c.conditional = detail::beta_estimate(cell_posterior_marginal(dirichlet_posterior(data, *a_point), i));
    }
    if (table) {
      const double ci = double(c.count);
      const auto& fn = *post.density.log_function();
      const auto mean = integrate_function(
          [&](double v) {
            const double l = fn(v);
            return l == -kInfinity ? 0.0 : (ci + v / m) / (n + v) * std::exp(l);
          },
          post.density.domain(), grid.tolerance, post.density.hints());
      if (!mean.converged) {
        throw NumericalError("compare: hierarchical mean did not converge (" + mean.diagnostic + ")");
      }
      const detail::CellMixture mix(*table, m, n, ci);
      c.hierarchical = CellEstimate{mean.value, mix.quantile(0.025), mix.quantile(0.975)};
    }
    return c;
  };
  if (auto i = first(true)) out.observed = compare_cell(*i);
  if (auto i = first(false)) out.unobserved = compare_cell(*i);
  return out;
}

/// Distances between v-posteriors of the same (n, r0) at increasing m.
struct StabilityReport {
  std::vector<std::size_t> m_values;
  std::vector<bool> proper;
  std::vector<double> distances;  // sup-norm between consecutive densities
  bool testable = true;
  bool decreasing = true;
  std::string diagnostics;
};

inline StabilityReport large_m_stability(long long n, long long r0, const std::vector<std::size_t>& m_values,
                                         const HyperPriorSpec& hyper, const VGridSpec& grid = {}) {
  for (std::size_t k = 0; k < m_values.size(); ++k) {
    if (double(m_values[k]) < 10.0 * double(n)) {
      throw InputError("stability: every m must be at least 10 n");
    }
    if (k > 0 && !(m_values[k - 1] < m_values[k])) {
      throw InputError("stability: m values must be increasing");
    }
  }
  StabilityReport out;
  out.m_values = m_values;
  const auto posts = parallel_map(m_values.size(), [&](std::size_t k) {
    return v_posterior(CountVector::canonical(m_values[k], n, r0), hyper, grid);
  });
  for (const auto& p : posts) {
    out.proper.push_back(p.verdict.proper);
    if (!p.verdict.proper) {
      out.testable = false;
      out.diagnostics = p.verdict.diagnostics;
    }
  }
  if (!out.testable) {
    out.decreasing = false;
    return out;
  }
  for (std::size_t k = 0; k + 1 < posts.size(); ++k) {
    const auto& a = posts[k].density;
    const auto& b = posts[k + 1].density;
    if (!a.same_grid(b)) throw InputError("stability: v-grids differ across m");
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      d = std::max(d, std::fabs(std::exp(a.log_values()[j]) - std::exp(b.log_values()[j])));
    }
    out.distances.push_back(d);
  }
  for (std::size_t k = 1; k < out.distances.size(); ++k) {
    if (!(out.distances[k] < out.distances[k - 1])) out.decreasing = false;
  }
  return out;
}

}  // namespace prior_forge
