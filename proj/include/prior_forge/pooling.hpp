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
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prior_forge/error.hpp"
#include "prior_forge/grid_density.hpp"
#include "prior_forge/parallel.hpp"
#include "prior_forge/quadrature.hpp"
#include "prior_forge/random.hpp"

namespace prior_forge {

/// Non-negative pooling weights summing to one.
class PoolWeights {
 public:
  explicit PoolWeights(std::vector<double> alphas) : alphas_(std::move(alphas)) {
    if (alphas_.empty()) throw InputError("pool weights: need at least one weight");
    double sum = 0.0;
    for (double a : alphas_) {
      if (!(a >= 0.0) || !std::isfinite(a)) {
        throw InputError("pool weights: every weight must be finite and >= 0");
      }
      sum += a;
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      throw InputError("pool weights: weights must sum to 1, got " + format_double(sum));
    }
  }

  /// Equal weights 1/m.
  static PoolWeights uniform(std::size_t m) {
    if (m == 0) throw InputError("pool weights: need at least one weight");
    std::vector<double> a(m, 1.0 / double(m));
    a.back() = 1.0 - std::accumulate(a.begin(), a.end() - 1, 0.0);
    return PoolWeights(std::move(a));
  }

  std::span<const double> alphas() const { return alphas_; }
  std::size_t size() const { return alphas_.size(); }
  double operator[](std::size_t i) const { return alphas_[i]; }

 private:
  std::vector<double> alphas_;
};

/// Component priors on one common grid together with their weights.
class PoolProblem {
 public:
  PoolProblem(std::vector<GridDensity> components, PoolWeights weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    if (components_.empty()) throw InputError("pool problem: no components");
    if (components_.size() != weights_.size()) {
      throw InputError("pool problem: " + std::to_string(components_.size()) + " components but " +
                       std::to_string(weights_.size()) + " weights");
    }
    for (const auto& c : components_) {
      if (!c.same_grid(components_.front())) {
        throw InputError("pool problem: components must share one grid and domain");
      }
    }
  }

  const std::vector<GridDensity>& components() const { return components_; }
  const PoolWeights& weights() const { return weights_; }
  std::size_t size() const { return components_.size(); }

  bool all_have_log_function() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const GridDensity& d) { return d.has_log_function(); });
  }

  /// True when every component carrying positive weight is normalized.
  bool weighted_components_normalized() const {
    for (std::size_t i = 0; i < size(); ++i) {
      if (weights_[i] > 0.0 && !components_[i].normalized()) return false;
    }
    return true;
  }

 private:
  std::vector<GridDensity> components_;
  PoolWeights weights_;
};

namespace detail {

// sum_i alpha_i * log pi_i, skipping zero weights so that 0 * (-inf) never
// appears.
inline double weighted_log_sum(std::span<const double> alphas,
                               const std::vector<std::shared_ptr<const LogFunction>>& fns,
                               double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    if (alphas[i] == 0.0) continue;
    s += alphas[i] * (*fns[i])(x);
  }
  return s;
}

inline std::vector<std::shared_ptr<const LogFunction>> log_functions(const PoolProblem& p) {
  std::vector<std::shared_ptr<const LogFunction>> out;
  for (const auto& c : p.components()) out.push_back(c.log_function());
  return out;
}

}  // namespace detail

/// Unnormalized geometric product prod_i pi_i^alpha_i on the common grid.
inline GridDensity log_product(const PoolProblem& problem) {
  const auto& comps = problem.components();
  const auto alphas = problem.weights().alphas();
  const std::size_t n = comps.front().size();
  std::vector<double> values(n, 0.0);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (alphas[i] == 0.0) continue;
    const auto l = comps[i].log_values();
    for (std::size_t j = 0; j < n; ++j) values[j] += alphas[i] * l[j];
  }
  std::shared_ptr<const LogFunction> fn;
  if (problem.all_have_log_function()) {
    std::vector<double> a(alphas.begin(), alphas.end());
    fn = std::make_shared<const LogFunction>(
        [a = std::move(a), fns = detail::log_functions(problem)](double x) {
          return detail::weighted_log_sum(a, fns, x);
        });
  }
  return comps.front().with_values(std::move(values), false, std::move(fn));
}

/// Geometric pool together with the propriety of the pooled prior.
struct PooledDensity {
  GridDensity density;
  QuadratureResult mass;
  std::optional<std::string> impropriety;  // set when the pool cannot be normalized

  bool proper() const { return !impropriety.has_value(); }
};

/// pi_G proportional to prod_i pi_i^alpha_i, normalized when integrable.
/// Components may be unnormalized: the normalized pool does not depend on
/// their constants.
inline PooledDensity geometric_pool(const PoolProblem& problem, double tolerance = 1e-12) {
  auto raw = log_product(problem);
  auto mass = integrate(raw, tolerance);
  if (mass.converged && std::isfinite(mass.value) && mass.value > 0.0) {
    return PooledDensity{raw.shifted(-std::log(mass.value), true), mass, std::nullopt};
  }
  std::string why = mass.diverged ? "the geometric pool is an improper prior: " + mass.diagnostic
                                  : "the geometric pool could not be normalized: " + mass.diagnostic;
  return PooledDensity{std::move(raw), std::move(mass), std::move(why)};
}

/// Linear pool sum_i alpha_i pi_i. Components must be normalized: the linear
/// pool of arbitrarily scaled components is itself arbitrary.
inline GridDensity arithmetic_pool(const PoolProblem& problem) {
  const auto& comps = problem.components();
  const auto alphas = problem.weights().alphas();
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (!comps[i].normalized()) {
      throw InputError("arithmetic pool: component " + std::to_string(i) +
                       " is not normalized; the linear pool is not invariant to rescaling "
                       "its components");
    }
  }
  auto mix = [alphas](auto&& log_value_of) {
    double m = -kInfinity;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (alphas[i] == 0.0) continue;
      m = std::max(m, std::log(alphas[i]) + log_value_of(i));
    }
    if (m == -kInfinity) return -kInfinity;
    double s = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (alphas[i] == 0.0) continue;
      s += std::exp(std::log(alphas[i]) + log_value_of(i) - m);
    }
    return m + std::log(s);
  };
  const std::size_t n = comps.front().size();
  std::vector<double> values(n);
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = mix([&](std::size_t i) { return comps[i].log_values()[j]; });
  }
  std::shared_ptr<const LogFunction> fn;
  if (problem.all_have_log_function()) {
    std::vector<double> a(alphas.begin(), alphas.end());
    fn = std::make_shared<const LogFunction>(
        [a = std::move(a), fns = detail::log_functions(problem)](double x) {
          double m = -kInfinity;
          std::vector<double> lv(a.size(), -kInfinity);
          for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == 0.0) continue;
            lv[i] = std::log(a[i]) + (*fns[i])(x);
            m = std::max(m, lv[i]);
          }
          if (m == -kInfinity || m == kInfinity) return m;
          double s = 0.0;
          for (double v : lv) {
            if (v != -kInfinity) s += std::exp(v - m);
          }
          return m + std::log(s);
        });
  }
  return comps.front().with_values(std::move(values), true, std::move(fn));
}

/// Value of the weighted Kullback-Leibler objective
/// d(eta) = sum_i alpha_i * KL(eta || pi_i).
struct KlObjective {
  double value = 0.0;
  bool up_to_constant = false;    // some weighted component is unnormalized
  bool support_violation = false; // eta > 0 where a weighted component vanishes
  QuadratureResult quadrature;
};

/// d(eta) by quadrature. With unnormalized components the value is defined up
/// to the additive constant sum_i alpha_i ln c_i; differences are exact.
inline KlObjective kl_objective(const GridDensity& eta, const PoolProblem& problem,
                                double tolerance = 1e-12) {
  if (!eta.normalized()) throw InputError("kl objective: eta must be normalized");
  if (!eta.same_grid(problem.components().front())) {
    throw InputError("kl objective: eta must share the problem grid");
  }
  KlObjective out;
  out.up_to_constant = !problem.weighted_components_normalized();
  const auto alphas = problem.weights().alphas();
  const auto& comps = problem.components();

  // Node-wise support check.
  const auto le = eta.log_values();
  for (std::size_t j = 0; j < le.size(); ++j) {
    if (le[j] == -kInfinity) continue;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (alphas[i] > 0.0 && comps[i].log_values()[j] == -kInfinity) {
        out.support_violation = true;
        out.value = kInfinity;
        out.quadrature.diagnostic = "eta > 0 at a node where component " + std::to_string(i) +
                                    " vanishes";
        return out;
      }
    }
  }

  if (eta.has_log_function() && problem.all_have_log_function()) {
    const auto fns = detail::log_functions(problem);
    const auto& eta_fn = *eta.log_function();
    bool violated = false;
    auto integrand = [&](double x) {
      const double l = eta_fn(x);
      if (l == -kInfinity) return 0.0;
      const double ref = detail::weighted_log_sum(alphas, fns, x);
      if (ref == -kInfinity) {
        violated = true;
        return kInfinity;
      }
      return std::exp(l) * (l - ref);
    };
    // eta is a probability density, so the integrand is O(1) and an absolute
    // floor keeps near-zero objectives from chasing relative accuracy.
    auto hints = eta.hints();
    hints.abs_floor = tolerance;
    try {
      out.quadrature = integrate_function(integrand, eta.domain(), tolerance, hints);
    } catch (const NumericalError&) {
      if (!violated) throw;
    }
    if (violated) {
      out.support_violation = true;
      out.value = kInfinity;
      out.quadrature.diagnostic = "eta > 0 where a weighted component vanishes";
      return out;
    }
    if (!out.quadrature.converged) {
      throw NumericalError("kl objective: quadrature did not converge (" +
                           out.quadrature.diagnostic + ")");
    }
    out.value = out.quadrature.value;
    return out;
  }

  // Tabulated: node-wise integrand, cubic rule over the grid.
  const auto x = eta.nodes();
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (le[j] == -kInfinity) continue;
    double ref = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (alphas[i] > 0.0) ref += alphas[i] * comps[i].log_values()[j];
    }
    y[j] = std::exp(le[j]) * (le[j] - ref);
  }
  out.value = integrate_nodes(x, y);
  out.quadrature.value = out.value;
  out.quadrature.converged = true;
  return out;
}

/// Perturbation family eta proportional to pi_G * exp(eps * g), with g a
/// Gaussian bump of random centre and width.
struct PerturbationOptions {
  double epsilon_min = 0.01;
  double epsilon_max = 0.5;
  std::optional<double> fixed_epsilon;  // overrides the random magnitude
  double width_min = 0.02;              // bump width, as a fraction of the
  double width_max = 0.5;               // pool's 5%-95% quantile range
  double tolerance = 1e-12;
};

struct OptimalityReport {
  double pool_objective = 0.0;
  std::vector<double> epsilons;
  std::vector<double> objectives;
  std::vector<double> margins;  // d(eta_k) - d(pi_G)
  double min_margin = 0.0;
  bool up_to_constant = false;

  std::size_t negative_margins() const {
    return std::size_t(std::count_if(margins.begin(), margins.end(), [](double m) { return m < 0.0; }));
  }
  bool all_positive() const {
    return std::all_of(margins.begin(), margins.end(), [](double m) { return m > 0.0; });
  }
};

/// Checks d(pi_G) <= d(eta_k) for `n_perturbations` random perturbations of
/// the geometric pool. Perturbation k draws from stream.child(k).
inline OptimalityReport verify_pool_optimality(const PoolProblem& problem,
                                               std::size_t n_perturbations,
                                               const RandomStream& stream,
                                               const PerturbationOptions& options = {}) {
  if (n_perturbations == 0) throw InputError("verify optimality: need at least one perturbation");
  const auto pool = geometric_pool(problem, options.tolerance);
  if (!pool.proper()) {
    throw PreconditionError("verify optimality: " + *pool.impropriety);
  }
  const GridDensity& pi_g = pool.density;
  const auto base = kl_objective(pi_g, problem, options.tolerance);
  const CdfTable table(pi_g);
  const double q05 = table.quantile(0.05);
  const double q95 = table.quantile(0.95);
  double spread = q95 - q05;
  if (!(spread > 0.0)) spread = pi_g.nodes().back() - pi_g.nodes().front();

  struct Trial {
    double epsilon;
    double objective;
  };
  auto trials = parallel_map(n_perturbations, [&](std::size_t k) -> Trial {
    Sampler s(stream.child(k));
    const double eps = options.fixed_epsilon
                           ? *options.fixed_epsilon
                           : options.epsilon_min + (options.epsilon_max - options.epsilon_min) * s.uniform();
    const double center = table.quantile(0.05 + 0.9 * s.uniform());
    const double width =
        (options.width_min + (options.width_max - options.width_min) * s.uniform()) * spread;
    if (eps == 0.0) return Trial{eps, base.value};
    auto bump = [center, width](double x) {
      const double z = (x - center) / width;
      return std::exp(-0.5 * z * z);
    };
    std::vector<double> values(pi_g.size());
    const auto x = pi_g.nodes();
    const auto l = pi_g.log_values();
    for (std::size_t j = 0; j < values.size(); ++j) values[j] = l[j] + eps * bump(x[j]);
    std::shared_ptr<const LogFunction> fn;
    if (pi_g.has_log_function()) {
      fn = std::make_shared<const LogFunction>(
          [inner = pi_g.log_function(), eps, bump](double t) { return (*inner)(t) + eps * bump(t); });
    }
    const auto eta = normalize(pi_g.with_values(std::move(values), false, std::move(fn)),
                               options.tolerance);
    return Trial{eps, kl_objective(eta, problem, options.tolerance).value};
  });

  OptimalityReport report;
  report.pool_objective = base.value;
  report.up_to_constant = base.up_to_constant;
  report.min_margin = kInfinity;
  for (const auto& t : trials) {
    report.epsilons.push_back(t.epsilon);
    report.objectives.push_back(t.objective);
    report.margins.push_back(t.objective - base.value);
    report.min_margin = std::min(report.min_margin, report.margins.back());
  }
  return report;
}

}  // namespace prior_forge
