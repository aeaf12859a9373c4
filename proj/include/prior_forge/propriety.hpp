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
#include <string>
#include <utility>
#include <vector>

#include "prior_forge/error.hpp"
#include "prior_forge/grid_density.hpp"
#include "prior_forge/pooling.hpp"
#include "prior_forge/quadrature.hpp"
#include "prior_forge/special.hpp"

namespace prior_forge {

/// Log-likelihood theta -> log L(theta; x) for one observed data set.
/// Closed-form families drop theta-free constants, so posterior masses are
/// those of the kernel.
class LikelihoodModel {
 public:
  enum class Family { normal_location, binomial, poisson, multinomial, grid };

  /// Unit-variance normal observations x_1..x_n with unknown mean theta.
  static LikelihoodModel normal_location(std::vector<double> data) {
    if (data.empty()) throw InputError("normal likelihood: need at least one observation");
    for (double x : data) {
      if (!std::isfinite(x)) throw InputError("normal likelihood: observations must be finite");
    }
    auto fn = [data](double theta) {
      if (!std::isfinite(theta)) return -kInfinity;
      double s = 0.0;
      for (double x : data) s += (x - theta) * (x - theta);
      return -0.5 * s;
    };
    return LikelihoodModel(Family::normal_location, Interval{-kInfinity, kInfinity}, std::move(fn),
                           "normal-location n=" + std::to_string(data.size()));
  }

  /// k successes in `trials` Bernoulli trials with success probability theta.
  static LikelihoodModel binomial(long long successes, long long trials) {
    if (trials < 0 || successes < 0 || successes > trials) {
      throw InputError("binomial likelihood: need 0 <= successes <= trials");
    }
    const double k = double(successes);
    const double f = double(trials - successes);
    auto fn = [k, f](double theta) {
      if (theta < 0.0 || theta > 1.0) return -kInfinity;
      return xlogy(k, theta) + xlog1my(f, theta);
    };
    return LikelihoodModel(Family::binomial, Interval{0.0, 1.0}, std::move(fn),
                           "binomial k=" + std::to_string(successes) + " n=" + std::to_string(trials));
  }

  /// Poisson counts with common rate theta.
  static LikelihoodModel poisson(std::vector<long long> counts) {
    if (counts.empty()) throw InputError("poisson likelihood: need at least one count");
    double total = 0.0;
    for (long long c : counts) {
      if (c < 0) throw InputError("poisson likelihood: counts must be >= 0");
      total += double(c);
    }
    const double n = double(counts.size());
    auto fn = [total, n](double theta) {
      if (theta < 0.0 || !std::isfinite(theta)) return -kInfinity;
      return xlogy(total, theta) - n * theta;
    };
    return LikelihoodModel(Family::poisson, Interval{0.0, kInfinity}, std::move(fn),
                           "poisson n=" + std::to_string(counts.size()));
  }

  /// Multinomial counts viewed through the probability theta of one cell.
  static LikelihoodModel multinomial(const std::vector<long long>& counts, std::size_t cell) {
    if (counts.size() < 2) throw InputError("multinomial likelihood: need at least two cells");
    if (cell >= counts.size()) throw InputError("multinomial likelihood: cell index out of range");
    long long n = 0;
    for (long long c : counts) {
      if (c < 0) throw InputError("multinomial likelihood: counts must be >= 0");
      n += c;
    }
    auto out = binomial(counts[cell], n);
    out.family_ = Family::multinomial;
    out.label_ = "multinomial cell=" + std::to_string(cell) + " n=" + std::to_string(n);
    return out;
  }

  /// Tabulated log-likelihood. Between nodes the log values are interpolated
  /// linearly; outside the node range the likelihood is zero.
  static LikelihoodModel grid(const GridDensity& log_likelihood) {
    return LikelihoodModel(Family::grid, log_likelihood.domain(),
                           interpolated_log_function(log_likelihood), "grid");
  }

  Family family() const { return family_; }
  const Interval& domain() const { return domain_; }
  const std::string& label() const { return label_; }
  double log_likelihood(double theta) const { return (*fn_)(theta); }
  const std::shared_ptr<const LogFunction>& function() const { return fn_; }

 private:
  LikelihoodModel(Family family, Interval domain, LogFunction fn, std::string label)
      : family_(family),
        domain_(domain),
        fn_(std::make_shared<const LogFunction>(std::move(fn))),
        label_(std::move(label)) {}

  Family family_;
  Interval domain_;
  std::shared_ptr<const LogFunction> fn_;
  std::string label_;
};

/// Outcome of a posterior-mass computation.
struct ProprietyVerdict {
  QuadratureResult mass;
  bool proper = false;
  std::string diagnostics;
};

/// Unnormalized posterior prior(theta) * L(theta; x) on the prior's grid.
inline GridDensity posterior_kernel(const GridDensity& prior, const LikelihoodModel& likelihood) {
  const auto& pd = prior.domain();
  const auto& ld = likelihood.domain();
  if (pd.lo < ld.lo || pd.hi > ld.hi) {
    throw InputError("posterior: prior domain [" + format_double(pd.lo) + ", " + format_double(pd.hi) +
                     "] is not inside the likelihood domain [" + format_double(ld.lo) + ", " +
                     format_double(ld.hi) + "]");
  }
  const auto x = prior.nodes();
  const auto l = prior.log_values();
  std::vector<double> values(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    values[j] = l[j] == -kInfinity ? -kInfinity : l[j] + likelihood.log_likelihood(x[j]);
    if (std::isnan(values[j])) values[j] = -kInfinity;
  }
  std::shared_ptr<const LogFunction> fn;
  if (prior.has_log_function()) {
    fn = std::make_shared<const LogFunction>(
        [p = prior.log_function(), lik = likelihood.function()](double t) {
          const double a = (*p)(t);
          if (a == -kInfinity) return -kInfinity;
          return a + (*lik)(t);
        });
  }
  return prior.with_values(std::move(values), false, std::move(fn));
}

inline ProprietyVerdict verdict_of(QuadratureResult mass) {
  ProprietyVerdict v;
  v.proper = (mass.converged || mass.settled) && !mass.diverged && std::isfinite(mass.value) &&
             mass.value > 0.0;
  if (mass.diverged) {
    v.diagnostics = "improper: " + mass.diagnostic;
  } else if (!mass.converged && !mass.settled) {
    v.diagnostics = "quadrature did not converge: " + mass.diagnostic;
  } else if (!v.proper) {
    v.diagnostics = "posterior mass is not finite and positive";
  } else if (!mass.converged) {
    v.diagnostics = "finite; error estimate " + format_double(mass.abs_error_estimate) +
                    " exceeds the requested relative tolerance";
  }
  v.mass = std::move(mass);
  return v;
}

/// Integral of prior * L and whether it is finite.
inline ProprietyVerdict posterior_mass(const GridDensity& prior, const LikelihoodModel& likelihood,
                                       double tolerance = 1e-10) {
  return verdict_of(integrate(posterior_kernel(prior, likelihood), tolerance));
}

enum class HolderStatus { holds, inconclusive, violated };

inline const char* to_string(HolderStatus s) {
  switch (s) {
    case HolderStatus::holds: return "holds";
    case HolderStatus::inconclusive: return "inconclusive";
    case HolderStatus::violated: return "violated";
  }
  return "unknown";
}

/// lhs = int mu^alpha nu^(1-alpha) L, rhs = (int mu L)^alpha (int nu L)^(1-alpha).
struct HolderReport {
  double alpha = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_error = 0.0;
  double rhs_error = 0.0;
  ProprietyVerdict mu;
  ProprietyVerdict nu;
  ProprietyVerdict mixed;
  HolderStatus status = HolderStatus::holds;

  bool holds() const { return status != HolderStatus::violated; }
};

namespace detail {

inline HolderStatus compare_bound(double lhs, double rhs, double slack) {
  if (lhs <= rhs) return HolderStatus::holds;
  if (lhs <= rhs + slack) return HolderStatus::inconclusive;
  return HolderStatus::violated;
}

// d/dm of m^a n^(1-a) propagated linearly.
inline double product_bound_error(std::span<const double> weights,
                                  const std::vector<const ProprietyVerdict*>& verdicts, double bound) {
  double rel = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    rel += weights[i] * verdicts[i]->mass.abs_error_estimate / verdicts[i]->mass.value;
  }
  return bound * rel;
}

inline double product_bound(std::span<const double> weights,
                            const std::vector<const ProprietyVerdict*>& verdicts) {
  double log_bound = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    log_bound += weights[i] * std::log(verdicts[i]->mass.value);
  }
  return std::exp(log_bound);
}

}  // namespace detail

/// Hoelder check for one pair of priors. Both hypothesis posteriors must be
/// proper; the mixed posterior is then proper as well, and a divergent mixed
/// integral is reported as an internal inconsistency.
inline HolderReport holder_check(const GridDensity& mu, const GridDensity& nu, double alpha,
                                 const LikelihoodModel& likelihood, double tolerance = 1e-10) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("holder check: alpha must lie in (0, 1)");
  HolderReport r;
  r.alpha = alpha;
  r.mu = posterior_mass(mu, likelihood, tolerance);
  if (!r.mu.proper) throw PreconditionError("holder check: prior mu fails the hypothesis: " + r.mu.diagnostics);
  r.nu = posterior_mass(nu, likelihood, tolerance);
  if (!r.nu.proper) throw PreconditionError("holder check: prior nu fails the hypothesis: " + r.nu.diagnostics);

  const PoolWeights weights({alpha, 1.0 - alpha});
  const PoolProblem pair({mu, nu}, weights);
  r.mixed = posterior_mass(log_product(pair), likelihood, tolerance);
  if (!r.mixed.proper) {
    throw ConsistencyError("holder check: both hypotheses hold but the mixed posterior is not proper: " +
                           r.mixed.diagnostics);
  }
  const std::vector<const ProprietyVerdict*> parts{&r.mu, &r.nu};
  r.lhs = r.mixed.mass.value;
  r.lhs_error = r.mixed.mass.abs_error_estimate;
  r.rhs = detail::product_bound(weights.alphas(), parts);
  r.rhs_error = detail::product_bound_error(weights.alphas(), parts, r.rhs);
  r.status = detail::compare_bound(r.lhs, r.rhs, r.lhs_error + r.rhs_error);
  return r;
}

/// Propriety of the geometric pool's posterior, with the iterated bound
/// int prod pi_i^alpha_i L <= prod (int pi_i L)^alpha_i.
struct PooledProprietyReport {
  ProprietyVerdict verdict;               // posterior of the unnormalized geometric product
  std::vector<ProprietyVerdict> components;
  double bound = 0.0;
  double bound_error = 0.0;
  HolderStatus status = HolderStatus::holds;
  std::vector<HolderReport> steps;        // fold-wise pair checks in index order
};

inline PooledProprietyReport pooled_propriety(const PoolProblem& problem,
                                              const LikelihoodModel& likelihood,
                                              double tolerance = 1e-10) {
  PooledProprietyReport out;
  const auto alphas = problem.weights().alphas();
  const auto& comps = problem.components();
  for (std::size_t i = 0; i < comps.size(); ++i) {
    out.components.push_back(posterior_mass(comps[i], likelihood, tolerance));
    if (alphas[i] > 0.0 && !out.components.back().proper) {
      throw PreconditionError("pooled propriety: component " + std::to_string(i) +
                              " fails the hypothesis: " + out.components.back().diagnostics);
    }
  }
  out.verdict = posterior_mass(log_product(problem), likelihood, tolerance);
  if (!out.verdict.proper) {
    throw ConsistencyError("pooled propriety: every component posterior is proper but the pooled "
                           "posterior is not: " + out.verdict.diagnostics);
  }
  std::vector<const ProprietyVerdict*> parts;
  for (const auto& v : out.components) parts.push_back(&v);
  out.bound = detail::product_bound(alphas, parts);
  out.bound_error = detail::product_bound_error(alphas, parts, out.bound);
  out.status = detail::compare_bound(out.verdict.mass.value, out.bound,
                                     out.verdict.mass.abs_error_estimate + out.bound_error);

  // Fold: acc = pi_1, then acc <- acc^(W/(W+a_i)) pi_i^(a_i/(W+a_i)).
  std::optional<GridDensity> acc;
  double acc_weight = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (alphas[i] == 0.0) continue;
    if (!acc) {
      acc = comps[i];
      acc_weight = alphas[i];
      continue;
    }
    const double a = acc_weight / (acc_weight + alphas[i]);
    out.steps.push_back(holder_check(*acc, comps[i], a, likelihood, tolerance));
    acc = log_product(PoolProblem({*acc, comps[i]}, PoolWeights({a, 1.0 - a})));
    acc_weight += alphas[i];
  }
  return out;
}

}  // namespace prior_forge
