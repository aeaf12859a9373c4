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

// Acceptance suite. Prints one PASS/FAIL line per criterion and writes every
// numeric result as CSV under --out, twice, to check run-to-run determinism.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prior_forge/families.hpp"
#include "prior_forge/pooling.hpp"
#include "prior_forge/propriety.hpp"
#include "prior_forge/reparam.hpp"
#include "prior_forge/sparse_multinomial.hpp"
#include "prior_forge/table.hpp"

namespace pf = prior_forge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int id = 0;
  bool pass = false;
  std::string summary;
  double seconds = 0.0;
  double budget = 0.0;  // seconds; 0 when the criterion has no runtime bound
};

std::string fmt(double x) { return pf::format_double(x); }

std::string short_fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

pf::GridDensity tilt(double b) { return pf::family::exponential_tilt(b, pf::family::kRealLine); }

// Normalizing constant of exp(b theta) times the N(x, 1) location kernel.
double gaussian_tilt_mass(double b, double x) { return kSqrt2Pi * std::exp(b * x + 0.5 * b * b); }

bool rel_close(double got, double want, double rel) { return std::fabs(got - want) <= rel * std::fabs(want); }

// 1. Hoelder bound on randomized instances.
Outcome holder_suite(const fs::path& dir, std::uint64_t seed) {
  pf::Sampler s(pf::RandomStream{seed, 100});
  pf::Table t;
  t.columns = {"instance", "family", "alpha", "lhs", "rhs", "lhs_error", "rhs_error", "status", "mixed_proper"};
  int holds = 0, proper = 0, analytic = 0, analytic_ok = 0, errors = 0;
  const int total = 200;
  for (int i = 0; i < total; ++i) {
    const double alpha = 0.02 + 0.96 * s.uniform();
    std::string family;
    pf::HolderReport r;
    try {
    switch (i % 4) {
      case 0: {
        // Beta kernels, possibly improper, with interior binomial data.
        const long long n = 2 + (long long)(19.0 * s.uniform());
        const long long k = 1 + (long long)(double(n - 1) * s.uniform());
        const double a1 = -0.9 + 3.9 * s.uniform(), b1 = -0.9 + 3.9 * s.uniform();
        const double a2 = -0.9 + 3.9 * s.uniform(), b2 = -0.9 + 3.9 * s.uniform();
        const auto mu = pf::family::beta_kernel(a1, b1);
        const auto nu = pf::family::beta_kernel(a2, b2);
        family = "binomial " + std::to_string(k) + "/" + std::to_string(n) + " beta(" + short_fmt(a1) + "," +
                 short_fmt(b1) + ") beta(" + short_fmt(a2) + "," + short_fmt(b2) + ")";
        r = pf::holder_check(mu, nu, alpha, pf::LikelihoodModel::binomial(std::min(k, n - 1), n));
        break;
      }
      case 1: {
        // Power kernels and gamma densities with Poisson counts.
        std::vector<long long> counts(1 + std::size_t(4.0 * s.uniform()));
        long long total_count = 0;
        for (auto& c : counts) total_count += (c = (long long)(6.0 * s.uniform()));
        if (total_count == 0) counts[0] = 1;
        const auto mu = pf::family::power_kernel(-0.9 + 2.9 * s.uniform());
        const auto nu = pf::family::gamma(0.2 + 4.0 * s.uniform(), 0.2 + 3.0 * s.uniform());
        family = "poisson";
        r = pf::holder_check(mu, nu, alpha, pf::LikelihoodModel::poisson(counts));
        break;
      }
      case 2: {
        // Tilt against normal prior with several observations.
        std::vector<double> x(1 + std::size_t(3.0 * s.uniform()));
        for (double& v : x) v = 2.0 * s.normal();
        const auto mu = tilt(-2.0 + 4.0 * s.uniform());
        const auto nu = pf::family::normal(2.0 * s.normal(), 0.3 + 2.0 * s.uniform());
        family = "normal";
        r = pf::holder_check(mu, nu, alpha, pf::LikelihoodModel::normal_location(x));
        break;
      }
      default: {
        // Analytic Gaussian case: two tilts, one observation.
        const double b1 = -2.0 + 4.0 * s.uniform();
        const double b2 = -2.0 + 4.0 * s.uniform();
        const double x = 2.0 * s.normal();
        family = "normal-analytic";
        r = pf::holder_check(tilt(b1), tilt(b2), alpha, pf::LikelihoodModel::normal_location({x}));
        ++analytic;
        const bool ok = rel_close(r.mu.mass.value, gaussian_tilt_mass(b1, x), 1e-8) &&
                        rel_close(r.nu.mass.value, gaussian_tilt_mass(b2, x), 1e-8) &&
                        rel_close(r.lhs, gaussian_tilt_mass(alpha * b1 + (1.0 - alpha) * b2, x), 1e-8);
        if (ok) ++analytic_ok;
        break;
      }
    }
    } catch (const pf::Error& e) {
      ++errors;
      t.rows.push_back({i, family, alpha, std::optional<double>{}, std::optional<double>{}, std::optional<double>{},
                        std::optional<double>{}, std::string("error: ") + e.what(), false});
      continue;
    }
    const bool bound_ok = r.lhs <= r.rhs + r.lhs_error + r.rhs_error;
    if (bound_ok) ++holds;
    if (r.mixed.proper) ++proper;
    t.rows.push_back({i, family, alpha, r.lhs, r.rhs, r.lhs_error, r.rhs_error, pf::to_string(r.status), r.mixed.proper});
  }
  pf::emit_table(t, dir / "holder.csv");
  Outcome o;
  o.pass = holds == total && proper == total && analytic_ok == analytic;
  o.summary = "bound " + std::to_string(holds) + "/" + std::to_string(total) + ", mixed proper " +
              std::to_string(proper) + "/" + std::to_string(total) + ", analytic " + std::to_string(analytic_ok) +
              "/" + std::to_string(analytic) +
              (errors ? ", " + std::to_string(errors) + " instances raised errors" : "");
  o.budget = 60.0;
  return o;
}

// 2. Geometric pool against random perturbations, and beta closure.
Outcome pool_optimality(const fs::path& dir, std::uint64_t seed) {
  using pf::PoolProblem;
  using pf::PoolWeights;
  namespace fam = pf::family;
  const std::vector<std::pair<std::string, PoolProblem>> problems{
      {"arcsine+beta(1.5,1.5)", PoolProblem({fam::beta(0.5, 0.5), fam::beta(1.5, 1.5)}, PoolWeights({0.5, 0.5}))},
      {"three betas", PoolProblem({fam::beta(2, 5), fam::beta(5, 2), fam::beta(0.5, 0.5)}, PoolWeights({0.3, 0.3, 0.4}))},
      {"two gammas", PoolProblem({fam::gamma(2, 1), fam::gamma(5, 0.5)}, PoolWeights({0.6, 0.4}))},
      {"two normals", PoolProblem({fam::normal(0, 1), fam::normal(2, 0.5)}, PoolWeights({0.5, 0.5}))},
      {"improper power+tilt",
       PoolProblem({fam::power_kernel(-1.0), fam::exponential_tilt(-2.0, fam::kPositiveHalfLine)}, PoolWeights({0.5, 0.5}))},
  };
  pf::Table t;
  t.columns = {"problem", "perturbation", "epsilon", "objective", "margin"};
  std::size_t comparisons = 0, positive = 0;
  double min_margin = pf::kInfinity;
  for (std::size_t p = 0; p < problems.size(); ++p) {
    const auto r = pf::verify_pool_optimality(problems[p].second, 500, pf::RandomStream{seed, 200 + p});
    for (std::size_t k = 0; k < r.margins.size(); ++k) {
      ++comparisons;
      if (r.margins[k] > 0.0) ++positive;
      min_margin = std::min(min_margin, r.margins[k]);
      t.rows.push_back({problems[p].first, k, r.epsilons[k], r.objectives[k], r.margins[k]});
    }
  }
  pf::emit_table(t, dir / "pool_optimality.csv");

  // Closure: the pool of Beta(a_i, b_i) is Beta(sum w a, sum w b).
  const std::vector<std::pair<double, double>> params{{0.5, 0.5}, {2.0, 7.0}, {3.5, 1.2}};
  const std::vector<double> w{0.2, 0.5, 0.3};
  std::vector<pf::GridDensity> comps;
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    comps.push_back(fam::beta_kernel(params[i].first, params[i].second));
    a += w[i] * params[i].first;
    b += w[i] * params[i].second;
  }
  const auto pooled = pf::geometric_pool(PoolProblem(comps, PoolWeights(w))).density;
  const auto target = fam::beta(a, b);
  double closure = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    closure = std::max(closure, std::fabs(pooled.log_values()[i] - target.log_values()[i]));
  }
  std::ofstream(dir / "beta_closure.csv") << "max_log_difference\n" << fmt(closure) << '\n';

  Outcome o;
  o.pass = positive == comparisons && comparisons == 2500 && closure < 1e-10;
  o.summary = "margins > 0 in " + std::to_string(positive) + "/" + std::to_string(comparisons) +
              " (min " + short_fmt(min_margin) + "), beta closure " + short_fmt(closure);
  return o;
}

// 3. Rescaling components by constants.
Outcome rescaling(const fs::path& dir, std::uint64_t seed) {
  namespace fam = pf::family;
  pf::Sampler s(pf::RandomStream{seed, 300});
  const std::vector<std::vector<pf::GridDensity>> bases{
      {fam::beta_kernel(0.5, 0.5), fam::beta_kernel(3.0, 2.0)},
      {fam::gamma(2.0, 1.0), fam::power_kernel(-0.5), fam::gamma(4.0, 0.3)},
      {fam::normal(0.0, 1.0), tilt(0.7)},
  };
  const std::vector<std::vector<pf::GridDensity>> etas{
      {fam::beta(2.0, 2.0), fam::beta(1.3, 1.1), fam::beta(0.8, 3.0)},
      {fam::gamma(2.0, 0.5), fam::gamma(1.5, 1.0), fam::gamma(3.0, 0.4)},
      {fam::normal(0.5, 1.0), fam::normal(0.0, 0.7), fam::normal(1.0, 1.5)},
  };
  pf::Table t;
  t.columns = {"problem", "trial", "pool_sup_norm", "max_difference_change"};
  double worst_pool = 0.0, worst_diff = 0.0;
  for (std::size_t p = 0; p < bases.size(); ++p) {
    const auto& base = bases[p];
    const pf::PoolWeights w = pf::PoolWeights::uniform(base.size());
    const pf::PoolProblem orig(base, w);
    const auto pool = pf::geometric_pool(orig).density;
    std::vector<double> d_orig;
    for (const auto& e : etas[p]) d_orig.push_back(pf::kl_objective(e, orig).value);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<pf::GridDensity> scaled;
      for (const auto& c : base) scaled.push_back(c.shifted(std::log(1e-6) + s.uniform() * std::log(1e12), false));
      const pf::PoolProblem q(scaled, w);
      const auto qp = pf::geometric_pool(q).density;
      double sup = 0.0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        sup = std::max(sup, std::fabs(std::exp(pool.log_values()[i]) - std::exp(qp.log_values()[i])));
      }
      std::vector<double> d_scaled;
      for (const auto& e : etas[p]) d_scaled.push_back(pf::kl_objective(e, q).value);
      double diff = 0.0;
      for (std::size_t i = 0; i < d_orig.size(); ++i) {
        for (std::size_t j = i + 1; j < d_orig.size(); ++j) {
          diff = std::max(diff, std::fabs((d_orig[i] - d_orig[j]) - (d_scaled[i] - d_scaled[j])));
        }
      }
      worst_pool = std::max(worst_pool, sup);
      worst_diff = std::max(worst_diff, diff);
      t.rows.push_back({p, trial, sup, diff});
    }
  }
  pf::emit_table(t, dir / "rescaling.csv");
  Outcome o;
  o.pass = worst_pool < 1e-10 && worst_diff < 1e-10;
  o.summary = "pool sup-norm " + short_fmt(worst_pool) + ", d-difference change " + short_fmt(worst_diff);
  return o;
}

// 4. Dirichlet-multinomial pmf sums to one.
Outcome dm_normalization(const fs::path& dir, std::uint64_t) {
  pf::Table t;
  t.columns = {"m", "n", "a", "total"};
  double worst = 0.0;
  std::function<void(std::size_t, long long, std::vector<long long>&, const std::function<void(const std::vector<long long>&)>&)> walk =
      [&](std::size_t m, long long n, std::vector<long long>& cur, const std::function<void(const std::vector<long long>&)>& visit) {
        if (cur.size() + 1 == m) {
          cur.push_back(n);
          visit(cur);
          cur.pop_back();
          return;
        }
        for (long long k = 0; k <= n; ++k) {
          cur.push_back(k);
          walk(m, n - k, cur, visit);
          cur.pop_back();
        }
      };
  for (std::size_t m = 2; m <= 3; ++m) {
    for (long long n = 0; n <= 4; ++n) {
      for (double a : {0.1, 0.5, 1.0, 2.0}) {
        double total = 0.0;
        std::vector<long long> cur;
        walk(m, n, cur, [&](const std::vector<long long>& c) {
          double coef = std::lgamma(double(n) + 1.0);
          for (long long k : c) coef -= std::lgamma(double(k) + 1.0);
          total += std::exp(pf::dm_log_marginal(pf::CountVector(c), a) + coef);
        });
        worst = std::max(worst, std::fabs(total - 1.0));
        t.rows.push_back({m, n, a, total});
      }
    }
  }
  pf::emit_table(t, dir / "dm_normalization.csv");
  Outcome o;
  o.pass = worst <= 1e-10;
  o.summary = std::to_string(t.rows.size()) + " sums, max |total - 1| " + short_fmt(worst);
  return o;
}

// 5. Jeffreys against Dirichlet(1/m) for three singletons among 1000 cells.
Outcome jeffreys_contrast(const fs::path& dir, std::uint64_t) {
  const auto data = pf::CountVector::canonical(1000, 3, 3);
  const auto c = pf::compare_priors(data, pf::HyperPriorSpec::pareto_v(), 1.0 / 1000.0);
  pf::Table t;
  t.columns = {"cell", "count", "prior", "mean", "lo95", "hi95"};
  auto add = [&](const pf::CellComparison& cell) {
    t.rows.push_back({cell.cell, cell.count, "jeffreys", cell.jeffreys.mean, cell.jeffreys.lo, cell.jeffreys.hi});
    if (cell.conditional) {
      t.rows.push_back({cell.cell, cell.count, "dirichlet(1/m)", cell.conditional->mean, cell.conditional->lo, cell.conditional->hi});
    }
    if (cell.hierarchical) {
      t.rows.push_back({cell.cell, cell.count, "hierarchical pareto-v", cell.hierarchical->mean, cell.hierarchical->lo,
                        cell.hierarchical->hi});
    }
  };
  Outcome o;
  if (!c.observed || !c.unobserved || !c.observed->conditional || !c.unobserved->conditional) {
    o.summary = "missing comparison cells";
    return o;
  }
  add(*c.observed);
  add(*c.unobserved);
  pf::emit_table(t, dir / "jeffreys_contrast.csv");
  const double jo = c.observed->jeffreys.mean, ju = c.unobserved->jeffreys.mean;
  const double co = c.observed->conditional->mean, cu = c.unobserved->conditional->mean;
  const double tol = 1e-12;
  o.pass = std::fabs(jo - 3.0 / 1006.0) <= tol && std::fabs(ju - 1.0 / 1006.0) <= tol &&
           std::fabs(jo / ju - 3.0) <= tol && std::fabs(cu - 2.5e-4) <= tol && std::fabs(co - 1.001 / 4.0) <= tol;
  o.summary = "Jeffreys " + short_fmt(jo) + " / " + short_fmt(ju) + " (ratio " + short_fmt(jo / ju) +
              "), a=1/m " + short_fmt(co) + " / " + short_fmt(cu);
  return o;
}

// 6. Improper flat-in-a flagged; pareto-v proper across the sweep.
Outcome propriety_honesty(const fs::path& dir, std::uint64_t) {
  const auto flat = pf::v_posterior(pf::CountVector::canonical(1000, 3, 3), pf::HyperPriorSpec::flat_in_a());
  const bool flat_flagged = !flat.verdict.proper && !flat.summary && pf::integrate(flat.density).diverged;
  std::vector<pf::VConfig> configs;
  for (long long n : {3, 5, 10}) {
    for (long long r0 = 1; r0 <= std::min<long long>(n, 5); ++r0) configs.push_back({1000, n, r0});
  }
  const auto rows = pf::v_summary_table(configs, pf::HyperPriorSpec::pareto_v());
  pf::Table t;
  t.columns = {"m", "n", "r0", "hyperprior", "proper", "mode_v", "median_v", "q05_v", "q95_v"};
  t.rows.push_back({1000, 3, 3, "flat-in-a", flat.verdict.proper, std::optional<double>{}, std::optional<double>{},
                    std::optional<double>{}, std::optional<double>{}});
  std::size_t finite = 0, below_ten = 0, mode_le2 = 0, median_le2 = 0;
  std::string over_ten;
  for (const auto& r : rows) {
    std::optional<double> mode, median, q05, q95;
    if (r.proper && r.summary) {
      mode = r.summary->mode;
      median = r.summary->median;
      q05 = r.summary->q05;
      q95 = r.summary->q95;
      if (std::isfinite(*mode) && std::isfinite(*median)) ++finite;
      if (*median < 10.0) {
        ++below_ten;
      } else {
        over_ten += " (n=" + std::to_string(r.config.n) + ", r0=" + std::to_string(r.config.r0) +
                    ") median " + short_fmt(*median);
      }
      if (*mode <= 2.0) ++mode_le2;
      if (*median <= 2.0) ++median_le2;
    }
    t.rows.push_back({r.config.m, r.config.n, r.config.r0, r.hyperprior, r.proper, mode, median, q05, q95});
  }
  pf::emit_table(t, dir / "v_posterior_sweep.csv");
  Outcome o;
  o.pass = flat_flagged && finite == rows.size() && below_ten == rows.size();
  o.summary = std::string("flat-in-a ") + (flat_flagged ? "flagged improper" : "NOT flagged") + ", pareto-v proper " +
              std::to_string(finite) + "/" + std::to_string(rows.size()) + ", median<10 in " +
              std::to_string(below_ten) + "/" + std::to_string(rows.size()) +
              (over_ten.empty() ? "" : ", fails at" + over_ten) + "; mode<=2 in " + std::to_string(mode_le2) + ", median<=2 in " +
              std::to_string(median_le2);
  o.budget = 120.0;
  return o;
}

// 7. v-posterior stabilizes as m grows.
Outcome stability(const fs::path& dir, std::uint64_t) {
  const auto r = pf::large_m_stability(3, 1, {100, 1000, 10000}, pf::HyperPriorSpec::pareto_v());
  pf::Table t;
  t.columns = {"m_from", "m_to", "sup_norm"};
  for (std::size_t i = 0; i < r.distances.size(); ++i) t.rows.push_back({r.m_values[i], r.m_values[i + 1], r.distances[i]});
  pf::emit_table(t, dir / "large_m_stability.csv");
  Outcome o;
  o.pass = r.testable && r.distances.size() == 2 && r.distances[1] < r.distances[0] && r.decreasing;
  o.summary = r.distances.size() == 2
                  ? "sup-norm 100->1000 " + short_fmt(r.distances[0]) + ", 1000->10000 " + short_fmt(r.distances[1])
                  : r.diagnostics;
  return o;
}

// 8. Normalized gammas against Dirichlet marginals.
Outcome poisson_gamma(const fs::path& dir, std::uint64_t seed) {
  pf::Table t;
  t.columns = {"m", "a", "beta", "mean", "variance", "mean_z", "variance_z", "ks", "ks_critical", "ok"};
  std::size_t checks = 0, passed = 0, cross = 0, cross_ok = 0;
  std::uint64_t index = 400;
  for (std::size_t m : {2u, 5u, 20u}) {
    for (double a : {0.3, 0.5, 1.0, 2.0}) {
      const auto r = pf::dirichlet_equivalence_report(a, m, 100000, {0.1, 1.0, 10.0}, pf::RandomStream{seed, index++});
      for (const auto& c : r.per_beta) {
        const bool ok = c.moments_ok(r.marginal) && c.ks_ok();
        ++checks;
        if (ok) ++passed;
        t.rows.push_back({m, a, c.beta, c.mean, c.variance, c.mean_z(r.marginal), c.variance_z(r.marginal), c.ks,
                          c.ks_critical, ok});
      }
      for (const auto& c : r.cross) {
        ++cross;
        if (c.ok()) ++cross_ok;
      }
    }
  }
  pf::emit_table(t, dir / "poisson_gamma.csv");
  Outcome o;
  o.pass = passed == checks && cross_ok == cross;
  o.summary = "marginal checks " + std::to_string(passed) + "/" + std::to_string(checks) + ", beta-invariance " +
              std::to_string(cross_ok) + "/" + std::to_string(cross);
  o.budget = 60.0;
  return o;
}

// 9. Stick-breaking means and simplex membership.
Outcome stick_breaking(const fs::path& dir, std::uint64_t seed) {
  const auto d = pf::ordered_prior_diagnostics(10, 100000, pf::RandomStream{seed, 500});
  pf::Table t;
  t.columns = {"k", "analytic_mean", "empirical_mean", "empirical_median", "z"};
  std::size_t within = 0;
  double worst_z = 0.0;
  for (const auto& c : d.cells) {
    const double z = (c.empirical_mean - c.analytic_mean) / c.mean_se;
    worst_z = std::max(worst_z, std::fabs(z));
    if (std::fabs(z) <= 4.0) ++within;
    t.rows.push_back({c.k, c.analytic_mean, c.empirical_mean, c.empirical_median, z});
  }
  t.preamble = "k_star=" + (d.k_star ? std::to_string(*d.k_star) : std::string("none")) +
               " max_simplex_error=" + fmt(d.max_simplex_error) + " min_component=" + fmt(d.min_component);
  pf::emit_table(t, dir / "stick_breaking.csv");
  Outcome o;
  o.pass = within == d.cells.size() && d.max_simplex_error <= 1e-12 && d.min_component >= 0.0;
  o.summary = "means within 4 SE " + std::to_string(within) + "/" + std::to_string(d.cells.size()) + " (max |z| " +
              short_fmt(worst_z) + "), simplex error " + short_fmt(d.max_simplex_error) + ", k* " +
              (d.k_star ? std::to_string(*d.k_star) : std::string("none"));
  return o;
}

using Criterion = std::function<Outcome(const fs::path&, std::uint64_t)>;

std::vector<Outcome> run_suite(const fs::path& dir, std::uint64_t seed) {
  const std::vector<Criterion> criteria{holder_suite, pool_optimality, rescaling, dm_normalization,
                                        jeffreys_contrast, propriety_honesty, stability, poisson_gamma,
                                        stick_breaking};
  fs::create_directories(dir);
  std::vector<Outcome> out;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i](dir, seed);
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("exception: ") + e.what();
    }
    o.id = int(i + 1);
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(o);
  }
  pf::Table t;
  t.columns = {"criterion", "pass", "summary"};
  t.preamble = "seed=" + std::to_string(seed);
  for (const auto& o : out) t.rows.push_back({o.id, o.pass, o.summary});
  pf::emit_table(t, dir / "summary.csv");
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Byte comparison of every file in two run directories.
Outcome compare_runs(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  std::size_t same = 0;
  std::string first_diff;
  for (const auto& n : names) {
    if (fs::exists(b / n) && read_file(a / n) == read_file(b / n)) {
      ++same;
    } else if (first_diff.empty()) {
      first_diff = n;
    }
  }
  std::size_t count_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
  Outcome o;
  o.id = 10;
  o.pass = !names.empty() && same == names.size() && count_b == names.size();
  o.summary = std::to_string(same) + "/" + std::to_string(names.size()) + " files byte-identical" +
              (first_diff.empty() ? "" : ", first difference in " + first_diff);
  return o;
}

void print(const Outcome& o) {
  std::string line = "criterion " + std::to_string(o.id) + ": " + (o.pass ? "PASS" : "FAIL") + "  " + o.summary;
  char timing[64];
  std::snprintf(timing, sizeof timing, "  [%.1fs", o.seconds);
  line += timing;
  if (o.budget > 0.0) {
    std::snprintf(timing, sizeof timing, " of %.0fs budget", o.budget);
    line += timing;
  }
  std::cout << line << "]\n" << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prior-forge acceptance suite"};
  std::string out = "acceptance_out";
  std::uint64_t seed = 42;
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Master seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const fs::path root(out);
  fs::remove_all(root);
  auto first = run_suite(root / "run_a", seed);
  bool all = true;
  for (auto& o : first) {
    if (o.budget > 0.0 && o.seconds > o.budget) {
      o.pass = false;
      o.summary += ", over runtime budget";
    }
    all = all && o.pass;
    print(o);
  }
  const auto start = std::chrono::steady_clock::now();
  run_suite(root / "run_b", seed);
  auto det = compare_runs(root / "run_a", root / "run_b");
  det.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  print(det);
  all = all && det.pass;
  std::cout << (all ? "all criteria passed" : "some criteria FAILED") << '\n';
  return all ? 0 : 1;
}
