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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "prior_forge/families.hpp"
#include "prior_forge/propriety.hpp"
#include "prior_forge/random.hpp"

namespace pf = prior_forge;

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

// int exp(b theta) exp(-(x - theta)^2 / 2) dtheta.
double gaussian_tilt_mass(double b, double x) { return kSqrt2Pi * std::exp(b * x + 0.5 * b * b); }

pf::GridDensity tilt(double b) { return pf::family::exponential_tilt(b, pf::family::kRealLine); }
pf::GridDensity flat() { return pf::family::flat(pf::family::kRealLine); }

}  // namespace

TEST(PosteriorMass, FlatPriorNormalLikelihood) {
  const auto v = pf::posterior_mass(flat(), pf::LikelihoodModel::normal_location({0.0}));
  EXPECT_TRUE(v.proper);
  EXPECT_NEAR(v.mass.value, kSqrt2Pi, 1e-8 * kSqrt2Pi);
}

TEST(PosteriorMass, ExponentialTiltMatchesOracle) {
  for (double b : {1.0, -0.7, 2.5}) {
    for (double x : {0.0, 1.3, -2.0}) {
      const auto v = pf::posterior_mass(tilt(b), pf::LikelihoodModel::normal_location({x}));
      ASSERT_TRUE(v.proper);
      EXPECT_NEAR(v.mass.value, gaussian_tilt_mass(b, x), 1e-8 * gaussian_tilt_mass(b, x)) << b << " " << x;
    }
  }
}

TEST(PosteriorMass, QuadraticTiltDiverges) {
  const auto prior = pf::GridDensity::from_log_function(pf::family::kRealLine, [](double t) { return t * t; });
  const auto v = pf::posterior_mass(prior, pf::LikelihoodModel::normal_location({0.0}));
  EXPECT_FALSE(v.proper);
  EXPECT_TRUE(v.mass.diverged);
  EXPECT_NE(v.diagnostics.find("tail"), std::string::npos);
}

TEST(PosteriorMass, DomainMismatchIsInputError) {
  EXPECT_THROW(pf::posterior_mass(flat(), pf::LikelihoodModel::binomial(1, 3)), pf::InputError);
  EXPECT_NO_THROW(pf::posterior_mass(pf::family::beta(1, 1), pf::LikelihoodModel::normal_location({0.2})));
}

TEST(PosteriorMass, BinomialAndPoissonOracles) {
  // Beta(a, b) prior with k of n: B(a + k, b + n - k) / B(a, b).
  const auto v = pf::posterior_mass(pf::family::beta(0.5, 0.5), pf::LikelihoodModel::binomial(3, 10));
  EXPECT_NEAR(v.mass.value, std::exp(pf::log_beta(3.5, 7.5) - pf::log_beta(0.5, 0.5)), 1e-10);
  // Gamma(k, s) prior with Poisson counts summing to t over n: Gamma(k+t)/Gamma(k) s^-k (n + 1/s)^-(k+t).
  const auto w = pf::posterior_mass(pf::family::gamma(2.0, 0.5), pf::LikelihoodModel::poisson({1, 4, 0}));
  const double expected = std::exp(pf::log_gamma(7.0) - pf::log_gamma(2.0) - 2.0 * std::log(0.5) - 7.0 * std::log(3.0 + 2.0));
  EXPECT_NEAR(w.mass.value, expected, 1e-9 * expected);
}

TEST(PosteriorMass, ImproperPriorsWithBinomial) {
  // Haldane prior is proper only when 0 < k < n.
  const auto haldane = pf::family::beta_kernel(0.0, 0.0);
  EXPECT_TRUE(pf::posterior_mass(haldane, pf::LikelihoodModel::binomial(2, 5)).proper);
  EXPECT_TRUE(pf::posterior_mass(haldane, pf::LikelihoodModel::binomial(0, 5)).mass.diverged);
}

TEST(PosteriorMass, MultinomialCellMarginal) {
  const auto a = pf::posterior_mass(pf::family::beta(1, 1), pf::LikelihoodModel::multinomial({2, 0, 5}, 0));
  const auto b = pf::posterior_mass(pf::family::beta(1, 1), pf::LikelihoodModel::binomial(2, 7));
  EXPECT_DOUBLE_EQ(a.mass.value, b.mass.value);
}

TEST(PosteriorMass, GridLikelihood) {
  const auto lik = pf::GridDensity::from_log_function(pf::family::kUnitInterval, [](double t) {
    return 2.0 * std::log(t) + std::log1p(-t);
  });
  std::vector<double> nodes(lik.nodes().begin(), lik.nodes().end());
  std::vector<double> values(lik.log_values().begin(), lik.log_values().end());
  const auto grid = pf::LikelihoodModel::grid(pf::GridDensity(lik.domain(), nodes, values));
  const auto v = pf::posterior_mass(pf::family::beta(1, 1), grid);
  EXPECT_NEAR(v.mass.value, std::exp(pf::log_beta(3.0, 2.0)), 1e-6);
}

TEST(HolderCheck, EqualPriorsGiveEquality) {
  const auto lik = pf::LikelihoodModel::normal_location({0.4, -0.3});
  const auto r = pf::holder_check(tilt(0.8), tilt(0.8), 0.37, lik);
  EXPECT_NEAR(r.lhs, r.rhs, 1e-10 * r.rhs);
  EXPECT_TRUE(r.holds());
}

TEST(HolderCheck, FlatAndTiltAtHalf) {
  const auto r = pf::holder_check(flat(), tilt(1.0), 0.5, pf::LikelihoodModel::normal_location({0.0}));
  EXPECT_NEAR(r.lhs, kSqrt2Pi * std::exp(0.125), 1e-8 * r.lhs);
  EXPECT_NEAR(r.rhs, std::sqrt(gaussian_tilt_mass(0, 0) * gaussian_tilt_mass(1, 0)), 1e-8 * r.rhs);
  EXPECT_NEAR(r.lhs, 2.8404, 1e-4);
  EXPECT_NEAR(r.rhs, 3.2186, 1e-4);
  EXPECT_EQ(r.status, pf::HolderStatus::holds);
}

TEST(HolderCheck, AlphaNearOneApproachesFirstPrior) {
  // mu^alpha nu^(1-alpha) with mu = e^theta: tilt b = alpha.
  const auto lik = pf::LikelihoodModel::normal_location({0.0});
  const auto r = pf::holder_check(tilt(1.0), flat(), 0.999, lik);
  EXPECT_NEAR(r.lhs, gaussian_tilt_mass(0.999, 0.0), 1e-8 * r.lhs);
  EXPECT_NEAR(r.lhs / gaussian_tilt_mass(1.0, 0.0), 1.0, 0.01);
  // With the roles as written (flat first) the limit is the flat posterior mass.
  const auto s = pf::holder_check(flat(), tilt(1.0), 0.999, lik);
  EXPECT_NEAR(s.lhs, gaussian_tilt_mass(0.001, 0.0), 1e-8 * s.lhs);
}

TEST(HolderCheck, Symmetry) {
  const auto lik = pf::LikelihoodModel::binomial(3, 8);
  const auto a = pf::holder_check(pf::family::beta(0.5, 2.0), pf::family::beta(3.0, 1.5), 0.3, lik);
  const auto b = pf::holder_check(pf::family::beta(3.0, 1.5), pf::family::beta(0.5, 2.0), 0.7, lik);
  EXPECT_NEAR(a.lhs, b.lhs, 1e-12 * a.lhs);
  EXPECT_NEAR(a.rhs, b.rhs, 1e-12 * a.rhs);
}

TEST(HolderCheck, ProportionalPairsAreSharp) {
  const auto lik = pf::LikelihoodModel::poisson({2, 3});
  const auto mu = pf::family::gamma(2.0, 1.0);
  const auto r = pf::holder_check(mu, mu.shifted(std::log(40.0), false), 0.6, lik);
  EXPECT_NEAR(r.lhs, r.rhs, 1e-9 * r.rhs);
  const auto s = pf::holder_check(mu, pf::family::gamma(5.0, 1.0), 0.6, lik);
  EXPECT_LT(s.lhs, s.rhs * (1.0 - 1e-3));
}

TEST(HolderCheck, PreconditionNamesFailingPrior) {
  const auto lik = pf::LikelihoodModel::normal_location({0.0});
  const auto bad = pf::GridDensity::from_log_function(pf::family::kRealLine, [](double t) { return t * t; });
  try {
    pf::holder_check(flat(), bad, 0.5, lik);
    FAIL() << "expected PreconditionError";
  } catch (const pf::PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("nu"), std::string::npos);
  }
  try {
    pf::holder_check(bad, flat(), 0.5, lik);
    FAIL() << "expected PreconditionError";
  } catch (const pf::PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("mu"), std::string::npos);
  }
  EXPECT_THROW(pf::holder_check(flat(), flat(), 1.0, lik), pf::InputError);
  EXPECT_THROW(pf::holder_check(flat(), flat(), 0.0, lik), pf::InputError);
}

TEST(PooledPropriety, SingleComponentMatchesPosteriorMass) {
  const auto lik = pf::LikelihoodModel::normal_location({0.5});
  const auto r = pf::pooled_propriety(pf::PoolProblem({tilt(0.3)}, pf::PoolWeights({1.0})), lik);
  EXPECT_EQ(r.verdict.mass.value, pf::posterior_mass(tilt(0.3), lik).mass.value);
  EXPECT_TRUE(r.steps.empty());
}

TEST(PooledPropriety, FlatAndTilt) {
  const auto r = pf::pooled_propriety(pf::PoolProblem({flat(), tilt(1.0)}, pf::PoolWeights({0.5, 0.5})),
                                      pf::LikelihoodModel::normal_location({0.0}));
  EXPECT_TRUE(r.verdict.proper);
  EXPECT_NEAR(r.verdict.mass.value, kSqrt2Pi * std::exp(0.125), 1e-8);
  EXPECT_NEAR(r.bound, 3.2188, 1e-3);
  EXPECT_EQ(r.status, pf::HolderStatus::holds);
}

TEST(PooledPropriety, ThreeComponentsCancelToFlat) {
  const auto r = pf::pooled_propriety(pf::PoolProblem({flat(), tilt(1.0), tilt(-1.0)}, pf::PoolWeights::uniform(3)),
                                      pf::LikelihoodModel::normal_location({0.0}));
  EXPECT_NEAR(r.verdict.mass.value, kSqrt2Pi, 1e-8);
  const double bound = std::pow(gaussian_tilt_mass(0, 0) * gaussian_tilt_mass(1, 0) * gaussian_tilt_mass(-1, 0), 1.0 / 3.0);
  EXPECT_NEAR(r.bound, bound, 1e-8 * bound);
  EXPECT_EQ(r.steps.size(), 2u);
  for (const auto& s : r.steps) EXPECT_TRUE(s.holds());
}

TEST(PooledPropriety, FoldedBoundsChainToProductBound) {
  const auto lik = pf::LikelihoodModel::normal_location({0.2, 1.1});
  const pf::PoolProblem p({tilt(0.5), tilt(-1.5), pf::family::normal(1.0, 2.0)}, pf::PoolWeights({0.2, 0.3, 0.5}));
  const auto r = pf::pooled_propriety(p, lik);
  ASSERT_EQ(r.steps.size(), 2u);
  // Last fold step has lhs = pooled mass; the chain of rhs values gives the product bound.
  EXPECT_NEAR(r.steps.back().lhs, r.verdict.mass.value, 1e-10 * r.verdict.mass.value);
  EXPECT_LE(r.steps.back().rhs, r.bound * (1.0 + 1e-10));
}

TEST(PooledPropriety, FailingComponentIsPrecondition) {
  EXPECT_THROW(pf::pooled_propriety(pf::PoolProblem({flat(), pf::GridDensity::from_log_function(pf::family::kRealLine, [](double t) { return t * t; })},
                                                    pf::PoolWeights({0.5, 0.5})),
                                    pf::LikelihoodModel::normal_location({0.0})),
               pf::PreconditionError);
}

TEST(HolderProperty, RandomizedInstances) {
  pf::Sampler s(pf::RandomStream{2024, 0});
  for (int k = 0; k < 40; ++k) {
    const auto a1 = 0.5 + 3.0 * s.uniform(), b1 = 0.5 + 3.0 * s.uniform();
    const auto a2 = 0.5 + 3.0 * s.uniform(), b2 = 0.5 + 3.0 * s.uniform();
    const long long n = 1 + (long long)(10 * s.uniform());
    const long long x = (long long)(double(n + 1) * s.uniform());
    const double alpha = 0.05 + 0.9 * s.uniform();
    const auto r = pf::holder_check(pf::family::beta(a1, b1), pf::family::beta(a2, b2), alpha,
                                    pf::LikelihoodModel::binomial(std::min(x, n), n));
    EXPECT_TRUE(r.holds()) << k;
    EXPECT_TRUE(r.mixed.proper);
  }
}
