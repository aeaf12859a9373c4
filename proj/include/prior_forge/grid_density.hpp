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
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prior_forge/error.hpp"
#include "prior_forge/format.hpp"
#include "prior_forge/quadrature.hpp"

namespace prior_forge {

/// Layout of a default grid. Bounded domains are uniform, half-lines are
/// log-spaced in the distance from the finite end, the real line is uniform
/// on a symmetric window.
struct GridSpec {
  std::size_t nodes = 2049;
  double half_line_min = 1e-4;
  double half_line_max = 1e4;
  double real_line_center = 0.0;
  double real_line_half_width = 10.0;
  double singular_offset = 1e-10;  // fraction of the domain width
};

inline constexpr std::size_t kMinGridNodes = 16;

using LogFunction = std::function<double(double)>;

/// Log-spaced values from lo to hi inclusive.
inline std::vector<double> geomspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  const double llo = std::log(lo);
  const double step = (std::log(hi) - llo) / double(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(llo + step * double(i));
  out.front() = lo;
  out.back() = hi;
  return out;
}

/// Builds the node set for `domain`. Finite endpoints of a bounded domain are
/// offset by spec.singular_offset * width, so every density on one domain
/// shares one grid whatever its endpoint behavior.
inline std::vector<double> make_nodes(const Interval& domain, const GridSpec& spec = {}) {
  if (spec.nodes < kMinGridNodes) throw InputError("grid needs at least 16 nodes");
  const std::size_t n = spec.nodes;
  std::vector<double> nodes(n);
  if (domain.bounded()) {
    const double width = domain.hi - domain.lo;
    for (std::size_t i = 0; i < n; ++i) {
      nodes[i] = domain.lo + width * double(i) / double(n - 1);
    }
    nodes.front() = domain.lo + spec.singular_offset * width;
    nodes.back() = domain.hi - spec.singular_offset * width;
  } else if (domain.lo_finite()) {
    const auto offsets = geomspace(spec.half_line_min, spec.half_line_max, n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = domain.lo + offsets[i];
  } else if (domain.hi_finite()) {
    const auto offsets = geomspace(spec.half_line_min, spec.half_line_max, n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = domain.hi - offsets[n - 1 - i];
  } else {
    const double lo = spec.real_line_center - spec.real_line_half_width;
    const double width = 2.0 * spec.real_line_half_width;
    for (std::size_t i = 0; i < n; ++i) nodes[i] = lo + width * double(i) / double(n - 1);
  }
  return nodes;
}

/// A one-dimensional log-density tabulated on a strictly increasing grid,
/// possibly unnormalized or improper. When built from a closed form, the
/// log-density function travels with the table and integration uses it.
class GridDensity {
 public:
  GridDensity(Interval domain, std::vector<double> nodes, std::vector<double> log_values,
              bool normalized = false, std::shared_ptr<const LogFunction> log_fn = nullptr)
      : domain_(domain),
        nodes_(std::make_shared<const std::vector<double>>(std::move(nodes))),
        log_values_(std::move(log_values)),
        normalized_(normalized),
        log_fn_(std::move(log_fn)) {
    validate();
  }

  /// Tabulates `fn` on the default grid for `domain`.
  static GridDensity from_log_function(Interval domain, LogFunction fn, const GridSpec& spec = {},
                                       bool normalized = false) {
    auto nodes = make_nodes(domain, spec);
    return tabulate(domain, std::move(nodes), std::move(fn), normalized);
  }

  /// Tabulates `fn` on caller-chosen nodes.
  static GridDensity tabulate(Interval domain, std::vector<double> nodes, LogFunction fn,
                              bool normalized = false) {
    std::vector<double> values(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) values[i] = fn(nodes[i]);
    return GridDensity(domain, std::move(nodes), std::move(values), normalized,
                       std::make_shared<const LogFunction>(std::move(fn)));
  }

  const Interval& domain() const { return domain_; }
  std::span<const double> nodes() const { return *nodes_; }
  std::span<const double> log_values() const { return log_values_; }
  std::size_t size() const { return log_values_.size(); }
  bool normalized() const { return normalized_; }
  bool has_log_function() const { return static_cast<bool>(log_fn_); }
  const std::shared_ptr<const LogFunction>& log_function() const { return log_fn_; }

  double log_density(double x) const {
    if (!log_fn_) throw InputError("density has no closed form; use the tabulated values");
    return (*log_fn_)(x);
  }

  /// Nodes are shared between densities derived from one another, so the
  /// common case is a pointer comparison.
  bool same_grid(const GridDensity& other) const {
    return domain_ == other.domain_ && (nodes_ == other.nodes_ || *nodes_ == *other.nodes_);
  }

  /// Bulk and breakpoints for integrating over this grid.
  QuadratureHints hints() const {
    QuadratureHints h;
    const auto& x = *nodes_;
    h.bulk_lo = x.front();
    h.bulk_hi = x.back();
    const std::size_t stride = std::max<std::size_t>(1, (x.size() - 1) / 32);
    for (std::size_t i = stride; i + 1 < x.size(); i += stride) h.breakpoints.push_back(x[i]);
    return h;
  }

  /// Same grid and function, log values offset by `shift`.
  GridDensity shifted(double shift, bool normalized) const {
    GridDensity out = *this;
    for (double& v : out.log_values_) v += shift;
    out.normalized_ = normalized;
    if (log_fn_) {
      auto inner = log_fn_;
      out.log_fn_ = std::make_shared<const LogFunction>(
          [inner, shift](double x) { return (*inner)(x) + shift; });
    }
    return out;
  }

  /// New density on the same grid (nodes shared) with different values.
  GridDensity with_values(std::vector<double> log_values, bool normalized,
                          std::shared_ptr<const LogFunction> log_fn) const {
    GridDensity out = *this;
    out.log_values_ = std::move(log_values);
    out.normalized_ = normalized;
    out.log_fn_ = std::move(log_fn);
    out.validate();
    return out;
  }

 private:
  void validate() const {
    const auto& x = *nodes_;
    if (x.size() != log_values_.size()) {
      throw InputError("grid density: nodes and log values differ in length");
    }
    if (x.size() < kMinGridNodes) throw InputError("grid density: needs at least 16 nodes");
    if (std::isnan(domain_.lo) || std::isnan(domain_.hi) || !(domain_.lo < domain_.hi)) {
      throw InputError("grid density: invalid domain");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i])) throw InputError("grid density: non-finite node");
      if (i > 0 && !(x[i - 1] < x[i])) {
        throw InputError("grid density: nodes must be strictly increasing");
      }
      if (std::isnan(log_values_[i]) || log_values_[i] == kInfinity) {
        throw InputError("grid density: log value at node " + format_double(x[i]) +
                         " is NaN or +inf");
      }
    }
    if (x.front() < domain_.lo || x.back() > domain_.hi) {
      throw InputError("grid density: nodes outside the domain");
    }
  }

  Interval domain_;
  std::shared_ptr<const std::vector<double>> nodes_;
  std::vector<double> log_values_;
  bool normalized_ = false;
  std::shared_ptr<const LogFunction> log_fn_;
};

namespace detail {

inline double exp_or_zero(double log_value) {
  return log_value == -kInfinity ? 0.0 : std::exp(log_value);
}

// Integral over [x_i, x_{i+1}] of the cubic through the four nearest nodes,
// evaluated with two-point Gauss-Legendre (exact for cubics).
// The stencil stays inside nodes [first, last].
inline double cubic_cell_integral(std::span<const double> x, std::span<const double> y,
                                  std::size_t i, std::size_t first = 0,
                                  std::size_t last = std::size_t(-1)) {
  const std::size_t n = x.size();
  last = std::min(last, n - 1);
  const std::size_t j0 = std::min(std::max(i > 0 ? i - 1 : 0, first), last - 3);
  const double mid = 0.5 * (x[i] + x[i + 1]);
  const double half = 0.5 * (x[i + 1] - x[i]);
  const double g = half / std::sqrt(3.0);
  double total = 0.0;
  for (double t : {mid - g, mid + g}) {
    double p = 0.0;
    for (std::size_t j = j0; j < j0 + 4; ++j) {
      double basis = 1.0;
      for (std::size_t l = j0; l < j0 + 4; ++l) {
        if (l != j) basis *= (t - x[l]) / (x[j] - x[l]);
      }
      p += y[j] * basis;
    }
    total += p;
  }
  return half * total;
}

struct PowerTail {
  double mass = 0.0;
  double exponent = 0.0;
  bool diverged = false;
};

// Power-law model f(x) = f(x_edge) * (d / d_edge)^b in the distance d from
// `origin`, fitted through the two outermost nodes.
inline PowerTail power_tail(double x_edge, double l_edge, double x_next, double l_next,
                            double origin, bool toward_origin) {
  PowerTail t;
  if (l_edge == -kInfinity) return t;
  const double d_edge = std::fabs(x_edge - origin);
  const double d_next = std::fabs(x_next - origin);
  if (l_next == -kInfinity) {
    t.exponent = toward_origin ? kInfinity : -kInfinity;
  } else {
    t.exponent = (l_edge - l_next) / (std::log(d_edge) - std::log(d_next));
  }
  const double f = std::exp(l_edge);
  if (toward_origin) {
    if (!(t.exponent > -1.0)) {
      t.diverged = true;
      t.mass = kInfinity;
    } else {
      t.mass = std::isfinite(t.exponent) ? f * d_edge / (t.exponent + 1.0) : 0.0;
    }
  } else {
    if (!(t.exponent < -1.0)) {
      t.diverged = true;
      t.mass = kInfinity;
    } else {
      t.mass = std::isfinite(t.exponent) ? f * d_edge / (-t.exponent - 1.0) : 0.0;
    }
  }
  return t;
}

// Integral over [x0, x1] of the power law in the distance from `origin`
// through both nodes. Exact for f = c |x - origin|^b.
inline double power_cell_integral(double x0, double l0, double x1, double l1, double origin) {
  if (l0 == -kInfinity || l1 == -kInfinity) {
    return 0.5 * std::fabs(x1 - x0) * (exp_or_zero(l0) + exp_or_zero(l1));
  }
  double d0 = std::fabs(x0 - origin), d1 = std::fabs(x1 - origin);
  if (d0 > d1) {
    std::swap(d0, d1);
    std::swap(l0, l1);
  }
  const double log_ratio = std::log(d1 / d0);
  const double c = (l1 - l0) / log_ratio + 1.0;  // exponent + 1
  const double f0d0 = std::exp(l0) * d0;
  if (std::fabs(c * log_ratio) < 1e-8) return f0d0 * log_ratio * (1.0 + 0.5 * c * log_ratio);
  return f0d0 * std::expm1(c * log_ratio) / c;
}

// Cells next to a finite end where the density rises toward the end are
// integrated as local power laws; the cubic rule overshoots there.
struct SingularCells {
  std::size_t lower = 0;
  std::size_t upper = 0;
};

inline SingularCells singular_cells(const Interval& domain, std::span<const double> x,
                                    std::span<const double> l) {
  constexpr std::size_t kCells = 16;
  constexpr double kMinRise = 0.05;
  SingularCells c;
  const std::size_t n = x.size();
  if (n < 4 * kCells) return c;
  auto rises = [&](std::size_t edge, std::size_t next, double end) {
    if (l[edge] == -kInfinity || l[next] == -kInfinity) return false;
    const double slope = (l[edge] - l[next]) / (std::log(std::fabs(x[next] - end)) - std::log(std::fabs(x[edge] - end)));
    return l[edge] - l[next] > kMinRise && slope > 0.0;
  };
  if (domain.lo_finite() && x.front() > domain.lo && rises(0, 1, domain.lo)) c.lower = kCells;
  if (domain.hi_finite() && x.back() < domain.hi && rises(n - 1, n - 2, domain.hi)) c.upper = kCells;
  return c;
}

inline double tail_origin(const Interval& domain, std::span<const double> x) {
  if (domain.lo_finite()) return domain.lo;
  if (domain.hi_finite()) return domain.hi;
  return 0.5 * (x.front() + x.back());
}

}  // namespace detail

/// Log density as a function: the closed form when present, otherwise linear
/// interpolation of the log values, -inf outside the node range.
inline LogFunction interpolated_log_function(const GridDensity& density) {
  if (density.has_log_function()) return *density.log_function();
  std::vector<double> nodes(density.nodes().begin(), density.nodes().end());
  std::vector<double> values(density.log_values().begin(), density.log_values().end());
  return [nodes = std::move(nodes), values = std::move(values)](double t) {
    if (!(t >= nodes.front()) || !(t <= nodes.back())) return -kInfinity;
    auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
    if (it == nodes.end()) return values.back();
    const std::size_t j = std::size_t(it - nodes.begin());
    const double w = (t - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
    if (values[j - 1] == -kInfinity || values[j] == -kInfinity) {
      return w == 0.0 ? values[j - 1] : -kInfinity;
    }
    return values[j - 1] + w * (values[j] - values[j - 1]);
  };
}

/// Piecewise-cubic integral of raw node values over [x_0, x_{n-1}]. Exact for
/// cubic polynomials on any grid.
inline double integrate_nodes(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 4 || x.size() != y.size()) throw InputError("integrate: malformed grid");
  detail::CompensatedSum sum;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) sum.add(detail::cubic_cell_integral(x, y, i));
  return sum.value();
}

/// Integral of a tabulated density: piecewise-cubic rule over the nodes plus
/// power-law extrapolation between the outer nodes and the domain ends.
inline QuadratureResult integrate_tabulated(const Interval& domain, std::span<const double> x,
                                            std::span<const double> log_values) {
  const std::size_t n = x.size();
  if (n < 4 || n != log_values.size()) throw InputError("integrate: malformed grid");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = detail::exp_or_zero(log_values[i]);
  for (double v : y) {
    if (!std::isfinite(v)) throw NumericalError("integrate: exp(log value) overflows");
  }
  const auto singular = detail::singular_cells(domain, x, log_values);
  detail::CompensatedSum sum;
  double magnitude = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double c;
    if (i < singular.lower) {
      c = detail::power_cell_integral(x[i], log_values[i], x[i + 1], log_values[i + 1], domain.lo);
    } else if (i + 1 + singular.upper >= n) {
      c = detail::power_cell_integral(x[i], log_values[i], x[i + 1], log_values[i + 1], domain.hi);
    } else {
      c = detail::cubic_cell_integral(x, y, i, singular.lower, n - 1 - singular.upper);
    }
    sum.add(c);
    magnitude += std::fabs(c);
  }
  QuadratureResult out;
  const double origin = detail::tail_origin(domain, x);
  if (x.front() > domain.lo) {
    const bool toward = domain.lo_finite();
    const auto t = detail::power_tail(x[0], log_values[0], x[1], log_values[1],
                                      toward ? domain.lo : origin, toward);
    if (t.diverged) {
      out.diverged = true;
      out.value = kInfinity;
      out.abs_error_estimate = kInfinity;
      out.diagnostic = "lower " + std::string(toward ? "endpoint" : "tail") +
                       ": power-law extrapolation with exponent " + format_double(t.exponent) +
                       " is not integrable";
      return out;
    }
    sum.add(t.mass);
    magnitude += t.mass;
  }
  if (x.back() < domain.hi) {
    const bool toward = domain.hi_finite();
    const auto t = detail::power_tail(x[n - 1], log_values[n - 1], x[n - 2], log_values[n - 2],
                                      toward ? domain.hi : origin, toward);
    if (t.diverged) {
      out.diverged = true;
      out.value = kInfinity;
      out.abs_error_estimate = kInfinity;
      out.diagnostic = "upper " + std::string(toward ? "endpoint" : "tail") +
                       ": power-law extrapolation with exponent " + format_double(t.exponent) +
                       " is not integrable";
      return out;
    }
    sum.add(t.mass);
    magnitude += t.mass;
  }
  out.value = sum.value();
  out.abs_error_estimate = 4.0 * double(n) * std::numeric_limits<double>::epsilon() * magnitude;
  out.converged = true;
  out.settled = true;
  return out;
}

/// Integral of exp(log density) over the density's domain.
inline QuadratureResult integrate(const GridDensity& density, double tolerance = 1e-10) {
  if (!(tolerance > 0.0)) throw InputError("integrate: tolerance must be positive");
  if (density.has_log_function()) {
    const auto& fn = *density.log_function();
    return integrate_log_function(fn, density.domain(), tolerance, density.hints());
  }
  return integrate_tabulated(density.domain(), density.nodes(), density.log_values());
}

/// Shifts log values by -ln(integral). Already-normalized input is returned
/// unchanged.
inline GridDensity normalize(const GridDensity& density, double tolerance = 1e-12) {
  if (density.normalized()) return density;
  const auto mass = integrate(density, tolerance);
  if (mass.diverged) {
    throw ImproperDensity("normalize: integral diverges (" + mass.diagnostic + ")");
  }
  if (!mass.converged) {
    throw NumericalError("normalize: integral did not converge (" + mass.diagnostic + ")");
  }
  if (!(mass.value > 0.0) || !std::isfinite(mass.value)) {
    throw NumericalError("normalize: integral is not finite and positive");
  }
  return density.shifted(-std::log(mass.value), true);
}

/// Cumulative distribution of a normalized density. Cell masses come from
/// the closed form when available and from the trapezoid rule otherwise, with
/// power-law cells next to singular ends.
class CdfTable {
 public:
  explicit CdfTable(const GridDensity& density, double tolerance = 1e-10)
      : density_(density), tolerance_(tolerance) {
    if (!density.normalized()) throw InputError("cdf/quantile: density must be normalized");
    const auto x = density.nodes();
    const auto l = density.log_values();
    const std::size_t n = x.size();
    const auto& dom = density.domain();
    cum_.assign(n, 0.0);
    if (density.has_log_function()) {
      const auto& fn = *density.log_function();
      auto f = [&fn](double t) { return detail::exp_or_zero(fn(t)); };
      lower_ = x.front() > dom.lo ? region_mass(dom.lo, x.front()) : 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::array<double, 2> pts{x[i], x[i + 1]};
        cum_[i + 1] = cum_[i] + adaptive_gauss_kronrod(f, pts, tolerance, 0.0, 200).value;
      }
      upper_ = x.back() < dom.hi ? region_mass(x.back(), dom.hi) : 0.0;
    } else {
      const auto singular = detail::singular_cells(dom, x, l);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        double piece;
        if (i < singular.lower) {
          piece = detail::power_cell_integral(x[i], l[i], x[i + 1], l[i + 1], dom.lo);
        } else if (i + 1 + singular.upper >= n) {
          piece = detail::power_cell_integral(x[i], l[i], x[i + 1], l[i + 1], dom.hi);
        } else {
          piece = 0.5 * (x[i + 1] - x[i]) * (detail::exp_or_zero(l[i]) + detail::exp_or_zero(l[i + 1]));
        }
        cum_[i + 1] = cum_[i] + piece;
      }
      const double origin = detail::tail_origin(dom, x);
      if (x.front() > dom.lo) {
        lower_tail_ = detail::power_tail(x[0], l[0], x[1], l[1],
                                         dom.lo_finite() ? dom.lo : origin, dom.lo_finite());
        lower_ = lower_tail_.mass;
      }
      if (x.back() < dom.hi) {
        upper_tail_ = detail::power_tail(x[n - 1], l[n - 1], x[n - 2], l[n - 2],
                                         dom.hi_finite() ? dom.hi : origin, dom.hi_finite());
        upper_ = upper_tail_.mass;
      }
    }
    total_ = lower_ + cum_.back() + upper_;
    if (!std::isfinite(total_) || !(total_ > 0.0)) {
      throw NumericalError("cdf: total mass is not finite and positive");
    }
  }

  double total_mass() const { return total_; }

  double cdf(double t) const {
    const auto x = density_.nodes();
    const auto& dom = density_.domain();
    if (t <= dom.lo) return 0.0;
    if (t >= dom.hi) return 1.0;
    if (t < x.front()) return lower_mass_below(t) / total_;
    if (t >= x.back()) return 1.0 - upper_mass_above(t) / total_;
    const std::size_t i = cell_of(t);
    if (density_.has_log_function()) return (lower_ + cum_[i] + partial_cell(i, t)) / total_;
    const double w = (t - x[i]) / (x[i + 1] - x[i]);
    return (lower_ + cum_[i] + w * (cum_[i + 1] - cum_[i])) / total_;
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0, 1)");
    const auto x = density_.nodes();
    const double target = p * total_;
    if (target < lower_) return solve_lower(target);
    const double inner = target - lower_;
    if (inner > cum_.back()) return solve_upper(total_ - target);
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), inner);
    std::size_t i = it == cum_.begin() ? 0 : std::size_t(it - cum_.begin()) - 1;
    i = std::min(i, x.size() - 2);
    const double cell = cum_[i + 1] - cum_[i];
    const double w = cell > 0.0 ? (inner - cum_[i]) / cell : 0.0;
    double t = x[i] + std::clamp(w, 0.0, 1.0) * (x[i + 1] - x[i]);
    if (density_.has_log_function() && cell > 0.0) t = refine_in_cell(i, inner - cum_[i], t);
    return t;
  }

 private:
  // Mass of the closed form over [x_i, t].
  double partial_cell(std::size_t i, double t) const {
    const auto x = density_.nodes();
    if (!(t > x[i])) return 0.0;
    const auto& fn = *density_.log_function();
    auto f = [&fn](double u) { return detail::exp_or_zero(fn(u)); };
    const std::array<double, 2> pts{x[i], std::min(t, x[i + 1])};
    return adaptive_gauss_kronrod(f, pts, tolerance_, 0.0, 200).value;
  }

  // Safeguarded Newton steps on the partial-cell mass, from the linear guess.
  double refine_in_cell(std::size_t i, double mass, double t) const {
    const auto x = density_.nodes();
    const auto& fn = *density_.log_function();
    double lo = x[i], hi = x[i + 1];
    for (int it = 0; it < 8; ++it) {
      const double g = partial_cell(i, t) - mass;
      if (g > 0.0) {
        hi = t;
      } else {
        lo = t;
      }
      if (std::fabs(g) <= tolerance_ * total_) break;
      const double f = detail::exp_or_zero(fn(t));
      double next = f > 0.0 ? t - g / f : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      t = next;
    }
    return t;
  }

  std::size_t cell_of(double t) const {
    const auto x = density_.nodes();
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    return std::min<std::size_t>(std::size_t(it - x.begin()) - 1, x.size() - 2);
  }

  double region_mass(double a, double b) const {
    const auto& fn = *density_.log_function();
    const auto r = integrate_log_function(fn, Interval{a, b}, tolerance_);
    if (r.diverged || !std::isfinite(r.value)) {
      throw NumericalError("cdf: tail mass diverges (" + r.diagnostic + ")");
    }
    return r.value;
  }

  double lower_mass_below(double t) const {
    const auto x = density_.nodes();
    const auto& dom = density_.domain();
    if (density_.has_log_function()) return region_mass(dom.lo, t);
    if (dom.lo_finite()) {
      const double d = (t - dom.lo) / (x.front() - dom.lo);
      return lower_ * std::pow(d, lower_tail_.exponent + 1.0);
    }
    const double origin = detail::tail_origin(dom, x);
    const double d = (origin - t) / (origin - x.front());
    return lower_ * std::pow(d, lower_tail_.exponent + 1.0);
  }

  double upper_mass_above(double t) const {
    const auto x = density_.nodes();
    const auto& dom = density_.domain();
    if (density_.has_log_function()) return region_mass(t, dom.hi);
    if (dom.hi_finite()) {
      const double d = (dom.hi - t) / (dom.hi - x.back());
      return upper_ * std::pow(d, upper_tail_.exponent + 1.0);
    }
    const double origin = detail::tail_origin(dom, x);
    const double d = (t - origin) / (x.back() - origin);
    return upper_ * std::pow(d, upper_tail_.exponent + 1.0);
  }

  // Bisection on the mass below t, inside (lo, x_0).
  double solve_lower(double target) const {
    const auto x = density_.nodes();
    const auto& dom = density_.domain();
    double hi = x.front();
    double lo;
    if (dom.lo_finite()) {
      lo = dom.lo;
    } else {
      double step = std::max(1.0, x.back() - x.front());
      lo = hi - step;
      while (lower_mass_below(lo) > target) {
        step *= 2.0;
        lo = hi - step;
        if (!std::isfinite(lo)) return -kInfinity;
      }
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (lower_mass_below(mid) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  // Bisection on the mass above t, inside (x_{n-1}, hi).
  double solve_upper(double target_above) const {
    const auto x = density_.nodes();
    const auto& dom = density_.domain();
    double lo = x.back();
    double hi;
    if (dom.hi_finite()) {
      hi = dom.hi;
    } else {
      double step = std::max(1.0, x.back() - x.front());
      hi = lo + step;
      while (upper_mass_above(hi) > target_above) {
        step *= 2.0;
        hi = lo + step;
        if (!std::isfinite(hi)) return kInfinity;
      }
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (upper_mass_above(mid) > target_above) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  GridDensity density_;
  double tolerance_;
  std::vector<double> cum_;
  double lower_ = 0.0;
  double upper_ = 0.0;
  double total_ = 0.0;
  detail::PowerTail lower_tail_;
  detail::PowerTail upper_tail_;
};

inline double cdf(const GridDensity& density, double x) { return CdfTable(density).cdf(x); }

inline double quantile(const GridDensity& density, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0, 1)");
  return CdfTable(density).quantile(p);
}

namespace detail {

// Brent's parabolic-interpolation search for a maximum of g on [a, b].
template <class G>
double brent_maximize(G&& g, double a, double b, double x) {
  constexpr double golden = 0.3819660112501051;
  const double eps = 1e-14;
  double w = x, v = x;
  double fx = -g(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double xm = 0.5 * (a + b);
    const double tol1 = eps * std::fabs(x) + 1e-300;
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden_step = true;
    if (std::fabs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double etemp = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = x >= xm ? a - x : b - x;
      d = golden * e;
    }
    const double u = std::fabs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = -g(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

}  // namespace detail

/// Location of the maximum of the density. A maximum at the first or last
/// node is reported as the corresponding finite domain end; interior maxima
/// are refined by quadratic interpolation through the neighbouring nodes and,
/// when the closed form is available, by Brent's parabolic search.
inline double mode(const GridDensity& density) {
  const auto x = density.nodes();
  const auto l = density.log_values();
  std::size_t best = l.size();
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i] == -kInfinity) continue;
    if (best == l.size() || l[i] > l[best]) best = i;
  }
  if (best == l.size()) throw InputError("mode: density vanishes on every node");
  const auto& dom = density.domain();
  if (best == 0) return dom.lo_finite() ? dom.lo : x.front();
  if (best == l.size() - 1) return dom.hi_finite() ? dom.hi : x.back();

  const double x0 = x[best - 1], x1 = x[best], x2 = x[best + 1];
  const double y0 = l[best - 1], y1 = l[best], y2 = l[best + 1];
  double vertex = x1;
  if (std::isfinite(y0) && std::isfinite(y2)) {
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if (den != 0.0) vertex = std::clamp(x1 - 0.5 * num / den, x0, x2);
  }
  if (!density.has_log_function()) return vertex;
  const auto& fn = *density.log_function();
  return detail::brent_maximize(fn, x0, x2, vertex);
}

/// Writes the two-column CSV form with its `# domain=lo,hi normalized=0|1`
/// header; `extra` is appended to the header line.
inline void write_grid_density(std::ostream& out, const GridDensity& density,
                               std::string_view extra = {}) {
  out << "# domain=" << format_double(density.domain().lo) << ','
      << format_double(density.domain().hi) << " normalized=" << (density.normalized() ? 1 : 0);
  if (!extra.empty()) out << ' ' << extra;
  out << '\n';
  const auto x = density.nodes();
  const auto l = density.log_values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << format_double(x[i]) << ',' << format_double(l[i]) << '\n';
  }
}

/// Reads the CSV form. Unknown header keys are ignored; the result carries no
/// closed form.
inline GridDensity read_grid_density(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind('#', 0) != 0) {
    throw InputError("grid file: missing '# domain=<lo>,<hi> normalized=<0|1>' header");
  }
  std::optional<Interval> domain;
  std::optional<bool> normalized;
  std::istringstream header(line.substr(1));
  std::string token;
  while (header >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (key == "domain") {
      const auto comma = value.find(',');
      if (comma == std::string::npos) throw InputError("grid file: domain needs lo,hi");
      domain = Interval{parse_double(std::string_view(value).substr(0, comma)),
                        parse_double(std::string_view(value).substr(comma + 1))};
    } else if (key == "normalized") {
      if (value != "0" && value != "1") throw InputError("grid file: normalized must be 0 or 1");
      normalized = value == "1";
    }
  }
  if (!domain || !normalized) throw InputError("grid file: header lacks domain or normalized");
  std::vector<double> nodes;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError("grid file: expected two columns");
    const double xv = parse_double(std::string_view(line).substr(0, comma));
    const double lv = parse_double(std::string_view(line).substr(comma + 1));
    if (!nodes.empty() && !(nodes.back() < xv)) {
      throw InputError("grid file: abscissae must be strictly increasing");
    }
    nodes.push_back(xv);
    values.push_back(lv);
  }
  return GridDensity(*domain, std::move(nodes), std::move(values), *normalized);
}

}  // namespace prior_forge
