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
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "prior_forge/error.hpp"

namespace prior_forge {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A one-dimensional integration domain; either end may be infinite.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  bool lo_finite() const { return std::isfinite(lo); }
  bool hi_finite() const { return std::isfinite(hi); }
  bool bounded() const { return lo_finite() && hi_finite(); }
  bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }
  bool operator==(const Interval&) const = default;
};

/// Outcome of an integration. `converged` and `diverged` are never both set;
/// both clear means the integrator could not decide.
struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  bool converged = false;
  bool settled = false;  // no divergence and every end resolved, accuracy aside
  bool diverged = false;
  std::string diagnostic;
};

/// Where the integrand's mass lives. The bulk is integrated directly; the
/// regions between the bulk and each end of the domain are probed for
/// divergence and integrated separately.
struct QuadratureHints {
  double bulk_lo = std::numeric_limits<double>::quiet_NaN();
  double bulk_hi = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> breakpoints;  // optional, inside [bulk_lo, bulk_hi]
  double abs_floor = 0.0;           // error estimates below this count as converged
};

/// Tuning constants of the divergence policy.
struct DivergencePolicy {
  double growth_factor = 10.0;      // a probe "grows" the integral by > growth_factor * tol
  int growth_streak = 3;            // consecutive growing probes that declare divergence
  double stall_ratio = 0.99;        // successive probes shrinking slower than this do not shrink
  int max_probes = 1100;
  int endpoint_floor_exponent = 40; // probes stop at offsets below 2^-40 * |endpoint|
};

namespace detail {

struct GkPanel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
  bool finite = true;
};

// 7-point Gauss / 15-point Kronrod pair with the QUADPACK error heuristic.
template <class F>
GkPanel gauss_kronrod_15(F& f, double a, double b) {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.0};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<double, 7> f1{};
  std::array<double, 7> f2{};
  const double fc = f(center);
  double resg = fc * wg[3];
  double resk = fc * wgk[7];
  double resabs = std::fabs(resk);
  bool finite = std::isfinite(fc);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    finite = finite && std::isfinite(f1[j]) && std::isfinite(f2[j]);
    const double sum = f1[j] + f2[j];
    resk += wgk[j] * sum;
    resabs += wgk[j] * (std::fabs(f1[j]) + std::fabs(f2[j]));
    if (j % 2 == 1) resg += wg[j / 2] * sum;
  }
  const double reskh = 0.5 * resk;
  double resasc = wgk[7] * std::fabs(fc - reskh);
  for (int j = 0; j < 7; ++j) {
    resasc += wgk[j] * (std::fabs(f1[j] - reskh) + std::fabs(f2[j] - reskh));
  }
  const double scale = std::fabs(half);
  resasc *= scale;
  resabs *= scale;
  double err = std::fabs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(50.0 * eps * resabs, err);
  }
  return GkPanel{a, b, resk * half, err, finite};
}

// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature over the panels delimited by
/// `points` (sorted, finite, at least two). Stops when the summed error
/// estimate drops below max(rel_tol * |I|, abs_tol).
template <class F>
QuadratureResult adaptive_gauss_kronrod(F&& f, std::span<const double> points, double rel_tol,
                                        double abs_tol = 0.0, std::size_t max_panels = 4000) {
  if (points.size() < 2) throw InputError("adaptive_gauss_kronrod: need at least two points");
  auto by_error = [](const detail::GkPanel& x, const detail::GkPanel& y) {
    return x.error < y.error;
  };
  std::vector<detail::GkPanel> heap;
  heap.reserve(std::max(max_panels, points.size()) + 2);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i] < points[i + 1])) {
      if (points[i] == points[i + 1]) continue;
      throw InputError("adaptive_gauss_kronrod: breakpoints must be increasing");
    }
    heap.push_back(detail::gauss_kronrod_15(f, points[i], points[i + 1]));
  }
  std::make_heap(heap.begin(), heap.end(), by_error);

  auto totals = [&heap] {
    detail::CompensatedSum value;
    double error = 0.0;
    bool finite = true;
    for (const auto& p : heap) {
      value.add(p.value);
      error += p.error;
      finite = finite && p.finite;
    }
    return std::tuple{value.value(), error, finite};
  };

  QuadratureResult out;
  auto [value, error, finite] = totals();
  std::size_t since_refresh = 0;
  while (finite) {
    if (error <= std::max(rel_tol * std::fabs(value), abs_tol)) {
      std::tie(value, error, finite) = totals();
      since_refresh = 0;
      if (error <= std::max(rel_tol * std::fabs(value), abs_tol)) {
        out.converged = true;
        break;
      }
    }
    if (heap.size() >= max_panels) {
      out.diagnostic = "panel budget exhausted";
      break;
    }
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const detail::GkPanel worst = heap.back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      std::push_heap(heap.begin(), heap.end(), by_error);
      out.diagnostic = "panel too narrow to split";
      break;
    }
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    heap.back() = left;
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    value += (left.value + right.value) - worst.value;
    error += (left.error + right.error) - worst.error;
    finite = finite && left.finite && right.finite;
    if (++since_refresh == 64) {
      std::tie(value, error, finite) = totals();
      since_refresh = 0;
    }
  }
  std::tie(value, error, finite) = totals();
  if (!finite) out.diagnostic = "non-finite integrand value";
  out.value = value;
  out.abs_error_estimate = error;
  return out;
}

namespace detail {

struct EndResult {
  double value = 0.0;
  double error = 0.0;
  bool settled = false;
  bool diverged = false;
  std::string diagnostic;
};

struct ProbeTracker {
  double tol;
  const DivergencePolicy& policy;
  int streak = 0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> ratios;

  // Returns the ratio |p_k| / |p_{k-1}| (NaN for the first probe) and updates
  // the growth streak.
  double observe(double piece, double running_total) {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (!std::isnan(prev)) {
      if (!std::isfinite(piece)) {
        ratio = kInfinity;
      } else if (!std::isfinite(prev)) {
        ratio = 0.0;
      } else if (prev == 0.0) {
        ratio = piece == 0.0 ? 0.0 : kInfinity;
      } else {
        ratio = std::fabs(piece) / std::fabs(prev);
      }
      ratios.push_back(ratio);
    }
    const bool grows = !std::isfinite(piece) || !std::isfinite(running_total) ||
                       std::fabs(piece) > policy.growth_factor * tol * std::fabs(running_total);
    if (!std::isnan(ratio) && grows && ratio >= policy.stall_ratio) {
      ++streak;
    } else if (!std::isnan(ratio)) {
      streak = 0;
    }
    prev = std::isnan(piece) ? kInfinity : piece;
    return ratio;
  }
  bool diverged() const { return streak >= policy.growth_streak; }
};

// Integrates the gap between a finite endpoint and the bulk edge by halving
// the offset from the endpoint and extrapolating the power-law remainder.
template <class F>
EndResult probe_finite_end(F& f, double endpoint, double gap, int direction, double tol,
                           double running_total, const DivergencePolicy& policy) {
  EndResult out;
  auto at = [&](double offset) { return endpoint + direction * offset; };
  auto piece_between = [&](double near_offset, double far_offset) {
    const double x0 = at(std::min(near_offset, far_offset));
    const double x1 = at(std::max(near_offset, far_offset));
    const double a = std::min(x0, x1);
    const double b = std::max(x0, x1);
    const std::array<double, 2> pts{a, b};
    return adaptive_gauss_kronrod(f, pts, tol, 0.01 * tol * std::fabs(running_total), 64);
  };

  double offset = std::ldexp(1.0, std::ilogb(gap));
  CompensatedSum total;
  if (offset < gap) {
    const auto chunk = piece_between(offset, gap);
    total.add(chunk.value);
    out.error += chunk.abs_error_estimate;
    running_total += chunk.value;
  }
  const double floor_offset =
      endpoint == 0.0 ? 1e-290 : std::ldexp(std::fabs(endpoint), -policy.endpoint_floor_exponent);

  ProbeTracker tracker{tol, policy, 0, std::numeric_limits<double>::quiet_NaN(), {}};
  std::vector<double> pieces;
  for (int k = 0; k < policy.max_probes; ++k) {
    const double inner = 0.5 * offset;
    const auto piece = piece_between(inner, offset);
    pieces.push_back(piece.value);
    out.error += piece.abs_error_estimate;
    total.add(piece.value);
    running_total += piece.value;
    const double ratio = tracker.observe(piece.value, running_total);
    offset = inner;
    if (tracker.diverged() || !std::isfinite(piece.value)) {
      if (tracker.diverged()) {
        out.diverged = true;
        out.diagnostic = "integral grows without bound as the offset from the endpoint halves";
        out.value = (std::isnan(piece.value) ? kInfinity : std::copysign(kInfinity, piece.value));
        return out;
      }
      continue;
    }
    if (pieces.size() >= 2 && piece.value == 0.0 && pieces[pieces.size() - 2] == 0.0) {
      out.settled = true;
      break;
    }
    if (std::isnan(ratio)) continue;
    const bool at_floor = offset < floor_offset;
    if (ratio < policy.stall_ratio && pieces.size() >= 3) {
      // Power-law fit over the last few probes.
      const std::size_t span = std::min<std::size_t>(pieces.size(), 4);
      const double first = pieces[pieces.size() - span];
      const double fitted =
          first != 0.0 ? std::pow(std::fabs(piece.value / first), 1.0 / double(span - 1)) : ratio;
      const double rho = std::min(fitted, policy.stall_ratio);
      const double remainder = piece.value * rho / (1.0 - rho);
      const double remainder_error = std::fabs(remainder) * std::fabs(ratio - rho) / (1.0 - rho);
      if (std::fabs(remainder) <= 0.1 * tol * std::fabs(running_total) || at_floor) {
        total.add(remainder);
        out.error += remainder_error;
        out.settled = true;
        break;
      }
    } else if (at_floor) {
      out.diagnostic = "endpoint probes reached working precision without settling";
      break;
    }
  }
  out.value = total.value();
  if (!out.settled && out.diagnostic.empty()) out.diagnostic = "endpoint probe budget exhausted";
  return out;
}

// Probes an infinite tail by doubling the truncation radius. Only the
// verdict is used; the tail value comes from the compactified integral.
template <class F>
EndResult probe_infinite_end(F& f, double origin, double radius, int direction, double tol,
                             double running_total, const DivergencePolicy& policy) {
  EndResult out;
  ProbeTracker tracker{tol, policy, 0, std::numeric_limits<double>::quiet_NaN(), {}};
  int stable = 0;
  double last_ratio = std::numeric_limits<double>::quiet_NaN();
  double prev_piece = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k < policy.max_probes; ++k) {
    const double r0 = radius;
    const double r1 = 2.0 * radius;
    if (!std::isfinite(origin + direction * r1)) {
      out.diagnostic = "tail probes exceeded the floating-point range";
      return out;
    }
    const double x0 = origin + direction * r0;
    const double x1 = origin + direction * r1;
    const std::array<double, 2> pts{std::min(x0, x1), std::max(x0, x1)};
    const auto piece =
        adaptive_gauss_kronrod(f, pts, tol, 0.01 * tol * std::fabs(running_total), 64);
    running_total += piece.value;
    const double ratio = tracker.observe(piece.value, running_total);
    radius = r1;
    if (tracker.diverged()) {
      out.diverged = true;
      out.diagnostic = "integral grows without bound as the truncation radius doubles";
      out.value = (std::isnan(piece.value) ? kInfinity : std::copysign(kInfinity, piece.value));
      return out;
    }
    if (!std::isfinite(piece.value)) {
      prev_piece = piece.value;
      continue;
    }
    if (piece.value == 0.0 && prev_piece == 0.0) {
      out.settled = true;
      return out;
    }
    prev_piece = piece.value;
    if (std::isnan(ratio)) continue;
    if (ratio < policy.stall_ratio &&
        std::fabs(piece.value) <= 0.01 * tol * std::fabs(running_total)) {
      out.settled = true;
      return out;
    }
    if (!std::isnan(last_ratio) && std::fabs(ratio - last_ratio) < 1e-3 &&
        ratio <= policy.stall_ratio) {
      if (++stable >= 3) {
        out.settled = true;
        return out;
      }
    } else {
      stable = 0;
    }
    last_ratio = ratio;
  }
  out.diagnostic = "tail probe budget exhausted";
  return out;
}

// Integrates [edge, +/-inf) through edge + s * u / (1 - u), u = smoothstep(t).
template <class F>
QuadratureResult compactified_tail(F& f, double edge, double scale, int direction, double tol,
                                   double abs_tol) {
  auto g = [&](double t) {
    const double u = smoothstep(t);
    const double one_minus_u = smoothstep(1.0 - t);
    if (one_minus_u <= 0.0) return 0.0;
    const double x = edge + direction * scale * (u / one_minus_u);
    if (!std::isfinite(x)) return 0.0;
    const double jac = scale * 6.0 * t * (1.0 - t) / (one_minus_u * one_minus_u);
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    return fx * jac;
  };
  std::array<double, 9> pts{};
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = double(i) / 8.0;
  return adaptive_gauss_kronrod(g, pts, tol, abs_tol, 2000);
}

}  // namespace detail

/// Default bulk for a domain when the caller has no grid to offer.
inline QuadratureHints default_hints(const Interval& domain) {
  QuadratureHints h;
  const bool lo_f = domain.lo_finite();
  const bool hi_f = domain.hi_finite();
  if (lo_f && hi_f) {
    // Keep the bulk a few ulps clear of both ends even for tiny intervals.
    const double width = domain.hi - domain.lo;
    const double ulp_floor = std::ldexp(std::max(std::fabs(domain.lo), std::fabs(domain.hi)), -40);
    const double off = std::min(std::max(1e-10 * width, ulp_floor), 0.25 * width);
    h.bulk_lo = domain.lo + off;
    h.bulk_hi = domain.hi - off;
  } else if (lo_f) {
    const double scale = std::max(1.0, std::fabs(domain.lo));
    h.bulk_lo = domain.lo + 1e-10 * scale;
    h.bulk_hi = domain.lo + scale;
  } else if (hi_f) {
    const double scale = std::max(1.0, std::fabs(domain.hi));
    h.bulk_lo = domain.hi - scale;
    h.bulk_hi = domain.hi - 1e-10 * scale;
  } else {
    h.bulk_lo = -1.0;
    h.bulk_hi = 1.0;
  }
  return h;
}

/// Integrates f over `domain` to relative tolerance `tol`.
///
/// The bulk [bulk_lo, bulk_hi] is integrated by adaptive Gauss-Kronrod. An
/// infinite end is probed by doubling the truncation radius and, unless the
/// probes diverge, integrated after compactification through s/(1 - s). A
/// finite end separated from the bulk is integrated by halving the offset
/// from the endpoint with a power-law extrapolation of the remainder.
/// Divergence is declared after `growth_streak` consecutive probes that each
/// grow the integral by more than growth_factor * tol without shrinking.
template <class F>
QuadratureResult integrate_function(F&& f, const Interval& domain, double tol,
                                    QuadratureHints hints = {},
                                    const DivergencePolicy& policy = {}) {
  if (!(tol > 0.0)) throw InputError("integrate: tolerance must be positive");
  if (!(domain.lo < domain.hi)) throw InputError("integrate: empty domain");
  if (std::isnan(hints.bulk_lo) || std::isnan(hints.bulk_hi)) {
    const auto d = default_hints(domain);
    hints.bulk_lo = d.bulk_lo;
    hints.bulk_hi = d.bulk_hi;
  }
  if (!(hints.bulk_lo < hints.bulk_hi) || hints.bulk_lo < domain.lo || hints.bulk_hi > domain.hi ||
      !std::isfinite(hints.bulk_lo) || !std::isfinite(hints.bulk_hi)) {
    throw InputError("integrate: bulk must be a finite sub-interval of the domain");
  }

  std::vector<double> points{hints.bulk_lo};
  for (double b : hints.breakpoints) {
    if (b > points.back() && b < hints.bulk_hi) points.push_back(b);
  }
  points.push_back(hints.bulk_hi);

  QuadratureResult out;
  const auto bulk = adaptive_gauss_kronrod(f, points, tol, hints.abs_floor);
  if (!std::isfinite(bulk.value)) {
    throw NumericalError("integrate: integrand overflows inside [" + std::to_string(hints.bulk_lo) +
                         ", " + std::to_string(hints.bulk_hi) + "]");
  }
  detail::CompensatedSum total;
  total.add(bulk.value);
  double error = bulk.abs_error_estimate;
  bool settled = bulk.converged;
  std::string diagnostic = bulk.converged ? "" : "bulk: " + bulk.diagnostic;

  struct Side {
    const char* name;
    double end;
    double edge;
    int direction;
  };
  const std::array<Side, 2> sides{Side{"lower", domain.lo, hints.bulk_lo, -1},
                                  Side{"upper", domain.hi, hints.bulk_hi, +1}};
  for (const auto& side : sides) {
    if (std::isfinite(side.end)) {
      const double gap = std::fabs(side.edge - side.end);
      if (gap == 0.0) continue;
      const auto end = detail::probe_finite_end(f, side.end, gap, -side.direction, tol,
                                                total.value(), policy);
      if (end.diverged) {
        out.value = end.value;
        out.diverged = true;
        out.abs_error_estimate = kInfinity;
        out.diagnostic = std::string(side.name) + " endpoint: " + end.diagnostic;
        return out;
      }
      total.add(end.value);
      error += end.error;
      if (!end.settled) {
        settled = false;
        diagnostic += std::string(diagnostic.empty() ? "" : "; ") + side.name +
                      " endpoint: " + end.diagnostic;
      }
    } else {
      double origin;
      if (std::isfinite(domain.lo) || std::isfinite(domain.hi)) {
        origin = std::isfinite(domain.lo) ? domain.lo : domain.hi;
      } else {
        origin = 0.5 * (hints.bulk_lo + hints.bulk_hi);
      }
      const double radius = std::fabs(side.edge - origin);
      if (!(radius > 0.0)) throw InputError("integrate: degenerate bulk");
      const auto probe = detail::probe_infinite_end(f, origin, radius, side.direction, tol,
                                                    total.value(), policy);
      if (probe.diverged) {
        out.value = probe.value;
        out.diverged = true;
        out.abs_error_estimate = kInfinity;
        out.diagnostic = std::string(side.name) + " tail: " + probe.diagnostic;
        return out;
      }
      const auto tail = detail::compactified_tail(f, side.edge, radius, side.direction, tol,
                                                  std::max(0.1 * tol * std::fabs(total.value()), hints.abs_floor));
      if (!std::isfinite(tail.value)) {
        throw NumericalError(std::string("integrate: non-finite ") + side.name + " tail");
      }
      total.add(tail.value);
      error += tail.abs_error_estimate;
      if (!probe.settled || !tail.converged) {
        settled = false;
        diagnostic += std::string(diagnostic.empty() ? "" : "; ") + side.name + " tail: " +
                      (probe.settled ? tail.diagnostic : probe.diagnostic);
      }
    }
  }
  out.value = total.value();
  out.abs_error_estimate = error;
  out.settled = settled;
  out.converged = settled && error <= std::max(tol * std::fabs(out.value), hints.abs_floor);
  if (settled && !out.converged) diagnostic = "error estimate exceeds the requested tolerance";
  out.diagnostic = diagnostic;
  return out;
}

/// Integrates exp(log_f) with the conventions exp(-inf) = 0.
template <class LogF>
QuadratureResult integrate_log_function(LogF&& log_f, const Interval& domain, double tol,
                                        QuadratureHints hints = {},
                                        const DivergencePolicy& policy = {}) {
  auto f = [&log_f](double x) {
    const double lv = log_f(x);
    if (lv == -kInfinity) return 0.0;
    return std::exp(lv);
  };
  return integrate_function(f, domain, tol, std::move(hints), policy);
}

}  // namespace prior_forge
