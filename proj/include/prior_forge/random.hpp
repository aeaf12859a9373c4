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
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "prior_forge/error.hpp"

namespace prior_forge {

/// Identifies a reproducible random stream. Equal (master_seed, stream_index)
/// pairs give bit-identical sequences; distinct indices give independent ones.
struct RandomStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  /// A stream derived from this one, for per-item parallel work.
  RandomStream child(std::uint64_t k) const {
    return RandomStream{master_seed, mix(stream_index * 0x9E3779B97F4A7C15ULL + k + 1)};
  }

  std::mt19937_64 engine() const {
    std::seed_seq seq{std::uint32_t(master_seed), std::uint32_t(master_seed >> 32),
                      std::uint32_t(stream_index), std::uint32_t(stream_index >> 32),
                      std::uint32_t(0x70726966)};
    return std::mt19937_64(seq);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

/// Row-major block of samples: `rows` draws of `cols` coordinates.
struct SampleMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// The variate generators behind the sampling operations. Written out rather
/// than taken from <random> so sequences do not depend on the standard
/// library's distribution implementations.
class Sampler {
 public:
  explicit Sampler(const RandomStream& stream) : engine_(stream.engine()) {}

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() { return (double(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  /// ln of a Gamma(shape, 1) variate (Marsaglia-Tsang, with the
  /// U^(1/shape) boost below shape 1 kept in log space).
  double log_standard_gamma(double shape) {
    if (shape < 1.0) {
      return log_standard_gamma(shape + 1.0) + std::log(uniform()) / shape;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * (x * x) * (x * x) ||
          std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return std::log(d * v);
      }
    }
  }

  /// Gamma(shape, scale) variate, shape-scale convention (mean shape*scale).
  double gamma(double shape, double scale) { return scale * std::exp(log_standard_gamma(shape)); }

  /// Beta(a, b) variate as a gamma ratio.
  double beta(double a, double b) {
    const double la = log_standard_gamma(a);
    const double lb = log_standard_gamma(b);
    const double m = std::max(la, lb);
    const double ea = std::exp(la - m);
    const double eb = std::exp(lb - m);
    return ea / (ea + eb);
  }

  /// Dirichlet(alphas) draw written into `out`; normalizes in log space so
  /// small concentrations cannot underflow the sum.
  void dirichlet(std::span<const double> alphas, std::span<double> out) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < alphas.size(); ++j) {
      out[j] = log_standard_gamma(alphas[j]);
      m = std::max(m, out[j]);
    }
    normalize_log_weights(out, m);
  }

  /// exp(out - max) / sum, in place.
  static void normalize_log_weights(std::span<double> out, double max_log) {
    double sum = 0.0;
    for (double& v : out) {
      v = std::exp(v - max_log);
      sum += v;
    }
    for (double& v : out) v /= sum;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {

inline void require_positive_parameter(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace detail

/// `count` independent Gamma(shape, scale) draws.
inline std::vector<double> sample_gamma(double shape, double scale, std::size_t count,
                                        const RandomStream& stream) {
  detail::require_positive_parameter(shape, "sample_gamma: shape");
  detail::require_positive_parameter(scale, "sample_gamma: scale");
  if (count == 0) throw DomainError("sample_gamma: count must be positive");
  Sampler s(stream);
  std::vector<double> out(count);
  for (double& v : out) v = s.gamma(shape, scale);
  return out;
}

/// `count` independent Beta(a, b) draws.
inline std::vector<double> sample_beta(double a, double b, std::size_t count,
                                       const RandomStream& stream) {
  detail::require_positive_parameter(a, "sample_beta: a");
  detail::require_positive_parameter(b, "sample_beta: b");
  if (count == 0) throw DomainError("sample_beta: count must be positive");
  Sampler s(stream);
  std::vector<double> out(count);
  for (double& v : out) v = s.beta(a, b);
  return out;
}

/// `count` Dirichlet(alphas) probability vectors built by gamma normalization.
inline SampleMatrix sample_dirichlet(std::span<const double> alphas, std::size_t count,
                                     const RandomStream& stream) {
  if (alphas.size() < 2) throw DomainError("sample_dirichlet: need at least two concentrations");
  for (double a : alphas) detail::require_positive_parameter(a, "sample_dirichlet: alpha");
  if (count == 0) throw DomainError("sample_dirichlet: count must be positive");
  Sampler s(stream);
  SampleMatrix out{count, alphas.size(), std::vector<double>(count * alphas.size())};
  for (std::size_t i = 0; i < count; ++i) s.dirichlet(alphas, out.row(i));
  return out;
}

}  // namespace prior_forge
