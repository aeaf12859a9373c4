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

// Command-line surface. Needs CLI11.hpp and json.hpp on the include path.

#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prior_forge/error.hpp"
#include "prior_forge/families.hpp"
#include "prior_forge/format.hpp"
#include "prior_forge/grid_density.hpp"
#include "prior_forge/pooling.hpp"
#include "prior_forge/propriety.hpp"
#include "prior_forge/reparam.hpp"
#include "prior_forge/sparse_multinomial.hpp"
#include "prior_forge/table.hpp"

namespace prior_forge::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kInvalidInput = 1, kNumericalFailure = 2 };

struct GlobalOptions {
  std::uint64_t seed = 42;
  double tol = 1e-10;
  std::string out;
  std::string format = "auto";  // csv for tables and grids, json for reports
};

/// Ordered key=value record of the effective configuration.
class ConfigEcho {
 public:
  void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
  void add(std::string key, double value) { add(std::move(key), format_double(value)); }
  template <std::integral T>
  void add(std::string key, T value) {
    add(std::move(key), std::to_string(value));
  }

  /// Space-separated key=value tokens; whitespace, '%' and ',' in values are
  /// percent-encoded so the line stays tokenizable.
  std::string tokens() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
      if (!out.empty()) out += ' ';
      out += k + '=' + encode(v);
    }
    return out;
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : entries_) j[k] = v;
    return j;
  }

 private:
  static std::string encode(const std::string& v) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : v) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '%' || c == ',') {
        out += '%';
        out += hex[c >> 4];
        out += hex[c & 15];
      } else {
        out += char(c);
      }
    }
    return out;
  }

  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Finite doubles as JSON numbers, non-finite ones as "inf"/"-inf"/"nan".
inline json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

inline json number(const std::optional<double>& x) { return x ? number(*x) : json(nullptr); }

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw InputError(std::string(what) + ": empty list element");
    try {
      out.push_back(parse_double(std::string_view(item).substr(b, e - b + 1)));
    } catch (const Error&) {
      throw InputError(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw InputError(std::string(what) + ": empty list");
  return out;
}

inline std::vector<long long> parse_counts(const std::string& text, const char* what) {
  std::vector<long long> out;
  for (double v : parse_list(text, what)) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) {
      throw InputError(std::string(what) + ": counts must be non-negative integers");
    }
    out.push_back(static_cast<long long>(v));
  }
  return out;
}

inline void expect_arity(const std::vector<double>& p, std::size_t n, const std::string& spec) {
  if (p.size() != n) {
    throw InputError("prior '" + spec + "': expected " + std::to_string(n) + " parameter(s)");
  }
}

inline GridDensity read_grid_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open grid file '" + path.string() + "'");
  return read_grid_density(f);
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace detail

/// Prior spec strings: flat, tilt:b, beta:a,b, gamma:k,s, normal:m,sd,
/// grid:path. flat and tilt live on `domain`.
inline GridDensity parse_prior(const std::string& spec, const Interval& domain) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "flat") {
    if (!rest.empty()) throw InputError("prior 'flat' takes no parameters");
    return family::flat(domain);
  }
  if (kind == "grid") {
    if (rest.empty()) throw InputError("prior 'grid' needs a path");
    return detail::read_grid_file(rest);
  }
  const auto p = rest.empty() ? std::vector<double>{} : detail::parse_list(rest, "prior parameters");
  if (kind == "tilt") {
    detail::expect_arity(p, 1, spec);
    return family::exponential_tilt(p[0], domain);
  }
  if (kind == "beta") {
    detail::expect_arity(p, 2, spec);
    if (!(p[0] > 0.0) || !(p[1] > 0.0)) throw InputError("prior 'beta' needs positive a, b");
    return family::beta(p[0], p[1]);
  }
  if (kind == "gamma") {
    detail::expect_arity(p, 2, spec);
    if (!(p[0] > 0.0) || !(p[1] > 0.0)) throw InputError("prior 'gamma' needs positive shape, scale");
    return family::gamma(p[0], p[1]);
  }
  if (kind == "normal") {
    detail::expect_arity(p, 2, spec);
    if (!(p[1] > 0.0)) throw InputError("prior 'normal' needs sd > 0");
    return family::normal(p[0], p[1]);
  }
  throw InputError("unknown prior '" + spec + "' (expected flat, tilt:b, beta:a,b, gamma:k,s, "
                   "normal:m,sd, grid:path)");
}

/// Pool spec: {"components": [{"family": ..., "params": [...]}, ...],
/// "weights": [...]}. Families: beta, gamma, normal, grid-file (with "path",
/// relative to the spec file), flat and tilt (with "domain": [lo, hi]).
inline PoolProblem load_pool_spec(const std::filesystem::path& path) {
  const json spec = detail::parse_json_file(path);
  if (!spec.is_object() || !spec.contains("components") || !spec["components"].is_array()) {
    throw InputError("pool spec: missing 'components' array");
  }
  if (!spec.contains("weights") || !spec["weights"].is_array()) {
    throw InputError("pool spec: missing 'weights' array");
  }
  try {
    std::vector<GridDensity> comps;
    for (const auto& c : spec["components"]) {
      const auto fam = c.at("family").get<std::string>();
      std::vector<double> p;
      if (c.contains("params")) p = c["params"].get<std::vector<double>>();
      auto need = [&](std::size_t n) {
        if (p.size() != n) {
          throw InputError("pool spec: family '" + fam + "' needs " + std::to_string(n) + " params");
        }
      };
      auto domain = [&]() {
        if (!c.contains("domain")) throw InputError("pool spec: family '" + fam + "' needs a domain");
        const auto d = c["domain"];
        if (!d.is_array() || d.size() != 2) throw InputError("pool spec: domain must be [lo, hi]");
        auto bound = [](const json& v) {
          return v.is_string() ? parse_double(v.get<std::string>()) : v.get<double>();
        };
        return Interval{bound(d[0]), bound(d[1])};
      };
      if (fam == "beta") {
        need(2);
        comps.push_back(parse_prior("beta:" + format_double(p[0]) + "," + format_double(p[1]), {}));
      } else if (fam == "gamma") {
        need(2);
        comps.push_back(parse_prior("gamma:" + format_double(p[0]) + "," + format_double(p[1]), {}));
      } else if (fam == "normal") {
        need(2);
        comps.push_back(parse_prior("normal:" + format_double(p[0]) + "," + format_double(p[1]), {}));
      } else if (fam == "grid-file") {
        std::filesystem::path file = c.at("path").get<std::string>();
        if (file.is_relative()) file = path.parent_path() / file;
        comps.push_back(detail::read_grid_file(file));
      } else if (fam == "flat") {
        need(0);
        comps.push_back(family::flat(domain()));
      } else if (fam == "tilt") {
        need(1);
        comps.push_back(family::exponential_tilt(p[0], domain()));
      } else {
        throw InputError("pool spec: unknown family '" + fam + "'");
      }
    }
    return PoolProblem(std::move(comps), PoolWeights(spec["weights"].get<std::vector<double>>()));
  } catch (const json::exception& e) {
    throw InputError(std::string("pool spec: ") + e.what());
  }
}

/// Output sink: --out path (atomic) or the given stream.
class Emitter {
 public:
  Emitter(const GlobalOptions& g, std::ostream& out) : g_(g), out_(out) {}

  void write(const std::string& content) const {
    if (g_.out.empty()) {
      out_ << content;
    } else {
      write_atomic(g_.out, content);
    }
  }

  bool json_requested(bool json_default) const {
    if (g_.format == "json") return true;
    if (g_.format == "csv") return false;
    return json_default;
  }

 private:
  const GlobalOptions& g_;
  std::ostream& out_;
};

namespace detail {

inline void flatten(const json& j, const std::string& prefix, std::vector<Row>& rows) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), rows);
  } else if (j.is_string()) {
    rows.push_back({Cell(prefix), Cell(j.get<std::string>())});
  } else if (j.is_number_float()) {
    rows.push_back({Cell(prefix), Cell(j.get<double>())});
  } else if (j.is_null()) {
    rows.push_back({Cell(prefix), Cell()});
  } else {
    rows.push_back({Cell(prefix), Cell(j.dump())});
  }
}

inline json table_to_json(const Table& t, const ConfigEcho& echo) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json o = json::object();
    for (std::size_t j = 0; j < t.columns.size(); ++j) o[t.columns[j]] = r[j].text();
    rows.push_back(std::move(o));
  }
  return json{{"config", echo.to_json()}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

}  // namespace detail

/// Report output: JSON by default, a key,value CSV when --format csv.
inline void emit_report(const Emitter& e, json report) {
  if (e.json_requested(true)) {
    e.write(report.dump(2) + "\n");
    return;
  }
  Table t{{"key", "value"}, {}, {}};
  detail::flatten(report, "", t.rows);
  e.write(render_csv(t));
}

/// Table output: CSV with the configuration on a '#' line, or JSON.
inline void emit_result_table(const Emitter& e, Table t, const ConfigEcho& echo) {
  if (e.json_requested(false)) {
    e.write(detail::table_to_json(t, echo).dump(2) + "\n");
    return;
  }
  t.preamble = echo.tokens();
  e.write(render_csv(t));
}

// --- subcommands ----------------------------------------------------------

struct PoolArgs {
  std::string spec;
  std::string kind = "geometric";
};

inline int run_pool(const GlobalOptions& g, const PoolArgs& a, std::ostream& out) {
  if (a.kind != "geometric" && a.kind != "arithmetic") {
    throw InputError("pool: --kind must be geometric or arithmetic");
  }
  const auto problem = load_pool_spec(a.spec);
  ConfigEcho echo;
  echo.add("command", std::string("pool"));
  echo.add("spec", a.spec);
  echo.add("kind", a.kind);
  echo.add("seed", g.seed);
  echo.add("tol", g.tol);
  GridDensity result = problem.components().front();
  if (a.kind == "geometric") {
    const auto pool = geometric_pool(problem, g.tol);
    echo.add("proper", std::string(pool.proper() ? "1" : "0"));
    if (pool.proper()) {
      echo.add("mass", pool.mass.value);
    } else {
      echo.add("impropriety", *pool.impropriety);
    }
    result = pool.density;
  } else {
    result = arithmetic_pool(problem);
    echo.add("proper", std::string("1"));
  }
  const Emitter e(g, out);
  if (e.json_requested(false)) {
    json nodes = json::array();
    json values = json::array();
    for (double x : result.nodes()) nodes.push_back(number(x));
    for (double v : result.log_values()) values.push_back(number(v));
    e.write(json{{"config", echo.to_json()},
                 {"domain", {number(result.domain().lo), number(result.domain().hi)}},
                 {"normalized", result.normalized()},
                 {"nodes", std::move(nodes)},
                 {"log_values", std::move(values)}}
                .dump(2) +
            "\n");
  } else {
    std::ostringstream ss;
    write_grid_density(ss, result, echo.tokens());
    e.write(ss.str());
  }
  return kOk;
}

struct HolderArgs {
  std::string mu;
  std::string nu;
  double alpha = 0.5;
  std::string likelihood = "normal";
  std::string data = "0.0";
  std::size_t cell = 0;
};

inline LikelihoodModel make_likelihood(const std::string& family, const std::string& data, std::size_t cell) {
  if (family == "normal") return LikelihoodModel::normal_location(detail::parse_list(data, "--data"));
  if (family == "binomial") {
    const auto c = detail::parse_counts(data, "--data");
    if (c.size() != 2) throw InputError("binomial --data must be 'successes,trials'");
    return LikelihoodModel::binomial(c[0], c[1]);
  }
  if (family == "poisson") return LikelihoodModel::poisson(detail::parse_counts(data, "--data"));
  if (family == "multinomial") return LikelihoodModel::multinomial(detail::parse_counts(data, "--data"), cell);
  throw InputError("unknown likelihood '" + family + "' (expected normal, binomial, poisson, multinomial)");
}

inline int run_holder(const GlobalOptions& g, const HolderArgs& a, std::ostream& out) {
  const auto lik = make_likelihood(a.likelihood, a.data, a.cell);
  const auto mu = parse_prior(a.mu, lik.domain());
  const auto nu = parse_prior(a.nu, lik.domain());
  ConfigEcho echo;
  echo.add("command", std::string("holder"));
  echo.add("mu", a.mu);
  echo.add("nu", a.nu);
  echo.add("alpha", a.alpha);
  echo.add("likelihood", a.likelihood);
  echo.add("data", a.data);
  if (a.likelihood == "multinomial") echo.add("cell", a.cell);
  echo.add("seed", g.seed);
  echo.add("tol", g.tol);
  const auto r = holder_check(mu, nu, a.alpha, lik, g.tol);
  json report{{"config", echo.to_json()},
              {"lhs", number(r.lhs)},
              {"rhs", number(r.rhs)},
              {"holds", r.holds()},
              {"status", to_string(r.status)},
              {"errors", {{"lhs", number(r.lhs_error)}, {"rhs", number(r.rhs_error)}}},
              {"mu_mass", number(r.mu.mass.value)},
              {"nu_mass", number(r.nu.mass.value)}};
  emit_report(Emitter(g, out), std::move(report));
  return r.status == HolderStatus::violated ? kNumericalFailure : kOk;
}

struct HyperArgs {
  std::string hyperprior = "pareto-v";
  std::string hyperprior_grid;
  double a_max = kInfinity;
  VGridSpec grid;
};

inline HyperPriorSpec make_hyperprior(const HyperArgs& h) {
  if (h.hyperprior == "grid-file") {
    if (h.hyperprior_grid.empty()) throw InputError("--hyperprior grid-file needs --hyperprior-grid");
    return HyperPriorSpec::from_grid(detail::read_grid_file(h.hyperprior_grid), h.hyperprior_grid, h.a_max);
  }
  if (!h.hyperprior_grid.empty()) throw InputError("--hyperprior-grid needs --hyperprior grid-file");
  return HyperPriorSpec::parse(h.hyperprior, h.a_max);
}

inline void echo_hyper(ConfigEcho& echo, const HyperArgs& h, const HyperPriorSpec& spec, double tol) {
  echo.add("hyperprior", spec.name());
  echo.add("a_max", h.a_max);
  echo.add("v_min", h.grid.v_lo);
  echo.add("v_max", h.grid.v_hi);
  echo.add("v_nodes", h.grid.nodes);
  echo.add("tol", tol);
}

struct SparseArgs {
  std::size_t m = 1000;
  long long n = 3;
  long long r0 = 3;
  std::string configs;
  HyperArgs hyper;
};

inline std::vector<VConfig> load_configs(const std::filesystem::path& path) {
  const json j = detail::parse_json_file(path);
  const json& list = j.is_object() && j.contains("configs") ? j["configs"] : j;
  if (!list.is_array()) throw InputError("configs: expected an array of {m, n, r0}");
  std::vector<VConfig> out;
  try {
    for (const auto& c : list) {
      const auto m = c.at("m").get<long long>();
      if (m < 2) throw InputError("configs: m must be >= 2");
      out.push_back(VConfig{std::size_t(m), c.at("n").get<long long>(), c.at("r0").get<long long>()});
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("configs: ") + e.what());
  }
  return out;
}

inline Table v_table(const std::vector<VSummaryRow>& rows) {
  Table t{{"m", "n", "r0", "hyperprior", "proper", "mode_v", "median_v", "q05_v", "q95_v"}, {}, {}};
  for (const auto& r : rows) {
    auto field = [&](double VSummary::*f) -> Cell { return r.summary ? Cell((*r.summary).*f) : Cell(); };
    t.rows.push_back({Cell(r.config.m), Cell(r.config.n), Cell(r.config.r0), Cell(r.hyperprior),
                      Cell(r.proper), field(&VSummary::mode), field(&VSummary::median),
                      field(&VSummary::q05), field(&VSummary::q95)});
  }
  return t;
}

inline int run_sparse(const GlobalOptions& g, SparseArgs a, std::ostream& out) {
  a.hyper.grid.tolerance = g.tol;
  const auto hyper = make_hyperprior(a.hyper);
  std::vector<VConfig> configs;
  ConfigEcho echo;
  echo.add("command", std::string("sparse-mn"));
  if (!a.configs.empty()) {
    configs = load_configs(a.configs);
    echo.add("configs", a.configs);
  } else {
    configs.push_back(VConfig{a.m, a.n, a.r0});
    echo.add("m", a.m);
    echo.add("n", a.n);
    echo.add("r0", a.r0);
  }
  echo_hyper(echo, a.hyper, hyper, g.tol);
  echo.add("seed", g.seed);
  echo.add("counts", std::string("canonical"));
  emit_result_table(Emitter(g, out), v_table(v_summary_table(configs, hyper, a.hyper.grid)), echo);
  return kOk;
}

struct CompareArgs {
  std::size_t m = 1000;
  long long n = 3;
  long long r0 = 3;
  std::optional<double> a_point;
  HyperArgs hyper;
};

inline json cell_json(const std::optional<CellComparison>& c) {
  if (!c) return nullptr;
  auto est = [](const std::optional<CellEstimate>& e) -> json {
    if (!e) return nullptr;
    return json{{"mean", number(e->mean)}, {"lo95", number(e->lo)}, {"hi95", number(e->hi)}};
  };
  return json{{"cell", c->cell},
              {"count", c->count},
              {"jeffreys", est(c->jeffreys)},
              {"conditional", est(c->conditional)},
              {"hierarchical", est(c->hierarchical)}};
}

inline int run_compare(const GlobalOptions& g, CompareArgs a, std::ostream& out) {
  a.hyper.grid.tolerance = g.tol;
  const auto hyper = make_hyperprior(a.hyper);
  const auto data = CountVector::canonical(a.m, a.n, a.r0);
  ConfigEcho echo;
  echo.add("command", std::string("compare"));
  echo.add("m", a.m);
  echo.add("n", a.n);
  echo.add("r0", a.r0);
  echo.add("a_point", a.a_point ? format_double(*a.a_point) : std::string("none"));
  echo_hyper(echo, a.hyper, hyper, g.tol);
  echo.add("seed", g.seed);
  echo.add("counts", std::string("canonical"));
  const auto c = compare_priors(data, hyper, a.a_point, a.hyper.grid);
  json report{{"config", echo.to_json()},
              {"observed", cell_json(c.observed)},
              {"unobserved", cell_json(c.unobserved)},
              {"hierarchical_proper", c.hierarchical_proper},
              {"hierarchical_diagnostics", c.hierarchical_diagnostics}};
  emit_report(Emitter(g, out), std::move(report));
  return kOk;
}

struct EquivArgs {
  double a = 0.5;
  std::size_t m = 5;
  std::size_t samples = 100000;
  std::string betas = "0.1,1,10";
};

inline int run_equiv(const GlobalOptions& g, const EquivArgs& a, std::ostream& out) {
  const auto betas = detail::parse_list(a.betas, "--betas");
  ConfigEcho echo;
  echo.add("command", std::string("poisson-equiv"));
  echo.add("a", a.a);
  echo.add("m", a.m);
  echo.add("samples", a.samples);
  echo.add("betas", a.betas);
  echo.add("seed", g.seed);
  const auto r = dirichlet_equivalence_report(a.a, a.m, a.samples, betas, RandomStream(g.seed, 0));
  json per = json::array();
  for (const auto& c : r.per_beta) {
    per.push_back({{"beta", number(c.beta)},
                   {"mean", number(c.mean)},
                   {"mean_z", number(c.mean_z(r.marginal))},
                   {"variance", number(c.variance)},
                   {"variance_z", number(c.variance_z(r.marginal))},
                   {"ks", number(c.ks)},
                   {"ks_critical", number(c.ks_critical)},
                   {"moments_ok", c.moments_ok(r.marginal)},
                   {"ks_ok", c.ks_ok()}});
  }
  json cross = json::array();
  for (const auto& c : r.cross) {
    cross.push_back({{"beta_i", number(c.beta_i)},
                     {"beta_j", number(c.beta_j)},
                     {"mean_diff", number(c.mean_diff)},
                     {"mean_se", number(c.mean_se)},
                     {"variance_diff", number(c.variance_diff)},
                     {"variance_se", number(c.variance_se)},
                     {"ok", c.ok()}});
  }
  json report{{"config", echo.to_json()},
              {"marginal", {{"a", number(r.marginal.a)}, {"b", number(r.marginal.b)},
                            {"mean", number(r.marginal.mean())}, {"variance", number(r.marginal.variance())}}},
              {"per_beta", std::move(per)},
              {"cross_beta", std::move(cross)},
              {"passed", r.passed()}};
  emit_report(Emitter(g, out), std::move(report));
  return kOk;
}

struct OrderedArgs {
  std::size_t m = 50;
  std::size_t samples = 100000;
};

inline int run_ordered(const GlobalOptions& g, const OrderedArgs& a, std::ostream& out) {
  const auto d = ordered_prior_diagnostics(a.m, a.samples, RandomStream(g.seed, 0));
  ConfigEcho echo;
  echo.add("command", std::string("ordered-mn"));
  echo.add("m", a.m);
  echo.add("samples", a.samples);
  echo.add("seed", g.seed);
  echo.add("k_star", d.k_star ? std::to_string(*d.k_star) : std::string("none"));
  echo.add("max_simplex_error", d.max_simplex_error);
  Table t{{"k", "analytic_mean", "empirical_mean", "empirical_median"}, {}, {}};
  for (const auto& c : d.cells) {
    t.rows.push_back({Cell(c.k), Cell(c.analytic_mean), Cell(c.empirical_mean), Cell(c.empirical_median)});
  }
  emit_result_table(Emitter(g, out), std::move(t), echo);
  return kOk;
}

// --- dispatch ------------------------------------------------------------

namespace detail {

inline void add_hyper_options(CLI::App* sub, HyperArgs& h) {
  sub->add_option("--hyperprior", h.hyperprior, "flat-in-a, flat-in-log-a, pareto-v or grid-file")
      ->check(CLI::IsMember({"flat-in-a", "flat-in-log-a", "pareto-v", "grid-file"}))
      ->capture_default_str();
  sub->add_option("--hyperprior-grid", h.hyperprior_grid, "Grid file with the log density in v");
  sub->add_option("--a-max", h.a_max, "Truncation of a (v <= m a_max)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--v-min", h.grid.v_lo, "Smallest v node")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--v-max", h.grid.v_hi, "Largest v node")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--v-nodes", h.grid.nodes, "Number of v nodes")->check(CLI::Range(16, 1 << 22))
      ->capture_default_str();
}

}  // namespace detail

/// Parses argv, runs one subcommand and maps errors to exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Objective-prior pooling, propriety and sparse-multinomial toolkit", "prior-forge"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--tol", g.tol, "Relative quadrature tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", g.out, "Output path (written atomically); stdout when absent");
  app.add_option("--format", g.format, "csv or json (default: csv for tables, json for reports)")
      ->check(CLI::IsMember({"auto", "csv", "json"}))
      ->capture_default_str();

  PoolArgs pool;
  auto* pool_cmd = app.add_subcommand("pool", "Arithmetic or geometric pool of component priors");
  pool_cmd->add_option("--spec", pool.spec, "Pool spec JSON")->required();
  pool_cmd->add_option("--kind", pool.kind, "geometric or arithmetic")
      ->check(CLI::IsMember({"geometric", "arithmetic"}))
      ->capture_default_str();

  HolderArgs holder;
  auto* holder_cmd = app.add_subcommand("holder", "Hoelder bound for a pair of priors");
  holder_cmd->add_option("--mu", holder.mu, "Prior spec for mu")->required();
  holder_cmd->add_option("--nu", holder.nu, "Prior spec for nu")->required();
  holder_cmd->add_option("--alpha", holder.alpha, "Exponent of mu, in (0, 1)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  holder_cmd->add_option("--likelihood", holder.likelihood, "normal, binomial, poisson or multinomial")
      ->check(CLI::IsMember({"normal", "binomial", "poisson", "multinomial"}))
      ->capture_default_str();
  holder_cmd->add_option("--data", holder.data, "Comma-separated data")->capture_default_str();
  holder_cmd->add_option("--cell", holder.cell, "Cell index for the multinomial likelihood")
      ->capture_default_str();

  SparseArgs sparse;
  auto* sparse_cmd = app.add_subcommand("sparse-mn", "Posterior of the total prior weight v = m a");
  sparse_cmd->add_option("--m", sparse.m, "Number of cells")->check(CLI::Range(std::size_t(2), std::size_t(1) << 40))
      ->capture_default_str();
  sparse_cmd->add_option("--n", sparse.n, "Total count")->check(CLI::NonNegativeNumber)->capture_default_str();
  sparse_cmd->add_option("--r0", sparse.r0, "Non-empty cells")->check(CLI::NonNegativeNumber)->capture_default_str();
  sparse_cmd->add_option("--configs", sparse.configs, "JSON list of {m, n, r0}");
  detail::add_hyper_options(sparse_cmd, sparse.hyper);

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Jeffreys, fixed-a and hierarchical cell posteriors");
  compare_cmd->add_option("--m", compare.m, "Number of cells")->check(CLI::Range(std::size_t(2), std::size_t(1) << 40))
      ->capture_default_str();
  compare_cmd->add_option("--n", compare.n, "Total count")->check(CLI::NonNegativeNumber)->capture_default_str();
  compare_cmd->add_option("--r0", compare.r0, "Non-empty cells")->check(CLI::NonNegativeNumber)->capture_default_str();
  compare_cmd->add_option("--a-point", compare.a_point, "Fixed Dirichlet concentration a")
      ->check(CLI::PositiveNumber);
  detail::add_hyper_options(compare_cmd, compare.hyper);

  EquivArgs equiv;
  auto* equiv_cmd = app.add_subcommand("poisson-equiv", "Gamma normalization against Dirichlet marginals");
  equiv_cmd->add_option("--a", equiv.a, "Gamma shape")->check(CLI::PositiveNumber)->capture_default_str();
  equiv_cmd->add_option("--m", equiv.m, "Number of cells")->check(CLI::Range(std::size_t(2), std::size_t(1) << 20))
      ->capture_default_str();
  equiv_cmd->add_option("--samples", equiv.samples, "Draws per beta")->check(CLI::Range(std::size_t(2), std::size_t(1) << 30))
      ->capture_default_str();
  equiv_cmd->add_option("--betas", equiv.betas, "Comma-separated gamma scales")->capture_default_str();

  OrderedArgs ordered;
  auto* ordered_cmd = app.add_subcommand("ordered-mn", "Stick-breaking prior with Beta(1/2, 1/2) sticks");
  ordered_cmd->add_option("--m", ordered.m, "Number of cells")->check(CLI::Range(std::size_t(2), std::size_t(1) << 16))
      ->capture_default_str();
  ordered_cmd->add_option("--samples", ordered.samples, "Draws")->check(CLI::Range(std::size_t(2), std::size_t(1) << 30))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "prior-forge: " << e.what() << "\n\n" << app.help();
    return kInvalidInput;
  }

  try {
    if (holder_cmd->parsed() && !(holder.alpha > 0.0 && holder.alpha < 1.0)) {
      throw InputError("--alpha must lie strictly inside (0, 1)");
    }
    if (*pool_cmd) return run_pool(g, pool, out);
    if (*holder_cmd) return run_holder(g, holder, out);
    if (*sparse_cmd) return run_sparse(g, sparse, out);
    if (*compare_cmd) return run_compare(g, compare, out);
    if (*equiv_cmd) return run_equiv(g, equiv, out);
    if (*ordered_cmd) return run_ordered(g, ordered, out);
  } catch (const NumericalError& e) {
    err << "prior-forge: numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const ImproperDensity& e) {
    err << "prior-forge: numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const Error& e) {
    err << "prior-forge: " << e.what() << '\n';
    return kInvalidInput;
  }
  err << "prior-forge: no subcommand\n";
  return kInvalidInput;
}

}  // namespace prior_forge::cli
