/*
   Copyright 2026 The shflab Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "shflab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string_view>

#include <openssl/evp.h>

#include "shflab/chaos.hpp"
#include "shflab/errors.hpp"
#include "shflab/mollifier.hpp"
#include "shflab/toy_noise.hpp"

namespace shflab::cli {

using nlohmann::json;

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kNames[] = {
    {ExperimentKind::JfunTable, "jfun-table"},
    {ExperimentKind::Wpair, "wpair"},
    {ExperimentKind::SecondMomentLadder, "second-moment-ladder"},
    {ExperimentKind::SensitivityCurve, "sensitivity-curve"},
    {ExperimentKind::ChaosVsMc, "chaos-vs-mc"},
    {ExperimentKind::SlabScaling, "slab-scaling"},
    {ExperimentKind::ToySuite, "toy-suite"},
};

// Collects every schema problem so one error lists all offending fields.
class Reader {
 public:
  std::vector<std::string> problems;

  void known(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys) {
    for (const auto& item : obj.items()) {
      if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
        problems.push_back(path + item.key() + ": unknown key");
      }
    }
  }

  const json* section(const json& obj, const std::string& key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_object()) {
      problems.push_back(path + key + ": expected an object");
      return nullptr;
    }
    return &*it;
  }

  void number(const json& obj, const std::string& key, const std::string& path, double& out) {
    if (const json* v = find(obj, key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        problems.push_back(path + key + ": expected a number");
      }
    }
  }

  template <typename Int>
  void integer(const json& obj, const std::string& key, const std::string& path, Int& out) {
    if (const json* v = find(obj, key)) {
      if (!v->is_number_integer()) {
        problems.push_back(path + key + ": expected an integer");
      } else if (std::is_unsigned_v<Int> && !v->is_number_unsigned()) {
        problems.push_back(path + key + ": expected a nonnegative integer");
      } else {
        out = v->get<Int>();
      }
    }
  }

  void string(const json& obj, const std::string& key, const std::string& path, std::string& out) {
    if (const json* v = find(obj, key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        problems.push_back(path + key + ": expected a string");
      }
    }
  }

  void numbers(const json& obj, const std::string& key, const std::string& path, std::vector<double>& out) {
    if (const json* v = find(obj, key)) {
      const bool ok = v->is_array() && std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_number(); });
      if (ok) {
        out = v->get<std::vector<double>>();
      } else {
        problems.push_back(path + key + ": expected an array of numbers");
      }
    }
  }

  void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) problems.push_back(field + ": " + what);
  }

 private:
  static const json* find(const json& obj, const std::string& key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }
};

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_ranges(const ExperimentConfig& c, Reader& r) {
  r.require(std::isfinite(c.theta), "theta", "must be finite");
  r.require(!c.eps_ladder.empty(), "eps_ladder", "must not be empty");
  for (std::size_t i = 0; i < c.eps_ladder.size(); ++i) {
    r.require(c.eps_ladder[i] > 0.0 && c.eps_ladder[i] < 1.0, "eps_ladder", "entries must lie in (0, 1)");
    if (i > 0) r.require(c.eps_ladder[i] < c.eps_ladder[i - 1], "eps_ladder", "must be strictly decreasing");
  }
  r.require(!c.tau_grid.empty(), "tau_grid", "must not be empty");
  for (std::size_t i = 0; i < c.tau_grid.size(); ++i) {
    r.require(c.tau_grid[i] >= 0.0 && std::isfinite(c.tau_grid[i]), "tau_grid", "entries must be finite and >= 0");
    if (i > 0) r.require(c.tau_grid[i] > c.tau_grid[i - 1], "tau_grid", "must be strictly increasing");
  }
  r.require(c.replicas >= 2, "replicas", "must be >= 2");
  r.require(c.replicas <= std::numeric_limits<std::uint32_t>::max(), "replicas", "must fit in 32 bits");
  r.require(c.mollifier == "gaussian" || c.mollifier == "compact-bump", "mollifier",
            "must be gaussian or compact-bump");
  r.require(c.lattice.box_side > 0.0, "lattice.box_side", "must be > 0");
  r.require(c.lattice.n == 0 || power_of_two(c.lattice.n), "lattice.n", "must be 0 or a power of two");
  r.require(c.lattice.dt_ratio > 0.0 && c.lattice.dt_ratio <= 1.0, "lattice.dt_ratio", "must lie in (0, 1]");
  r.require(c.quadrature.rel_tol > 0.0, "quadrature.rel_tol", "must be > 0");
  r.require(c.quadrature.simplex_samples >= 1, "quadrature.simplex_samples", "must be >= 1");
  r.require(c.quadrature.chaos_order >= 1 && c.quadrature.chaos_order <= 8, "quadrature.chaos_order",
            "must lie in [1, 8]");
  r.require(c.test_function.width > 0.0, "test_function.width", "must be > 0");
  r.require(c.test_function.mass > 0.0, "test_function.mass", "must be > 0");
  r.require(c.jfun.t_min > 0.0 && c.jfun.t_max > c.jfun.t_min, "jfun", "needs 0 < t_min < t_max");
  r.require(c.jfun.points >= 2, "jfun.points", "must be >= 2");
  r.require(c.toy.n >= 1 && c.toy.n <= toy::DiscreteNoise::kMaxCoordinates, "toy.n", "must lie in [1, 24]");
  for (double rho : c.toy.rho) r.require(rho >= 0.0 && rho <= 1.0, "toy.rho", "entries must lie in [0, 1]");
  r.require(c.toy.mc_samples >= 2, "toy.mc_samples", "must be >= 2");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

QuadratureSpec quad_spec(const ExperimentConfig& c) {
  QuadratureSpec q;
  q.rel_tol = c.quadrature.rel_tol;
  q.simplex_samples = c.quadrature.simplex_samples;
  return q;
}

sim::MollifierSpec mollifier_for(const ExperimentConfig& c, double eps) {
  return sim::build_mollifier(sim::mollifier_shape_from_string(c.mollifier), eps, quad_spec(c));
}

sim::SheSolver solver_for(const ExperimentConfig& c, const sim::MollifierSpec& m) {
  return {lattice_for(c.lattice, m.epsilon), m, sim::beta_eps(c.theta, m.epsilon, m.c_Phi)};
}

// ---------------------------------------------------------------- experiments

void jfun_table(const ExperimentConfig& c, ResultRecord& out) {
  out.columns = {"theta", "t", "j", "est_error"};
  QuadratureSpec q = quad_spec(c);
  const int n = c.jfun.points;
  const double lo = std::log(c.jfun.t_min), hi = std::log(c.jfun.t_max);
  double bound = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = i == n - 1 ? c.jfun.t_max : std::exp(lo + (hi - lo) * i / (n - 1));
    const auto r = kernels::j_theta_detailed(c.theta, t, q);
    out.rows.push_back({c.theta, t, r.value, r.abs_error});
    if (t <= 0.5) bound = std::max(bound, t * std::log(t) * std::log(t) * r.value);
  }
  out.metadata["small_time_bound"] = bound;
  out.checks.push_back({"positive", std::all_of(out.rows.begin(), out.rows.end(), [](auto& r) { return r[2] > 0.0; }),
                        ""});
  if (c.jfun.t_min <= 0.5) {
    out.checks.push_back({"small-time bound finite", std::isfinite(bound), "max t log^2 t j = " + format_double(bound)});
  }
}

void wpair(const ExperimentConfig& c, ResultRecord& out) {
  out.columns = {"theta", "t", "width", "mass", "heat2", "w", "q2", "est_error"};
  const auto pair = centred_pair(c.test_function.width, c.test_function.mass);
  QuadratureSpec q = QuadratureSpec::pairing_default();
  q.rel_tol = std::max(q.rel_tol, c.quadrature.rel_tol);
  const double p = kernels::heat_pairing(1.0, pair);
  const auto w = kernels::w_pairing(c.theta, 1.0, pair, q);
  out.rows.push_back({c.theta, 1.0, c.test_function.width, c.test_function.mass, p * p, w.value, p * p + w.value,
                      w.est_error});
  out.metadata["method"] = kernels::to_string(w.method);
  out.checks.push_back({"w positive", w.value > 0.0, ""});
}

void second_moment_ladder(const ExperimentConfig& c, ResultRecord& out) {
  out.columns = {"eps", "beta", "replicas", "second_moment", "second_moment_se", "q2_limit", "gap"};
  const auto pair = centred_pair(c.test_function.width, c.test_function.mass);
  const double q2 = kernels::q2_pairing(c.theta, 1.0, pair).value;
  const double heat = kernels::heat_pairing(1.0, pair);
  for (double eps : c.eps_ladder) {
    const auto m = mollifier_for(c, eps);
    const auto solver = solver_for(c, m);
    auto f = sim::sample_observable(solver, pair, c.seed, c.replicas);
    for (double& v : f) v += heat;
    const auto mo = sim::estimate_moments(f);
    out.rows.push_back({eps, solver.coupling().beta, double(c.replicas), mo.second_moment, mo.second_moment_se, q2,
                        std::abs(mo.second_moment - q2)});
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) decreasing = decreasing && out.rows[i][6] < out.rows[i - 1][6];
  out.checks.push_back({"gap decreases along the ladder", decreasing, ""});
}

void sensitivity_curve(const ExperimentConfig& c, ResultRecord& out) {
  out.columns = {"eps", "tau", "replicas", "corr_mc", "corr_se", "corr_chaos", "tau_bar", "limit_ratio"};
  const auto pair = centred_pair(c.test_function.width, c.test_function.mass);
  for (double eps : c.eps_ladder) {
    const auto m = mollifier_for(c, eps);
    const auto solver = solver_for(c, m);
    const auto coeffs =
        chaos::chaos_coefficients(c.quadrature.chaos_order, m, solver.coupling().beta, pair, quad_spec(c));
    const auto samples = sim::sample_coupled(solver, pair, c.seed, c.replicas, c.tau_grid);
    std::vector<double> x(samples.size()), y(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) x[i] = samples[i].f_xi;
    const std::size_t first = out.rows.size();
    for (std::size_t j = 0; j < c.tau_grid.size(); ++j) {
      for (std::size_t i = 0; i < samples.size(); ++i) y[i] = samples[i].f_xi_tau[j];
      const double tau = c.tau_grid[j];
      const auto corr = sim::estimate_correlation(x, y);
      // Resampling for time tau lowers beta by exp(-tau) ~ a theta shift of 2 tau |log eps|.
      const double tau_bar = 2.0 * tau * std::abs(std::log(eps));
      out.rows.push_back({eps, tau, double(c.replicas), corr.corr, corr.se, chaos::correlation_from_chaos(coeffs, tau),
                          tau_bar, kernels::sensitivity_limit_ratio(c.theta, tau_bar, pair)});
      if (tau == 0.0) out.checks.push_back({"tau = 0 correlation is 1", corr.corr == 1.0, "eps " + format_double(eps)});
    }
    bool monotone = true;
    for (std::size_t r = first + 1; r < out.rows.size(); ++r) {
      const auto& a = out.rows[r - 1];
      const auto& b = out.rows[r];
      monotone = monotone && b[3] <= a[3] + 3.0 * std::hypot(a[4], b[4]);
    }
    out.checks.push_back({"correlation nonincreasing in tau", monotone, "eps " + format_double(eps)});
  }
}

void chaos_vs_mc(const ExperimentConfig& c, ResultRecord& out) {
  out.columns = {"eps",         "beta",         "replicas",    "mc_variance", "mc_variance_se",
                 "chaos_partial", "chaos_tail", "chaos_total", "chaos_err",   "c1_sq"};
  const auto pair = centred_pair(c.test_function.width, c.test_function.mass);
  for (double eps : c.eps_ladder) {
    const auto m = mollifier_for(c, eps);
    const auto solver = solver_for(c, m);
    const auto coeffs =
        chaos::chaos_coefficients(c.quadrature.chaos_order, m, solver.coupling().beta, pair, quad_spec(c));
    const auto v = chaos::variance_from_chaos(coeffs);
    const auto mo = sim::estimate_moments(sim::sample_observable(solver, pair, c.seed, c.replicas));
    const double combined = std::hypot(mo.variance_se, v.partial_error);
    out.rows.push_back({eps, solver.coupling().beta, double(c.replicas), mo.variance, mo.variance_se, v.partial_sum,
                        v.tail, v.total(), v.partial_error, coeffs.ck2[0]});
    out.checks.push_back({"variance identity", std::abs(mo.variance - v.total()) < 3.0 * combined,
                          "eps " + format_double(eps) + ": z = " + format_double((mo.variance - v.total()) / combined)});
  }
}

void slab_scaling(const ExperimentConfig& c, ResultRecord& out) {
  out.columns = {"eps", "s", "t", "length", "slab_variance", "err", "ratio"};
  const auto pair = centred_pair(c.test_function.width, c.test_function.mass);
  const double eps = c.eps_ladder.back();
  const auto m = mollifier_for(c, eps);
  const double beta = sim::beta_eps(c.theta, eps, m.c_Phi).beta;
  for (int e = 2; e <= 6; ++e) {
    const double len = std::ldexp(1.0, -e);
    // Slabs centred in the unit interval stay clear of the initial data.
    const chaos::SlabSpec slab{0.5 - 0.5 * len, 0.5 + 0.5 * len};
    slab.validate(true);
    const auto v = chaos::slab_variance(c.quadrature.chaos_order, slab, m, beta, pair, quad_spec(c));
    out.rows.push_back({eps, slab.s, slab.t, len, v.value, v.err, v.value / len});
  }
  bool shrinking = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) shrinking = shrinking && out.rows[i][6] < out.rows[i - 1][6];
  out.checks.push_back({"slab_variance / (t - s) decreases with t - s", shrinking, ""});
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

void toy_suite(const ExperimentConfig& c, ResultRecord& out) {
  using namespace toy;
  out.columns = {"n", "blocks", "pn_norm", "block_variance_sum", "rel_diff"};
  const int n = c.toy.n;
  const DiscreteNoise noise{n, Alphabet::Sign};
  const auto x = ToyObservable::random(noise, c.seed);
  const auto singles = CellPartition::singletons(n);
  const auto p = project_Pn(x, singles);
  const auto d1 = walsh_degree_part(x, 1);
  out.checks.push_back({"singleton projection equals degree-1 Walsh part", max_abs_diff(p.table, d1.table) < 1e-13,
                        "max diff " + format_double(max_abs_diff(p.table, d1.table))});
  const auto pp = project_Pn(p, singles);
  out.checks.push_back({"projection idempotent", max_abs_diff(pp.table, p.table) < 1e-13, ""});

  std::vector<CellPartition> ladder;
  for (int blocks = 1; blocks <= n; blocks *= 2) ladder.push_back(CellPartition::contiguous(n, blocks));
  if (ladder.back().blocks.size() != static_cast<std::size_t>(n)) ladder.push_back(singles);
  bool identity = true;
  for (const auto& part : ladder) {
    const double a = project_Pn(x, part).second_moment();
    const double b = block_variance_sum(x, part);
    const double rel = std::abs(a - b) / std::max(b, 1e-300);
    identity = identity && rel < 1e-12;
    out.rows.push_back({double(n), double(part.blocks.size()), a, b, rel});
  }
  out.checks.push_back({"norm identity", identity, ""});
  const auto norms = iterate_Pn_refinement(x, ladder);
  const double w1 = walsh_spectrum(x).degree_mass[1];
  out.checks.push_back({"refinement limit equals degree-1 mass", std::abs(norms.back() - w1) < 1e-12 * w1, ""});

  double prev = -1.0;
  bool monotone = true;
  for (int i = 0; i <= 20; ++i) {
    const double r = resample_correlation_discrete(x, i / 20.0);
    monotone = monotone && r >= prev;
    prev = r;
  }
  out.checks.push_back({"resampling correlation increasing in rho", monotone, ""});
  for (double rho : c.toy.rho) {
    const double exact = resample_correlation_discrete(x, rho);
    const auto mc = resample_correlation_mc(x, rho, c.toy.mc_samples, c.seed + 1);
    out.checks.push_back({"resampling exact vs MC", std::abs(mc.corr - exact) < 3.0 * mc.se,
                          "rho " + format_double(rho) + ": " + format_double(exact) + " vs " + format_double(mc.corr)});
  }
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kNames) {
    if (kind == k) return std::string(name);
  }
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& s) {
  for (const auto& [kind, name] : kNames) {
    if (name == s) return kind;
  }
  throw ConfigError("unknown experiment '" + s + "'");
}

ExperimentConfig validate_config(const std::string& text) {
  ExperimentConfig c;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  Reader r;
  r.known(j, "", {"experiment", "theta", "eps_ladder", "tau_grid", "replicas", "seed", "mollifier", "lattice",
                  "quadrature", "test_function", "jfun", "toy", "output"});
  std::string experiment = to_string(c.experiment);
  r.string(j, "experiment", "", experiment);
  try {
    c.experiment = experiment_from_string(experiment);
  } catch (const ConfigError&) {
    r.problems.push_back("experiment: unknown value '" + experiment + "'");
  }
  r.number(j, "theta", "", c.theta);
  r.numbers(j, "eps_ladder", "", c.eps_ladder);
  r.numbers(j, "tau_grid", "", c.tau_grid);
  r.integer(j, "replicas", "", c.replicas);
  r.integer(j, "seed", "", c.seed);
  r.string(j, "mollifier", "", c.mollifier);
  r.string(j, "output", "", c.output);
  if (const json* s = r.section(j, "lattice", "")) {
    r.known(*s, "lattice.", {"box_side", "n", "dt_ratio"});
    r.number(*s, "box_side", "lattice.", c.lattice.box_side);
    r.integer(*s, "n", "lattice.", c.lattice.n);
    r.number(*s, "dt_ratio", "lattice.", c.lattice.dt_ratio);
  }
  if (const json* s = r.section(j, "quadrature", "")) {
    r.known(*s, "quadrature.", {"rel_tol", "simplex_samples", "chaos_order"});
    r.number(*s, "rel_tol", "quadrature.", c.quadrature.rel_tol);
    r.integer(*s, "simplex_samples", "quadrature.", c.quadrature.simplex_samples);
    r.integer(*s, "chaos_order", "quadrature.", c.quadrature.chaos_order);
  }
  if (const json* s = r.section(j, "test_function", "")) {
    r.known(*s, "test_function.", {"width", "mass"});
    r.number(*s, "width", "test_function.", c.test_function.width);
    r.number(*s, "mass", "test_function.", c.test_function.mass);
  }
  if (const json* s = r.section(j, "jfun", "")) {
    r.known(*s, "jfun.", {"t_min", "t_max", "points"});
    r.number(*s, "t_min", "jfun.", c.jfun.t_min);
    r.number(*s, "t_max", "jfun.", c.jfun.t_max);
    r.integer(*s, "points", "jfun.", c.jfun.points);
  }
  if (const json* s = r.section(j, "toy", "")) {
    r.known(*s, "toy.", {"n", "rho", "mc_samples"});
    r.integer(*s, "n", "toy.", c.toy.n);
    r.numbers(*s, "rho", "toy.", c.toy.rho);
    r.integer(*s, "mc_samples", "toy.", c.toy.mc_samples);
  }
  check_ranges(c, r);
  if (!r.problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : r.problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {
      {"experiment", to_string(c.experiment)},
      {"theta", c.theta},
      {"eps_ladder", c.eps_ladder},
      {"tau_grid", c.tau_grid},
      {"replicas", c.replicas},
      {"seed", c.seed},
      {"mollifier", c.mollifier},
      {"lattice", {{"box_side", c.lattice.box_side}, {"n", c.lattice.n}, {"dt_ratio", c.lattice.dt_ratio}}},
      {"quadrature",
       {{"rel_tol", c.quadrature.rel_tol},
        {"simplex_samples", c.quadrature.simplex_samples},
        {"chaos_order", c.quadrature.chaos_order}}},
      {"test_function", {{"width", c.test_function.width}, {"mass", c.test_function.mass}}},
      {"jfun", {{"t_min", c.jfun.t_min}, {"t_max", c.jfun.t_max}, {"points", c.jfun.points}}},
      {"toy", {{"n", c.toy.n}, {"rho", c.toy.rho}, {"mc_samples", c.toy.mc_samples}}},
      {"output", c.output},
  };
}

std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2); }

std::string config_digest(const ExperimentConfig& c) {
  // The output path does not change results, so it stays out of the digest.
  auto j = to_json(c);
  j.erase("output");
  const std::string text = j.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

bool ResultRecord::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string ResultRecord::csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
    out += '\n';
  }
  return out;
}

json ResultRecord::sidecar(const ExperimentConfig& config) const {
  json checks_json = json::array();
  for (const auto& c : checks) checks_json.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"experiment", experiment},    {"config_digest", config_digest}, {"version", version},
          {"wall_seconds", wall_seconds}, {"config", to_json(config)},      {"checks", checks_json},
          {"passed", passed()},           {"metadata", metadata}};
}

sim::Lattice lattice_for(const LatticeConfig& c, double eps) {
  sim::Lattice l = sim::Lattice::for_epsilon(eps, c.box_side);
  if (c.n > 0) l.n = c.n;
  l.max_stability_ratio = std::max(l.max_stability_ratio, c.dt_ratio);
  l.dt = 1.0 / std::ceil(1.0 / (c.dt_ratio * eps * eps) - 1e-9);
  l.validate(eps);
  return l;
}

kernels::TestFunctionPair centred_pair(double width, double mass) {
  const kernels::GaussianBump g{{0.0, 0.0}, width, mass / (2.0 * std::numbers::pi * width * width)};
  return {g, g};
}

ResultRecord run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ResultRecord out;
  out.experiment = to_string(config.experiment);
  out.config_digest = config_digest(config);
  switch (config.experiment) {
    case ExperimentKind::JfunTable: jfun_table(config, out); break;
    case ExperimentKind::Wpair: wpair(config, out); break;
    case ExperimentKind::SecondMomentLadder: second_moment_ladder(config, out); break;
    case ExperimentKind::SensitivityCurve: sensitivity_curve(config, out); break;
    case ExperimentKind::ChaosVsMc: chaos_vs_mc(config, out); break;
    case ExperimentKind::SlabScaling: slab_scaling(config, out); break;
    case ExperimentKind::ToySuite: toy_suite(config, out); break;
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!config.output.empty()) write_result(out, config, config.output);
  return out;
}

void write_result(const ResultRecord& record, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / (record.experiment + ".csv"), std::ios::binary) << record.csv();
  std::ofstream(dir / (record.experiment + ".json"), std::ios::binary) << record.sidecar(config).dump(2) << '\n';
}

}  // namespace shflab::cli
