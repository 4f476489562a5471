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

// shflab command-line driver. Exit status: 0 when every requested check
// passes, 1 when a check fails, 2 on invalid input or a runtime error.

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

#include <CLI11.hpp>
#include <json.hpp>

#include "shflab/chaos.hpp"
#include "shflab/errors.hpp"
#include "shflab/experiment.hpp"
#include "shflab/kernels.hpp"
#include "shflab/mollifier.hpp"
#include "shflab/she_sim.hpp"
#include "shflab/toy_noise.hpp"

using namespace shflab;
using nlohmann::json;

namespace {

// "width[,mass[,cx,cy]]" for a gaussian bump of the given mass.
kernels::GaussianBump parse_bump(const std::string& spec) {
  std::vector<double> v;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("test function must be width[,mass[,cx,cy]]: " + spec);
    }
  }
  if (v.empty() || v.size() == 3 || v.size() > 4) {
    throw ConfigError("test function must be width[,mass[,cx,cy]]: " + spec);
  }
  const double width = v[0], mass = v.size() > 1 ? v[1] : 1.0;
  kernels::GaussianBump b{{0.0, 0.0}, width, mass / (2.0 * std::numbers::pi * width * width)};
  if (v.size() == 4) b.center = Eigen::Vector2d(v[2], v[3]);
  b.validate();
  return b;
}

void write_text(const std::string& path, const std::string& text) {
  if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) {
    std::filesystem::create_directories(dir);
  }
  std::ofstream(path, std::ios::binary) << text;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_text(out, j.dump(2) + "\n");
  }
}

std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::function<double(std::span<const double>)> toy_function(const std::string& name) {
  if (name == "linear") return [](std::span<const double> x) { return x[0]; };
  if (name == "parity") {
    return [](std::span<const double> x) {
      double p = 1.0;
      for (double v : x) p *= v;
      return p;
    };
  }
  if (name == "majority") {
    return [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v;
      return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    };
  }
  throw ConfigError("unknown toy function '" + name + "' (random, linear, parity, majority)");
}

toy::ToyObservable toy_observable(int n, const std::string& alphabet, const std::string& fn,
                                  std::uint64_t seed) {
  const toy::DiscreteNoise noise{n, toy::alphabet_from_string(alphabet)};
  noise.validate();
  if (fn == "random") return toy::ToyObservable::random(noise, seed);
  return toy::ToyObservable::from_function(noise, toy_function(fn));
}

json chaos_json(const chaos::ChaosCoefficients& c, double theta) {
  const auto v = chaos::variance_from_chaos(c);
  json j{{"eps", c.epsilon},         {"theta", theta},
         {"beta", c.beta},           {"K", c.K},
         {"ck2", c.ck2},             {"est_errors", c.est_errors},
         {"partial_sum", v.partial_sum}, {"median_index", chaos::median_chaos_index(c)}};
  // A non-decreasing last pair has no geometric tail; JSON has no infinity.
  j["tail_divergent"] = !std::isfinite(v.tail);
  j["tail"] = std::isfinite(v.tail) ? json(v.tail) : json(nullptr);
  j["variance"] = std::isfinite(v.tail) ? json(v.total()) : json(nullptr);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shflab: critical 2d stochastic heat equation laboratory"};
  app.require_subcommand(1);

  // kernels
  auto* kern = app.add_subcommand("kernels", "delta-Bose kernel evaluations");
  kern->require_subcommand(1);
  double k_theta = 0.0, k_t = 1.0;
  std::string k_g = "1", k_gp = "1", k_out;
  auto* jfun = kern->add_subcommand("jfun", "j^theta(t)");
  jfun->add_option("--theta", k_theta);
  jfun->add_option("--t", k_t);
  jfun->add_option("--out", k_out, "JSON output file (stdout if empty)");
  auto* wpair = kern->add_subcommand("wpair", "<g (x) g, W^theta(t) g' (x) g'>");
  wpair->add_option("--theta", k_theta);
  wpair->add_option("--t", k_t);
  wpair->add_option("--g", k_g, "width[,mass[,cx,cy]]");
  wpair->add_option("--gprime", k_gp, "width[,mass[,cx,cy]]");
  wpair->add_option("--out", k_out);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo of the mollified equation");
  double s_eps = 0.1, s_theta = 0.0, s_box = 12.8, s_dt_ratio = 0.125, s_width = 0.3;
  std::vector<double> s_taus;
  long s_replicas = 100;
  std::uint64_t s_seed = 1;
  int s_n = 0;
  std::string s_out = "results.csv";
  simulate->add_option("--eps", s_eps);
  simulate->add_option("--theta", s_theta);
  simulate->add_option("--tau-list", s_taus, "comma-separated resampling times")->delimiter(',');
  simulate->add_option("--replicas", s_replicas);
  simulate->add_option("--seed", s_seed);
  simulate->add_option("--grid-n", s_n, "0 picks the coarsest grid with h <= eps/2");
  simulate->add_option("--box-L", s_box);
  simulate->add_option("--dt-ratio", s_dt_ratio, "dt / eps^2");
  simulate->add_option("--width", s_width, "width of the centred unit-mass g = g'");
  simulate->add_option("--out", s_out);

  // chaos
  auto* chaos_cmd = app.add_subcommand("chaos", "Wiener chaos coefficients");
  double c_eps = 0.1, c_theta = 0.0, c_width = 0.3, c_s = 0.0, c_t = 1.0;
  int c_K = 6;
  std::string c_out;
  chaos_cmd->add_option("--eps", c_eps);
  chaos_cmd->add_option("--theta", c_theta);
  chaos_cmd->add_option("--K", c_K);
  chaos_cmd->add_option("--width", c_width, "width of the centred unit-mass g = g'");
  chaos_cmd->add_option("--out", c_out);
  auto* slab = chaos_cmd->add_subcommand("slab", "variance of the slab conditional expectation");
  slab->fallthrough();
  slab->add_option("--s", c_s);
  slab->add_option("--t", c_t);

  // toy
  auto* toy_cmd = app.add_subcommand("toy", "finite product-space projector rig");
  toy_cmd->require_subcommand(1);
  int t_n = 10, t_blocks = 0;
  std::string t_fn = "random", t_alphabet = "sign", t_out;
  std::uint64_t t_seed = 1;
  std::vector<double> t_rho{0.5};
  long t_mc = 0;
  for (auto* sub : {toy_cmd->add_subcommand("project", "norms of P_n X along a refinement ladder"),
                    toy_cmd->add_subcommand("correlation", "resampling correlation")}) {
    sub->add_option("--n", t_n);
    sub->add_option("--fn", t_fn, "random, linear, parity or majority");
    sub->add_option("--seed", t_seed);
    sub->add_option("--out", t_out);
  }
  auto* project = toy_cmd->get_subcommand("project");
  project->add_option("--blocks", t_blocks, "finest block count (0: singletons)");
  project->add_option("--alphabet", t_alphabet, "sign or gaussian-3pt");
  auto* correlation = toy_cmd->get_subcommand("correlation");
  correlation->add_option("--rho", t_rho, "comma-separated rho values")->delimiter(',');
  correlation->add_option("--mc-samples", t_mc, "also estimate by resampling MC");

  // run
  auto* run = app.add_subcommand("run", "run a configured experiment");
  std::string r_config, r_out;
  run->add_option("--config", r_config, "JSON experiment config")->required();
  run->add_option("--out", r_out, "output directory (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*jfun) {
      const auto r = kernels::j_theta_detailed(k_theta, k_t);
      emit({{"inputs", {{"theta", k_theta}, {"t", k_t}}},
            {"value", r.value},
            {"est_error", r.abs_error},
            {"method", "adaptive-gauss-kronrod"}},
           k_out);
    } else if (*wpair) {
      const kernels::TestFunctionPair pair{parse_bump(k_g), parse_bump(k_gp)};
      const auto r = kernels::w_pairing(k_theta, k_t, pair);
      emit({{"inputs", {{"theta", k_theta}, {"t", k_t}, {"g", k_g}, {"gprime", k_gp}}},
            {"value", r.value},
            {"est_error", r.est_error},
            {"method", kernels::to_string(r.method)}},
           k_out);
    } else if (*simulate) {
      if (s_replicas < 2) throw ConfigError("--replicas must be >= 2");
      const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, s_eps);
      const auto lattice = cli::lattice_for({s_box, s_n, s_dt_ratio}, s_eps);
      const sim::SheSolver solver(lattice, m, sim::beta_eps(s_theta, s_eps, m.c_Phi));
      const auto pair = cli::centred_pair(s_width, 1.0);
      std::string csv = "replica,tau,F_xi,F_xitau\n";
      if (s_taus.empty()) {
        const auto f = sim::sample_observable(solver, pair, s_seed, s_replicas);
        for (std::size_t r = 0; r < f.size(); ++r) csv += std::to_string(r) + ",," + csv_double(f[r]) + ",\n";
      } else {
        const auto c = sim::sample_coupled(solver, pair, s_seed, s_replicas, s_taus);
        for (std::size_t r = 0; r < c.size(); ++r) {
          for (std::size_t j = 0; j < s_taus.size(); ++j) {
            csv += std::to_string(r) + "," + csv_double(s_taus[j]) + "," + csv_double(c[r].f_xi) + "," +
                   csv_double(c[r].f_xi_tau[j]) + "\n";
          }
        }
      }
      write_text(s_out, csv);
      write_text(s_out + ".json",
                 json{{"eps", s_eps},
                      {"theta", s_theta},
                      {"beta", solver.coupling().beta},
                      {"tau_list", s_taus},
                      {"replicas", s_replicas},
                      {"seed", s_seed},
                      {"lattice", {{"n", lattice.n}, {"box_side", lattice.box_side}, {"dt", lattice.dt}}},
                      {"test_function", {{"width", s_width}, {"mass", 1.0}}},
                      {"version", SHFLAB_VERSION}}
                         .dump(2) +
                     "\n");
    } else if (*chaos_cmd) {
      const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, c_eps);
      const double beta = sim::beta_eps(c_theta, c_eps, m.c_Phi).beta;
      const auto pair = cli::centred_pair(c_width, 1.0);
      if (*slab) {
        const chaos::SlabSpec spec{c_s, c_t};
        spec.validate();
        const auto v = chaos::slab_variance(c_K, spec, m, beta, pair);
        emit({{"eps", c_eps}, {"theta", c_theta}, {"beta", beta}, {"K", c_K}, {"s", c_s}, {"t", c_t},
              {"slab_variance", v.value}, {"err", v.err}},
             c_out);
      } else {
        emit(chaos_json(chaos::chaos_coefficients(c_K, m, beta, pair), c_theta), c_out);
      }
    } else if (*project) {
      const auto x = toy_observable(t_n, t_alphabet, t_fn, t_seed);
      const int finest = t_blocks == 0 ? t_n : t_blocks;
      std::vector<toy::CellPartition> ladder;
      for (int b = 1; b < finest; b *= 2) ladder.push_back(toy::CellPartition::contiguous(t_n, b));
      ladder.push_back(toy::CellPartition::contiguous(t_n, finest));
      json levels = json::array();
      const auto norms = toy::iterate_Pn_refinement(x, ladder);
      for (std::size_t i = 0; i < ladder.size(); ++i) {
        levels.push_back({{"blocks", ladder[i].blocks.size()},
                          {"pn_norm", norms[i]},
                          {"block_variance_sum", toy::block_variance_sum(x, ladder[i])}});
      }
      json out{{"n", t_n}, {"alphabet", t_alphabet}, {"fn", t_fn}, {"variance", x.variance()}, {"ladder", levels}};
      if (x.noise.alphabet == toy::Alphabet::Sign) {
        out["walsh_degree_mass"] = toy::walsh_spectrum(x).degree_mass;
      }
      emit(out, t_out);
    } else if (*correlation) {
      const auto x = toy_observable(t_n, "sign", t_fn, t_seed);
      json rows = json::array();
      for (double rho : t_rho) {
        json row{{"rho", rho}, {"exact", toy::resample_correlation_discrete(x, rho)}};
        if (t_mc > 0) {
          const auto mc = toy::resample_correlation_mc(x, rho, t_mc, t_seed + 1);
          row["mc"] = mc.corr;
          row["mc_se"] = mc.se;
        }
        rows.push_back(row);
      }
      emit({{"n", t_n}, {"fn", t_fn}, {"correlations", rows}}, t_out);
    } else if (*run) {
      std::ifstream in(r_config);
      if (!in) throw ConfigError("cannot read config file " + r_config);
      std::stringstream text;
      text << in.rdbuf();
      auto config = cli::validate_config(text.str());
      if (!r_out.empty()) config.output = r_out;
      const auto record = cli::run_experiment(config);
      for (const auto& c : record.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : "  (" + c.detail + ")")
                  << '\n';
      }
      std::cout << record.experiment << ": " << record.rows.size() << " rows, " << record.wall_seconds << " s"
                << (config.output.empty() ? "" : ", written to " + config.output) << '\n';
      return record.passed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "shflab: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
