// Acceptance suite: one PASS/FAIL line per criterion. Arguments select
// criteria by number (default: all). Exit status 0 iff every selected
// criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "shflab/chaos.hpp"
#include "shflab/experiment.hpp"
#include "shflab/kernels.hpp"
#include "shflab/mollifier.hpp"
#include "shflab/she_sim.hpp"
#include "shflab/toy_noise.hpp"

using namespace shflab;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Monte Carlo configuration shared by criteria 6, 7 and 9: theta = -3 keeps
// the order-6 truncation plus geometric tail within 0.1% of the exact
// variance, so any disagreement is statistical.
constexpr double kTheta = -3.0;
constexpr double kWidth = 0.3;
constexpr double kDtRatio = 0.25;

kernels::TestFunctionPair mc_pair() { return cli::centred_pair(kWidth, 1.0); }

sim::SheSolver mc_solver(double eps) {
  const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, eps);
  return {cli::lattice_for({12.8, 0, kDtRatio}, eps), m, sim::beta_eps(kTheta, eps, m.c_Phi)};
}

// eps = 0.1 observables, shared by criteria 6 and 9.
std::optional<std::vector<double>> g_eps01;

const std::vector<double>& eps01_samples() {
  if (!g_eps01) g_eps01 = sim::sample_observable(mc_solver(0.1), mc_pair(), 1, 2000);
  return *g_eps01;
}

Outcome c1_golden() {
  const double j = kernels::j_theta(0.0, 1.0);
  const double rel = std::abs(j / oracle::kReciprocalGammaIntegral - 1.0);
  return {rel < 1e-6, fmt("j(1) = %.12f, rel err %.1e", j, rel)};
}

Outcome c2_bound() {
  // The maximum moves with both the quadrature tolerance and the grid density.
  QuadratureSpec coarse, fine;
  coarse.rel_tol = 1e-3;
  fine.rel_tol = 1e-12;
  const double a = kernels::KernelTable::build(0.0, 1e-6, 0.5, 121, coarse).small_time_bound();
  const double b = kernels::KernelTable::build(0.0, 1e-6, 0.5, 961, fine).small_time_bound();
  const double change = std::abs(a / b - 1.0);
  return {std::isfinite(b) && change < 0.01,
          fmt("max t log^2 t j = %.8f (121 nodes, tol 1e-3: %.8f), change %.1e", b, a, change)};
}

Outcome c3_wpair() {
  const auto pair = cli::centred_pair(1.0, 1.0);
  const auto w = kernels::w_pairing(0.0, 1.0, pair);
  const auto mc = oracle::w_pairing_mc(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 256, 8000, 20261018);
  const double se = std::hypot(mc.se, w.est_error);
  return {std::abs(w.value - mc.mean) < 3.0 * se,
          fmt("analytic %.6e, MC %.6e +- %.1e (z = %.2f)", w.value, mc.mean, mc.se, (w.value - mc.mean) / se)};
}

Outcome c4_ratio() {
  const auto pair = cli::centred_pair(1.0, 1.0);
  bool ok = kernels::sensitivity_limit_ratio(0.0, 0.0, pair) == 1.0;
  double prev = 1.0;
  std::string values = "R:";
  for (double tau : {1.0, 2.0, 4.0, 8.0}) {
    const double r = kernels::sensitivity_limit_ratio(0.0, tau, pair);
    ok = ok && r < prev;
    prev = r;
    values += fmt(" %.4f", r);
  }
  double tau_max = 8.0;
  while (kernels::sensitivity_limit_ratio(0.0, tau_max, pair) >= 0.05 && tau_max < 4096.0) tau_max *= 2.0;
  const double r_max = kernels::sensitivity_limit_ratio(0.0, tau_max, pair);
  return {ok && r_max < 0.05, values + fmt("; R(%g) = %.4f", tau_max, r_max)};
}

Outcome c5_scaling() {
  const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, 0.1);
  const auto pair = mc_pair();
  const auto unit = chaos::chaos_coefficients(4, m, 1.0, pair);
  double worst = 0.0;
  for (double beta : {0.25, 1.7, 3.4815}) {
    const auto c = chaos::chaos_coefficients(4, m, beta, pair);
    for (int k = 1; k <= 4; ++k) {
      worst = std::max(worst, std::abs(c.ck2[k - 1] / (std::pow(beta, k) * unit.ck2[k - 1]) - 1.0));
    }
  }
  return {worst < 1e-12, fmt("max rel err %.1e", worst)};
}

Outcome c6_variance() {
  const auto solver = mc_solver(0.1);
  const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, 0.1);
  const auto coeffs = chaos::chaos_coefficients(6, m, solver.coupling().beta, mc_pair());
  const auto v = chaos::variance_from_chaos(coeffs);
  const auto mo = sim::estimate_moments(eps01_samples());
  const double se = std::hypot(mo.variance_se, v.partial_error);
  return {std::abs(mo.variance - v.total()) < 3.0 * se,
          fmt("MC %.5f +- %.5f vs chaos %.5f (sum %.5f + tail %.5f), z = %.2f", mo.variance, mo.variance_se,
              v.total(), v.partial_sum, v.tail, (mo.variance - v.total()) / se)};
}

Outcome c7_correlation() {
  const auto solver = mc_solver(0.1);
  const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, 0.1);
  const auto coeffs = chaos::chaos_coefficients(6, m, solver.coupling().beta, mc_pair());
  const std::vector<double> taus{0.1, 0.3, 1.0};
  const auto samples = sim::sample_coupled(solver, mc_pair(), 2, 1000, taus);
  std::vector<double> x, y(samples.size());
  for (const auto& s : samples) x.push_back(s.f_xi);
  bool ok = true;
  double prev = 1.0;
  std::string detail;
  for (std::size_t j = 0; j < taus.size(); ++j) {
    for (std::size_t i = 0; i < samples.size(); ++i) y[i] = samples[i].f_xi_tau[j];
    const auto c = sim::estimate_correlation(x, y);
    const double pred = chaos::correlation_from_chaos(coeffs, taus[j]);
    ok = ok && std::abs(c.corr - pred) < 3.0 * c.se && c.corr <= prev;
    prev = c.corr;
    detail += fmt("%stau %.1f: MC %.4f +- %.4f vs chaos %.4f", j ? "; " : "", taus[j], c.corr, c.se, pred);
  }
  return {ok, detail};
}

Outcome c8_escape() {
  const auto pair = mc_pair();
  int prev = 0;
  bool ok = true;
  std::string detail = "k*:";
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, eps);
    const auto c = chaos::chaos_coefficients(6, m, sim::beta_eps(0.0, eps, m.c_Phi).beta, pair);
    const int k = chaos::median_chaos_index(c);
    ok = ok && k >= prev;
    prev = k;
    detail += fmt(" %d", k);
  }
  return {ok, detail + " along eps 0.2, 0.1, 0.05 (theta 0)"};
}

Outcome c9_second_moment() {
  const auto pair = mc_pair();
  const double q2 = kernels::q2_pairing(kTheta, 1.0, pair).value;
  const double heat = kernels::heat_pairing(1.0, pair);
  std::vector<double> gaps;
  std::string detail = fmt("q2 %.5f; gaps:", q2);
  for (double eps : {0.4, 0.2, 0.1}) {
    auto f = eps == 0.1 ? eps01_samples() : sim::sample_observable(mc_solver(eps), pair, 3, 8000);
    for (double& v : f) v += heat;
    const auto mo = sim::estimate_moments(f);
    gaps.push_back(std::abs(mo.second_moment - q2));
    detail += fmt(" %.4f (+- %.4f)", gaps.back(), mo.second_moment_se);
  }
  return {gaps[1] < gaps[0] && gaps[2] < gaps[1], detail + " along eps 0.4, 0.2, 0.1"};
}

Outcome c10_slab() {
  const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, 0.05);
  const double beta = sim::beta_eps(0.0, 0.05, m.c_Phi).beta;
  double prev = INFINITY;
  bool ok = true;
  std::string detail = "ratio:";
  for (int e = 2; e <= 6; ++e) {
    const double len = std::ldexp(1.0, -e);
    const auto v = chaos::slab_variance(6, {0.5 - 0.5 * len, 0.5 + 0.5 * len}, m, beta, mc_pair());
    const double r = v.value / len;
    ok = ok && r < prev;
    prev = r;
    detail += fmt(" %.5f", r);
  }
  return {ok, detail + " for t - s = 2^-2 .. 2^-6 (eps 0.05)"};
}

Outcome c11_projector() {
  using namespace toy;
  const int n = 16;
  const auto x = ToyObservable::random({n, Alphabet::Sign}, 16);
  const auto p = project_Pn(x, CellPartition::singletons(n));
  const auto d1 = walsh_degree_part(x, 1);
  // Rounding is relative to the size of X, not of its projection.
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < p.table.size(); ++i) {
    diff = std::max(diff, std::abs(p.table[i] - d1.table[i]));
    scale = std::max(scale, std::abs(x.table[i]));
  }
  double worst = 0.0;
  for (int blocks : {1, 2, 4, 8, 16}) {
    const auto part = CellPartition::contiguous(n, blocks);
    const double a = project_Pn(x, part).second_moment();
    worst = std::max(worst, std::abs(a / block_variance_sum(x, part) - 1.0));
  }
  const double eps = std::numeric_limits<double>::epsilon();
  return {diff <= 64 * eps * scale && worst <= 64 * eps,
          fmt("max |P_n X - W_1 X| = %.1e (max |X| %.2f); norm identity rel err %.1e", diff, scale, worst)};
}

Outcome c12_reproducible() {
  const auto dir = std::filesystem::temp_directory_path() / "shflab-acceptance";
  std::filesystem::remove_all(dir);
  cli::ExperimentConfig c;
  c.experiment = cli::ExperimentKind::SensitivityCurve;
  c.theta = kTheta;
  c.eps_ladder = {0.4, 0.2};
  c.tau_grid = {0.0, 0.3};
  c.replicas = 24;
  c.seed = 12;
  c.quadrature.chaos_order = 3;
  c.quadrature.simplex_samples = 20000;
  std::vector<std::string> bodies;
  for (const char* threads : {"1", "4", "1", "2"}) {
    ::setenv("SHFLAB_THREADS", threads, 1);
    c.output = (dir / std::to_string(bodies.size())).string();
    cli::run_experiment(c);
    std::ifstream in(std::filesystem::path(c.output) / "sensitivity-curve.csv", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    bodies.push_back(ss.str());
  }
  ::unsetenv("SHFLAB_THREADS");
  std::filesystem::remove_all(dir);
  bool same = !bodies[0].empty();
  for (const auto& b : bodies) same = same && b == bodies[0];
  return {same, fmt("4 runs (threads 1, 4, 1, 2), %zu-byte CSV bodies identical: %s", bodies[0].size(),
                    same ? "yes" : "no")};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // <= 0: no runtime limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "j-function golden value", 1.0, c1_golden},
      {2, "j-function small-time bound", 10.0, c2_bound},
      {3, "W pairing vs 8d Monte Carlo", 300.0, c3_wpair},
      {4, "limit-ratio shape", 600.0, c4_ratio},
      {5, "chaos beta^k scaling", 60.0, c5_scaling},
      {6, "variance identity at eps 0.1", 1800.0, c6_variance},
      {7, "correlation consistency at eps 0.1", 2700.0, c7_correlation},
      {8, "spectrum escape", 0.0, c8_escape},
      {9, "second-moment gap trend", 3600.0, c9_second_moment},
      {10, "slab-variance scaling", 0.0, c10_slab},
      {11, "projector exactness", 60.0, c11_projector},
      {12, "reproducibility", 0.0, c12_reproducible},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  double eps01_seconds = 0.0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // The shared eps = 0.1 run is charged to criterion 6 and again to 9.
    if (c.id == 6) eps01_seconds = seconds;
    if (c.id == 9) seconds += eps01_seconds;
    const bool in_time = c.limit_seconds <= 0.0 || seconds < c.limit_seconds;
    const bool pass = o.passed && in_time;
    failures += !pass;
    std::printf("[%s] %2d %s: %s  [%.1f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), seconds,
                in_time ? "" : ", over the runtime limit");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
