#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "shflab/errors.hpp"
#include "shflab/parallel.hpp"
#include "shflab/rng.hpp"
#include "shflab/she_sim.hpp"

using namespace shflab;
using kernels::GaussianBump;
using kernels::TestFunctionPair;

namespace {

GaussianBump unit_bump(double w) { return {{0.0, 0.0}, w, 1.0 / (2.0 * std::numbers::pi * w * w)}; }

// 32 x 32 cells of side 0.1 at eps = 0.2: small enough for the n^4 oracle.
struct SmallSetup {
  sim::MollifierSpec m = sim::build_mollifier(sim::MollifierShape::Gaussian, 0.2);
  sim::Lattice lattice;
  SmallSetup() {
    lattice.box_side = 3.2;
    lattice.n = 32;
    lattice.dt = 1.0 / 100.0;
    lattice.max_stability_ratio = 0.25;
  }
  sim::SheSolver solver(double beta) const { return {lattice, m, {0.0, 0.2, beta}}; }
};

// The production box at eps = 0.2: cheap enough for per-replica checks.
sim::SheSolver mid_solver(double beta) {
  const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, 0.2);
  sim::Lattice l;
  l.n = 128;
  l.dt = 1.0 / 100.0;
  l.max_stability_ratio = 0.25;
  return {l, m, {0.0, 0.2, beta}};
}

// <u(1), g> stepped by hand: the small box is below the support floor that
// run_observable enforces.
std::vector<double> raw_observables(const sim::SheSolver& solver, const GaussianBump& g, int replicas,
                                    std::uint64_t seed) {
  const sim::NoiseBank bank(seed, 0);
  std::vector<double> z(replicas);
  auto ws = solver.make_workspace();
  for (int r = 0; r < replicas; ++r) {
    auto st = solver.initial_state(g);
    for (int k = 0; k < solver.lattice().steps(); ++k) {
      solver.noise_increment(bank, r, k, ws.dw, ws);
      solver.evolve_step(st, ws.dw, ws);
    }
    z[r] = solver.observe(st, g);
  }
  return z;
}

}  // namespace

TEST_CASE("Philox known-answer vectors and lane batching") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32(Philox4x32::Key{0, 0})(C{0, 0, 0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32(Philox4x32::Key{0xffffffff, 0xffffffff})(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32(Philox4x32::Key{0xa4093822, 0x299f31d0})(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});

  const Philox4x32 gen(0x1234abcd5678ULL);
  std::vector<std::uint32_t> first(150), o0(150), o1(150), o2(150), o3(150);
  for (std::size_t i = 0; i < first.size(); ++i) first[i] = static_cast<std::uint32_t>(7 * i + 3);
  gen.lanes(first.data(), first.size(), 11, 22, 33, o0.data(), o1.data(), o2.data(), o3.data());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(gen(C{first[i], 11, 22, 33}) == C{o0[i], o1[i], o2[i], o3[i]});
  }
}

TEST_CASE("lattice defaults and validation") {
  const auto l = sim::Lattice::for_epsilon(0.1);
  CHECK(l.n == 256);
  CHECK(l.dt == 1.0 / 800.0);
  CHECK(l.steps() == 800);
  CHECK(l.stability_ratio == doctest::Approx(0.125));

  sim::Lattice bad = l;
  bad.n = 200;
  CHECK_THROWS_AS(bad.validate(0.1), ConfigError);
  bad = l;
  bad.n = 128;
  CHECK_THROWS_AS(bad.validate(0.1), ConfigError);
  bad = l;
  bad.dt = 1.0 / 400.0;
  CHECK_THROWS_AS(bad.validate(0.1), ConfigError);
  bad.max_stability_ratio = 0.25;
  CHECK_NOTHROW(bad.validate(0.1));
  bad.dt = 0.3;
  CHECK_THROWS_AS(bad.validate(0.1), ConfigError);
}

TEST_CASE("support check") {
  const auto l = sim::Lattice::for_epsilon(0.1);
  CHECK_NOTHROW(sim::check_support({unit_bump(0.3), unit_bump(0.3)}, l));
  // Wide enough to leak across a 12.8 box within unit time.
  CHECK_THROWS_AS(sim::check_support({unit_bump(0.9), unit_bump(0.9)}, l), ConfigError);
  CHECK_THROWS_AS(sim::check_support({unit_bump(2.0), unit_bump(2.0)}, l), ConfigError);
  const TestFunctionPair off_grid{kernels::sample_on_grid(unit_bump(0.3), 12.8, 128), unit_bump(0.3)};
  CHECK_THROWS_AS(sim::check_support(off_grid, l), ConfigError);
}

TEST_CASE("noise bank regenerates any slice bit-identically") {
  const SmallSetup s;
  const auto solver = s.solver(1.0);
  auto ws = solver.make_workspace();
  const sim::NoiseBank a(99, 0), b(99, 1);
  RealBuffer x = solver.grid().make_real(), y = solver.grid().make_real(), z = solver.grid().make_real();
  solver.noise_increment(a, 5, 17, x, ws);
  solver.noise_increment(a, 6, 3, z, ws);
  solver.noise_increment(a, 5, 17, y, ws);
  CHECK(x == y);
  solver.noise_increment(b, 5, 17, z, ws);
  CHECK(x != z);
  CHECK_THROWS(sim::NoiseBank(1, 1u << 16));
}

TEST_CASE("noise increment covariance") {
  const SmallSetup s;
  const auto solver = s.solver(1.0);
  auto ws = solver.make_workspace();
  const sim::NoiseBank bank(3, 0);
  const int n = solver.grid().n();
  const double h = solver.grid().spacing();
  // Site variance and lag-(2 cells) covariance against dt Phi_eps.
  double v0 = 0.0, v2 = 0.0;
  const int draws = 400;
  RealBuffer dw = solver.grid().make_real();
  for (int k = 0; k < draws; ++k) {
    solver.noise_increment(bank, 0, k, dw, ws);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        v0 += dw[i * n + j] * dw[i * n + j];
        v2 += dw[i * n + j] * dw[i * n + (j + 2) % n];
      }
  }
  v0 /= double(draws) * n * n;
  v2 /= double(draws) * n * n;
  const double dt = s.lattice.dt;
  CHECK(v0 == doctest::Approx(solver.increment_variance()).epsilon(0.02));
  CHECK(solver.increment_variance() == doctest::Approx(dt * s.m.Phi_eps(0.0)).epsilon(0.01));
  CHECK(v2 == doctest::Approx(dt * s.m.Phi_eps(2.0 * h)).epsilon(0.03));
}

TEST_CASE("beta = 0 is the discrete heat flow") {
  const auto solver = mid_solver(0.0);
  auto ws = solver.make_workspace();
  const sim::NoiseBank bank(1, 0);
  const auto g = unit_bump(0.3);
  auto st = solver.initial_state(g);
  const double h2 = std::pow(solver.grid().spacing(), 2);
  double mass0 = 0.0;
  for (double v : st.values) mass0 += v * h2;
  for (int k = 0; k < solver.lattice().steps(); ++k) {
    solver.noise_increment(bank, 0, k, ws.dw, ws);
    solver.evolve_step(st, ws.dw, ws);
  }
  double mass1 = 0.0;
  for (double v : st.values) mass1 += v * h2;
  CHECK(mass1 == doctest::Approx(mass0).epsilon(1e-12));
  // F is centred by the continuum heat pairing; the lattice error is small.
  CHECK(std::abs(sim::run_observable(solver, {g, g}, bank, 0)) < 1e-3);
}

TEST_CASE("fields stay positive under strong coupling") {
  const SmallSetup s;
  const auto solver = s.solver(6.0);
  auto ws = solver.make_workspace();
  const sim::NoiseBank bank(2, 0);
  auto st = solver.initial_state(unit_bump(0.3));
  for (int k = 0; k < s.lattice.steps(); ++k) {
    solver.noise_increment(bank, 0, k, ws.dw, ws);
    solver.evolve_step(st, ws.dw, ws);
  }
  for (double v : st.values) CHECK_FALSE(v < 0.0);
}

TEST_CASE("results do not depend on the worker count") {
  const auto solver = mid_solver(2.0);
  const auto g = unit_bump(0.3);
  const sim::NoiseBank bank(11, 0);
  std::vector<double> one(12), many(12);
  parallel_for(one.size(), [&](std::size_t r) { one[r] = sim::run_observable(solver, {g, g}, bank, r); }, 1);
  parallel_for(many.size(), [&](std::size_t r) { many[r] = sim::run_observable(solver, {g, g}, bank, r); }, 5);
  CHECK(one == many);
}

TEST_CASE("coupled runs") {
  const auto solver = mid_solver(2.0);
  const auto g = unit_bump(0.3);
  const TestFunctionPair pair{g, g};
  const sim::NoiseBank xi(21, 0), xi_p(21, 1);
  const std::vector<double> taus{0.0, 0.5, 40.0};
  const auto c = sim::run_coupled(solver, pair, xi, xi_p, 4, taus);
  CHECK(c.f_xi == sim::run_observable(solver, pair, xi, 4));
  CHECK(c.f_xi_tau[0] == c.f_xi);
  // exp(-40) underflows against 1: the trajectory is the one driven by xi'.
  CHECK(c.f_xi_tau[2] == doctest::Approx(sim::run_observable(solver, pair, xi_p, 4)).epsilon(1e-9));
  CHECK_THROWS_AS(sim::run_coupled(solver, pair, xi, xi, 0, taus), ConfigError);
  const std::vector<double> negative{-0.1};
  CHECK_THROWS_AS(sim::run_coupled(solver, pair, xi, xi_p, 0, negative), DomainError);
}

TEST_CASE("second moment matches the exact pair recursion of the lattice scheme") {
  const SmallSetup s;
  const auto g = unit_bump(0.3);
  const auto sampled = kernels::sample_on_grid(g, s.lattice.box_side, s.lattice.n);
  for (double beta : {1.0, 3.0}) {
    const auto solver = s.solver(beta);
    const double exact = oracle::lattice_second_moment(0.2, beta, s.lattice.box_side, s.lattice.n, s.lattice.dt,
                                                       s.lattice.steps(), sampled.values, sampled.values);
    const auto mo = sim::estimate_moments(raw_observables(solver, g, 3000, 77 + static_cast<int>(beta)));
    CAPTURE(beta);
    CAPTURE(exact);
    CHECK(std::abs(mo.second_moment - exact) < 3.0 * mo.second_moment_se);
    // Martingale: the mean is the noiseless value.
    const double flat = raw_observables(s.solver(0.0), g, 1, 0)[0];
    CHECK(std::abs(mo.mean - flat) < 3.0 * mo.mean_se);
  }
}

TEST_CASE("moment and correlation estimators") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  const int n = 20000;
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = z(rng);
    y[i] = 0.5 * x[i] + std::sqrt(0.75) * z(rng);
  }
  const auto c = estimate_correlation(x, y);
  CHECK(std::abs(c.corr - 0.5) < 3.0 * c.se);
  CHECK(c.se == doctest::Approx(0.75 / std::sqrt(n)).epsilon(0.1));

  const auto m = estimate_moments(x);
  CHECK(std::abs(m.mean) < 3.0 * m.mean_se);
  CHECK(std::abs(m.variance - 1.0) < 3.0 * m.variance_se);
  CHECK(m.variance_se == doctest::Approx(std::sqrt(2.0 / n)).epsilon(0.1));

  const std::vector<double> flat(10, 1.0);
  CHECK_THROWS_AS(estimate_correlation(flat, std::span(x).first(10)), UndefinedCorrelation);
  const std::vector<double> a{1.0, 2.0, 3.0}, b{2.0, 4.0, 6.5};
  CHECK(estimate_correlation(a, b).corr > 0.99);
}

TEST_CASE("mollifier and coupling") {
  for (double eps : {0.4, 0.1}) {
    const auto g = sim::build_mollifier(sim::MollifierShape::Gaussian, eps);
    const auto b = sim::build_mollifier(sim::MollifierShape::CompactBump, eps);
    for (const auto* m : {&g, &b}) {
      // Radial mass of Phi_eps and phi_eps.
      double big = 0.0, small = 0.0;
      const int nodes = 40000;
      const double rmax = 12.0 * eps, dr = rmax / nodes;
      for (int i = 0; i < nodes; ++i) {
        const double r = (i + 0.5) * dr;
        big += 2.0 * std::numbers::pi * r * m->Phi_eps(r) * dr;
        small += 2.0 * std::numbers::pi * r * m->phi_eps(r) * dr;
      }
      CHECK(big == doctest::Approx(1.0).epsilon(1e-5));
      CHECK(small == doctest::Approx(1.0).epsilon(1e-5));
      CHECK(m->Phi_at_zero_eps == doctest::Approx(m->Phi_eps(0.0)).epsilon(1e-9));
    }
    CHECK(g.c_Phi == doctest::Approx(oracle::gaussian_c_phi()).epsilon(1e-12));
  }
  const auto bump = sim::build_mollifier(sim::MollifierShape::CompactBump, 0.1);
  const auto mc = oracle::compact_bump_c_phi_mc(400000, 31);
  CHECK(std::abs(bump.c_Phi - mc.mean) < 3.0 * mc.se);

  const double cphi = oracle::gaussian_c_phi();
  for (double eps : {0.4, 0.1, 0.01}) {
    for (double theta : {-3.0, 0.0, 1.5}) {
      const double L = -std::log(eps);
      const double expected = 2.0 * std::numbers::pi / L +
                              std::numbers::pi / (L * L) *
                                  (theta - 2.0 * std::log(2.0) + 2.0 * std::numbers::egamma + 2.0 * cphi);
      const auto c = sim::beta_eps(theta, eps, cphi);
      CHECK(c.beta == doctest::Approx(expected).epsilon(1e-14));
      CHECK(sim::beta_eps_sigma(c, 0.0) == c.beta);
      CHECK(sim::beta_eps_sigma(c, 1.0) == doctest::Approx(c.beta * std::exp(-0.5 / L)));
    }
  }
  CHECK(sim::beta_eps(0.0, 0.1, cphi).beta == doctest::Approx(3.4815).epsilon(1e-4));
  CHECK_THROWS(sim::beta_eps(0.0, 1.5, cphi));
  CHECK_THROWS(sim::build_mollifier(sim::MollifierShape::Gaussian, -0.1));
  CHECK(sim::mollifier_shape_from_string("compact-bump") == sim::MollifierShape::CompactBump);
  CHECK_THROWS_AS(sim::mollifier_shape_from_string("box"), ConfigError);
}

TEST_CASE("one-cell lattice is a geometric Brownian motion") {
  const double eps = 0.2;
  const auto m = sim::build_mollifier(sim::MollifierShape::Gaussian, eps);
  sim::Lattice l;
  l.box_side = 0.1;
  l.n = 1;
  l.dt = 1.0 / 200.0;
  const double beta = 2.0;
  const sim::SheSolver solver(l, m, {0.0, eps, beta});
  const kernels::GriddedFunction one{0.1, 1, {1.0}};
  const double s2 = beta * solver.increment_variance() * l.steps();

  const sim::NoiseBank bank(8, 0);
  auto ws = solver.make_workspace();
  const int replicas = 20000;
  std::vector<double> u(replicas), logu(replicas);
  for (int r = 0; r < replicas; ++r) {
    auto st = solver.initial_state(one);
    for (int k = 0; k < l.steps(); ++k) {
      solver.noise_increment(bank, r, k, ws.dw, ws);
      solver.evolve_step(st, ws.dw, ws);
    }
    u[r] = st.values[0];
    logu[r] = std::log(u[r]);
  }
  // log u(1) ~ N(-s2 / 2, s2), so E u = 1 and E u^2 = exp(s2).
  const auto mu = estimate_moments(u);
  const auto ml = estimate_moments(logu);
  CHECK(std::abs(mu.mean - 1.0) < 3.0 * mu.mean_se);
  CHECK(std::abs(mu.second_moment - std::exp(s2)) < 3.0 * mu.second_moment_se);
  CHECK(std::abs(ml.mean + 0.5 * s2) < 3.0 * ml.mean_se);
  CHECK(std::abs(ml.variance - s2) < 3.0 * ml.variance_se);
}
