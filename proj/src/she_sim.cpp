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

#include "shflab/she_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "shflab/errors.hpp"
#include "shflab/parallel.hpp"
#include "shflab/rng.hpp"

namespace shflab::sim {

namespace {

constexpr double kNoiseModeCutoff = 1e-4;

// Flushes subnormals to zero for the lifetime of the guard. The far field of
// a Gaussian initial condition sits deep in the subnormal range, where x86
// arithmetic is two orders of magnitude slower; those values are below any
// observable.
class FlushSubnormals {
 public:
#if defined(__SSE__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

double periodic_offset(int i, int n, double h) {
  int d = i;
  if (d > n / 2) d -= n;
  return d * h;
}

double box_leakage(double center, double half_side, double sd) {
  const double s = std::sqrt(2.0) * sd;
  return 0.5 * (std::erfc((half_side - center) / s) + std::erfc((half_side + center) / s));
}

}  // namespace

int Lattice::steps() const { return static_cast<int>(std::lround(1.0 / dt)); }

Lattice Lattice::for_epsilon(double epsilon, double box_side) {
  if (!(epsilon > 0.0)) throw DomainError("Lattice::for_epsilon: epsilon must be positive");
  Lattice l;
  l.box_side = box_side;
  l.n = 2;
  while (box_side / l.n > 0.5 * epsilon) l.n *= 2;
  l.dt = 1.0 / std::ceil(8.0 / (epsilon * epsilon) - 1e-9);
  l.validate(epsilon);
  return l;
}

void Lattice::validate(double epsilon) {
  if (!(box_side > 0.0)) throw ConfigError("lattice: box side must be positive");
  if (n < 1 || (n & (n - 1)) != 0) throw ConfigError("lattice: n must be a power of two");
  if (!(dt > 0.0) || dt > 1.0) throw ConfigError("lattice: dt must lie in (0, 1]");
  if (std::abs(steps() * dt - 1.0) > 1e-9) throw ConfigError("lattice: 1/dt must be an integer");
  stability_ratio = dt / (epsilon * epsilon);
  if (stability_ratio > max_stability_ratio * (1.0 + 1e-12)) {
    throw ConfigError("lattice: dt exceeds " + std::to_string(max_stability_ratio) + " eps^2");
  }
  if (spacing() > 0.5 * epsilon * (1.0 + 1e-12)) {
    throw ConfigError("lattice: spacing exceeds eps/2");
  }
}

NoiseBank::NoiseBank(std::uint64_t seed, std::uint32_t bank) : seed_(seed), bank_(bank) {
  if (bank >= 0x10000u) throw ConfigError("NoiseBank: bank id must be below 2^16");
}

std::vector<std::uint32_t> NoiseBank::canonical_modes(const PeriodicGrid& grid) {
  const int n = grid.n();
  const int cols = grid.spectral_cols();
  std::vector<std::uint32_t> modes;
  modes.reserve(grid.spectral_size());
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < cols; ++c) {
      if ((c == 0 || c == n / 2) && r > n / 2) continue;
      modes.push_back(static_cast<std::uint32_t>(r * cols + c));
    }
  }
  return modes;
}

void NoiseBank::spectrum(const PeriodicGrid& grid, std::span<const std::uint32_t> modes,
                         std::uint32_t replica, std::uint32_t step, SpectralBuffer& out,
                         Scratch& scratch) const {
  const Philox4x32 gen(seed_);
  const std::size_t m = modes.size();
  scratch.x.resize(m);
  scratch.y.resize(m);
  scratch.s.resize(m);
  for (auto* w : {&scratch.w0, &scratch.w1, &scratch.w2, &scratch.w3}) w->resize(m);
  scratch.retry.clear();
  gen.lanes(modes.data(), m, step, replica, bank_, scratch.w0.data(), scratch.w1.data(),
            scratch.w2.data(), scratch.w3.data());

  // Polar method in two passes: candidate selection, then a vectorised
  // radial factor. Modes whose block yields no accepted point fall back to
  // the scalar generator, which continues the same counter sequence.
  constexpr double scale = 0x1p-31;
  const std::uint32_t* w0 = scratch.w0.data();
  const std::uint32_t* w1 = scratch.w1.data();
  const std::uint32_t* w2 = scratch.w2.data();
  const std::uint32_t* w3 = scratch.w3.data();
  double* xs = scratch.x.data();
  double* ys = scratch.y.data();
  double* ss = scratch.s.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double x0 = (static_cast<double>(w0[i]) + 0.5) * scale - 1.0;
    const double y0 = (static_cast<double>(w1[i]) + 0.5) * scale - 1.0;
    const double x1 = (static_cast<double>(w2[i]) + 0.5) * scale - 1.0;
    const double y1 = (static_cast<double>(w3[i]) + 0.5) * scale - 1.0;
    const double s0 = x0 * x0 + y0 * y0;
    const double s1 = x1 * x1 + y1 * y1;
    const bool first = s0 < 1.0;
    xs[i] = first ? x0 : x1;
    ys[i] = first ? y0 : y1;
    ss[i] = first ? s0 : s1;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (ss[i] >= 1.0) {
      scratch.retry.push_back(static_cast<std::uint32_t>(i));
      xs[i] = ys[i] = 0.0;
      ss[i] = 0.5;
    }
  }
  scratch.s = (-2.0 * scratch.s.log() / scratch.s).sqrt();
  scratch.x *= scratch.s;
  scratch.y *= scratch.s;
  for (std::uint32_t i : scratch.retry) {
    const auto [x, y] = polar_normal_pair(gen, {modes[i], step, replica, bank_});
    scratch.x[i] = x;
    scratch.y[i] = y;
  }

  const int n = grid.n();
  const int cols = grid.spectral_cols();
  const double total = static_cast<double>(grid.size());
  const double complex_sd = std::sqrt(0.5 * total);
  const double real_sd = std::sqrt(total);
  std::fill(out.begin(), out.end(), std::complex<double>{});
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t idx = modes[i];
    const int r = static_cast<int>(idx) / cols;
    const int c = static_cast<int>(idx) % cols;
    if (c != 0 && c != n / 2) {
      out[idx] = {complex_sd * scratch.x[i], complex_sd * scratch.y[i]};
    } else if (r == 0 || r == n / 2) {
      out[idx] = {real_sd * scratch.x[i], 0.0};
    } else {
      out[idx] = {complex_sd * scratch.x[i], complex_sd * scratch.y[i]};
      out[static_cast<std::size_t>(n - r) * cols + c] = std::conj(out[idx]);
    }
  }
}

SheSolver::SheSolver(const Lattice& lattice, const MollifierSpec& mollifier,
                     const Coupling& coupling)
    : lattice_(lattice), grid_(lattice.box_side, lattice.n), coupling_(coupling) {
  lattice_.validate(mollifier.epsilon);
  if (!(coupling.beta >= 0.0)) throw DomainError("SheSolver: beta must be >= 0");
  const int n = grid_.n();
  const double h = grid_.spacing();
  const double norm = 1.0 / static_cast<double>(grid_.size());

  // Taps of the sampled, periodised 1d Gaussian of variance dt, cut where
  // they fall below 1e-17 of the centre tap.
  const double var = lattice_.dt;
  // One periodic cell: the normalised heat step is the identity.
  const int reach = n == 1 ? 0 : static_cast<int>(std::ceil(std::sqrt(2.0 * var * 39.2) / h));
  if (2 * reach + 1 > n) throw ConfigError("lattice: heat step wider than the grid");
  heat_taps_.resize(2 * reach + 1);
  for (int j = -reach; j <= reach; ++j) {
    double v = 0.0;
    for (int p = -2; p <= 2; ++p) {
      const double x = j * h + p * grid_.box_side();
      v += std::exp(-0.5 * x * x / var);
    }
    heat_taps_[j + reach] = v;
  }
  const double tap_sum = pairwise_sum(heat_taps_);
  for (double& t : heat_taps_) t /= tap_sum;

  // Cell noise has variance dt / h^2; dW = h^2 sum_y phi_eps(x - y) xi(y).
  RealBuffer w = grid_.make_real();
  for (int r = 0; r < n; ++r) {
    const double dy = periodic_offset(r, n, h);
    for (int c = 0; c < n; ++c) {
      const double dx = periodic_offset(c, n, h);
      w[static_cast<std::size_t>(r) * n + c] = h * h * mollifier.phi_eps(std::hypot(dx, dy));
    }
  }
  // w is even, so its spectrum is real.
  SpectralBuffer w_hat = grid_.make_spectral();
  grid_.forward(w, w_hat);
  const double scale = std::sqrt(lattice_.dt) / h * norm;
  noise_filter_.resize(w_hat.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < w_hat.size(); ++i) {
    noise_filter_[i] = scale * w_hat[i].real();
    peak = std::max(peak, std::abs(noise_filter_[i]));
  }
  // Modes below kNoiseModeCutoff of the peak amplitude are never drawn. The
  // Ito correction uses the variance of the field actually synthesised.
  const int cols = grid_.spectral_cols();
  const double total = static_cast<double>(grid_.size());
  increment_variance_ = 0.0;
  for (std::uint32_t idx : NoiseBank::canonical_modes(grid_)) {
    if (std::abs(noise_filter_[idx]) <= kNoiseModeCutoff * peak) {
      noise_filter_[idx] = 0.0;
      continue;
    }
    noise_modes_.push_back(idx);
    const int r = static_cast<int>(idx) / cols;
    const int c = static_cast<int>(idx) % cols;
    // A canonical mode stands for itself and its conjugate unless self-paired.
    const bool self_paired = (c == 0 || c == n / 2) && (r == 0 || r == n / 2);
    increment_variance_ += (self_paired ? 1.0 : 2.0) * total * noise_filter_[idx] * noise_filter_[idx];
  }
}

SheSolver::Workspace SheSolver::make_workspace() const {
  Workspace ws;
  ws.spec = grid_.make_spectral();
  ws.dw = grid_.make_real();
  ws.dw_prime = grid_.make_real();
  ws.mixed = grid_.make_real();
  ws.tmp = grid_.make_real();
  ws.pad.resize(grid_.n() + heat_taps_.size() - 1);
  return ws;
}

RealBuffer SheSolver::sample(const kernels::TestFunction& f) const {
  RealBuffer out = grid_.make_real();
  if (const auto* b = std::get_if<kernels::GaussianBump>(&f)) {
    const auto s = kernels::sample_on_grid(*b, grid_.box_side(), grid_.n());
    std::copy(s.values.begin(), s.values.end(), out.begin());
    return out;
  }
  const auto& g = std::get<kernels::GriddedFunction>(f);
  if (g.n != grid_.n() || std::abs(g.box_side - grid_.box_side()) > 1e-12 * grid_.box_side()) {
    throw ConfigError("gridded test function does not match the simulation lattice");
  }
  std::copy(g.values.begin(), g.values.end(), out.begin());
  return out;
}

FieldState SheSolver::initial_state(const kernels::TestFunction& g) const {
  return {sample(g), 0.0};
}

void SheSolver::noise_increment(const NoiseBank& bank, std::uint32_t replica, std::uint32_t step,
                                RealBuffer& dw, Workspace& ws) const {
  bank.spectrum(grid_, noise_modes_, replica, step, ws.spec, ws.normals);
  for (std::size_t i = 0; i < ws.spec.size(); ++i) ws.spec[i] *= noise_filter_[i];
  grid_.backward(ws.spec, dw);
}

void SheSolver::evolve_step(FieldState& state, const RealBuffer& dw, Workspace& ws) const {
  const FlushSubnormals guard;
  const int n = grid_.n();
  const int taps = static_cast<int>(heat_taps_.size());
  const int reach = taps / 2;
  double* u = state.values.data();
  double* tmp = ws.tmp.data();
  double* pad = ws.pad.data();
  const double* w = heat_taps_.data();
  // Rows: periodic padding, then one shifted axpy per tap.
  for (int r = 0; r < n; ++r) {
    const double* row = u + static_cast<std::size_t>(r) * n;
    std::copy(row + n - reach, row + n, pad);
    std::copy(row, row + n, pad + reach);
    std::copy(row, row + reach, pad + reach + n);
    double* out = tmp + static_cast<std::size_t>(r) * n;
    for (int c = 0; c < n; ++c) out[c] = w[0] * pad[c];
    for (int j = 1; j < taps; ++j) {
      const double wj = w[j];
      const double* in = pad + j;
      for (int c = 0; c < n; ++c) out[c] += wj * in[c];
    }
  }
  // Columns: one contiguous axpy per tap over whole rows.
  for (int r = 0; r < n; ++r) {
    double* out = u + static_cast<std::size_t>(r) * n;
    for (int j = 0; j < taps; ++j) {
      const double* in = tmp + static_cast<std::size_t>(((r + j - reach) % n + n) % n) * n;
      const double wj = w[j];
      if (j == 0) {
        for (int c = 0; c < n; ++c) out[c] = wj * in[c];
      } else {
        for (int c = 0; c < n; ++c) out[c] += wj * in[c];
      }
    }
  }

  const double sb = std::sqrt(coupling_.beta);
  const double drift = 0.5 * coupling_.beta * increment_variance_;
  auto field = as_array(state.values);
  field *= (sb * as_array(dw) - drift).exp();
  const double check = field.sum();
  const long step = std::lround(state.time / lattice_.dt);
  state.time += lattice_.dt;
  if (!std::isfinite(check)) {
    throw NumericalOverflow("she-sim: non-finite field at step " + std::to_string(step), step);
  }
}

double SheSolver::observe(const FieldState& state, const kernels::TestFunction& g_prime) const {
  return grid_.inner(state.values, sample(g_prime));
}

void check_support(const kernels::TestFunctionPair& pair, const Lattice& lattice) {
  pair.validate();
  for (const auto* f : {&pair.g, &pair.g_prime}) {
    if (const auto* b = std::get_if<kernels::GaussianBump>(f)) {
      if (lattice.box_side < 8.0 * std::max(b->width, 1.0)) {
        throw ConfigError("lattice box must satisfy L >= 8 max(width, 1)");
      }
      const double sd = std::sqrt(b->width * b->width + 1.0);
      const double half = 0.5 * lattice.box_side;
      const double leak =
          box_leakage(b->center.x(), half, sd) + box_leakage(b->center.y(), half, sd);
      if (leak >= 1e-8) {
        throw ConfigError("heat spread of the test function leaks across the periodic box (" +
                          std::to_string(leak) + ")");
      }
    } else {
      const auto& g = std::get<kernels::GriddedFunction>(*f);
      if (g.n != lattice.n || std::abs(g.box_side - lattice.box_side) > 1e-12 * lattice.box_side) {
        throw ConfigError("gridded test function does not match the simulation lattice");
      }
    }
  }
}

double run_observable(const SheSolver& solver, const kernels::TestFunctionPair& pair,
                      const NoiseBank& bank, std::uint32_t replica) {
  const double zero_tau = 0.0;
  return run_coupled(solver, pair, bank, bank, replica, std::span<const double>(&zero_tau, 0)).f_xi;
}

CoupledSample run_coupled(const SheSolver& solver, const kernels::TestFunctionPair& pair,
                          const NoiseBank& bank, const NoiseBank& bank_prime,
                          std::uint32_t replica, std::span<const double> taus) {
  check_support(pair, solver.lattice());
  for (double tau : taus) {
    if (!(tau >= 0.0)) throw DomainError("run_coupled: tau must be >= 0");
  }
  if (!taus.empty() && bank.bank() == bank_prime.bank() && bank.seed() == bank_prime.seed()) {
    throw ConfigError("run_coupled: xi and xi' must use distinct banks");
  }
  auto ws = solver.make_workspace();
  const FieldState start = solver.initial_state(pair.g);
  FieldState base = start;
  std::vector<FieldState> coupled(taus.size(), start);
  const bool need_prime =
      std::any_of(taus.begin(), taus.end(), [](double tau) { return tau > 0.0; });

  const int steps = solver.lattice().steps();
  for (int step = 0; step < steps; ++step) {
    const auto s = static_cast<std::uint32_t>(step);
    solver.noise_increment(bank, replica, s, ws.dw, ws);
    if (need_prime) solver.noise_increment(bank_prime, replica, s, ws.dw_prime, ws);
    solver.evolve_step(base, ws.dw, ws);
    for (std::size_t j = 0; j < taus.size(); ++j) {
      if (taus[j] == 0.0) {
        solver.evolve_step(coupled[j], ws.dw, ws);
        continue;
      }
      const double a = std::exp(-taus[j]);
      const double b = std::sqrt(-std::expm1(-2.0 * taus[j]));
      as_array(ws.mixed) = a * as_array(ws.dw) + b * as_array(ws.dw_prime);
      solver.evolve_step(coupled[j], ws.mixed, ws);
    }
  }
  const double centre = kernels::heat_pairing(1.0, pair);
  CoupledSample out;
  out.f_xi = solver.observe(base, pair.g_prime) - centre;
  for (const auto& c : coupled) out.f_xi_tau.push_back(solver.observe(c, pair.g_prime) - centre);
  return out;
}

std::vector<double> sample_observable(const SheSolver& solver, const kernels::TestFunctionPair& pair,
                                      std::uint64_t seed, std::size_t count) {
  check_support(pair, solver.lattice());
  const NoiseBank bank(seed, 0);
  std::vector<double> out(count);
  parallel_for(count, [&](std::size_t r) {
    out[r] = run_observable(solver, pair, bank, static_cast<std::uint32_t>(r));
  });
  return out;
}

std::vector<CoupledSample> sample_coupled(const SheSolver& solver,
                                          const kernels::TestFunctionPair& pair, std::uint64_t seed,
                                          std::size_t count, std::span<const double> taus) {
  check_support(pair, solver.lattice());
  const NoiseBank xi(seed, 0), xi_prime(seed, 1);
  std::vector<CoupledSample> out(count);
  parallel_for(count, [&](std::size_t r) {
    out[r] = run_coupled(solver, pair, xi, xi_prime, static_cast<std::uint32_t>(r), taus);
  });
  return out;
}

}  // namespace shflab::sim
