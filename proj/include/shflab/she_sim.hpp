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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "shflab/kernels.hpp"
#include "shflab/mollifier.hpp"
#include "shflab/periodic_grid.hpp"
#include "shflab/stats.hpp"

namespace shflab::sim {

/// Periodic lattice for the mollified SHE. The step must resolve the
/// mollifier: `stability_ratio` = dt / eps^2 is recorded at construction.
struct Lattice {
  double box_side = 12.8;
  int n = 256;
  double dt = 1.0 / 800.0;
  /// Largest admissible dt / eps^2.
  double max_stability_ratio = 0.125;
  double stability_ratio = 0.0;

  double spacing() const { return box_side / n; }
  int steps() const;  ///< steps to reach t = 1

  /// h <= eps/2 on the default box (grown to a power of two) and dt the
  /// largest 1/N <= eps^2/8.
  static Lattice for_epsilon(double epsilon, double box_side = 12.8);
  /// Checks n, h and dt against `epsilon`; records stability_ratio.
  void validate(double epsilon);
};

/// Philox-addressed Gaussian white noise. Step `step` of replica `replica`
/// in bank `bank` is a pure function of (seed, bank, replica, step, mode),
/// so any slice regenerates bit-identically. Bank 0 is xi, bank 1 is xi'.
class NoiseBank {
 public:
  /// `bank` must be below 2^16.
  NoiseBank(std::uint64_t seed, std::uint32_t bank);

  std::uint64_t seed() const { return seed_; }
  std::uint32_t bank() const { return bank_; }

  struct Scratch {
    Eigen::ArrayXd x, y, s;
    std::vector<std::uint32_t> w0, w1, w2, w3;
    std::vector<std::uint32_t> retry;
  };

  /// Canonical half-spectrum modes of an n x n grid: every entry except the
  /// rows n/2+1..n-1 of columns 0 and n/2, which are conjugates.
  static std::vector<std::uint32_t> canonical_modes(const PeriodicGrid& grid);

  /// Half spectrum of an n x n field of iid N(0,1) cells, restricted to the
  /// listed canonical modes (the rest are zero). Each mode's value depends
  /// only on (seed, bank, replica, step, mode index).
  void spectrum(const PeriodicGrid& grid, std::span<const std::uint32_t> modes,
                std::uint32_t replica, std::uint32_t step, SpectralBuffer& out,
                Scratch& scratch) const;

 private:
  std::uint64_t seed_;
  std::uint32_t bank_;
};

struct FieldState {
  RealBuffer values;
  double time = 0.0;
};

/// Lie-splitting solver for du = (1/2) Lap u dt + sqrt(beta) u dW_eps on a
/// periodic lattice. Read-only after construction; all mutable state lives
/// in a caller-owned Workspace so one solver serves every worker.
class SheSolver {
 public:
  struct Workspace {
    SpectralBuffer spec;
    RealBuffer dw, dw_prime, mixed, tmp;
    std::vector<double> pad;
    NoiseBank::Scratch normals;
  };

  SheSolver(const Lattice& lattice, const MollifierSpec& mollifier, const Coupling& coupling);

  const Lattice& lattice() const { return lattice_; }
  const PeriodicGrid& grid() const { return grid_; }
  const Coupling& coupling() const { return coupling_; }
  /// Exact per-site variance of the discrete increment dW_eps over one step.
  double increment_variance() const { return increment_variance_; }

  Workspace make_workspace() const;
  FieldState initial_state(const kernels::TestFunction& g) const;

  /// dW_eps for one step: mollified white noise, variance increment_variance().
  void noise_increment(const NoiseBank& bank, std::uint32_t replica, std::uint32_t step,
                       RealBuffer& dw, Workspace& ws) const;

  /// Heat step over dt (convolution with the lattice-sampled Gaussian of
  /// variance dt, a positive kernel), then u <- u exp(sqrt(beta) dW - beta var / 2).
  /// Throws NumericalOverflow on a non-finite field.
  void evolve_step(FieldState& state, const RealBuffer& dw, Workspace& ws) const;

  /// h^2 sum u g'.
  double observe(const FieldState& state, const kernels::TestFunction& g_prime) const;

 private:
  RealBuffer sample(const kernels::TestFunction& f) const;

  Lattice lattice_;
  PeriodicGrid grid_;
  Coupling coupling_;
  std::vector<double> heat_taps_;
  std::vector<std::uint32_t> noise_modes_;
  std::vector<double> noise_filter_;
  double increment_variance_ = 0.0;
};

/// Rejects boxes that do not contain the pair plus its unit-time heat
/// spread: L >= 8 max(width, 1) and p(1) leakage across the box < 1e-8.
void check_support(const kernels::TestFunctionPair& pair, const Lattice& lattice);

/// F = <u(1), g'> - <g, p(1) g'> with u(0) = g, driven by `bank`.
double run_observable(const SheSolver& solver, const kernels::TestFunctionPair& pair,
                      const NoiseBank& bank, std::uint32_t replica);

struct CoupledSample {
  double f_xi = 0.0;
  std::vector<double> f_xi_tau;  ///< one per tau, same order
};

/// F on xi and on exp(-tau) xi + sqrt(1 - exp(-2 tau)) xi' for each tau,
/// all trajectories stepped in lockstep from the same base arrays.
CoupledSample run_coupled(const SheSolver& solver, const kernels::TestFunctionPair& pair,
                          const NoiseBank& bank, const NoiseBank& bank_prime,
                          std::uint32_t replica, std::span<const double> taus);

/// run_observable for replicas 0..count-1 of bank (seed, 0), in replica order.
std::vector<double> sample_observable(const SheSolver& solver, const kernels::TestFunctionPair& pair,
                                      std::uint64_t seed, std::size_t count);

/// run_coupled for replicas 0..count-1 with xi = bank (seed, 0) and xi' =
/// bank (seed, 1), in replica order.
std::vector<CoupledSample> sample_coupled(const SheSolver& solver,
                                          const kernels::TestFunctionPair& pair, std::uint64_t seed,
                                          std::size_t count, std::span<const double> taus);

using shflab::CorrelationEstimate;
using shflab::estimate_correlation;
using shflab::estimate_moments;
using shflab::MomentEstimate;

}  // namespace shflab::sim
