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
#include <string>
#include <vector>

#include "shflab/kernels.hpp"
#include "shflab/mollifier.hpp"
#include "shflab/quadrature.hpp"

namespace shflab::chaos {

enum class ChaosMethod { GaussianAnalytic, Grid };
std::string to_string(ChaosMethod m);

/// Time slab [s, t] inside [0, 1].
struct SlabSpec {
  double s = 0.0;
  double t = 1.0;

  /// With `scaling_regime`, additionally require t - s <= 1/2.
  void validate(bool scaling_regime = false) const;
  double length() const { return t - s; }
};

struct ChaosOptions {
  enum class Path { Auto, GaussianAnalytic, Grid };
  Path path = Path::Auto;
  /// Orders up to this one use tensor quadrature on the time simplex;
  /// higher orders use importance-sampled Dirichlet Monte Carlo.
  int deterministic_max_order = 2;
  int points_per_panel = 6;
  /// Dirichlet exponent for interior time gaps (ends use 1).
  double interior_exponent = 0.5;
  int strata = 64;
  std::uint64_t seed = 0x5eed'c4a0'5000'0001ULL;
  /// Sampling grid used when Gaussian bumps are sent down the grid path.
  double grid_box_side = 12.0;
  int grid_n = 16;
  int grid_time_order = 16;
  /// Relative MC error above which a term is flagged.
  double mc_warning_rel_error = 0.05;
};

struct ChaosTerm {
  double ck2 = 0.0;
  double err = 0.0;
  ChaosMethod method = ChaosMethod::GaussianAnalytic;
  bool monte_carlo = false;
  bool accuracy_warning = false;
};

/// Squared Fourier coefficient c_k^2 of Z_{0,1} g (x) g' at coupling beta.
/// With a slab, only the chaos mass whose interaction times all lie in
/// [s, t] is kept.
ChaosTerm chaos_coefficient(int k, const sim::MollifierSpec& mollifier, double beta,
                            const kernels::TestFunctionPair& pair, const QuadratureSpec& quad = {},
                            const ChaosOptions& opts = {}, const SlabSpec& slab = {});

struct ChaosCoefficients {
  double epsilon = 0.0;
  double beta = 0.0;
  int K = 0;
  /// ck2[k - 1] = c_k^2 for k = 1..K; always beta^k * unit_ck2[k - 1].
  std::vector<double> ck2;
  std::vector<double> est_errors;
  std::vector<double> unit_ck2;
  std::vector<double> unit_errors;
  ChaosMethod method = ChaosMethod::GaussianAnalytic;
  std::vector<bool> warnings;

  /// Same coefficients at another coupling, by the beta^k scaling.
  ChaosCoefficients rescaled(double new_beta) const;
};

ChaosCoefficients chaos_coefficients(int K, const sim::MollifierSpec& mollifier, double beta,
                                     const kernels::TestFunctionPair& pair,
                                     const QuadratureSpec& quad = {}, const ChaosOptions& opts = {},
                                     const SlabSpec& slab = {});

struct ChaosVariance {
  double partial_sum = 0.0;
  double partial_error = 0.0;
  /// Geometric extrapolation of the orders beyond K; kept apart from the sum.
  double tail = 0.0;
  double total() const { return partial_sum + tail; }
};

ChaosVariance variance_from_chaos(const ChaosCoefficients& coeffs);

/// sum_k e^{-k tau} c_k^2 / sum_k c_k^2 over the computed orders.
double correlation_from_chaos(const ChaosCoefficients& coeffs, double tau);

/// Smallest k whose cumulative chaos mass reaches half the total.
int median_chaos_index(const ChaosCoefficients& coeffs);

struct SlabVariance {
  double value = 0.0;
  double err = 0.0;
};

/// Variance of E[F | slab sigma-algebra] truncated at order K.
SlabVariance slab_variance(int K, const SlabSpec& slab, const sim::MollifierSpec& mollifier,
                           double beta, const kernels::TestFunctionPair& pair,
                           const QuadratureSpec& quad = {}, const ChaosOptions& opts = {});

}  // namespace shflab::chaos
