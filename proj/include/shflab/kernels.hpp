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

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "shflab/heat_kernel.hpp"
#include "shflab/quadrature.hpp"

namespace shflab::kernels {

/// g(x) = amplitude * exp(-|x - center|^2 / (2 width^2)).
struct GaussianBump {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double width = 1.0;
  double amplitude = 1.0;

  double operator()(const Eigen::Vector2d& x) const;
  /// Integral over the plane.
  double mass() const;
  void validate() const;
};

/// Samples of a compactly supported function on the periodic grid
/// [-L/2, L/2)^2 with n points per side (see PeriodicGrid for the layout).
struct GriddedFunction {
  double box_side = 8.0;
  int n = 64;
  std::vector<double> values;

  void validate() const;
};

using TestFunction = std::variant<GaussianBump, GriddedFunction>;

struct TestFunctionPair {
  TestFunction g;
  TestFunction g_prime;

  bool is_gaussian() const;
  void validate() const;
};

/// Sample a Gaussian bump on the grid layout used by GriddedFunction.
GriddedFunction sample_on_grid(const GaussianBump& bump, double box_side, int n);

enum class PairingMethod { GaussianAnalytic, Grid };
std::string to_string(PairingMethod m);

struct WPairingResult {
  double value = 0.0;
  double est_error = 0.0;
  PairingMethod method = PairingMethod::GaussianAnalytic;
};

/// t * j^theta(t) from log t, so arguments far below the smallest double
/// are representable. Positive for every finite input.
QuadratureResult t_times_j_theta(double theta, double log_t, const QuadratureSpec& quad);

/// j^theta(t) = int_0^inf t^(u-1) e^(theta u) / Gamma(u) du.
double j_theta(double theta, double t, const QuadratureSpec& quad = {});
QuadratureResult j_theta_detailed(double theta, double t, const QuadratureSpec& quad = {});

/// j^theta tabulated on a log-spaced grid, interpolated by a natural cubic
/// spline in (log t, log j).
class KernelTable {
 public:
  static KernelTable build(double theta, double t_min, double t_max, int points,
                           const QuadratureSpec& quad = {});

  double theta() const { return theta_; }
  const std::vector<double>& t_grid() const { return t_grid_; }
  const std::vector<double>& j_values() const { return j_values_; }

  double operator()(double t) const;

  /// max over grid points t <= 1/2 of t |log t|^2 j(t).
  double small_time_bound() const;

 private:
  double theta_ = 0.0;
  std::vector<double> t_grid_;
  std::vector<double> j_values_;
  std::vector<double> log_t_;
  std::vector<double> log_j_;
  std::vector<double> second_;
};

/// <g (x) g, W^theta_bar(t) g' (x) g'>.
WPairingResult w_pairing(double theta_bar, double t, const TestFunctionPair& pair,
                         const QuadratureSpec& quad = QuadratureSpec::pairing_default());

/// <g, p(t) g'>.
double heat_pairing(double t, const TestFunctionPair& pair);

/// <g (x) g, Q<2>(t) g' (x) g'> = <g, p(t) g'>^2 + W-pairing.
WPairingResult q2_pairing(double theta, double t, const TestFunctionPair& pair,
                          const QuadratureSpec& quad = QuadratureSpec::pairing_default());

/// W^(theta - tau_bar)(1) pairing over W^theta(1) pairing.
double sensitivity_limit_ratio(double theta, double tau_bar, const TestFunctionPair& pair,
                               const QuadratureSpec& quad = QuadratureSpec::pairing_default());

}  // namespace shflab::kernels
