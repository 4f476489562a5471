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

#include <memory>
#include <string>
#include <vector>

#include "shflab/quadrature.hpp"

namespace shflab::sim {

enum class MollifierShape { Gaussian, CompactBump };

std::string to_string(MollifierShape s);
MollifierShape mollifier_shape_from_string(const std::string& s);

/// Radial profile sampled on a uniform grid with natural cubic spline
/// interpolation; zero beyond the last node.
class RadialProfile {
 public:
  RadialProfile() = default;
  RadialProfile(double r_max, std::vector<double> values);
  double operator()(double r) const;
  double r_max() const { return r_max_; }

 private:
  double r_max_ = 0.0;
  std::vector<double> values_;
  std::vector<double> second_;
};

/// Unit-scale mollifier phi, its self-convolution Phi = phi * phi, and the
/// rescaled quantities at scale epsilon.
///
/// gaussian:     phi(x) = exp(-|x|^2 / 2) / (2 pi), Phi = N(0, 2 I).
/// compact-bump: phi(x) = C exp(-1 / (1 - |x|^2)) on the unit disc.
struct MollifierSpec {
  MollifierShape shape = MollifierShape::Gaussian;
  double epsilon = 0.1;
  /// Phi_eps(0) = Phi(0) / eps^2.
  double Phi_at_zero_eps = 0.0;
  /// int int Phi(x) log|x - x'| Phi(x') dx dx'.
  double c_Phi = 0.0;
  /// Normalising constant of the compact bump (unused for gaussian).
  double bump_norm = 0.0;
  std::shared_ptr<const RadialProfile> Phi_table;

  double phi(double r) const;
  double Phi(double r) const;
  double phi_eps(double r) const { return phi(r / epsilon) / (epsilon * epsilon); }
  double Phi_eps(double r) const { return Phi(r / epsilon) / (epsilon * epsilon); }
  /// Support radius of phi at unit scale (infinite support reported as a
  /// radius beyond which phi < 1e-300).
  double phi_support() const;
};

MollifierSpec build_mollifier(MollifierShape shape, double epsilon, const QuadratureSpec& quad = {});

/// c_Phi of the gaussian mollifier in closed form: (3/2) log 2 - gamma / 2.
double gaussian_c_Phi();

struct Coupling {
  double theta = 0.0;
  double epsilon = 0.1;
  double beta = 0.0;
};

/// 2 pi / |log eps| + pi / |log eps|^2 (theta - 2 log 2 + 2 gamma + 2 c_Phi).
Coupling beta_eps(double theta, double epsilon, double c_Phi);

/// beta_eps * exp(-sigma / (2 |log eps|)): the coupling seen after an
/// Ornstein-Uhlenbeck resampling at time sigma / (2 |log eps|).
double beta_eps_sigma(const Coupling& c, double sigma);

}  // namespace shflab::sim
