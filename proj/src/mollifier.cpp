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

#include "shflab/mollifier.hpp"

#include <cmath>
#include <functional>
#include <numbers>

#include "shflab/errors.hpp"

namespace shflab::sim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = 0.57721566490153286060651209;

double bump_profile(double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

// Phi(rho) = int phi(x) phi(x - y) dx, |y| = rho, in polar coordinates
// around the origin; the integrand is smooth so fixed Gauss-Legendre
// converges fast.
double bump_self_convolution(double rho, double norm) {
  static const GaussLegendre radial(64);
  static const GaussLegendre angular(64);
  double acc = 0.0;
  for (int i = 0; i < radial.order(); ++i) {
    const double r = 0.5 * (1.0 + radial.nodes[i]);
    const double wr = 0.5 * radial.weights[i];
    const double pr = bump_profile(r);
    if (pr == 0.0) continue;
    double inner = 0.0;
    for (int j = 0; j < angular.order(); ++j) {
      const double a = 0.5 * kPi * (1.0 + angular.nodes[j]);
      const double d2 = r * r + rho * rho - 2.0 * r * rho * std::cos(a);
      inner += 0.5 * kPi * angular.weights[j] * bump_profile(std::sqrt(std::max(d2, 0.0)));
    }
    acc += wr * r * pr * 2.0 * inner;
  }
  return acc * norm * norm;
}

}  // namespace

std::string to_string(MollifierShape s) {
  return s == MollifierShape::Gaussian ? "gaussian" : "compact-bump";
}

MollifierShape mollifier_shape_from_string(const std::string& s) {
  if (s == "gaussian") return MollifierShape::Gaussian;
  if (s == "compact-bump") return MollifierShape::CompactBump;
  throw ConfigError("unknown mollifier shape '" + s + "'");
}

RadialProfile::RadialProfile(double r_max, std::vector<double> values)
    : r_max_(r_max), values_(std::move(values)) {
  const std::size_t n = values_.size();
  const double h = r_max_ / static_cast<double>(n - 1);
  second_.assign(n, 0.0);
  std::vector<double> diag(n, 4.0), rhs(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    rhs[i] = 6.0 * (values_[i + 1] - 2.0 * values_[i] + values_[i - 1]) / (h * h);
  }
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double m = 1.0 / diag[i - 1];
    diag[i] -= m;
    rhs[i] -= m * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    second_[i] = (rhs[i] - (i + 2 < n ? second_[i + 1] : 0.0)) / diag[i];
  }
}

double RadialProfile::operator()(double r) const {
  if (r >= r_max_) return 0.0;
  const double h = r_max_ / static_cast<double>(values_.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(r / h), values_.size() - 2);
  const double b = (r - i * h) / h;
  const double a = 1.0 - b;
  return a * values_[i] + b * values_[i + 1] +
         ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
}

double MollifierSpec::phi(double r) const {
  if (shape == MollifierShape::Gaussian) return std::exp(-0.5 * r * r) / (2.0 * kPi);
  return bump_norm * bump_profile(r);
}

double MollifierSpec::Phi(double r) const {
  if (shape == MollifierShape::Gaussian) return std::exp(-0.25 * r * r) / (4.0 * kPi);
  return (*Phi_table)(r);
}

double MollifierSpec::phi_support() const {
  return shape == MollifierShape::Gaussian ? 38.6 : 1.0;
}

double gaussian_c_Phi() { return 1.5 * std::log(2.0) - 0.5 * kEulerGamma; }

MollifierSpec build_mollifier(MollifierShape shape, double epsilon, const QuadratureSpec& quad) {
  if (!(epsilon > 0.0)) throw DomainError("build_mollifier: epsilon must be positive");
  quad.validate();
  MollifierSpec spec;
  spec.shape = shape;
  spec.epsilon = epsilon;

  // Radial Phi on [0, r_max] and c_Phi via the mean-value property of
  // log|.| in the plane: the circle average of log|x - y| over |y| = s is
  // log max(|x|, s).
  std::function<double(double)> Phi_r;
  double r_max = 0.0;
  if (shape == MollifierShape::Gaussian) {
    Phi_r = [](double r) { return std::exp(-0.25 * r * r) / (4.0 * kPi); };
    r_max = 30.0;
  } else {
    const auto mass =
        integrate_adaptive([](double r) { return 2.0 * kPi * r * bump_profile(r); }, 0.0, 1.0, quad);
    spec.bump_norm = 1.0 / mass.value;
    const int nodes = 801;
    std::vector<double> values(nodes);
    for (int i = 0; i < nodes; ++i) {
      values[i] = bump_self_convolution(2.0 * i / (nodes - 1), spec.bump_norm);
    }
    values.back() = 0.0;
    spec.Phi_table = std::make_shared<RadialProfile>(2.0, std::move(values));
    Phi_r = [table = spec.Phi_table](double r) { return (*table)(r); };
    r_max = 2.0;
  }

  QuadratureSpec q = quad;
  q.abs_tol = 0.0;
  auto shell = [&](double s) { return 2.0 * kPi * s * Phi_r(s); };
  auto inner_mass = [&](double r) { return integrate_adaptive(shell, 0.0, r, q).value; };
  auto outer_log = [&](double r) {
    return integrate_adaptive([&](double s) { return shell(s) * std::log(s); }, r, r_max, q).value;
  };
  auto c_integrand = [&](double r) {
    if (r <= 0.0) return 0.0;
    return shell(r) * (std::log(r) * inner_mass(r) + outer_log(r));
  };
  const std::vector<double> breaks = shape == MollifierShape::Gaussian
                                         ? std::vector<double>{0.0, 1.0, 2.0, 4.0, 8.0, r_max}
                                         : std::vector<double>{0.0, 0.5, 1.0, 1.5, r_max};
  spec.c_Phi = integrate_adaptive(c_integrand, std::span<const double>(breaks), q).value;
  spec.Phi_at_zero_eps = Phi_r(0.0) / (epsilon * epsilon);
  return spec;
}

Coupling beta_eps(double theta, double epsilon, double c_Phi) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("beta_eps: epsilon must lie in (0, 1)");
  }
  const double L = std::abs(std::log(epsilon));
  const double beta = 2.0 * kPi / L +
                      kPi / (L * L) * (theta - 2.0 * std::log(2.0) + 2.0 * kEulerGamma + 2.0 * c_Phi);
  return {theta, epsilon, beta};
}

double beta_eps_sigma(const Coupling& c, double sigma) {
  return c.beta * std::exp(-sigma / (2.0 * std::abs(std::log(c.epsilon))));
}

}  // namespace shflab::sim
