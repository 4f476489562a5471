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

#include "shflab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shflab/errors.hpp"
#include "shflab/periodic_grid.hpp"

namespace shflab::kernels {

namespace {

constexpr double kPi = std::numbers::pi;

double digamma(double x) {
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  return acc + std::log(x) - 0.5 / x -
         f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f / 132))));
}

double trigamma(double x) {
  double acc = 0.0;
  while (x < 6.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double f = 1.0 / (x * x);
  return acc + 1.0 / x + 0.5 * f + f / x * (1.0 / 6 - f * (1.0 / 30 - f * (1.0 / 42 - f / 30)));
}

// Root of digamma(u) = a; digamma is increasing on (0, inf).
double digamma_inverse(double a) {
  double lo = -745.0;
  double hi = std::max(a, 1.0) + 5.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (digamma(std::exp(mid)) < a ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

const GaussianBump& bump(const TestFunction& f) {
  if (const auto* b = std::get_if<GaussianBump>(&f)) return *b;
  throw UnsupportedInput("gaussian-analytic path requires GaussianBump test functions");
}

const GriddedFunction& gridded(const TestFunction& f) {
  if (const auto* g = std::get_if<GriddedFunction>(&f)) return *g;
  throw UnsupportedInput("grid path requires GriddedFunction test functions");
}

double inner_tolerance(const QuadratureSpec& quad) { return std::min(1e-10, 1e-2 * quad.rel_tol); }

// u' = t exp(1 - 1/r) maps r in (0, 1] onto (0, t] and turns the
// 1/(u |log u|^2) singularity of j at the origin into a bounded integrand.
struct SingularTimeMap {
  double t;
  double log_u(double r) const { return std::log(t) + 1.0 - 1.0 / r; }
  double remaining(double r) const { return -t * std::expm1(1.0 - 1.0 / r); }
};

WPairingResult w_pairing_gaussian(double theta_bar, double t, const TestFunctionPair& pair,
                                  const QuadratureSpec& quad) {
  const auto& g = bump(pair.g);
  const auto& gp = bump(pair.g_prime);
  const double a = g.width * g.width;
  const double b = gp.width * gp.width;
  const double sigma = 0.5 * (a + b + t);
  const double d2 = (g.center - gp.center).squaredNorm();
  const double m = g.mass() * gp.mass();
  const double prefactor = m * m / (16.0 * kPi * kPi) * std::exp(-d2 / (2.0 * sigma)) /
                           (2.0 * kPi * sigma);
  // Closed form of the integral over the first heat time u in [0, T].
  auto split_integral = [a, b](double T) {
    return (std::log1p(T / a) + std::log1p(T / b)) / (a + b + T);
  };
  QuadratureSpec jq = quad;
  jq.rel_tol = inner_tolerance(quad);
  jq.abs_tol = 0.0;
  const SingularTimeMap map{t};
  auto integrand = [&](double r) {
    const double tj = t_times_j_theta(theta_bar, map.log_u(r), jq).value;
    return 4.0 * kPi * tj / (r * r) * split_integral(map.remaining(r));
  };
  static constexpr std::array<double, 7> kBreaks{0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
  const auto res = integrate_adaptive(integrand, std::span<const double>(kBreaks), quad);
  WPairingResult out;
  out.value = prefactor * res.value;
  out.est_error = prefactor * (res.abs_error + jq.rel_tol * std::abs(res.value));
  out.method = PairingMethod::GaussianAnalytic;
  return out;
}

double w_pairing_grid_once(double theta_bar, double t, const GriddedFunction& g,
                           const GriddedFunction& gp, int outer_order, int inner_order,
                           const QuadratureSpec& quad) {
  const PeriodicGrid grid(g.box_side, g.n);
  RealBuffer work = grid.make_real();
  SpectralBuffer g_hat = grid.make_spectral();
  SpectralBuffer gp_hat = grid.make_spectral();
  std::copy(g.values.begin(), g.values.end(), work.begin());
  grid.forward(work, g_hat);
  std::copy(gp.values.begin(), gp.values.end(), work.begin());
  grid.forward(work, gp_hat);

  SpectralBuffer scratch = grid.make_spectral();
  SpectralBuffer left = grid.make_spectral();
  SpectralBuffer right = grid.make_spectral();
  const double norm = 1.0 / static_cast<double>(grid.size());
  const int cols = grid.spectral_cols();
  // Spectrum of (p(s) * f)^2 given the spectrum of f.
  auto squared_flow = [&](const SpectralBuffer& f_hat, double s, SpectralBuffer& out) {
    for (int r = 0; r < grid.n(); ++r) {
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * cols + c;
        scratch[i] = f_hat[i] * (norm * std::exp(-0.5 * grid.wavenumber_sq(r, c) * s));
      }
    }
    grid.backward(scratch, work);
    as_array(work) = as_array(work).square();
    grid.forward(work, out);
  };

  QuadratureSpec jq = quad;
  jq.rel_tol = inner_tolerance(quad);
  const SingularTimeMap map{t};
  const GaussLegendre outer(outer_order);
  const GaussLegendre inner(inner_order);
  static constexpr std::array<double, 7> kBreaks{0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < kBreaks.size(); ++p) {
    const double lo = kBreaks[p], hi = kBreaks[p + 1];
    for (int i = 0; i < outer.order(); ++i) {
      const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * outer.nodes[i];
      const double wr = 0.5 * (hi - lo) * outer.weights[i];
      const double log_u = map.log_u(r);
      const double u_mid = t * std::exp(1.0 - 1.0 / r);
      const double T = map.remaining(r);
      const double tj = t_times_j_theta(theta_bar, log_u, jq).value;
      double acc = 0.0;
      for (int k = 0; k < inner.order(); ++k) {
        const double w = 0.5 * (1.0 + inner.nodes[k]);
        squared_flow(g_hat, T * w, left);
        squared_flow(gp_hat, T * (1.0 - w), right);
        acc += 0.5 * inner.weights[k] * T * grid.spectral_inner(left, right, 0.5 * u_mid);
      }
      total += wr * 4.0 * kPi * tj / (r * r) * acc;
    }
  }
  return total;
}

WPairingResult w_pairing_grid(double theta_bar, double t, const TestFunctionPair& pair,
                              const QuadratureSpec& quad) {
  const auto& g = gridded(pair.g);
  const auto& gp = gridded(pair.g_prime);
  if (g.n != gp.n || g.box_side != gp.box_side) {
    throw UnsupportedInput("grid path requires both test functions on the same grid");
  }
  const double fine = w_pairing_grid_once(theta_bar, t, g, gp, 10, 24, quad);
  const double coarse = w_pairing_grid_once(theta_bar, t, g, gp, 8, 16, quad);
  return {fine, std::abs(fine - coarse), PairingMethod::Grid};
}

}  // namespace

double GaussianBump::operator()(const Eigen::Vector2d& x) const {
  return amplitude * std::exp(-(x - center).squaredNorm() / (2.0 * width * width));
}

double GaussianBump::mass() const { return amplitude * 2.0 * kPi * width * width; }

void GaussianBump::validate() const {
  if (!(width > 0.0)) throw ConfigError("GaussianBump: width must be positive");
  if (!std::isfinite(amplitude)) throw ConfigError("GaussianBump: amplitude must be finite");
}

void GriddedFunction::validate() const {
  if (!(box_side > 0.0) || n < 2 || (n & (n - 1)) != 0) {
    throw ConfigError("GriddedFunction: need positive box side and power-of-two n");
  }
  if (values.size() != static_cast<std::size_t>(n) * n) {
    throw ConfigError("GriddedFunction: values must hold n*n samples");
  }
  // Support must stay away from the periodic boundary.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool edge = i == 0 || j == 0 || i == n - 1 || j == n - 1;
      if (edge && values[static_cast<std::size_t>(i) * n + j] != 0.0) {
        throw ConfigError("GriddedFunction: support touches the box boundary");
      }
    }
  }
}

bool TestFunctionPair::is_gaussian() const {
  return std::holds_alternative<GaussianBump>(g) && std::holds_alternative<GaussianBump>(g_prime);
}

void TestFunctionPair::validate() const {
  for (const auto* f : {&g, &g_prime}) std::visit([](const auto& v) { v.validate(); }, *f);
}

GriddedFunction sample_on_grid(const GaussianBump& bump, double box_side, int n) {
  GriddedFunction out{box_side, n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)};
  const double h = box_side / n;
  // The outermost ring stays zero so the sampled support is compact.
  for (int i = 1; i < n - 1; ++i) {
    for (int j = 1; j < n - 1; ++j) {
      out.values[static_cast<std::size_t>(i) * n + j] =
          bump(Eigen::Vector2d((i - n / 2) * h, (j - n / 2) * h));
    }
  }
  return out;
}

std::string to_string(PairingMethod m) {
  return m == PairingMethod::GaussianAnalytic ? "gaussian-analytic" : "grid";
}

QuadratureResult t_times_j_theta(double theta, double log_t, const QuadratureSpec& quad) {
  quad.validate();
  if (!std::isfinite(theta) || !std::isfinite(log_t)) {
    throw DomainError("j_theta: theta and t must be finite");
  }
  const double a = theta + log_t;
  // log of the integrand; concave in u because digamma is increasing.
  auto ell = [a](double u) { return a * u - std::lgamma(u); };
  const double peak = digamma_inverse(a);
  const double ell_peak = ell(peak);
  const double width = 1.0 / std::sqrt(trigamma(peak));

  double floor = ell_peak + std::log(quad.rel_tol) - 40.0;
  if (quad.abs_tol > 0.0) floor = std::min(floor, std::log(quad.abs_tol) - 40.0);
  double cutoff = peak + 16.0 * width;
  while (ell(cutoff) > floor) cutoff = peak + 2.0 * (cutoff - peak);

  std::vector<double> breaks{0.0, cutoff};
  if (1.0 < cutoff) breaks.push_back(1.0);
  for (double c : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
    const double u = peak + c * width;
    if (u > 0.0 && u < cutoff) breaks.push_back(u);
  }
  for (double s = 0.5 * peak; s > peak / 64.0; s *= 0.5) breaks.push_back(s);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto f = [&](double u) { return u > 0.0 ? std::exp(ell(u) - ell_peak) : 0.0; };
  auto res = integrate_adaptive(f, std::span<const double>(breaks), quad);
  const double scale = std::exp(ell_peak);
  res.value *= scale;
  res.abs_error *= scale;
  return res;
}

QuadratureResult j_theta_detailed(double theta, double t, const QuadratureSpec& quad) {
  if (!(t > 0.0)) throw DomainError("j_theta: t must be positive");
  auto res = t_times_j_theta(theta, std::log(t), quad);
  res.value /= t;
  res.abs_error /= t;
  return res;
}

double j_theta(double theta, double t, const QuadratureSpec& quad) {
  return j_theta_detailed(theta, t, quad).value;
}

KernelTable KernelTable::build(double theta, double t_min, double t_max, int points,
                               const QuadratureSpec& quad) {
  if (!(t_min > 0.0) || !(t_max > t_min) || points < 3) {
    throw ConfigError("KernelTable: need 0 < t_min < t_max and at least 3 points");
  }
  KernelTable table;
  table.theta_ = theta;
  const double lo = std::log(t_min), hi = std::log(t_max);
  for (int i = 0; i < points; ++i) {
    const double lt = lo + (hi - lo) * i / (points - 1);
    const double tj = t_times_j_theta(theta, lt, quad).value;
    table.log_t_.push_back(lt);
    table.log_j_.push_back(std::log(tj) - lt);
    table.t_grid_.push_back(std::exp(lt));
    table.j_values_.push_back(std::exp(table.log_j_.back()));
  }
  // Natural cubic spline second derivatives (uniform spacing).
  const int n = points;
  const double h = (hi - lo) / (n - 1);
  std::vector<double> diag(n, 4.0), rhs(n, 0.0);
  table.second_.assign(n, 0.0);
  for (int i = 1; i < n - 1; ++i) {
    rhs[i] = 6.0 * (table.log_j_[i + 1] - 2.0 * table.log_j_[i] + table.log_j_[i - 1]) / (h * h);
  }
  for (int i = 2; i < n - 1; ++i) {
    const double m = 1.0 / diag[i - 1];
    diag[i] -= m;
    rhs[i] -= m * rhs[i - 1];
  }
  for (int i = n - 2; i >= 1; --i) {
    table.second_[i] = (rhs[i] - (i + 1 < n - 1 ? table.second_[i + 1] : 0.0)) / diag[i];
  }
  return table;
}

double KernelTable::operator()(double t) const {
  if (!(t >= t_grid_.front() && t <= t_grid_.back())) {
    throw DomainError("KernelTable: t outside the tabulated range");
  }
  const double x = std::log(t);
  const double h = log_t_[1] - log_t_[0];
  const auto i = std::min<std::size_t>(static_cast<std::size_t>((x - log_t_[0]) / h),
                                       log_t_.size() - 2);
  const double b = (x - log_t_[i]) / h;
  const double a = 1.0 - b;
  const double y = a * log_j_[i] + b * log_j_[i + 1] +
                   ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
  return std::exp(y);
}

double KernelTable::small_time_bound() const {
  double best = 0.0;
  for (std::size_t i = 0; i < t_grid_.size(); ++i) {
    if (t_grid_[i] > 0.5) continue;
    best = std::max(best, t_grid_[i] * log_t_[i] * log_t_[i] * j_values_[i]);
  }
  return best;
}

WPairingResult w_pairing(double theta_bar, double t, const TestFunctionPair& pair,
                         const QuadratureSpec& quad) {
  if (!(t > 0.0)) throw DomainError("w_pairing: t must be positive");
  pair.validate();
  quad.validate();
  if (pair.is_gaussian()) return w_pairing_gaussian(theta_bar, t, pair, quad);
  return w_pairing_grid(theta_bar, t, pair, quad);
}

double heat_pairing(double t, const TestFunctionPair& pair) {
  if (!(t > 0.0)) throw DomainError("heat_pairing: t must be positive");
  pair.validate();
  if (pair.is_gaussian()) {
    const auto& g = bump(pair.g);
    const auto& gp = bump(pair.g_prime);
    const double var = g.width * g.width + gp.width * gp.width + t;
    return g.mass() * gp.mass() *
           gaussian_density2<double>(g.center - gp.center, var);
  }
  const auto& g = gridded(pair.g);
  const auto& gp = gridded(pair.g_prime);
  const PeriodicGrid grid(g.box_side, g.n);
  RealBuffer work = grid.make_real();
  SpectralBuffer a = grid.make_spectral(), b = grid.make_spectral();
  std::copy(g.values.begin(), g.values.end(), work.begin());
  grid.forward(work, a);
  std::copy(gp.values.begin(), gp.values.end(), work.begin());
  grid.forward(work, b);
  return grid.spectral_inner(a, b, t);
}

WPairingResult q2_pairing(double theta, double t, const TestFunctionPair& pair,
                          const QuadratureSpec& quad) {
  auto w = w_pairing(theta, t, pair, quad);
  const double p = heat_pairing(t, pair);
  w.value += p * p;
  return w;
}

double sensitivity_limit_ratio(double theta, double tau_bar, const TestFunctionPair& pair,
                               const QuadratureSpec& quad) {
  if (!(tau_bar >= 0.0)) throw DomainError("sensitivity_limit_ratio: tau_bar must be >= 0");
  if (tau_bar == 0.0) return 1.0;
  const double num = w_pairing(theta - tau_bar, 1.0, pair, quad).value;
  const double den = w_pairing(theta, 1.0, pair, quad).value;
  return num / den;
}

}  // namespace shflab::kernels
