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

#include "shflab/chaos.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <span>

#include <fftw3.h>

#include "shflab/errors.hpp"
#include "shflab/gaussian_form.hpp"
#include "shflab/parallel.hpp"
#include "shflab/periodic_grid.hpp"
#include "shflab/rng.hpp"

namespace shflab::chaos {

namespace {

constexpr double kPi = std::numbers::pi;
using Form4 = GaussianForm<double, 4>;

struct UnitIntegral {
  double value = 0.0;
  double err = 0.0;
  ChaosMethod method = ChaosMethod::GaussianAnalytic;
  bool monte_carlo = false;
};

// g(x1) g(x2) for an isotropic bump, coordinates ordered (x1, x2).
Form4 tensor_square(const kernels::GaussianBump& g) {
  const double inv = 1.0 / (g.width * g.width);
  Form4::Vector shift;
  shift << g.center, g.center;
  return Form4(Form4::Matrix::Identity() * inv, shift * inv,
               std::log(g.amplitude * g.amplitude) - g.center.squaredNorm() * inv);
}

// Phi_eps(x1 - x2) = N(x1 - x2; 0, 2 eps^2 I) for the gaussian mollifier.
Form4 mollifier_factor(double epsilon) {
  Form4::Matrix d = Form4::Matrix::Zero();
  d.topLeftCorner<2, 2>().setIdentity();
  d.bottomRightCorner<2, 2>().setIdentity();
  d.topRightCorner<2, 2>() = -Eigen::Matrix2d::Identity();
  d.bottomLeftCorner<2, 2>() = -Eigen::Matrix2d::Identity();
  const double var = 2.0 * epsilon * epsilon;
  return Form4(d / var, Form4::Vector::Zero(), -std::log(2.0 * kPi * var));
}

// <g^2, p(u_0)^2 Phi p(u_1)^2 ... Phi p(u_k)^2 g'^2> through the Gaussian
// recursion.
class AnalyticChain {
 public:
  AnalyticChain(const kernels::GaussianBump& g, const kernels::GaussianBump& gp, double epsilon)
      : left_(tensor_square(g)), right_(tensor_square(gp)), phi_(mollifier_factor(epsilon)) {}

  double operator()(std::span<const double> parts) const {
    const std::size_t k = parts.size() - 1;
    Form4 f = right_;
    f.heat_flow(parts[k]);
    for (std::size_t i = k; i-- > 0;) {
      f.multiply(phi_);
      f.heat_flow(parts[i]);
    }
    return pairing(f, left_);
  }

 private:
  Form4 left_, right_, phi_;
};

// The pair field f(x1, x2) on an n^4 periodic grid.
class PairFieldGrid {
 public:
  PairFieldGrid(double box_side, int n, const sim::MollifierSpec& mollifier)
      : n_(n), h_(box_side / n) {
    const std::size_t n3 = static_cast<std::size_t>(n) * n * n;
    real_size_ = n3 * n;
    spec_size_ = n3 * (n / 2 + 1);
    work_ = RealBuffer(real_size_);
    spec_ = SpectralBuffer(spec_size_);
    const int dims[4] = {n, n, n, n};
    {
      std::lock_guard lock(fftw_planner_mutex());
      r2c_ = fftw_plan_dft_r2c(4, dims, work_.data(), reinterpret_cast<fftw_complex*>(spec_.data()),
                               FFTW_ESTIMATE);
      c2r_ = fftw_plan_dft_c2r(4, dims, reinterpret_cast<fftw_complex*>(spec_.data()), work_.data(),
                               FFTW_ESTIMATE);
    }
    const double dk = 2.0 * kPi / box_side;
    k2_.resize(spec_size_);
    weight_.resize(spec_size_);
    const int cols = n / 2 + 1;
    std::size_t idx = 0;
    auto wrap = [n](int i) { return i <= n / 2 ? i : i - n; };
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < cols; ++d, ++idx) {
            const double m2 = wrap(a) * wrap(a) + wrap(b) * wrap(b) + wrap(c) * wrap(c) + d * d;
            k2_[idx] = dk * dk * m2;
            weight_[idx] = (d == 0 || d == n / 2) ? 1.0 : 2.0;
          }
    phi_ = RealBuffer(real_size_);
    auto wrap_diff = [&](int i, int j) {
      int d = i - j;
      if (d >= n / 2) d -= n;
      if (d < -n / 2) d += n;
      return d * h_;
    };
    idx = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d, ++idx) {
            const double da = wrap_diff(a, c), db = wrap_diff(b, d);
            phi_[idx] = mollifier.Phi_eps(std::sqrt(da * da + db * db));
          }
  }

  ~PairFieldGrid() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(r2c_);
    fftw_destroy_plan(c2r_);
  }

  PairFieldGrid(const PairFieldGrid&) = delete;
  PairFieldGrid& operator=(const PairFieldGrid&) = delete;

  RealBuffer tensor_square(const kernels::GriddedFunction& g) const {
    RealBuffer out(real_size_);
    const std::size_t n2 = static_cast<std::size_t>(n_) * n_;
    for (std::size_t i = 0; i < n2; ++i)
      for (std::size_t j = 0; j < n2; ++j) out[i * n2 + j] = g.values[i] * g.values[j];
    return out;
  }

  SpectralBuffer transform(const RealBuffer& f) {
    SpectralBuffer out(spec_size_);
    fftw_execute_dft_r2c(r2c_, const_cast<double*>(f.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  void heat_flow(RealBuffer& f, double s) {
    fftw_execute_dft_r2c(r2c_, f.data(), reinterpret_cast<fftw_complex*>(spec_.data()));
    const double norm = 1.0 / static_cast<double>(real_size_);
    for (std::size_t i = 0; i < spec_size_; ++i) spec_[i] *= norm * std::exp(-0.5 * k2_[i] * s);
    fftw_execute_dft_c2r(c2r_, reinterpret_cast<fftw_complex*>(spec_.data()), f.data());
  }

  void multiply_phi(RealBuffer& f) const { as_array(f) *= as_array(phi_); }

  // h^4 sum_x (p(s) a)(x) b(x), given the spectrum of a.
  double pair(const SpectralBuffer& a_hat, RealBuffer& b, double s) {
    fftw_execute_dft_r2c(r2c_, b.data(), reinterpret_cast<fftw_complex*>(spec_.data()));
    double acc = 0.0;
    for (std::size_t i = 0; i < spec_size_; ++i) {
      acc += weight_[i] * std::exp(-0.5 * k2_[i] * s) * (std::conj(a_hat[i]) * spec_[i]).real();
    }
    const double h2 = h_ * h_;
    return h2 * h2 * acc / static_cast<double>(real_size_);
  }

 private:
  int n_;
  double h_;
  std::size_t real_size_ = 0, spec_size_ = 0;
  RealBuffer work_, phi_;
  SpectralBuffer spec_;
  std::vector<double> k2_, weight_;
  fftw_plan r2c_ = nullptr, c2r_ = nullptr;
};

// Maps a point of the unit simplex (k + 1 barycentric parts) to heat times
// whose interaction instants u_0, u_0 + u_1, ... all fall inside the slab.
void slab_parts(const SlabSpec& slab, std::span<const double> unit, std::span<double> parts) {
  const double len = slab.length();
  const std::size_t k = unit.size() - 1;
  for (std::size_t i = 0; i <= k; ++i) parts[i] = len * unit[i];
  parts[0] += slab.s;
  parts[k] += 1.0 - slab.t;
}

// Conical-product tensor rule over the k-simplex. Interior gaps come first
// so the graded panels resolve the short-gap peaks. Returns the integral of
// f over {u_i >= 0, sum u_i = 1} with measure du_1 ... du_k.
template <typename F>
double simplex_tensor_rule(int k, const F& f, const std::vector<double>& nodes,
                           const std::vector<double>& weights) {
  if (k == 1) {
    std::array<double, 2> parts{};
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      parts[0] = nodes[i];
      parts[1] = 1.0 - nodes[i];
      acc += weights[i] * f(std::span<const double>(parts));
    }
    return acc;
  }
  std::vector<double> per_node(nodes.size(), 0.0);
  parallel_for(nodes.size(), [&](std::size_t first) {
    std::vector<double> parts(k + 1);
    double acc = 0.0;
    auto rec = [&](auto&& self, int j, double remaining, double jac) -> void {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (j == 1 && i != first) continue;
        const double s = nodes[i];
        const double w = jac * remaining * weights[i];
        if (j < k) {
          parts[j] = remaining * s;
          self(self, j + 1, remaining * (1.0 - s), w);
        } else {
          parts[0] = remaining * s;
          parts[k] = remaining * (1.0 - s);
          acc += w * f(std::span<const double>(parts));
        }
      }
    };
    rec(rec, 1, 1.0, 1.0);
    per_node[first] = acc;
  });
  return pairwise_sum(per_node);
}

// Draws from one Philox stream addressed by (sample, block, order).
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t sample, std::uint32_t block, std::uint32_t order)
      : gen_(seed), sample_(sample), block_(block), order_(order) {}

  double uniform() {
    if (!have_uniform_) {
      const auto [a, b] = uniform_pair(next_block());
      spare_uniform_ = b;
      have_uniform_ = true;
      return a;
    }
    have_uniform_ = false;
    return spare_uniform_;
  }

  double normal() {
    if (!have_normal_) {
      const auto [a, b] = normal_pair(next_block());
      spare_normal_ = b;
      have_normal_ = true;
      return a;
    }
    have_normal_ = false;
    return spare_normal_;
  }

  // Marsaglia-Tsang, with the U^(1/a) boost for a < 1.
  double gamma(double a) {
    if (a == 1.0) return -std::log(uniform());
    if (a < 1.0) return gamma(a + 1.0) * std::pow(uniform(), 1.0 / a);
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      const double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

 private:
  Philox4x32::Counter next_block() {
    return gen_({sample_, block_, (order_ << 20) | draw_++, 0xC4A05u});
  }

  Philox4x32 gen_;
  std::uint32_t sample_, block_, order_, draw_ = 0;
  double spare_uniform_ = 0.0, spare_normal_ = 0.0;
  bool have_uniform_ = false, have_normal_ = false;
};

// Importance sampling from Dirichlet(1, a, ..., a, 1): small interior
// exponents put more samples on short gaps, where the integrand peaks.
template <typename F>
std::pair<double, double> simplex_monte_carlo(int k, const F& f, long samples,
                                              const ChaosOptions& opts) {
  std::vector<double> alpha(k + 1, opts.interior_exponent);
  alpha.front() = alpha.back() = 1.0;
  double log_norm = 0.0, alpha_sum = 0.0;
  for (double a : alpha) {
    log_norm -= std::lgamma(a);
    alpha_sum += a;
  }
  log_norm += std::lgamma(alpha_sum);

  const int blocks = std::max(2, opts.strata);
  const long per_block = std::max(1L, samples / blocks);
  std::vector<double> means(blocks, 0.0);
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
    std::vector<double> unit(k + 1);
    std::vector<double> terms(per_block);
    for (long i = 0; i < per_block; ++i) {
      CounterStream rng(opts.seed, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(b),
                        static_cast<std::uint32_t>(k));
      double total = 0.0;
      for (int p = 0; p <= k; ++p) total += unit[p] = rng.gamma(alpha[p]);
      double log_density = log_norm;
      for (int p = 0; p <= k; ++p) {
        unit[p] /= total;
        log_density += (alpha[p] - 1.0) * std::log(unit[p]);
      }
      terms[i] = f(std::span<const double>(unit)) * std::exp(-log_density);
    }
    means[b] = pairwise_sum(terms) / static_cast<double>(per_block);
  });
  const double mean = pairwise_sum(means) / blocks;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (blocks - 1);
  return {mean, std::sqrt(var / blocks)};
}

const kernels::GaussianBump* as_bump(const kernels::TestFunction& f) {
  return std::get_if<kernels::GaussianBump>(&f);
}

UnitIntegral analytic_integral(int k, const sim::MollifierSpec& mollifier,
                               const kernels::TestFunctionPair& pair, const QuadratureSpec& quad,
                               const ChaosOptions& opts, const SlabSpec& slab) {
  const AnalyticChain chain(*as_bump(pair.g), *as_bump(pair.g_prime), mollifier.epsilon);
  const double len = slab.length();
  const double jacobian = std::pow(len, k);
  auto integrand = [&](std::span<const double> unit) {
    std::array<double, 32> buf{};
    std::span<double> parts(buf.data(), unit.size());
    slab_parts(slab, unit, parts);
    return chain(std::span<const double>(parts.data(), parts.size()));
  };
  UnitIntegral out;
  out.method = ChaosMethod::GaussianAnalytic;
  if (k <= opts.deterministic_max_order) {
    const double eps2 = mollifier.epsilon * mollifier.epsilon;
    const double finest = std::clamp(eps2 / (8.0 * len), 1e-7, 0.05);
    const GradedRule fine(finest, opts.points_per_panel);
    const GradedRule coarse(finest, std::max(2, opts.points_per_panel - 2));
    const double v_fine = simplex_tensor_rule(k, integrand, fine.nodes, fine.weights);
    const double v_coarse = simplex_tensor_rule(k, integrand, coarse.nodes, coarse.weights);
    out.value = jacobian * v_fine;
    out.err = jacobian * std::abs(v_fine - v_coarse);
  } else {
    const auto [mean, se] = simplex_monte_carlo(k, integrand, quad.simplex_samples, opts);
    out.value = jacobian * mean;
    out.err = jacobian * se;
    out.monte_carlo = true;
  }
  return out;
}

UnitIntegral grid_integral(int k, const sim::MollifierSpec& mollifier,
                           const kernels::TestFunctionPair& pair, const ChaosOptions& opts,
                           const SlabSpec& slab) {
  if (k > 3) throw UnsupportedInput("grid chaos path supports orders k <= 3");
  kernels::GriddedFunction g, gp;
  if (const auto* b = as_bump(pair.g)) {
    g = kernels::sample_on_grid(*b, opts.grid_box_side, opts.grid_n);
  } else {
    g = std::get<kernels::GriddedFunction>(pair.g);
  }
  if (const auto* b = as_bump(pair.g_prime)) {
    gp = kernels::sample_on_grid(*b, opts.grid_box_side, opts.grid_n);
  } else {
    gp = std::get<kernels::GriddedFunction>(pair.g_prime);
  }
  if (g.n != gp.n || g.box_side != gp.box_side) {
    throw UnsupportedInput("grid chaos path requires both test functions on the same grid");
  }
  PairFieldGrid grid(g.box_side, g.n, mollifier);
  const SpectralBuffer left_hat = grid.transform(grid.tensor_square(g));
  const RealBuffer right = grid.tensor_square(gp);
  const double jacobian = std::pow(slab.length(), k);
  auto integrand = [&](std::span<const double> unit) {
    std::array<double, 8> buf{};
    std::span<double> parts(buf.data(), unit.size());
    slab_parts(slab, unit, parts);
    RealBuffer f = right;
    grid.heat_flow(f, parts[k]);
    for (int i = k - 1; i >= 1; --i) {
      grid.multiply_phi(f);
      grid.heat_flow(f, parts[i]);
    }
    grid.multiply_phi(f);
    return grid.pair(left_hat, f, parts[0]);
  };
  auto rule = [](int order) {
    const GaussLegendre gl(order);
    std::vector<double> nodes(order), weights(order);
    for (int i = 0; i < order; ++i) {
      nodes[i] = 0.5 * (1.0 + gl.nodes[i]);
      weights[i] = 0.5 * gl.weights[i];
    }
    return std::pair{nodes, weights};
  };
  // The pair field grid is shared state, so the tensor rule runs serially.
  auto serial = [&](const std::vector<double>& nodes, const std::vector<double>& weights) {
    if (k == 1) return simplex_tensor_rule(1, integrand, nodes, weights);
    double acc = 0.0;
    std::vector<double> parts(k + 1);
    auto rec = [&](auto&& self, int j, double remaining, double jac) -> void {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double w = jac * remaining * weights[i];
        if (j < k) {
          parts[j] = remaining * nodes[i];
          self(self, j + 1, remaining * (1.0 - nodes[i]), w);
        } else {
          parts[0] = remaining * nodes[i];
          parts[k] = remaining * (1.0 - nodes[i]);
          acc += w * integrand(std::span<const double>(parts));
        }
      }
    };
    rec(rec, 1, 1.0, 1.0);
    return acc;
  };
  const auto [fn, fw] = rule(opts.grid_time_order);
  const auto [cn, cw] = rule(std::max(2, opts.grid_time_order - 4));
  const double fine = serial(fn, fw);
  const double coarse = serial(cn, cw);
  return {jacobian * fine, jacobian * std::abs(fine - coarse), ChaosMethod::Grid, false};
}

UnitIntegral unit_integral(int k, const sim::MollifierSpec& mollifier,
                           const kernels::TestFunctionPair& pair, const QuadratureSpec& quad,
                           const ChaosOptions& opts, const SlabSpec& slab) {
  if (k < 1) throw DomainError("chaos order k must be >= 1");
  if (k > 30) throw UnsupportedInput("chaos order k must be <= 30");
  slab.validate();
  pair.validate();
  quad.validate();
  const bool analytic_ok = pair.is_gaussian() && mollifier.shape == sim::MollifierShape::Gaussian;
  using Path = ChaosOptions::Path;
  switch (opts.path) {
    case Path::GaussianAnalytic:
      if (!analytic_ok) {
        throw UnsupportedInput(
            "gaussian-analytic chaos path needs a gaussian mollifier and Gaussian bumps");
      }
      return analytic_integral(k, mollifier, pair, quad, opts, slab);
    case Path::Grid:
      return grid_integral(k, mollifier, pair, opts, slab);
    case Path::Auto:
      break;
  }
  return analytic_ok ? analytic_integral(k, mollifier, pair, quad, opts, slab)
                     : grid_integral(k, mollifier, pair, opts, slab);
}

}  // namespace

std::string to_string(ChaosMethod m) {
  return m == ChaosMethod::GaussianAnalytic ? "gaussian-analytic" : "grid";
}

void SlabSpec::validate(bool scaling_regime) const {
  if (!(s >= 0.0 && s < t && t <= 1.0)) throw DomainError("slab must satisfy 0 <= s < t <= 1");
  if (scaling_regime && t - s > 0.5) throw DomainError("slab scaling regime needs t - s <= 1/2");
}

ChaosTerm chaos_coefficient(int k, const sim::MollifierSpec& mollifier, double beta,
                            const kernels::TestFunctionPair& pair, const QuadratureSpec& quad,
                            const ChaosOptions& opts, const SlabSpec& slab) {
  if (!(beta > 0.0)) throw DomainError("chaos_coefficient: beta must be positive");
  const auto unit = unit_integral(k, mollifier, pair, quad, opts, slab);
  const double scale = std::pow(beta, k);
  ChaosTerm out;
  out.ck2 = scale * unit.value;
  out.err = scale * unit.err;
  out.method = unit.method;
  out.monte_carlo = unit.monte_carlo;
  out.accuracy_warning =
      unit.monte_carlo && unit.err > opts.mc_warning_rel_error * std::abs(unit.value);
  return out;
}

ChaosCoefficients chaos_coefficients(int K, const sim::MollifierSpec& mollifier, double beta,
                                     const kernels::TestFunctionPair& pair,
                                     const QuadratureSpec& quad, const ChaosOptions& opts,
                                     const SlabSpec& slab) {
  if (K < 1) throw DomainError("chaos_coefficients: K must be >= 1");
  ChaosCoefficients c;
  c.epsilon = mollifier.epsilon;
  c.K = K;
  for (int k = 1; k <= K; ++k) {
    const auto unit = unit_integral(k, mollifier, pair, quad, opts, slab);
    c.unit_ck2.push_back(unit.value);
    c.unit_errors.push_back(unit.err);
    c.method = unit.method;
    c.warnings.push_back(unit.monte_carlo &&
                         unit.err > opts.mc_warning_rel_error * std::abs(unit.value));
  }
  c.ck2.resize(K);
  c.est_errors.resize(K);
  return c.rescaled(beta);
}

ChaosCoefficients ChaosCoefficients::rescaled(double new_beta) const {
  if (!(new_beta > 0.0)) throw DomainError("chaos coefficients: beta must be positive");
  ChaosCoefficients c = *this;
  c.beta = new_beta;
  for (int k = 1; k <= K; ++k) {
    const double scale = std::pow(new_beta, k);
    c.ck2[k - 1] = scale * unit_ck2[k - 1];
    c.est_errors[k - 1] = scale * unit_errors[k - 1];
  }
  return c;
}

ChaosVariance variance_from_chaos(const ChaosCoefficients& coeffs) {
  ChaosVariance v;
  double err2 = 0.0;
  for (int k = 0; k < coeffs.K; ++k) {
    v.partial_sum += coeffs.ck2[k];
    err2 += coeffs.est_errors[k] * coeffs.est_errors[k];
  }
  v.partial_error = std::sqrt(err2);
  if (coeffs.K >= 2 && coeffs.ck2[coeffs.K - 2] > 0.0) {
    const double last = coeffs.ck2[coeffs.K - 1];
    const double r = last / coeffs.ck2[coeffs.K - 2];
    v.tail = r < 1.0 ? last * r / (1.0 - r) : std::numeric_limits<double>::infinity();
  }
  return v;
}

double correlation_from_chaos(const ChaosCoefficients& coeffs, double tau) {
  if (!(tau >= 0.0)) throw DomainError("correlation_from_chaos: tau must be >= 0");
  double num = 0.0, den = 0.0;
  for (int k = 1; k <= coeffs.K; ++k) {
    num += std::exp(-k * tau) * coeffs.ck2[k - 1];
    den += coeffs.ck2[k - 1];
  }
  if (!(den > 0.0)) throw UndefinedCorrelation("correlation_from_chaos: zero total chaos mass");
  return num / den;
}

int median_chaos_index(const ChaosCoefficients& coeffs) {
  // Orders beyond K continue the geometric extrapolation used for the tail.
  const auto v = variance_from_chaos(coeffs);
  if (!(v.partial_sum > 0.0)) throw UndefinedCorrelation("median_chaos_index: zero chaos mass");
  if (!std::isfinite(v.tail)) return coeffs.K + 1;
  const double half = 0.5 * v.total();
  double acc = 0.0;
  for (int k = 1; k <= coeffs.K; ++k) {
    acc += coeffs.ck2[k - 1];
    if (acc >= half) return k;
  }
  const double last = coeffs.ck2[coeffs.K - 1];
  const double r = last / coeffs.ck2[coeffs.K - 2];
  double term = last;
  for (int k = coeffs.K + 1;; ++k) {
    term *= r;
    acc += term;
    if (acc >= half || term <= 0.0) return k;
  }
}

SlabVariance slab_variance(int K, const SlabSpec& slab, const sim::MollifierSpec& mollifier,
                           double beta, const kernels::TestFunctionPair& pair,
                           const QuadratureSpec& quad, const ChaosOptions& opts) {
  slab.validate();
  const auto c = chaos_coefficients(K, mollifier, beta, pair, quad, opts, slab);
  SlabVariance out;
  double err2 = 0.0;
  for (int k = 0; k < K; ++k) {
    out.value += c.ck2[k];
    err2 += c.est_errors[k] * c.est_errors[k];
  }
  out.err = std::sqrt(err2);
  return out;
}

}  // namespace shflab::chaos
