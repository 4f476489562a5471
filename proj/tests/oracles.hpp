// Independent reference computations for the test suite. Nothing here calls
// into the library's numerical code: each oracle re-derives its quantity by a
// different route (direct quadrature, brute-force sampling, or a PDE solve).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <fftw3.h>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// 30-digit quadrature of int_0^inf t^(u-1) e^(theta u) / Gamma(u) du.
struct FrozenJ {
  double theta, t, value;
};
inline constexpr FrozenJ kFrozenJ[] = {
    {0.0, 1.0, 2.8077702420285193652},   {0.0, 0.5, 1.8286017509626361342},
    {0.0, 1e-3, 22.807147589820064914},  {1.0, 0.25, 5.7250068112299950734},
    {-2.0, 2.0, 0.22036264872354929567},
};
inline constexpr double kReciprocalGammaIntegral = 2.8077702420285193652;

// c_Phi of the gaussian mollifier: (3/2) log 2 - gamma / 2.
inline double gaussian_c_phi() { return 1.5 * std::log(2.0) - 0.5 * std::numbers::egamma; }

// t * j^theta(t) by the trapezoid rule in log u; the integrand decays
// doubly exponentially at both ends of that variable.
inline double t_times_j(double theta, double t) {
  const double a = theta + std::log(t);
  auto f = [a](double s) {
    const double u = std::exp(s);
    return std::exp(a * u - std::lgamma(u) + s);
  };
  const double lo = -60.0, hi = std::log(std::max(80.0, 4.0 * (a + 10.0)));
  const int n = 6000;
  const double h = (hi - lo) / n;
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

inline double density2(double dx, double dy, double var) {
  return std::exp(-(dx * dx + dy * dy) / (2.0 * var)) / (2.0 * kPi * var);
}

// <g (x) g, W^theta(t) g' (x) g'> for centred bumps (width, mass) by Monte
// Carlo over the spatial points x1, y, y' at quadrature nodes of the
// interaction time u'. u' = t exp(1 - 1/r) tames the endpoint singularity;
// the first heat time u is sampled uniformly.
inline McEstimate w_pairing_mc(double theta, double t, double w, double mass, double wp,
                               double mass_p, int r_nodes, int per_node, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  double total = 0.0, var = 0.0;
  for (int k = 0; k < r_nodes; ++k) {
    const double r = (k + 0.5) / r_nodes;
    const double up = t * std::exp(1.0 - 1.0 / r);
    const double jac = up / (r * r);
    const double rest = t - up;
    const double j = t_times_j(theta, up) / up;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < per_node; ++i) {
      const double u = rest * unif(rng);
      const double upp = rest - u;
      // x1 ~ g / mass, y ~ x1 + sqrt(u) Z carries the first factor of
      // (p(u) g)(y)^2; the second factor is evaluated exactly.
      const double x1 = w * normal(rng), x2 = w * normal(rng);
      const double y1 = x1 + std::sqrt(u) * normal(rng), y2 = x2 + std::sqrt(u) * normal(rng);
      const double z1 = y1 + std::sqrt(0.5 * up) * normal(rng);
      const double z2 = y2 + std::sqrt(0.5 * up) * normal(rng);
      const double left = mass * density2(y1, y2, w * w + u);
      const double right = mass_p * density2(z1, z2, wp * wp + upp);
      const double v = mass * left * 4.0 * kPi * j * right * right * rest * jac;
      s += v;
      s2 += v * v;
    }
    const double m = s / per_node;
    total += m / r_nodes;
    var += (s2 / per_node - m * m) / (per_node - 1.0) / (double(r_nodes) * r_nodes);
  }
  return {total, std::sqrt(var)};
}

// Integrand of c_1^2 / beta for g = g' centred (width w, mass M) at
// interaction time u in (0, 1), gaussian mollifier at scale eps.
inline double first_chaos_density(double u, double eps, double w, double mass) {
  const double s0 = w * w + u, s1 = w * w + 1.0 - u;
  const double v = s0 * s1 / (s0 + s1);
  const double n0 = 1.0 / (2.0 * kPi * (s0 + s1));
  return std::pow(mass, 4) * n0 * n0 / (4.0 * kPi * (v + eps * eps));
}

inline double first_chaos(double eps, double beta, double w, double mass, int nodes = 400000) {
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) acc += first_chaos_density((i + 0.5) / nodes, eps, w, mass);
  return beta * acc / nodes;
}

// E (Z_{0,1} g (x) g)^2 for a centred gaussian bump g (width w, mass M) and
// gaussian mollifier. In centre-of-mass / relative coordinates the second
// moment factorises; the relative part D solves the radial equation
//   D_t = (1/2) r^-1 (r D_r)_r + beta Phi_eps(sqrt2 r) D,   D(0) = G,
// integrated by TR-BDF2 on a finite-volume grid graded towards r = 0.
inline double radial_second_moment(double eps, double beta, double w, double mass,
                                   double refine = 1.0) {
  const double amp = mass / (2.0 * kPi * w * w);
  std::vector<double> f{0.0};
  double d = eps / (16.0 * refine);
  while (f.back() < 6.0 * eps) f.push_back(f.back() + d);
  while (d < w / (30.0 * refine)) {
    d *= 1.03;
    f.push_back(f.back() + d);
  }
  while (f.back() < 8.0) f.push_back(f.back() + d);
  const std::size_t n = f.size() - 1;
  std::vector<double> r(n), vol(n), pot(n), lo(n, 0.0), up(n, 0.0), dia(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = 0.5 * (f[i] + f[i + 1]);
    vol[i] = 0.5 * (f[i + 1] * f[i + 1] - f[i] * f[i]);
    pot[i] = beta * std::exp(-r[i] * r[i] / (2.0 * eps * eps)) / (4.0 * kPi * eps * eps);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double c = 0.5 * f[i + 1] / (r[i + 1] - r[i]);
    up[i] = c / vol[i];
    lo[i + 1] = c / vol[i + 1];
  }
  for (std::size_t i = 0; i < n; ++i) dia[i] = pot[i] - lo[i] - up[i];

  auto apply = [&](const std::vector<double>& x) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = dia[i] * x[i];
      if (i > 0) y[i] += lo[i] * x[i - 1];
      if (i + 1 < n) y[i] += up[i] * x[i + 1];
    }
    return y;
  };
  // Solves (I - c A) x = rhs by the Thomas algorithm.
  auto solve = [&](double c, std::vector<double> rhs) {
    std::vector<double> cp(n), b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = 1.0 - c * dia[i];
    cp[0] = -c * up[0] / b[0];
    rhs[0] /= b[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double den = b[i] + c * lo[i] * cp[i - 1];
      cp[i] = -c * up[i] / den;
      rhs[i] = (rhs[i] + c * lo[i] * rhs[i - 1]) / den;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cp[i] * rhs[i + 1];
    return rhs;
  };

  std::vector<double> G(n), D(n);
  for (std::size_t i = 0; i < n; ++i) G[i] = D[i] = amp * std::exp(-r[i] * r[i] / (2.0 * w * w));
  const double gam = 2.0 - std::sqrt(2.0);
  double time = 0.0, dt = eps * eps / (20.0 * refine);
  while (time < 1.0) {
    const double h = std::min(dt, 1.0 - time);
    auto ad = apply(D);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = D[i] + 0.5 * gam * h * ad[i];
    const auto dg = solve(0.5 * gam * h, rhs);
    for (std::size_t i = 0; i < n; ++i) {
      rhs[i] = dg[i] / (gam * (2.0 - gam)) - (1.0 - gam) * (1.0 - gam) / (gam * (2.0 - gam)) * D[i];
    }
    D = solve((1.0 - gam) / (2.0 - gam) * h, rhs);
    time += h;
    dt = std::min(dt * 1.02, 2e-3 / refine);
  }
  double id = 0.0;
  for (std::size_t i = 0; i < n; ++i) id += G[i] * D[i] * vol[i];
  id *= 2.0 * kPi;
  const double is = amp * amp * std::pow(2.0 * kPi * w * w, 2) / (2.0 * kPi * (2.0 * w * w + 1.0));
  return is * id;
}

// c_Phi for the compact bump: E log|A + B - A' - B'| with A, B, A', B' iid
// from phi, sampled by rejection from the unit disc.
inline McEstimate compact_bump_c_phi_mc(std::uint64_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0), acc(0.0, 1.0);
  auto draw = [&](double& x, double& y) {
    for (;;) {
      x = unif(rng);
      y = unif(rng);
      const double q = x * x + y * y;
      if (q < 1.0 && acc(rng) < std::exp(1.0 - 1.0 / (1.0 - q))) return;
    }
  };
  double s = 0.0, s2 = 0.0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    double dx = 0.0, dy = 0.0;
    for (int k = 0; k < 4; ++k) {
      double x, y;
      draw(x, y);
      const double sign = k < 2 ? 1.0 : -1.0;
      dx += sign * x;
      dy += sign * y;
    }
    const double v = 0.5 * std::log(dx * dx + dy * dy);
    s += v;
    s2 += v * v;
  }
  const double m = s / samples;
  return {m, std::sqrt((s2 / samples - m * m) / (samples - 1.0))};
}

// E <u(1), g'>^2 for the lattice scheme itself (not its continuum limit):
// the pair function P(x, y) = E u(x) u(y) obeys the closed recursion
//   P <- exp(beta C(x - y)) (K (x) K) P
// with K the periodised sampled heat step and C the covariance of one noise
// increment, h^2 sum_z phi_eps(z) phi_eps(x - z) dt. Solved on the full
// n^4 pair lattice with FFTs, so it is only practical for n <= 32.
inline double lattice_second_moment(double eps, double beta, double box, int n, double dt, int steps,
                                    const std::vector<double>& g, const std::vector<double>& gp) {
  const double h = box / n;
  auto off = [&](int i) { return (i > n / 2 ? i - n : i) * h; };
  std::vector<double> tap(n, 0.0);
  double tsum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int p = -20; p <= 20; ++p) tap[i] += std::exp(-0.5 * std::pow(off(i) + p * box, 2) / dt);
    tsum += tap[i];
  }
  // C by direct periodic convolution of the sampled mollifier.
  std::vector<double> phi(n * n, 0.0), cov(n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b)
          phi[i * n + j] += density2(off(i) + a * box, off(j) + b * box, eps * eps);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) acc += phi[k * n + l] * phi[((i - k + n) % n) * n + (j - l + n) % n];
      cov[i * n + j] = dt * h * h * acc;
    }

  const std::size_t total = std::size_t(n) * n * n * n;
  auto* buf = fftw_alloc_complex(total);
  const int dims[4] = {n, n, n, n};
  fftw_plan fwd = fftw_plan_dft(4, dims, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft(4, dims, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);

  // Transfer function of K in one axis: the DFT of the normalised taps (real, even).
  std::vector<double> khat(n, 0.0);
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i) khat[m] += tap[i] / tsum * std::cos(2.0 * kPi * m * i / n);
  std::vector<double> mult(total), gain(total);
  std::size_t idx = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d, ++idx) {
          mult[idx] = std::exp(beta * cov[((a - c + n) % n) * n + (b - d + n) % n]);
          gain[idx] = khat[a] * khat[b] * khat[c] * khat[d] / double(total);
          buf[idx][0] = g[a * n + b] * g[c * n + d];
          buf[idx][1] = 0.0;
        }
  for (int s = 0; s < steps; ++s) {
    fftw_execute(fwd);
    for (std::size_t i = 0; i < total; ++i) {
      buf[i][0] *= gain[i];
      buf[i][1] *= gain[i];
    }
    fftw_execute(bwd);
    for (std::size_t i = 0; i < total; ++i) {
      buf[i][0] *= mult[i];
      buf[i][1] = 0.0;
    }
  }
  double acc = 0.0;
  idx = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d, ++idx) acc += buf[idx][0] * gp[a * n + b] * gp[c * n + d];
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  fftw_free(buf);
  return acc * std::pow(h, 4);
}

// E[X chi_S] by direct summation over all 2^n sign outcomes.
inline double walsh_coefficient(const std::vector<double>& table, int n, std::uint32_t mask) {
  double acc = 0.0;
  for (std::uint32_t w = 0; w < (1u << n); ++w) {
    int parity = 0;
    for (int i = 0; i < n; ++i) {
      if ((mask >> i & 1u) && (w >> i & 1u)) parity ^= 1;
    }
    acc += parity ? -table[w] : table[w];
  }
  return acc / (1u << n);
}

}  // namespace oracle
