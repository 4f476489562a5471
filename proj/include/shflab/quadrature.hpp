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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <vector>

#include "shflab/errors.hpp"

namespace shflab {

/// Tolerances and sample counts shared by the quadrature-backed operations.
struct QuadratureSpec {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  int max_subdivisions = 2000;
  long simplex_samples = 100000;

  void validate() const {
    if (!(rel_tol > 0.0)) throw ConfigError("QuadratureSpec: rel_tol must be > 0");
    if (!(abs_tol >= 0.0)) throw ConfigError("QuadratureSpec: abs_tol must be >= 0");
    if (max_subdivisions < 1) throw ConfigError("QuadratureSpec: max_subdivisions must be >= 1");
    if (simplex_samples < 1) throw ConfigError("QuadratureSpec: simplex_samples must be >= 1");
  }

  static QuadratureSpec pairing_default() {
    QuadratureSpec q;
    q.rel_tol = 1e-4;
    return q;
  }
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  int intervals = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename F>
Segment kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double s = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * s;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * s;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (G7/K15) integration over consecutive
/// breakpoints. Throws AccuracyError when max_subdivisions is exhausted.
template <typename F>
QuadratureResult integrate_adaptive(F&& f, std::span<const double> breakpoints,
                                    const QuadratureSpec& spec) {
  std::priority_queue<detail::Segment> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    auto seg = detail::kronrod15(f, breakpoints[i], breakpoints[i + 1]);
    total += seg.value;
    total_err += seg.error;
    heap.push(seg);
  }
  int evaluations = 15 * static_cast<int>(heap.size());
  int intervals = static_cast<int>(heap.size());
  auto converged = [&] {
    return total_err <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total));
  };
  while (!converged() && !heap.empty()) {
    if (intervals >= spec.max_subdivisions) {
      throw AccuracyError("adaptive quadrature did not converge within max_subdivisions",
                          total_err);
    }
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw AccuracyError("adaptive quadrature hit floating-point resolution", total_err);
    }
    const auto left = detail::kronrod15(f, worst.a, mid);
    const auto right = detail::kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    evaluations += 30;
    ++intervals;
  }
  // Re-sum to shed the cancellation drift of the running updates.
  double value = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {value, err, evaluations, intervals};
}

template <typename F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, const QuadratureSpec& spec) {
  const std::array<double, 2> bp{a, b};
  return integrate_adaptive(std::forward<F>(f), std::span<const double>(bp), spec);
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int order) : nodes(order), weights(order) {
    const double pi = std::acos(-1.0);
    for (int i = 0; i < (order + 1) / 2; ++i) {
      double x = std::cos(pi * (i + 0.75) / (order + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= order; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        if (order == 1) p0 = 1.0, p1 = x;
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = -x;
      nodes[order - 1 - i] = x;
      weights[i] = weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  int order() const { return static_cast<int>(nodes.size()); }
};

/// Composite rule on [0, 1] whose panels shrink geometrically toward both
/// endpoints down to width `finest`. Nodes and weights are flattened.
struct GradedRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  GradedRule(double finest, int points_per_panel, double ratio = 2.0) {
    std::vector<double> edges{0.0};
    for (double w = finest; w < 0.25; w *= ratio) edges.push_back(w);
    edges.push_back(0.25);
    const std::size_t left = edges.size();
    for (std::size_t i = 0; i < left; ++i) edges.push_back(1.0 - edges[i]);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    GaussLegendre gl(points_per_panel);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
      const double a = edges[p], b = edges[p + 1];
      for (int i = 0; i < gl.order(); ++i) {
        nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i]);
        weights.push_back(0.5 * (b - a) * gl.weights[i]);
      }
    }
  }

  std::size_t size() const { return nodes.size(); }
};

}  // namespace shflab
