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

#include "shflab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "shflab/errors.hpp"
#include "shflab/parallel.hpp"

namespace shflab {

CorrelationEstimate estimate_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("estimate_correlation: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("estimate_correlation: need at least 2 pairs");
  const double mx = pairwise_sum(x) / n, my = pairwise_sum(y) / n;
  std::vector<double> dx(n), dy(n), dxx(n), dyy(n), dxy(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = x[i] - mx;
    dy[i] = y[i] - my;
    dxx[i] = dx[i] * dx[i];
    dyy[i] = dy[i] * dy[i];
    dxy[i] = dx[i] * dy[i];
  }
  const double sx = pairwise_sum(dx), sy = pairwise_sum(dy);
  const double sxx = pairwise_sum(dxx), syy = pairwise_sum(dyy), sxy = pairwise_sum(dxy);
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw UndefinedCorrelation("estimate_correlation: degenerate variance");
  }
  auto pearson = [](double cxx, double cyy, double cxy) {
    return std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0);
  };
  CorrelationEstimate out;
  out.corr = pearson(sxx, syy, sxy);
  if (n < 3) {
    out.se = std::numeric_limits<double>::infinity();
    return out;
  }
  // Leave-one-out moments about the full-sample mean, re-centred exactly.
  std::vector<double> loo(n);
  const double m = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = sx - dx[i], ay = sy - dy[i];
    const double cxx = sxx - dxx[i] - ax * ax / m;
    const double cyy = syy - dyy[i] - ay * ay / m;
    const double cxy = sxy - dxy[i] - ax * ay / m;
    loo[i] = (cxx > 0.0 && cyy > 0.0) ? pearson(cxx, cyy, cxy) : out.corr;
  }
  const double mean_loo = pairwise_sum(loo) / n;
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = (loo[i] - mean_loo) * (loo[i] - mean_loo);
  out.se = std::sqrt(m / n * pairwise_sum(dev));
  return out;
}

MomentEstimate estimate_moments(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("estimate_moments: need at least 2 samples");
  const double nd = static_cast<double>(n);
  MomentEstimate out;
  out.mean = pairwise_sum(x) / nd;
  std::vector<double> c2(n), c4(n), sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - out.mean;
    c2[i] = d * d;
    c4[i] = c2[i] * c2[i];
    sq[i] = x[i] * x[i];
  }
  const double m2 = pairwise_sum(c2) / nd;
  const double m4 = pairwise_sum(c4) / nd;
  out.variance = m2 * nd / (nd - 1.0);
  out.mean_se = std::sqrt(out.variance / nd);
  out.variance_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / nd);
  out.second_moment = pairwise_sum(sq) / nd;
  double sq_var = 0.0;
  for (double s : sq) sq_var += (s - out.second_moment) * (s - out.second_moment);
  out.second_moment_se = std::sqrt(sq_var / (nd - 1.0) / nd);
  return out;
}

}  // namespace shflab
