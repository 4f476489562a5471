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

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "shflab/errors.hpp"

namespace shflab {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

/// 2d heat kernel with variance t per coordinate, i.e. the transition
/// density of the semigroup generated by half the Laplacian.
template <typename Scalar>
Scalar heat_kernel_r2(Scalar t, Scalar r2) {
  if (!(t > Scalar(0))) throw DomainError("heat_kernel: t must be positive");
  using std::exp;
  return exp(-r2 / (Scalar(2) * t)) / (Scalar(2) * std::numbers::pi_v<Scalar> * t);
}

template <typename Scalar>
Scalar heat_kernel(Scalar t, const Point2<Scalar>& x) {
  return heat_kernel_r2(t, x.squaredNorm());
}

/// Isotropic Gaussian density N(m, var I) on the plane evaluated at offset d.
template <typename Scalar>
Scalar gaussian_density2(const Point2<Scalar>& d, Scalar var) {
  return heat_kernel_r2(var, d.squaredNorm());
}

}  // namespace shflab
