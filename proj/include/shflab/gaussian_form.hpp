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

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

namespace shflab {

/// Unnormalised Gaussian function on R^Dim in information form,
///   f(x) = exp(-x'Px / 2 + h'x + c),
/// closed under convolution with isotropic heat kernels and under
/// multiplication by other Gaussians. P may be singular (e.g. for the
/// mollifier factor, which only constrains x1 - x2).
template <typename Scalar, int Dim>
class GaussianForm {
 public:
  using Matrix = Eigen::Matrix<Scalar, Dim, Dim>;
  using Vector = Eigen::Matrix<Scalar, Dim, 1>;

  GaussianForm() : precision_(Matrix::Zero()), shift_(Vector::Zero()), log_scale_(0) {}
  GaussianForm(Matrix precision, Vector shift, Scalar log_scale)
      : precision_(std::move(precision)), shift_(std::move(shift)), log_scale_(log_scale) {}

  const Matrix& precision() const { return precision_; }
  const Vector& shift() const { return shift_; }
  Scalar log_scale() const { return log_scale_; }

  /// f <- p(s)^{(x) Dim/2} * f, i.e. convolution with N(0, s I).
  GaussianForm& heat_flow(Scalar s) {
    if (s == Scalar(0)) return *this;
    const Matrix a = Matrix::Identity() + s * precision_;
    const Eigen::PartialPivLU<Matrix> lu(a);
    const Vector a_inv_h = lu.solve(shift_);
    log_scale_ += Scalar(0.5) * s * shift_.dot(a_inv_h) - Scalar(0.5) * std::log(lu.determinant());
    precision_ = lu.solve(precision_);
    precision_ = Scalar(0.5) * (precision_ + precision_.transpose()).eval();
    shift_ = a_inv_h;
    return *this;
  }

  GaussianForm& multiply(const GaussianForm& other) {
    precision_ += other.precision_;
    shift_ += other.shift_;
    log_scale_ += other.log_scale_;
    return *this;
  }

  /// log of the integral over R^Dim; requires positive definite precision.
  Scalar log_integral() const {
    const Eigen::LLT<Matrix> llt(precision_);
    const Vector mean = llt.solve(shift_);
    Scalar log_det = 0;
    for (int i = 0; i < Dim; ++i) log_det += Scalar(2) * std::log(llt.matrixL()(i, i));
    return log_scale_ + Scalar(0.5) * shift_.dot(mean) +
           Scalar(0.5) * (Dim * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) - log_det);
  }

  Scalar operator()(const Vector& x) const {
    return std::exp(-Scalar(0.5) * x.dot(precision_ * x) + shift_.dot(x) + log_scale_);
  }

 private:
  Matrix precision_;
  Vector shift_;
  Scalar log_scale_;
};

/// Integral of the product of two Gaussian forms.
template <typename Scalar, int Dim>
Scalar pairing(GaussianForm<Scalar, Dim> f, const GaussianForm<Scalar, Dim>& g) {
  return std::exp(f.multiply(g).log_integral());
}

}  // namespace shflab
