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

#include "shflab/periodic_grid.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "shflab/errors.hpp"

namespace shflab {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void* fftw_aligned_alloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fftw_aligned_free(void* p) noexcept { fftw_free(p); }

struct PeriodicGrid::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

PeriodicGrid::PeriodicGrid(double box_side, int n)
    : box_side_(box_side), n_(n), plans_(std::make_unique<Plans>()) {
  if (!(box_side > 0.0)) throw ConfigError("PeriodicGrid: box side must be positive");
  if (n < 1 || (n & (n - 1)) != 0) throw ConfigError("PeriodicGrid: n must be a power of two");
  auto real = make_real();
  auto spec = make_spectral();
  {
    // ESTIMATE planning is deterministic, so results never depend on timing.
    std::lock_guard lock(fftw_planner_mutex());
    plans_->r2c = fftw_plan_dft_r2c_2d(n, n, real.data(),
                                       reinterpret_cast<fftw_complex*>(spec.data()),
                                       FFTW_ESTIMATE);
    plans_->c2r = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(spec.data()),
                                       real.data(), FFTW_ESTIMATE);
  }
  const double dk = 2.0 * std::numbers::pi / box_side;
  k2_.resize(spectral_size());
  for (int r = 0; r < n; ++r) {
    const int mr = r <= n / 2 ? r : r - n;
    for (int c = 0; c <= n / 2; ++c) {
      k2_[static_cast<std::size_t>(r) * spectral_cols() + c] =
          dk * dk * (static_cast<double>(mr) * mr + static_cast<double>(c) * c);
    }
  }
}

PeriodicGrid::~PeriodicGrid() {
  std::lock_guard lock(fftw_planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

double PeriodicGrid::wavenumber_sq(int row, int col) const {
  return k2_[static_cast<std::size_t>(row) * spectral_cols() + col];
}

void PeriodicGrid::forward(const RealBuffer& in, SpectralBuffer& out) const {
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void PeriodicGrid::backward(SpectralBuffer& in, RealBuffer& out) const {
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

double PeriodicGrid::inner(const RealBuffer& f, const RealBuffer& g) const {
  return cell_area() * (as_array(f) * as_array(g)).sum();
}

double PeriodicGrid::spectral_inner(const SpectralBuffer& f_hat, const SpectralBuffer& g_hat,
                                    double heat_time) const {
  const int cols = spectral_cols();
  double acc = 0.0;
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * cols + c;
      const double damp = heat_time > 0.0 ? std::exp(-0.5 * k2_[idx] * heat_time) : 1.0;
      acc += column_weight(c) * damp * (std::conj(f_hat[idx]) * g_hat[idx]).real();
    }
  }
  return cell_area() * acc / static_cast<double>(size());
}

void PeriodicGrid::heat_flow(RealBuffer& field, double s, SpectralBuffer& scratch) const {
  forward(field, scratch);
  const double norm = 1.0 / static_cast<double>(size());
  for (std::size_t i = 0; i < scratch.size(); ++i) scratch[i] *= norm * std::exp(-0.5 * k2_[i] * s);
  backward(scratch, field);
}

}  // namespace shflab
