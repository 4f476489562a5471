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

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <new>
#include <vector>

#include <Eigen/Core>

namespace shflab {

/// std allocator backed by fftw_malloc so every buffer shares FFTW's
/// preferred alignment and plans can be reused across buffers.
template <typename T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <typename U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n);
  void deallocate(T* p, std::size_t) noexcept;
  template <typename U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

/// FFTW's planner is not reentrant; every plan creation holds this lock.
std::mutex& fftw_planner_mutex();

void* fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void* p) noexcept;

template <typename T>
T* FftwAllocator<T>::allocate(std::size_t n) {
  void* p = fftw_aligned_alloc(n * sizeof(T));
  if (p == nullptr) throw std::bad_alloc();
  return static_cast<T*>(p);
}

template <typename T>
void FftwAllocator<T>::deallocate(T* p, std::size_t) noexcept {
  fftw_aligned_free(p);
}

using RealBuffer = std::vector<double, FftwAllocator<double>>;
using SpectralBuffer = std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

inline Eigen::Map<Eigen::ArrayXd> as_array(RealBuffer& b) {
  return {b.data(), static_cast<Eigen::Index>(b.size())};
}
inline Eigen::Map<const Eigen::ArrayXd> as_array(const RealBuffer& b) {
  return {b.data(), static_cast<Eigen::Index>(b.size())};
}

/// Square periodic box [-L/2, L/2)^2 sampled at n x n points, with the real
/// FFT pair used for spectral heat flow and noise synthesis. Row-major
/// storage; point (i, j) sits at ((i - n/2) h, (j - n/2) h).
class PeriodicGrid {
 public:
  PeriodicGrid(double box_side, int n);
  ~PeriodicGrid();
  PeriodicGrid(const PeriodicGrid&) = delete;
  PeriodicGrid& operator=(const PeriodicGrid&) = delete;

  double box_side() const { return box_side_; }
  int n() const { return n_; }
  double spacing() const { return box_side_ / n_; }
  double cell_area() const { return spacing() * spacing(); }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t spectral_size() const { return static_cast<std::size_t>(n_) * (n_ / 2 + 1); }
  int spectral_cols() const { return n_ / 2 + 1; }
  double coord(int i) const { return (i - n_ / 2) * spacing(); }

  /// |k|^2 for half-spectrum entry (row, col), k = 2 pi m / L.
  double wavenumber_sq(int row, int col) const;

  /// Multiplicity of a half-spectrum column in a full-spectrum sum.
  double column_weight(int col) const { return (col == 0 || col == n_ / 2) ? 1.0 : 2.0; }

  RealBuffer make_real() const { return RealBuffer(size(), 0.0); }
  SpectralBuffer make_spectral() const { return SpectralBuffer(spectral_size()); }

  void forward(const RealBuffer& in, SpectralBuffer& out) const;
  /// Unnormalized inverse; destroys `in`.
  void backward(SpectralBuffer& in, RealBuffer& out) const;

  /// Real-space inner product h^2 sum f g.
  double inner(const RealBuffer& f, const RealBuffer& g) const;

  /// h^2 sum_x f(x) (p(s) * g)(x), evaluated from the spectra of f and g.
  double spectral_inner(const SpectralBuffer& f_hat, const SpectralBuffer& g_hat,
                        double heat_time) const;

  /// In-place periodic heat flow over time s (variance s per coordinate).
  void heat_flow(RealBuffer& field, double s, SpectralBuffer& scratch) const;

 private:
  struct Plans;
  double box_side_;
  int n_;
  std::unique_ptr<Plans> plans_;
  std::vector<double> k2_;
};

}  // namespace shflab
