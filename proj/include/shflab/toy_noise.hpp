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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "shflab/stats.hpp"

namespace shflab::toy {

enum class Alphabet { Sign, Gaussian3 };
std::string to_string(Alphabet a);
Alphabet alphabet_from_string(const std::string& s);

/// n independent coordinates, each uniform on {+1, -1} (sign) or the
/// three-point Gauss-Hermite law {-sqrt3, 0, sqrt3} with weights
/// {1/6, 2/3, 1/6}, which matches N(0,1) through the fifth moment.
///
/// Outcomes are indexed in base |alphabet| with coordinate i as digit i.
/// For sign noise digit 0 is +1 and digit 1 is -1, so the character of a
/// subset mask S at outcome w is (-1)^popcount(S & w).
struct DiscreteNoise {
  static constexpr int kMaxCoordinates = 24;
  static constexpr std::uint64_t kMaxOutcomes = std::uint64_t{1} << 24;

  int n = 1;
  Alphabet alphabet = Alphabet::Sign;

  int radix() const { return alphabet == Alphabet::Sign ? 2 : 3; }
  std::vector<double> symbols() const;
  std::vector<double> weights() const;
  std::uint64_t outcome_count() const;
  /// Throws EnumerationBound when n or the outcome count exceeds the limits.
  void validate() const;
};

/// A function of the n coordinates, stored as its full value table.
struct ToyObservable {
  DiscreteNoise noise;
  std::vector<double> table;

  /// Tabulates f on every outcome; f receives the coordinate values.
  static ToyObservable from_function(const DiscreteNoise& noise,
                                     const std::function<double(std::span<const double>)>& f);
  /// Sign noise only: table from Walsh coefficients indexed by subset mask.
  static ToyObservable from_walsh(int n, std::span<const double> coefficients);
  /// iid uniform(-1, 1) table entries, a pure function of `seed`.
  static ToyObservable random(const DiscreteNoise& noise, std::uint64_t seed);

  double mean() const;
  double second_moment() const;
  double variance() const { return second_moment() - mean() * mean(); }
  void validate() const;
};

/// Ordered disjoint blocks of 0-based coordinate indices covering 0..n-1.
struct CellPartition {
  std::vector<std::vector<int>> blocks;

  static CellPartition singletons(int n);
  /// `count` contiguous blocks of near-equal size.
  static CellPartition contiguous(int n, int count);
  void validate(int n) const;
  /// Every block of `finer` lies inside one block of *this.
  bool refined_by(const CellPartition& finer) const;
};

/// E[X | coordinates in `block`] as a table over all outcomes.
std::vector<double> conditional_expectation(const ToyObservable& x, std::span<const int> block);

/// P X = sum over blocks of (E[X | block] - E X), exact by enumeration.
ToyObservable project_Pn(const ToyObservable& x, const CellPartition& partition);

/// sum over blocks of Var(E[X | block]).
double block_variance_sum(const ToyObservable& x, const CellPartition& partition);

struct WalshSpectrum {
  int n = 0;
  /// coefficients[S] = E[X chi_S].
  std::vector<double> coefficients;
  /// degree_mass[k] = sum over |S| = k of coefficients[S]^2.
  std::vector<double> degree_mass;
};

/// Fast Walsh-Hadamard transform; sign noise only.
WalshSpectrum walsh_spectrum(const ToyObservable& x);
/// Inverse of walsh_spectrum.
ToyObservable inverse_walsh(const WalshSpectrum& spectrum);
/// The part of X of Walsh degree exactly `degree`.
ToyObservable walsh_degree_part(const ToyObservable& x, int degree);

/// sum_{k>=1} rho^k W_k / sum_{k>=1} W_k from the spectrum.
double resample_correlation_discrete(const ToyObservable& x, double rho);

/// Pearson correlation of (X(w), X(w')) where w' keeps each sign of w with
/// probability (1 + rho) / 2. Sample i depends only on (seed, i).
CorrelationEstimate resample_correlation_mc(const ToyObservable& x, double rho,
                                            std::uint64_t samples, std::uint64_t seed);

/// ||P_n X||^2 along a ladder of successively refined partitions.
std::vector<double> iterate_Pn_refinement(const ToyObservable& x,
                                          std::span<const CellPartition> ladder);

}  // namespace shflab::toy
