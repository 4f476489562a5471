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

#include "shflab/toy_noise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "shflab/errors.hpp"
#include "shflab/parallel.hpp"
#include "shflab/rng.hpp"

namespace shflab::toy {

namespace {

// Outcome weights P(w) for every outcome, built digit by digit.
std::vector<double> outcome_weights(const DiscreteNoise& noise) {
  const auto w = noise.weights();
  std::vector<double> p{1.0};
  for (int i = 0; i < noise.n; ++i) {
    std::vector<double> next(p.size() * w.size());
    for (std::size_t d = 0; d < w.size(); ++d) {
      for (std::size_t j = 0; j < p.size(); ++j) next[d * p.size() + j] = p[j] * w[d];
    }
    p = std::move(next);
  }
  return p;
}

std::vector<std::uint64_t> digit_strides(const DiscreteNoise& noise) {
  std::vector<std::uint64_t> stride(noise.n);
  std::uint64_t s = 1;
  for (int i = 0; i < noise.n; ++i) {
    stride[i] = s;
    s *= noise.radix();
  }
  return stride;
}

void require_sign(const DiscreteNoise& noise, const char* who) {
  if (noise.alphabet != Alphabet::Sign) {
    throw UnsupportedInput(std::string(who) + ": Walsh analysis needs the sign alphabet");
  }
}

// In-place unnormalised Walsh-Hadamard butterflies.
void fwht(std::vector<double>& a) {
  for (std::size_t h = 1; h < a.size(); h <<= 1) {
    for (std::size_t i = 0; i < a.size(); i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double u = a[j], v = a[j + h];
        a[j] = u + v;
        a[j + h] = u - v;
      }
    }
  }
}

}  // namespace

std::string to_string(Alphabet a) { return a == Alphabet::Sign ? "sign" : "gaussian-3pt"; }

Alphabet alphabet_from_string(const std::string& s) {
  if (s == "sign") return Alphabet::Sign;
  if (s == "gaussian-3pt") return Alphabet::Gaussian3;
  throw ConfigError("unknown alphabet '" + s + "' (expected sign or gaussian-3pt)");
}

std::vector<double> DiscreteNoise::symbols() const {
  if (alphabet == Alphabet::Sign) return {1.0, -1.0};
  return {-std::sqrt(3.0), 0.0, std::sqrt(3.0)};
}

std::vector<double> DiscreteNoise::weights() const {
  if (alphabet == Alphabet::Sign) return {0.5, 0.5};
  return {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0};
}

std::uint64_t DiscreteNoise::outcome_count() const {
  std::uint64_t c = 1;
  for (int i = 0; i < n; ++i) {
    c *= radix();
    if (c > kMaxOutcomes) return kMaxOutcomes + 1;
  }
  return c;
}

void DiscreteNoise::validate() const {
  if (n < 1) throw ConfigError("DiscreteNoise: need at least one coordinate");
  if (n > kMaxCoordinates || outcome_count() > kMaxOutcomes) {
    throw EnumerationBound("DiscreteNoise: " + std::to_string(n) + " " + to_string(alphabet) +
                           " coordinates exceed the 2^24 outcome enumeration bound");
  }
}

ToyObservable ToyObservable::from_function(
    const DiscreteNoise& noise, const std::function<double(std::span<const double>)>& f) {
  noise.validate();
  const auto sym = noise.symbols();
  const std::uint64_t count = noise.outcome_count();
  ToyObservable x{noise, std::vector<double>(count)};
  std::vector<double> coords(noise.n);
  for (std::uint64_t w = 0; w < count; ++w) {
    std::uint64_t rest = w;
    for (int i = 0; i < noise.n; ++i) {
      coords[i] = sym[rest % noise.radix()];
      rest /= noise.radix();
    }
    x.table[w] = f(coords);
  }
  return x;
}

ToyObservable ToyObservable::from_walsh(int n, std::span<const double> coefficients) {
  WalshSpectrum s{n, {coefficients.begin(), coefficients.end()}, {}};
  return inverse_walsh(s);
}

ToyObservable ToyObservable::random(const DiscreteNoise& noise, std::uint64_t seed) {
  noise.validate();
  const Philox4x32 gen(seed);
  const std::uint64_t count = noise.outcome_count();
  ToyObservable x{noise, std::vector<double>(count)};
  for (std::uint64_t w = 0; w < count; ++w) {
    const auto block = gen({static_cast<std::uint32_t>(w), 0u, 0u, 0x70E5u});
    x.table[w] = 2.0 * to_open_unit(block[0], block[1]) - 1.0;
  }
  return x;
}

double ToyObservable::mean() const {
  const auto p = outcome_weights(noise);
  std::vector<double> terms(table.size());
  for (std::size_t w = 0; w < table.size(); ++w) terms[w] = p[w] * table[w];
  return pairwise_sum(terms);
}

double ToyObservable::second_moment() const {
  const auto p = outcome_weights(noise);
  std::vector<double> terms(table.size());
  for (std::size_t w = 0; w < table.size(); ++w) terms[w] = p[w] * table[w] * table[w];
  return pairwise_sum(terms);
}

void ToyObservable::validate() const {
  noise.validate();
  if (table.size() != noise.outcome_count()) {
    throw ConfigError("ToyObservable: table size does not match the noise");
  }
}

CellPartition CellPartition::singletons(int n) {
  CellPartition p;
  for (int i = 0; i < n; ++i) p.blocks.push_back({i});
  return p;
}

CellPartition CellPartition::contiguous(int n, int count) {
  if (count < 1 || count > n) throw ConfigError("CellPartition: block count outside [1, n]");
  CellPartition p;
  for (int b = 0; b < count; ++b) {
    std::vector<int> block;
    for (int i = b * n / count; i < (b + 1) * n / count; ++i) block.push_back(i);
    p.blocks.push_back(std::move(block));
  }
  return p;
}

void CellPartition::validate(int n) const {
  std::vector<int> seen(n, 0);
  for (const auto& block : blocks) {
    if (block.empty()) throw ConfigError("CellPartition: empty block");
    for (int i : block) {
      if (i < 0 || i >= n) throw ConfigError("CellPartition: index outside 0..n-1");
      if (seen[i]++) throw ConfigError("CellPartition: blocks overlap");
    }
  }
  if (std::count(seen.begin(), seen.end(), 0) != 0) {
    throw ConfigError("CellPartition: blocks do not cover every coordinate");
  }
}

bool CellPartition::refined_by(const CellPartition& finer) const {
  std::vector<int> owner;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int i : blocks[b]) {
      if (static_cast<std::size_t>(i) >= owner.size()) owner.resize(i + 1, -1);
      owner[i] = static_cast<int>(b);
    }
  }
  for (const auto& block : finer.blocks) {
    for (int i : block) {
      if (static_cast<std::size_t>(i) >= owner.size() || owner[i] != owner[block.front()]) {
        return false;
      }
    }
  }
  return true;
}

std::vector<double> conditional_expectation(const ToyObservable& x, std::span<const int> block) {
  x.validate();
  const auto& noise = x.noise;
  const auto stride = digit_strides(noise);
  const auto p = outcome_weights(noise);
  const std::uint64_t count = noise.outcome_count();
  const auto radix = static_cast<std::uint64_t>(noise.radix());

  // Outcome w maps to the index of its block digits; E[X | block] at that
  // index is sum P(w) X(w) over the cell divided by the cell's probability.
  auto cell_of = [&](std::uint64_t w) {
    std::uint64_t c = 0, s = 1;
    for (int i : block) {
      c += (w / stride[i] % radix) * s;
      s *= radix;
    }
    return c;
  };
  std::uint64_t cells = 1;
  for (std::size_t i = 0; i < block.size(); ++i) cells *= radix;
  std::vector<double> num(cells, 0.0), den(cells, 0.0);
  std::vector<std::uint64_t> cell(count);
  for (std::uint64_t w = 0; w < count; ++w) {
    cell[w] = cell_of(w);
    num[cell[w]] += p[w] * x.table[w];
    den[cell[w]] += p[w];
  }
  std::vector<double> out(count);
  for (std::uint64_t w = 0; w < count; ++w) out[w] = num[cell[w]] / den[cell[w]];
  return out;
}

ToyObservable project_Pn(const ToyObservable& x, const CellPartition& partition) {
  x.validate();
  partition.validate(x.noise.n);
  const double m = x.mean();
  ToyObservable out{x.noise, std::vector<double>(x.table.size(), 0.0)};
  for (const auto& block : partition.blocks) {
    const auto cond = conditional_expectation(x, block);
    for (std::size_t w = 0; w < cond.size(); ++w) out.table[w] += cond[w] - m;
  }
  return out;
}

double block_variance_sum(const ToyObservable& x, const CellPartition& partition) {
  x.validate();
  partition.validate(x.noise.n);
  std::vector<double> vars;
  for (const auto& block : partition.blocks) {
    ToyObservable cond{x.noise, conditional_expectation(x, block)};
    vars.push_back(cond.variance());
  }
  return pairwise_sum(vars);
}

WalshSpectrum walsh_spectrum(const ToyObservable& x) {
  x.validate();
  require_sign(x.noise, "walsh_spectrum");
  WalshSpectrum s{x.noise.n, x.table, std::vector<double>(x.noise.n + 1, 0.0)};
  fwht(s.coefficients);
  const double scale = 1.0 / static_cast<double>(s.coefficients.size());
  for (std::size_t mask = 0; mask < s.coefficients.size(); ++mask) {
    s.coefficients[mask] *= scale;
    s.degree_mass[std::popcount(mask)] += s.coefficients[mask] * s.coefficients[mask];
  }
  return s;
}

ToyObservable inverse_walsh(const WalshSpectrum& spectrum) {
  const DiscreteNoise noise{spectrum.n, Alphabet::Sign};
  noise.validate();
  if (spectrum.coefficients.size() != noise.outcome_count()) {
    throw ConfigError("inverse_walsh: expected 2^n coefficients");
  }
  ToyObservable x{noise, spectrum.coefficients};
  fwht(x.table);
  return x;
}

ToyObservable walsh_degree_part(const ToyObservable& x, int degree) {
  auto s = walsh_spectrum(x);
  for (std::size_t mask = 0; mask < s.coefficients.size(); ++mask) {
    if (std::popcount(mask) != degree) s.coefficients[mask] = 0.0;
  }
  return inverse_walsh(s);
}

double resample_correlation_discrete(const ToyObservable& x, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("resample_correlation: rho outside [0, 1]");
  const auto s = walsh_spectrum(x);
  double num = 0.0, den = 0.0;
  for (int k = 1; k <= s.n; ++k) {
    num += std::pow(rho, k) * s.degree_mass[k];
    den += s.degree_mass[k];
  }
  if (!(den > 0.0)) throw UndefinedCorrelation("resample_correlation: X is constant");
  return num / den;
}

CorrelationEstimate resample_correlation_mc(const ToyObservable& x, double rho,
                                            std::uint64_t samples, std::uint64_t seed) {
  x.validate();
  require_sign(x.noise, "resample_correlation_mc");
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("resample_correlation: rho outside [0, 1]");
  const Philox4x32 gen(seed);
  const int n = x.noise.n;
  const double flip = 0.5 * (1.0 - rho);
  std::vector<double> a(samples), b(samples);
  parallel_for(samples, [&](std::size_t i) {
    const auto idx = static_cast<std::uint32_t>(i), hi = static_cast<std::uint32_t>(i >> 32);
    const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
    const auto head = gen({idx, hi, 0u, 0x70E6u});
    const std::uint64_t w = head[0] & mask;
    std::uint64_t w2 = w;
    for (int j = 0; j < n; j += 4) {
      const auto block = gen({idx, hi, 1u + static_cast<std::uint32_t>(j / 4), 0x70E6u});
      for (int q = 0; q < 4 && j + q < n; ++q) {
        if ((static_cast<double>(block[q]) + 0.5) * 0x1p-32 < flip) w2 ^= std::uint64_t{1} << (j + q);
      }
    }
    a[i] = x.table[w];
    b[i] = x.table[w2];
  });
  return estimate_correlation(a, b);
}

std::vector<double> iterate_Pn_refinement(const ToyObservable& x,
                                          std::span<const CellPartition> ladder) {
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    ladder[l].validate(x.noise.n);
    if (l > 0 && !ladder[l - 1].refined_by(ladder[l])) {
      throw ConfigError("iterate_Pn_refinement: level " + std::to_string(l) +
                        " does not refine the previous level");
    }
  }
  std::vector<double> norms;
  for (const auto& partition : ladder) norms.push_back(block_variance_sum(x, partition));
  return norms;
}

}  // namespace shflab::toy
