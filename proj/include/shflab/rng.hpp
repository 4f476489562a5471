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
#include <cstddef>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace shflab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// every draw is a pure function of (key, counter).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit constexpr Philox4x32(Key key) : key_(key) {}
  explicit constexpr Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Blocks for the counters {first[i], c1, c2, c3}, i < count, written as
  /// four word arrays. Bit-identical to operator(); lanes run in fixed-width
  /// chunks so the rounds vectorise.
  void lanes(const std::uint32_t* first, std::size_t count, std::uint32_t c1, std::uint32_t c2,
             std::uint32_t c3, std::uint32_t* out0, std::uint32_t* out1, std::uint32_t* out2,
             std::uint32_t* out3) const {
    constexpr std::size_t W = 64;
    alignas(64) std::uint32_t a0[W], a1[W], a2[W], a3[W];
    for (std::size_t start = 0; start < count; start += W) {
      const std::size_t m = std::min(W, count - start);
      for (std::size_t i = 0; i < W; ++i) {
        a0[i] = i < m ? first[start + i] : 0u;
        a1[i] = c1;
        a2[i] = c2;
        a3[i] = c3;
      }
      Key k = key_;
      for (int round = 0; round < 10; ++round) {
        if (round > 0) {
          k[0] += 0x9E3779B9u;
          k[1] += 0xBB67AE85u;
        }
        for (std::size_t i = 0; i < W; ++i) {
          const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * a0[i];
          const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * a2[i];
          const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ a1[i] ^ k[0];
          const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ a3[i] ^ k[1];
          a1[i] = static_cast<std::uint32_t>(p1);
          a3[i] = static_cast<std::uint32_t>(p0);
          a0[i] = n0;
          a2[i] = n2;
        }
      }
      std::copy(a0, a0 + m, out0 + start);
      std::copy(a1, a1 + m, out1 + start);
      std::copy(a2, a2 + m, out2 + start);
      std::copy(a3, a3 + m, out3 + start);
    }
  }

  constexpr Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  Key key_;
};

/// Uniform on the open interval (0, 1) from 53 random bits.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 21) ^ (lo >> 11);
  return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1p-53;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::pair<double, double> normal_pair(const Philox4x32::Counter& block) {
  const double u1 = to_open_unit(block[0], block[1]);
  const double u2 = to_open_unit(block[2], block[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Two independent standard normals by the Marsaglia polar method, which
/// avoids trigonometric calls. Each block offers two candidate points; on
/// rejection of both the upper half of the counter's last word is advanced,
/// so callers keep that word below 2^16 and the result stays a pure function
/// of (key, counter).
inline std::pair<double, double> polar_normal_pair(const Philox4x32& gen,
                                                   Philox4x32::Counter ctr) {
  constexpr double scale = 0x1p-31;
  for (;;) {
    const auto block = gen(ctr);
    for (int i = 0; i < 4; i += 2) {
      const double x = (static_cast<double>(block[i]) + 0.5) * scale - 1.0;
      const double y = (static_cast<double>(block[i + 1]) + 0.5) * scale - 1.0;
      const double s = x * x + y * y;
      if (s < 1.0) {
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        return {x * f, y * f};
      }
    }
    ctr[3] += 0x10000u;
  }
}

inline std::pair<double, double> uniform_pair(const Philox4x32::Counter& block) {
  return {to_open_unit(block[0], block[1]), to_open_unit(block[2], block[3])};
}

}  // namespace shflab
