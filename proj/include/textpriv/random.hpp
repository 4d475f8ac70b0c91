// Copyright 2026 The textpriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "textpriv/errors.hpp"

namespace textpriv {

// Philox4x64-10 counter-based generator (Salmon et al., Random123). The key
// is (seed, stream id); the 256-bit counter starts at zero. Distinct keys give
// independent streams, so every (seed, stream) pair reproduces the same
// sequence no matter which worker draws it or in which order.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{seed, stream_id} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (used_ == 4) {
      block_ = Block(counter_, key_);
      Increment();
      used_ = 0;
    }
    return block_[used_++];
  }

  std::uint64_t seed() const noexcept { return key_[0]; }
  std::uint64_t stream_id() const noexcept { return key_[1]; }

  // One Philox4x64-10 bijection of `counter` under `key`.
  static std::array<std::uint64_t, 4> Block(std::array<std::uint64_t, 4> ctr,
                                            std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      std::uint64_t hi0, lo0, hi1, lo1;
      MulHiLo(kMul0, ctr[0], hi0, lo0);
      MulHiLo(kMul1, ctr[2], hi1, lo1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static void MulHiLo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
    const unsigned __int128 product = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(product >> 64);
    lo = static_cast<std::uint64_t>(product);
  }

  void Increment() {
    for (auto& word : counter_) {
      if (++word != 0) break;
    }
  }

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{};
  std::array<std::uint64_t, 4> block_{};
  int used_ = 4;
};

// Injective stream id for a (major, minor) position pair, e.g. (word index,
// query index) or (document index, token index). Both halves must fit in 32
// bits.
inline std::uint64_t position_stream_id(std::uint64_t major,
                                        std::uint64_t minor) {
  if (major > UINT32_MAX || minor > UINT32_MAX) {
    throw ContractError("stream position (" + std::to_string(major) + ", " +
                        std::to_string(minor) + ") exceeds 32 bits");
  }
  return (major << 32) | minor;
}

// Uniform double in [0, 1) from the top 53 bits of one draw.
template <class Generator>
double uniform_unit(Generator& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1]; safe to pass to log().
template <class Generator>
double uniform_unit_open_zero(Generator& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

// Standard normal variates by the Box-Muller transform. Each pair of uniforms
// (u1 in (0,1], u2 in [0,1)) yields r*cos(t) first, then r*sin(t), with
// r = sqrt(-2 ln u1) and t = 2 pi u2. The spare value lives in this object,
// so a fresh sampler never reuses state from an earlier one.
class NormalSampler {
 public:
  template <class Generator>
  double operator()(Generator& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_unit_open_zero(rng);
    const double u2 = uniform_unit(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Gamma(shape, 1) by Marsaglia & Tsang (2000). Shapes below one use the
// boost Gamma(shape + 1) * U^(1/shape), with U drawn after the boosted value.
template <class Generator>
double sample_standard_gamma(double shape, Generator& rng,
                             NormalSampler& normal) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw ContractError("gamma shape must be positive and finite");
  }
  if (shape < 1.0) {
    const double boosted = sample_standard_gamma(shape + 1.0, rng, normal);
    return boosted * std::pow(uniform_unit_open_zero(rng), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform_unit_open_zero(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace textpriv
