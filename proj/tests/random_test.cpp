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
#include "textpriv/random.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <set>

#include <gtest/gtest.h>

namespace textpriv {
namespace {

using Block = std::array<std::uint64_t, 4>;

// Known-answer vectors published with the Random123 reference
// implementation (philox4x64, 10 rounds).
TEST(PhiloxTest, KnownAnswerZero) {
  const Block out = RngStream::Block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Block{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL,
                        0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL}));
}

TEST(PhiloxTest, KnownAnswerAllOnes) {
  const std::uint64_t f = ~std::uint64_t{0};
  const Block out = RngStream::Block({f, f, f, f}, {f, f});
  EXPECT_EQ(out, (Block{0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL,
                        0x9cc7d7c69cd777b6ULL, 0xa09caebf594f0ba0ULL}));
}

TEST(PhiloxTest, KnownAnswerPi) {
  const Block out = RngStream::Block(
      {0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
       0x082efa98ec4e6c89ULL},
      {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
  EXPECT_EQ(out, (Block{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL,
                        0xa5a1610e72fd18b5ULL, 0x57bd43b5e52b7fe6ULL}));
}

// Words produced by numpy's Philox bit generator for the same key, counter
// starting at zero (tests/oracles/noise_oracle.py).
TEST(RngStreamTest, MatchesIndependentGenerator) {
  RngStream rng(42, position_stream_id(7, 3));
  const std::array<std::uint64_t, 6> expected = {
      0x75cb035364b7a023ULL, 0x5d0be506ec8fe7c1ULL, 0xe7a53ac70f2b9739ULL,
      0x0aac3a39882534f2ULL, 0x247b67664cc2b716ULL, 0x3e3d98947edf6d22ULL};
  for (auto word : expected) EXPECT_EQ(rng(), word);
}

TEST(RngStreamTest, SameKeyReplays) {
  RngStream a(5, 9);
  RngStream b(5, 9);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(RngStreamTest, DifferentStreamsDiffer) {
  RngStream a(5, 9);
  RngStream b(5, 10);
  RngStream c(6, 9);
  const auto first = a();
  EXPECT_NE(first, b());
  EXPECT_NE(first, c());
}

TEST(RngStreamTest, StreamIdIsInjective) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t major = 0; major < 40; ++major) {
    for (std::uint64_t minor = 0; minor < 40; ++minor) {
      ids.insert(position_stream_id(major, minor));
    }
  }
  EXPECT_EQ(ids.size(), 1600u);
  EXPECT_EQ(position_stream_id(1, 0), std::uint64_t{1} << 32);
  EXPECT_THROW(position_stream_id(std::uint64_t{1} << 32, 0), ContractError);
  EXPECT_THROW(position_stream_id(0, std::uint64_t{1} << 32), ContractError);
}

TEST(UniformTest, RangesAreHalfOpen) {
  struct Fixed {
    using result_type = std::uint64_t;
    std::uint64_t value;
    std::uint64_t operator()() { return value; }
  };
  Fixed zero{0};
  Fixed ones{~std::uint64_t{0}};
  EXPECT_EQ(uniform_unit(zero), 0.0);
  EXPECT_LT(uniform_unit(ones), 1.0);
  EXPECT_GT(uniform_unit_open_zero(zero), 0.0);
  EXPECT_EQ(uniform_unit_open_zero(ones), 1.0);
}

TEST(GammaTest, MatchesIndependentReplay) {
  RngStream rng(9, 1);
  NormalSampler normal;
  EXPECT_NEAR(sample_standard_gamma(0.5, rng, normal), 0.03813413319645491,
              1e-13);
  EXPECT_NEAR(sample_standard_gamma(3.0, rng, normal), 0.6495102396083, 1e-12);
}

TEST(GammaTest, RejectsBadShape) {
  RngStream rng(1, 1);
  NormalSampler normal;
  EXPECT_THROW(sample_standard_gamma(0.0, rng, normal), ContractError);
  EXPECT_THROW(sample_standard_gamma(-1.0, rng, normal), ContractError);
  EXPECT_THROW(sample_standard_gamma(NAN, rng, normal), ContractError);
}

TEST(GammaTest, MeanAndVarianceMatchShape) {
  RngStream rng(3, 0);
  NormalSampler normal;
  for (double shape : {0.3, 1.0, 7.5, 100.0}) {
    const int n = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = sample_standard_gamma(shape, rng, normal);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    // Standard error of the mean is sqrt(shape / n).
    EXPECT_NEAR(mean, shape, 5.0 * std::sqrt(shape / n)) << shape;
    EXPECT_NEAR(var, shape, 0.05 * shape) << shape;
  }
}

TEST(NormalTest, MomentsAreStandard) {
  RngStream rng(11, 2);
  NormalSampler normal;
  const int n = 400000;
  double sum = 0.0;
  double sq = 0.0;
  double fourth = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = normal(rng);
    sum += x;
    sq += x * x;
    fourth += x * x * x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
  EXPECT_NEAR(fourth / n, 3.0, 0.05);
}

}  // namespace
}  // namespace textpriv
