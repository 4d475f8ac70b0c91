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

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "textpriv/errors.hpp"
#include "textpriv/random.hpp"

namespace textpriv {

// Additive noise z = magnitude * direction with density proportional to
// exp(-epsilon * |z|_2) in d dimensions.
struct NoiseSample {
  std::vector<double> direction;  // unit vector
  double magnitude = 0.0;
  std::vector<double> vector;
};

// Draw order, which fixes the replayable sequence of a stream:
//   1. d standard normals (Box-Muller, cosine value first) -> direction after
//      L2 normalisation; an all-zero draw is redrawn.
//   2. a Gamma(d, 1) variate (Marsaglia-Tsang, continuing the same normal
//      sampler), divided by epsilon.
// Dividing a unit-scale draw keeps the noise for one stream on a single ray
// across budgets: the same (seed, stream) at epsilon and 2*epsilon yields the
// same direction and half the magnitude.
inline NoiseSample sample_noise(std::size_t dim, double epsilon,
                                RngStream& rng) {
  if (dim == 0) throw ContractError("noise dimension must be positive");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ContractError("epsilon must be positive and finite");
  }
  NormalSampler normal;
  NoiseSample noise;
  noise.direction.resize(dim);
  double norm = 0.0;
  do {
    double sum = 0.0;
    for (auto& x : noise.direction) {
      x = normal(rng);
      sum += x * x;
    }
    norm = std::sqrt(sum);
  } while (norm == 0.0);
  for (auto& x : noise.direction) x /= norm;

  noise.magnitude =
      sample_standard_gamma(static_cast<double>(dim), rng, normal) / epsilon;
  noise.vector.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    noise.vector[i] = noise.magnitude * noise.direction[i];
  }
  return noise;
}

// v + z with z drawn by sample_noise(|v|, epsilon, rng).
inline std::vector<double> perturb(std::span<const double> v, double epsilon,
                                   RngStream& rng) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ContractError("perturb: non-finite input");
  }
  const NoiseSample noise = sample_noise(v.size(), epsilon, rng);
  std::vector<double> out(v.begin(), v.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise.vector[i];
  return out;
}

}  // namespace textpriv
