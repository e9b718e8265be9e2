// SPDX-License-Identifier: Apache-2.0
//
// msbc -- power minimization in the multiple-stream MIMO broadcast channel
// under statistical transmitter-side channel knowledge.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <random>

#include "msbc/types.hpp"

namespace msbc {

// std::mt19937_64 output is pinned by the standard; the mappings below avoid
// the library-defined distributions so that streams are reproducible across
// standard library implementations.

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Circularly symmetric complex Gaussian with E|z|^2 = 1 (variance 1/2 per
/// real component), via the polar transform: |z|^2 ~ Exp(1), phase uniform.
template <class Real>
Cplx<Real> complex_gaussian(std::mt19937_64& rng) {
  double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
  double u2 = uniform01(rng);
  double radius = std::sqrt(-std::log(u1));
  double phase = 2.0 * M_PI * u2;
  return {static_cast<Real>(radius * std::cos(phase)),
          static_cast<Real>(radius * std::sin(phase))};
}

/// N-vector of independent CN(0, 1) entries, drawn in ascending index order.
template <class Real>
VectorC<Real> complex_gaussian_vector(Index n, std::mt19937_64& rng) {
  VectorC<Real> z(n);
  for (Index i = 0; i < n; ++i) z(i) = complex_gaussian<Real>(rng);
  return z;
}

/// Uniform point on the complex unit sphere in dimension n.
template <class Real>
VectorC<Real> random_unit_vector(Index n, std::mt19937_64& rng) {
  VectorC<Real> z = complex_gaussian_vector<Real>(n, rng);
  Real norm = z.norm();
  while (norm == Real(0)) {
    z = complex_gaussian_vector<Real>(n, rng);
    norm = z.norm();
  }
  return z / norm;
}

/// Uniform sample from the simplex {x >= 0, sum x = total} of dimension n,
/// via normalized exponential spacings.
template <class Real>
VectorR<Real> random_simplex_point(Index n, Real total, std::mt19937_64& rng) {
  VectorR<Real> e(n);
  for (Index i = 0; i < n; ++i)
    e(i) = static_cast<Real>(-std::log(1.0 - uniform01(rng)));
  return (total / e.sum()) * e;
}

}  // namespace msbc
