// Copyright 2026 The qcsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QCSIM_TEST_HELPERS_HPP
#define QCSIM_TEST_HELPERS_HPP

#include "qcsim/operators.hpp"
#include "qcsim/rng.hpp"

namespace qcsim::testing {

inline Vec random_vec(int dim, std::uint64_t seed) {
  CounterRng rng(seed);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cx(rng.next_normal(), rng.next_normal());
  return v;
}

inline Ket random_ket(int dim, std::uint64_t seed) {
  return Ket::normalized(SpaceSpec::single(dim), random_vec(dim, seed));
}

inline Mat random_matrix(int dim, std::uint64_t seed) {
  CounterRng rng(seed);
  Mat m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = cx(rng.next_normal(), rng.next_normal());
  return m;
}

inline Operator random_hermitian(int dim, std::uint64_t seed) {
  Mat m = random_matrix(dim, seed);
  return Operator(SpaceSpec::single(dim), 0.5 * (m + m.adjoint().eval()));
}

// Full-rank random state: G G^dag / tr.
inline DensityMatrix random_density(int dim, std::uint64_t seed) {
  Mat g = random_matrix(dim, seed);
  Mat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::from_matrix(SpaceSpec::single(dim), std::move(rho));
}

inline DensityMatrix random_density(const SpaceSpec& space, std::uint64_t seed) {
  Mat g = random_matrix(space.total_dim(), seed);
  Mat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::from_matrix(space, std::move(rho));
}

}  // namespace qcsim::testing

#endif  // QCSIM_TEST_HELPERS_HPP
