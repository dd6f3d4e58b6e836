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

#include <catch2/catch_amalgamated.hpp>

#include "qcsim/operators.hpp"
#include "test_helpers.hpp"

using namespace qcsim;

namespace {

// Independent series oracle for coherent-state expectations: builds the
// Poisson amplitudes directly and sums <a|b+b^dag|a> = sum 2 Re(c_n* c_{n+1}) sqrt(n+1).
double coherent_quadrature_series(cx alpha, int dim) {
  std::vector<cx> c(dim);
  c[0] = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < dim; ++n) c[n] = c[n - 1] * alpha / std::sqrt(double(n));
  double acc = 0.0;
  for (int n = 0; n + 1 < dim; ++n)
    acc += 2.0 * (std::conj(c[n]) * c[n + 1]).real() * std::sqrt(double(n + 1));
  return acc;
}

}  // namespace

TEST_CASE("SpaceSpec enforces dimensions and the cap") {
  CHECK(SpaceSpec({2, 3, 4}).total_dim() == 24);
  CHECK_THROWS_AS(SpaceSpec({0, 3}), InvalidDimension);
  CHECK_THROWS_AS(SpaceSpec({64, 65}), InvalidDimension);  // 4160 > 4096
  CHECK(SpaceSpec({64, 64}).total_dim() == 4096);
}

TEST_CASE("annihilation satisfies the defining relation") {
  const Operator a = annihilation(3);
  Vec two = Vec::Zero(3);
  two(2) = 1.0;
  Vec out = a.matrix() * two;
  CHECK(std::abs(out(1) - std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(out(0)) < 1e-14);
  CHECK(std::abs(out(2)) < 1e-14);

  const Operator a2 = annihilation(2);
  Vec vac = Vec::Zero(2);
  vac(0) = 1.0;
  CHECK((a2.matrix() * vac).norm() < 1e-14);

  CHECK_THROWS_AS(annihilation(1), InvalidDimension);
}

TEST_CASE("commutator of a with a^dag is the identity away from the truncation edge") {
  const Operator a = annihilation(20);
  const Mat c = commutator(a, dagger(a)).matrix();
  CHECK((c.topLeftCorner(10, 10) - Mat::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-14);
  // The truncation corrupts only the top level.
  CHECK(std::abs(c(19, 19) + 19.0) < 1e-12);
}

TEST_CASE("quadrature structure and expectations") {
  const Mat q = quadrature(2).matrix();
  CHECK(std::abs(q(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(q(1, 0) - 1.0) < 1e-15);
  CHECK(std::abs(q(0, 0)) < 1e-15);

  const Ket vac = basis_ket(SpaceSpec::single(10), 0);
  CHECK(std::abs(expectation(vac, quadrature(10))) < 1e-15);

  const Ket alpha = coherent_state(cx(0.5, 0), 30);
  const double oracle = coherent_quadrature_series(cx(0.5, 0), 30);
  CHECK(std::abs(oracle - 1.0) < 1e-10);  // 2 Re alpha
  CHECK(std::abs(expectation(alpha, quadrature(30)).real() - oracle) < 1e-8);
}

TEST_CASE("coherent state basics") {
  const Ket zero = coherent_state(cx(0, 0), 10);
  CHECK(std::abs(zero.vector()(0) - 1.0) < 1e-14);

  // Eigenrelation a|alpha> = alpha |alpha>.
  const cx alpha(1.0, 0.0);
  const Ket k = coherent_state(alpha, 30);
  const Vec resid = annihilation(30).matrix() * k.vector() - alpha * k.vector();
  CHECK(resid.norm() < 1e-10);

  // Truncation adequacy is enforced.
  CHECK_THROWS_AS(coherent_state(cx(2.0, 0), 10), TruncationError);   // precondition
  CHECK_THROWS_AS(coherent_state(cx(1.0, 0), 10), TruncationError);   // tail mass
  CHECK(coherent_state_with_tail(cx(1.0, 0), 30).tail_mass < 1e-10);
}

TEST_CASE("coherent eigenrelation holds across amplitudes and phases") {
  for (int s = 0; s < 8; ++s) {
    const cx alpha = std::polar(0.3 + 0.2 * s, 0.7 * s);
    const Ket k = coherent_state(alpha, 40);
    CHECK((annihilation(40).matrix() * k.vector() - alpha * k.vector()).norm() < 1e-8);
  }
}

TEST_CASE("displacement operators") {
  const int dim = 30;
  CHECK((displacement(cx(0, 0), dim).matrix() - Mat::Identity(dim, dim)).norm() < 1e-12);

  // D(alpha) |0> reproduces the coherent series.
  const cx alpha(1.0, 0.0);
  Vec vac = Vec::Zero(dim);
  vac(0) = 1.0;
  const Vec displaced = displacement(alpha, dim).matrix() * vac;
  CHECK((displaced - coherent_state(alpha, dim).vector()).norm() < 1e-9);

  // D(alpha) D(-alpha) = 1 on the low-lying subspace.
  const Mat prod = displacement(alpha, dim).matrix() * displacement(-alpha, dim).matrix();
  CHECK((prod.topLeftCorner(20, 20) - Mat::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("kron and dagger algebra") {
  const Operator i2 = identity_op(SpaceSpec::single(2));
  const Operator i3 = identity_op(SpaceSpec::single(3));
  CHECK((kron(i2, i3).matrix() - Mat::Identity(6, 6)).norm() == 0.0);

  const Operator a = testing::random_hermitian(5, 11);
  CHECK((commutator(a, a).matrix()).norm() == 0.0);

  // dagger is an involution, exactly.
  const Mat m = testing::random_matrix(6, 3);
  const Operator op(SpaceSpec::single(6), m);
  CHECK((dagger(dagger(op)).matrix() - m).norm() == 0.0);

  // kron associativity to machine precision.
  const Operator x = Operator(SpaceSpec::single(2), testing::random_matrix(2, 5));
  const Operator y = Operator(SpaceSpec::single(3), testing::random_matrix(3, 6));
  const Operator z = Operator(SpaceSpec::single(2), testing::random_matrix(2, 7));
  CHECK((kron(kron(x, y), z).matrix() - kron(x, kron(y, z)).matrix()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("expm matches the eigendecomposition oracle on diagonals") {
  std::vector<double> d{-1.5, 0.25, 2.0, 3.5};
  const Operator diag = diagonal_op(d);
  const cx s(0.3, -0.7);
  const Mat e = expm(diag, s).matrix();
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(e(i, i) - std::exp(s * d[i])) < 1e-12);
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(e(i, j)) < 1e-12);
  }
}

TEST_CASE("expm unitarity and the non-Hermitian fallback") {
  const Operator h = testing::random_hermitian(12, 17);
  const double t = 50.0 / h.matrix().norm();
  const Mat u = expm(h, cx(0, -t)).matrix();
  CHECK((u * u.adjoint() - Mat::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-9);

  // Non-Hermitian input goes through scaling-and-squaring; compare against
  // the Hermitian path on a matrix that is secretly Hermitian plus a tiny
  // non-Hermitian perturbation handled by the general branch.
  Mat g = testing::random_matrix(8, 23);
  const Operator og(SpaceSpec::single(8), g);
  const Mat direct = expm(og).matrix();
  // Oracle: Taylor series with enough terms for this norm.
  Mat acc = Mat::Identity(8, 8), term = Mat::Identity(8, 8);
  for (int k = 1; k < 60; ++k) {
    term = term * g / double(k);
    acc += term;
  }
  CHECK((direct - acc).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("partial trace recovers factors and preserves trace") {
  const DensityMatrix rho_a = testing::random_density(3, 41);
  const DensityMatrix rho_b = testing::random_density(4, 42);
  Mat joint(12, 12);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      joint.block(i * 4, j * 4, 4, 4) = rho_a.matrix()(i, j) * rho_b.matrix();
  const DensityMatrix rho = DensityMatrix::from_matrix(SpaceSpec({3, 4}), joint);

  CHECK((partial_trace(rho, 0).matrix() - rho_a.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((partial_trace(rho, 1).matrix() - rho_b.matrix()).cwiseAbs().maxCoeff() < 1e-12);

  // Bell pair: both marginals maximally mixed.
  Vec bell = Vec::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const DensityMatrix bell_rho = DensityMatrix::pure(Ket(SpaceSpec({2, 2}), bell));
  for (int keep = 0; keep < 2; ++keep) {
    const Mat red = partial_trace(bell_rho, keep).matrix();
    CHECK((red - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  }

  // Random states: trace preserved, positivity preserved.
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const DensityMatrix r = testing::random_density(SpaceSpec({2, 3, 2}), 100 + seed);
    for (int keep = 0; keep < 3; ++keep) {
      const DensityMatrix red = partial_trace(r, keep);
      CHECK(std::abs(red.matrix().trace().real() - 1.0) < 1e-12);
      CHECK(red.min_eigenvalue() > -1e-12);
    }
  }
}

TEST_CASE("expectation, trace distance, purity") {
  const SpaceSpec s10 = SpaceSpec::single(10);
  const DensityMatrix vac = DensityMatrix::pure(basis_ket(s10, 0));
  CHECK(std::abs(expectation(vac, number_op(10))) < 1e-15);

  const DensityMatrix r = testing::random_density(6, 55);
  CHECK(trace_distance(r, r) == 0.0);

  const int d = 7;
  Mat mixed = Mat::Identity(d, d) / double(d);
  const DensityMatrix mm = DensityMatrix::from_matrix(SpaceSpec::single(d), mixed);
  CHECK(std::abs(purity(mm) - 1.0 / d) < 1e-14);
  CHECK(std::abs(purity(vac) - 1.0) < 1e-14);

  // Orthogonal pure states sit at distance 1.
  const DensityMatrix e1 = DensityMatrix::pure(basis_ket(s10, 1));
  CHECK(std::abs(trace_distance(vac, e1) - 1.0) < 1e-12);
}

TEST_CASE("density matrix validation") {
  const SpaceSpec s = SpaceSpec::single(3);
  Mat bad = testing::random_matrix(3, 7);
  CHECK_THROWS_AS(DensityMatrix::from_matrix(s, bad), ValidationError);

  Mat herm = Mat::Identity(3, 3);
  herm(0, 0) = 2.0;  // trace 4
  CHECK_THROWS_AS(DensityMatrix::from_matrix(s, herm), ValidationError);

  Mat neg = Mat::Identity(3, 3);
  neg(2, 2) = -0.5;
  neg /= neg.trace().real();
  CHECK_THROWS_AS(DensityMatrix::from_matrix(s, neg), ValidationError);
}

TEST_CASE("ket validation") {
  CHECK_THROWS_AS(Ket(SpaceSpec::single(2), Vec::Ones(2)), ValidationError);
  CHECK_NOTHROW(Ket::normalized(SpaceSpec::single(2), Vec::Ones(2)));
}
