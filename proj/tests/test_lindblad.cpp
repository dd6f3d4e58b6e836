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

#include "qcsim/lindblad.hpp"
#include "test_helpers.hpp"

using namespace qcsim;

namespace {

// Driven damped cavity: H = Delta n + E* a + E a^dag, kappa D[a].
LindbladModel driven_cavity(int dim, double kappa, double delta, cx drive) {
  const Operator a = annihilation(dim);
  Operator h = delta * number_op(dim) +
               Operator(a.space(), std::conj(drive) * a.matrix() + drive * a.matrix().adjoint());
  return LindbladModel(std::move(h), {{kappa, a}}, {});
}

}  // namespace

TEST_CASE("model validation") {
  const Operator a = annihilation(4);
  CHECK_THROWS_AS(LindbladModel(cx(0, 1) * a, {}, {}), ValidationError);       // non-Hermitian H
  CHECK_THROWS_AS(LindbladModel(number_op(4), {{-1.0, a}}, {}), ValidationError);
  CHECK_THROWS_AS(LindbladModel(number_op(4), {}, {{1.0, a}}), ValidationError);  // non-Hermitian X
}

TEST_CASE("rhs vanishes on stationary inputs") {
  // H-only model, rho an eigenprojector of H.
  const Operator h = testing::random_hermitian(6, 2);
  Eigen::SelfAdjointEigenSolver<Mat> es(h.matrix());
  const Vec v = es.eigenvectors().col(2);
  const DensityMatrix proj =
      DensityMatrix::from_matrix(h.space(), v * v.adjoint());
  const LindbladModel model(h, {}, {});
  CHECK(rhs(model, proj).matrix().cwiseAbs().maxCoeff() < 1e-12);

  // Pure dephasing, rho diagonal in the X eigenbasis.
  const Operator x = diagonal_op({-1.0, 0.0, 0.5, 2.0});
  Mat diag = Mat::Zero(4, 4);
  diag(0, 0) = 0.4;
  diag(1, 1) = 0.3;
  diag(2, 2) = 0.2;
  diag(3, 3) = 0.1;
  const LindbladModel deph(0.0 * x, {}, {{1.7, x}});
  CHECK(rhs(deph, DensityMatrix::from_matrix(x.space(), diag)).matrix().cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("rhs is Hermitian and traceless on random inputs") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const int dim = 5;
    const Operator h = testing::random_hermitian(dim, seed);
    const Operator a(h.space(), testing::random_matrix(dim, seed + 50));
    const Operator x = testing::random_hermitian(dim, seed + 100);
    const LindbladModel model(h, {{0.7, a}}, {{1.1, x}});
    const Mat r = rhs(model, testing::random_density(dim, seed + 150)).matrix();
    CHECK(std::abs(r.trace()) < 1e-12);
    CHECK((r - r.adjoint().eval()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("damped cavity moment equation: tr(a rhs) = -(kappa/2 + i Delta)<a> - iE") {
  const int dim = 12;
  const double kappa = 0.9, delta = 1.4;
  const cx drive(0.3, -0.2);
  const LindbladModel model = driven_cavity(dim, kappa, delta, drive);
  const Operator a = annihilation(dim);

  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    // Support away from the truncation edge so the commutator is exact.
    Mat g = testing::random_matrix(dim / 2, seed);
    Mat rho_m = Mat::Zero(dim, dim);
    rho_m.topLeftCorner(dim / 2, dim / 2) = g * g.adjoint();
    rho_m /= rho_m.trace().real();
    const DensityMatrix rho = DensityMatrix::from_matrix(a.space(), rho_m);

    const cx lhs = (a.matrix() * rhs(model, rho).matrix()).trace();
    const cx mean_a = expectation(rho, a);
    const cx oracle = -(cx(0.5 * kappa, delta)) * mean_a - cx(0, 1) * drive;
    CHECK(std::abs(lhs - oracle) < 1e-10);
  }
}

TEST_CASE("free rotation of a coherent state") {
  const int dim = 20;
  const double omega = 2.0;
  const LindbladModel model(omega * number_op(dim), {}, {});
  const cx alpha(1.0, 0.0);
  const DensityMatrix rho0 = DensityMatrix::pure(coherent_state(alpha, dim));
  const std::vector<double> grid{0.0, 0.25, 0.5, 1.0};
  const auto states = integrate(model, rho0, grid, StepperConfig(1e-3));
  const Operator a = annihilation(dim);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cx oracle = alpha * std::exp(cx(0, -omega * grid[i]));
    CHECK(std::abs(expectation(states[i], a) - oracle) < 1e-8);
  }
}

TEST_CASE("damped undriven cavity follows the moment ODE") {
  const int dim = 20;
  const double kappa = 0.8, delta = 1.3;
  const LindbladModel model = driven_cavity(dim, kappa, delta, cx(0, 0));
  const cx alpha(0.8, 0.0);
  const DensityMatrix rho0 = DensityMatrix::pure(coherent_state(alpha, dim));
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
  const auto states = integrate(model, rho0, grid, StepperConfig(1e-3));
  const Operator a = annihilation(dim);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cx oracle = alpha * std::exp(-cx(0.5 * kappa, delta) * grid[i]);
    CHECK(std::abs(expectation(states[i], a) - oracle) < 1e-8);
  }
}

TEST_CASE("pure dephasing decays off-diagonals element by element") {
  const int dim = 8;
  const double gamma = 2.0;
  std::vector<double> xs{-1.5, -0.9, -0.3, 0.1, 0.4, 0.9, 1.3, 1.6};
  const Operator x = diagonal_op(xs);
  const LindbladModel model(0.0 * x, {}, {{gamma, x}});
  const DensityMatrix rho0 = testing::random_density(dim, 77);

  const double t = 1.0 / gamma;
  const auto states = integrate(model, rho0, {0.0, t}, StepperConfig(1e-4));
  const Mat& out = states[1].matrix();
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const double dx = xs[i] - xs[j];
      const cx oracle = rho0.matrix()(i, j) * std::exp(-0.25 * gamma * dx * dx * t);
      CHECK(std::abs(out(i, j) - oracle) <= 1e-6 * std::abs(oracle) + 1e-14);
    }
}

TEST_CASE("integrate validates its inputs") {
  const LindbladModel model(number_op(4), {}, {});
  const DensityMatrix rho0 = DensityMatrix::pure(basis_ket(SpaceSpec::single(4), 0));
  CHECK_THROWS_AS(integrate(model, rho0, {0.5, 1.0}, StepperConfig(1e-3)), ConfigError);
  CHECK_THROWS_AS(integrate(model, rho0, {0.0, 1.0}, StepperConfig(1.0)), StabilityError);
}

TEST_CASE("integrator preserves trace and positivity over long horizons") {
  const LindbladModel model = driven_cavity(10, 1.0, 0.5, cx(0.4, 0.1));
  const DensityMatrix rho0 = DensityMatrix::pure(basis_ket(SpaceSpec::single(10), 0));
  const auto states = integrate(model, rho0, {0.0, 20.0, 60.0, 100.0},
                                StepperConfig(0.8 * stable_dt(model)));
  for (const auto& s : states) {
    CHECK(std::abs(s.matrix().trace().real() - 1.0) < 1e-8);
    CHECK(s.min_eigenvalue() > -1e-6);
  }
}

TEST_CASE("RK4 converges at fourth order") {
  const LindbladModel model = driven_cavity(8, 1.0, 0.8, cx(0.3, 0.0));
  const DensityMatrix rho0 = DensityMatrix::pure(basis_ket(SpaceSpec::single(8), 0));
  const double t = 1.0;
  auto final_state = [&](double dt) {
    return integrate(model, rho0, {0.0, t}, StepperConfig(dt)).back().matrix();
  };
  const Mat r1 = final_state(4e-3);
  const Mat r2 = final_state(2e-3);
  const Mat r3 = final_state(1e-3);
  const double d1 = (r1 - r2).norm();
  const double d2 = (r2 - r3).norm();
  CHECK(d1 < 16.0 * d2);
  CHECK(d1 > 8.0 * d2);  // genuinely fourth order, not an accidental cancellation
}

TEST_CASE("steady state of the driven damped cavity is the coherent amplitude") {
  const int dim = 16;
  const double kappa = 2.0, delta = 0.7;
  const cx alpha0(0.8, 0.0);
  const cx drive = cx(0, 1) * alpha0 * cx(0.5 * kappa, delta);
  const LindbladModel model = driven_cavity(dim, kappa, delta, drive);

  const auto ss = steady_state(model, StepperConfig(0.8 * stable_dt(model)));
  CHECK(ss.residual < 1e-9);
  CHECK(std::abs(expectation(ss.state, annihilation(dim)) - alpha0) < 1e-6);
  CHECK(purity(ss.state) > 1.0 - 1e-6);

  // Undriven: vacuum.
  const LindbladModel undriven = driven_cavity(dim, kappa, delta, cx(0, 0));
  const auto vac = steady_state(undriven, StepperConfig(0.8 * stable_dt(undriven)));
  CHECK(std::abs(vac.state.matrix()(0, 0).real() - 1.0) < 1e-9);

  CHECK_THROWS_AS(steady_state(LindbladModel(number_op(4), {}, {}), StepperConfig(1e-3)),
                  ConfigError);
}
