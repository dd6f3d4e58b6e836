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

// Unconditional master equations: Hamiltonian part, damping dissipators
// D[A]rho = A rho A^dag - {A^dag A, rho}/2, and dephasing double commutators
// -(Gamma/4)[X,[X,rho]]. Fixed-step RK4 integration.

#ifndef QCSIM_LINDBLAD_HPP
#define QCSIM_LINDBLAD_HPP

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "qcsim/operators.hpp"

namespace qcsim {

using MatRM = Eigen::Matrix<cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

// One matrix factor of the generator, classified by structure. The public
// types stay dense; this only changes how the engine applies them.
struct StructuredOp {
  enum class Kind { Diagonal, Sparse, Dense };
  Kind kind = Kind::Dense;
  int d = 0;
  Vec diag;                       // Kind::Diagonal
  std::vector<int> rp, ci;        // Kind::Sparse (CSR)
  std::vector<cx> v;
  MatRM dn;                       // Kind::Dense

  static StructuredOp from(const Mat& m, double sparse_fill_cutoff = 0.15) {
    StructuredOp op;
    op.d = static_cast<int>(m.rows());
    bool diagonal = true;
    long long nnz = 0;
    for (int i = 0; i < op.d; ++i)
      for (int j = 0; j < op.d; ++j)
        if (m(i, j) != cx(0, 0)) {
          ++nnz;
          if (i != j) diagonal = false;
        }
    if (diagonal) {
      op.kind = Kind::Diagonal;
      op.diag = m.diagonal();
      return op;
    }
    if (static_cast<double>(nnz) <= sparse_fill_cutoff * op.d * op.d) {
      op.kind = Kind::Sparse;
      op.rp.resize(op.d + 1, 0);
      op.ci.reserve(nnz);
      op.v.reserve(nnz);
      for (int i = 0; i < op.d; ++i) {
        for (int j = 0; j < op.d; ++j)
          if (m(i, j) != cx(0, 0)) {
            op.ci.push_back(j);
            op.v.push_back(m(i, j));
          }
        op.rp[i + 1] = static_cast<int>(op.ci.size());
      }
      return op;
    }
    op.kind = Kind::Dense;
    op.dn = m;
    return op;
  }

  // out = M * X. Row-major row-axpy form keeps the inner loops contiguous.
  void apply(const MatRM& X, MatRM& out) const {
    switch (kind) {
      case Kind::Diagonal:
        parallel_for(d, [&](std::int64_t i0, std::int64_t i1) {
          for (std::int64_t i = i0; i < i1; ++i) out.row(i) = diag(i) * X.row(i);
        });
        break;
      case Kind::Sparse:
        parallel_for(d, [&](std::int64_t i0, std::int64_t i1) {
          for (std::int64_t i = i0; i < i1; ++i) {
            out.row(i).setZero();
            for (int k = rp[i]; k < rp[i + 1]; ++k) out.row(i) += v[k] * X.row(ci[k]);
          }
        });
        break;
      case Kind::Dense:
        out.noalias() = dn * X;
        break;
    }
  }

  // out += s * (M * X)
  void apply_add(const MatRM& X, MatRM& out, cx s) const {
    switch (kind) {
      case Kind::Diagonal:
        parallel_for(d, [&](std::int64_t i0, std::int64_t i1) {
          for (std::int64_t i = i0; i < i1; ++i) out.row(i) += (s * diag(i)) * X.row(i);
        });
        break;
      case Kind::Sparse:
        parallel_for(d, [&](std::int64_t i0, std::int64_t i1) {
          for (std::int64_t i = i0; i < i1; ++i)
            for (int k = rp[i]; k < rp[i + 1]; ++k) out.row(i) += (s * v[k]) * X.row(ci[k]);
        });
        break;
      case Kind::Dense:
        out.noalias() += s * (dn * X);
        break;
    }
  }

  void apply_vec(const Vec& x, Vec& out) const {
    switch (kind) {
      case Kind::Diagonal:
        out = diag.cwiseProduct(x);
        break;
      case Kind::Sparse:
        for (int i = 0; i < d; ++i) {
          cx s = 0.0;
          for (int k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * x(ci[k]);
          out(i) = s;
        }
        break;
      case Kind::Dense:
        out.noalias() = dn * x;
        break;
    }
  }
};

// out = M + M^dag, tiled so both access patterns stay cache-resident.
inline void herm_combine(const MatRM& M, MatRM& out) {
  const int d = static_cast<int>(M.rows());
  constexpr int B = 64;
  const int nb = (d + B - 1) / B;
  parallel_for(nb, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t bi = b0; bi < b1; ++bi) {
      const int i0 = static_cast<int>(bi) * B, i1 = std::min(d, i0 + B);
      for (int j0 = 0; j0 < d; j0 += B) {
        const int j1 = std::min(d, j0 + B);
        for (int i = i0; i < i1; ++i)
          for (int j = j0; j < j1; ++j) out(i, j) = M(i, j) + std::conj(M(j, i));
      }
    }
  });
}

// out = M^dag, tiled.
inline void adjoint_into(const MatRM& M, MatRM& out) {
  const int d = static_cast<int>(M.rows());
  constexpr int B = 64;
  const int nb = (d + B - 1) / B;
  parallel_for(nb, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t bi = b0; bi < b1; ++bi) {
      const int i0 = static_cast<int>(bi) * B, i1 = std::min(d, i0 + B);
      for (int j0 = 0; j0 < d; j0 += B) {
        const int j1 = std::min(d, j0 + B);
        for (int i = i0; i < i1; ++i)
          for (int j = j0; j < j1; ++j) out(i, j) = std::conj(M(j, i));
      }
    }
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// LindbladModel
// ---------------------------------------------------------------------------

struct DissipatorTerm {
  double rate;   // kappa, 1/time
  Operator op;   // arbitrary jump operator
};

struct DephasingTerm {
  double rate;   // Gamma, 1/time
  Operator op;   // Hermitian
};

class LindbladModel {
 public:
  LindbladModel(Operator hamiltonian, std::vector<DissipatorTerm> dissipators,
                std::vector<DephasingTerm> dephasings)
      : hamiltonian_(std::move(hamiltonian)),
        dissipators_(std::move(dissipators)),
        dephasings_(std::move(dephasings)) {
    if (!hamiltonian_.is_hermitian(1e-10))
      throw ValidationError("LindbladModel: Hamiltonian not Hermitian");
    for (const auto& d : dissipators_) {
      if (d.rate < 0) throw ValidationError("LindbladModel: negative dissipator rate");
      if (d.op.space() != hamiltonian_.space())
        throw DimensionMismatch("LindbladModel: dissipator space mismatch");
    }
    for (const auto& d : dephasings_) {
      if (d.rate < 0) throw ValidationError("LindbladModel: negative dephasing rate");
      if (!d.op.is_hermitian(1e-10))
        throw ValidationError("LindbladModel: dephasing operator not Hermitian");
      if (d.op.space() != hamiltonian_.space())
        throw DimensionMismatch("LindbladModel: dephasing space mismatch");
    }
  }

  const Operator& hamiltonian() const { return hamiltonian_; }
  const std::vector<DissipatorTerm>& dissipators() const { return dissipators_; }
  const std::vector<DephasingTerm>& dephasings() const { return dephasings_; }
  const SpaceSpec& space() const { return hamiltonian_.space(); }
  int dim() const { return hamiltonian_.dim(); }

  double max_rate() const {
    double r = 0.0;
    for (const auto& d : dissipators_) r = std::max(r, d.rate);
    for (const auto& d : dephasings_) r = std::max(r, d.rate);
    return r;
  }

 private:
  Operator hamiltonian_;
  std::vector<DissipatorTerm> dissipators_;
  std::vector<DephasingTerm> dephasings_;
};

// Largest |eigenvalue| of the (Hermitian) Hamiltonian.
inline double spectral_radius(const Operator& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h.matrix() + h.matrix().adjoint()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// StepperConfig: fixed-step classical RK4. The stability invariant
// dt * (max rate + spectral radius of H) <= 0.1 is enforced by integrate().
// ---------------------------------------------------------------------------

struct StepperConfig {
  double dt = 0.0;
  bool validate_outputs = true;

  explicit StepperConfig(double dt_, bool validate = true) : dt(dt_), validate_outputs(validate) {
    if (dt <= 0.0) throw ConfigError("StepperConfig: dt must be positive");
  }
};

// Largest dt satisfying the stepper stability invariant for this model.
inline double stable_dt(const LindbladModel& model) {
  const double scale = model.max_rate() + spectral_radius(model.hamiltonian());
  if (scale <= 0.0) return 0.1;
  return 0.1 / scale;
}

// ---------------------------------------------------------------------------
// Compiled generator: rhs(rho) = G rho + (G rho)^dag + sum_k w_k A_k rho A_k^dag
// with G = -iH - sum kappa/2 A^dag A - sum Gamma/4 X^2. The sandwich list
// carries (kappa, A) for dissipators and (Gamma/2, X) for dephasings.
// ---------------------------------------------------------------------------

class CompiledGenerator {
 public:
  explicit CompiledGenerator(const LindbladModel& model) : dim_(model.dim()) {
    Mat g = cx(0, -1) * model.hamiltonian().matrix();
    for (const auto& d : model.dissipators()) {
      g -= 0.5 * d.rate * (d.op.matrix().adjoint() * d.op.matrix());
      sandwiches_.push_back({d.rate, detail::StructuredOp::from(d.op.matrix())});
    }
    for (const auto& d : model.dephasings()) {
      g -= 0.25 * d.rate * (d.op.matrix() * d.op.matrix());
      sandwiches_.push_back({0.5 * d.rate, detail::StructuredOp::from(d.op.matrix())});
    }
    drift_ = detail::StructuredOp::from(g);
  }

  int dim() const { return dim_; }

  // out = L(rho); t1, t2 are dim x dim scratch.
  void rhs_into(const MatRM& rho, MatRM& out, MatRM& t1, MatRM& t2) const {
    drift_.apply(rho, t1);
    detail::herm_combine(t1, out);
    for (const auto& s : sandwiches_) {
      s.op.apply(rho, t1);          // A rho
      detail::adjoint_into(t1, t2); // rho A^dag
      s.op.apply_add(t2, out, s.weight);
    }
  }

 private:
  struct Sandwich {
    double weight;
    detail::StructuredOp op;
  };
  detail::StructuredOp drift_;
  std::vector<Sandwich> sandwiches_;
  int dim_;
};

// The operator-valued derivative of the unconditional master equation;
// Hermitian and traceless for valid inputs.
inline Operator rhs(const LindbladModel& model, const DensityMatrix& rho) {
  if (rho.space() != model.space()) throw DimensionMismatch("rhs: space mismatch");
  CompiledGenerator gen(model);
  const int d = model.dim();
  MatRM r = rho.matrix(), out(d, d), t1(d, d), t2(d, d);
  gen.rhs_into(r, out, t1, t2);
  return Operator(model.space(), Mat(out));
}

namespace detail {

// Classical RK4 with preallocated stages.
class Rk4Workspace {
 public:
  explicit Rk4Workspace(int d) : k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d), t1(d, d), t2(d, d) {}

  void step(const CompiledGenerator& gen, MatRM& rho, double h) {
    gen.rhs_into(rho, k1, t1, t2);
    tmp = rho + (0.5 * h) * k1;
    gen.rhs_into(tmp, k2, t1, t2);
    tmp = rho + (0.5 * h) * k2;
    gen.rhs_into(tmp, k3, t1, t2);
    tmp = rho + h * k3;
    gen.rhs_into(tmp, k4, t1, t2);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  MatRM k1, k2, k3, k4, tmp, t1, t2;
};

inline void check_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw ConfigError("integrate: empty time grid");
  if (t_grid.front() != 0.0) throw ConfigError("integrate: time grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (t_grid[i] <= t_grid[i - 1]) throw ConfigError("integrate: time grid must be ascending");
}

// Re-validate an evolved state: Hermiticity drift, trace renormalization,
// optional positivity check. Returns the cleaned-up state.
inline DensityMatrix validate_evolved(const SpaceSpec& space, const MatRM& rho, bool check_positivity,
                                      double drift_tol = 1e-6) {
  Mat m = rho;
  const double herm = detail::hermiticity_defect(m);
  if (herm > drift_tol) throw ValidationError("integrate: validity-lost (Hermiticity drift)");
  const cx tr = m.trace();
  if (std::abs(tr - cx(1, 0)) >= drift_tol)
    throw ValidationError("integrate: validity-lost (trace drift)");
  m = 0.5 * (m + m.adjoint().eval());
  m /= m.trace().real();
  if (check_positivity) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -drift_tol)
      throw ValidationError("integrate: validity-lost (positivity drift)");
  }
  return DensityMatrix::unchecked(space, std::move(m));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// integrate: states at each grid time (grid starts at 0). Outputs are
// re-validated; trace is renormalized when |tr - 1| < 1e-6, larger drift is
// an error.
// ---------------------------------------------------------------------------

inline std::vector<DensityMatrix> integrate(const LindbladModel& model, const DensityMatrix& rho0,
                                            const std::vector<double>& t_grid,
                                            const StepperConfig& cfg) {
  if (rho0.space() != model.space()) throw DimensionMismatch("integrate: space mismatch");
  detail::check_grid(t_grid);
  const double scale = model.max_rate() + spectral_radius(model.hamiltonian());
  if (cfg.dt * scale > 0.1 * (1.0 + 1e-9))
    throw StabilityError("integrate: dt * (max rate + spectral radius) exceeds 0.1");

  CompiledGenerator gen(model);
  const int d = model.dim();
  detail::Rk4Workspace ws(d);
  MatRM rho = rho0.matrix();

  std::vector<DensityMatrix> out;
  out.reserve(t_grid.size());
  out.push_back(detail::validate_evolved(model.space(), rho, cfg.validate_outputs));
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double gap = t_grid[i] - t_grid[i - 1];
    const int n = std::max(1, static_cast<int>(std::ceil(gap / cfg.dt - 1e-9)));
    const double h = gap / n;
    for (int s = 0; s < n; ++s) ws.step(gen, rho, h);
    out.push_back(detail::validate_evolved(model.space(), rho, cfg.validate_outputs));
  }
  return out;
}

// ---------------------------------------------------------------------------
// steady_state: long-time integration until ||rhs||_F < residual_tol.
// ---------------------------------------------------------------------------

struct SteadyStateOptions {
  double residual_tol = 1e-9;
  double max_time = 0.0;  // 0: 400 / max rate
  int check_every = 25;
  std::optional<DensityMatrix> initial;  // default: ground-state projector
};

struct SteadyState {
  DensityMatrix state;
  double residual;
  double time;
};

inline SteadyState steady_state(const LindbladModel& model, const StepperConfig& cfg,
                                const SteadyStateOptions& opts = {}) {
  if (model.dissipators().empty() && model.dephasings().empty())
    throw ConfigError("steady_state: model has no irreversible term");
  const double scale = model.max_rate() + spectral_radius(model.hamiltonian());
  if (cfg.dt * scale > 0.1 * (1.0 + 1e-9))
    throw StabilityError("steady_state: dt * (max rate + spectral radius) exceeds 0.1");
  double max_time = opts.max_time;
  if (max_time <= 0.0) max_time = 400.0 / std::max(model.max_rate(), 1e-12);

  CompiledGenerator gen(model);
  const int d = model.dim();
  detail::Rk4Workspace ws(d);
  MatRM rho;
  if (opts.initial) {
    rho = opts.initial->matrix();
  } else {
    rho = MatRM::Zero(d, d);
    rho(0, 0) = 1.0;
  }

  double t = 0.0;
  while (t < max_time) {
    for (int s = 0; s < opts.check_every; ++s) ws.step(gen, rho, cfg.dt);
    t += opts.check_every * cfg.dt;
    gen.rhs_into(rho, ws.k1, ws.t1, ws.t2);
    const double residual = ws.k1.norm();
    if (residual < opts.residual_tol) {
      return SteadyState{detail::validate_evolved(model.space(), rho, cfg.validate_outputs),
                         residual, t};
    }
  }
  throw ConvergenceError("steady_state: no convergence within max time " + fmt_g17(max_time));
}

}  // namespace qcsim

#endif  // QCSIM_LINDBLAD_HPP
