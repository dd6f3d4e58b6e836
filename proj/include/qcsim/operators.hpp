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

// Dense complex linear algebra over truncated Fock / tensor-product spaces:
// operator constructors, states, and the metrics used by the dynamics
// engines. hbar = 1 throughout; frequencies and rates share units of 1/time.

#ifndef QCSIM_OPERATORS_HPP
#define QCSIM_OPERATORS_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qcsim/core.hpp"

namespace qcsim {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// SpaceSpec: ordered subsystem dimensions of a composite space.
// ---------------------------------------------------------------------------

class SpaceSpec {
 public:
  explicit SpaceSpec(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw InvalidDimension("SpaceSpec: no subsystems");
    long long total = 1;
    for (int d : dims_) {
      if (d < 1) throw InvalidDimension("SpaceSpec: subsystem dimension must be >= 1");
      total *= d;
      if (total > kDimCap)
        throw InvalidDimension("SpaceSpec: total dimension exceeds cap " + std::to_string(kDimCap));
    }
    total_ = static_cast<int>(total);
  }

  static SpaceSpec single(int dim) { return SpaceSpec(std::vector<int>{dim}); }

  int total_dim() const { return total_; }
  int subsystems() const { return static_cast<int>(dims_.size()); }
  int dim_at(int k) const { return dims_.at(k); }
  const std::vector<int>& dims() const { return dims_; }

  // Product of dimensions strictly before / after subsystem k.
  int dim_before(int k) const {
    return std::accumulate(dims_.begin(), dims_.begin() + k, 1, std::multiplies<int>());
  }
  int dim_after(int k) const {
    return std::accumulate(dims_.begin() + k + 1, dims_.end(), 1, std::multiplies<int>());
  }

  bool operator==(const SpaceSpec& o) const { return dims_ == o.dims_; }
  bool operator!=(const SpaceSpec& o) const { return !(*this == o); }

 private:
  std::vector<int> dims_;
  int total_ = 0;
};

inline SpaceSpec tensor(const SpaceSpec& a, const SpaceSpec& b) {
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return SpaceSpec(std::move(dims));
}

namespace detail {

inline void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite entries");
}

inline double hermiticity_defect(const Mat& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operator: square matrix over a SpaceSpec.
// ---------------------------------------------------------------------------

class Operator {
 public:
  Operator(SpaceSpec space, Mat m) : space_(std::move(space)), m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() != space_.total_dim())
      throw DimensionMismatch("Operator: matrix does not match space");
    detail::require_finite(m_, "Operator");
  }

  const SpaceSpec& space() const { return space_; }
  const Mat& matrix() const { return m_; }
  int dim() const { return space_.total_dim(); }

  bool is_hermitian(double tol = 1e-10) const { return detail::hermiticity_defect(m_) <= tol; }

  Operator operator+(const Operator& o) const {
    check_space(o);
    return Operator(space_, m_ + o.m_);
  }
  Operator operator-(const Operator& o) const {
    check_space(o);
    return Operator(space_, m_ - o.m_);
  }
  Operator operator*(const Operator& o) const {
    check_space(o);
    return Operator(space_, m_ * o.m_);
  }
  friend Operator operator*(cx s, const Operator& o) { return Operator(o.space_, s * o.m_); }
  friend Operator operator*(double s, const Operator& o) { return Operator(o.space_, s * o.m_); }

 private:
  void check_space(const Operator& o) const {
    if (space_ != o.space_) throw DimensionMismatch("Operator: space mismatch");
  }
  SpaceSpec space_;
  Mat m_;
};

// ---------------------------------------------------------------------------
// Ket: unit-norm state vector.
// ---------------------------------------------------------------------------

class Ket {
 public:
  Ket(SpaceSpec space, Vec v) : space_(std::move(space)), v_(std::move(v)) {
    if (v_.size() != space_.total_dim()) throw DimensionMismatch("Ket: vector does not match space");
    if (!v_.allFinite()) throw ValidationError("Ket: non-finite entries");
    if (std::abs(v_.norm() - 1.0) > 1e-10) throw ValidationError("Ket: not unit norm");
  }

  static Ket normalized(SpaceSpec space, Vec v) {
    const double n = v.norm();
    if (n == 0.0) throw ValidationError("Ket: zero vector");
    return Ket(std::move(space), v / n);
  }

  const SpaceSpec& space() const { return space_; }
  const Vec& vector() const { return v_; }
  int dim() const { return space_.total_dim(); }

 private:
  SpaceSpec space_;
  Vec v_;
};

inline Ket basis_ket(const SpaceSpec& space, int index) {
  Vec v = Vec::Zero(space.total_dim());
  v(index) = 1.0;
  return Ket(space, std::move(v));
}

inline Ket tensor(const Ket& a, const Ket& b) {
  const int da = a.dim(), db = b.dim();
  Vec v(da * db);
  for (int i = 0; i < da; ++i) v.segment(i * db, db) = a.vector()(i) * b.vector();
  return Ket(tensor(a.space(), b.space()), std::move(v));
}

// ---------------------------------------------------------------------------
// DensityMatrix: Hermitian, unit-trace, positive (to tolerance).
// ---------------------------------------------------------------------------

struct DensityTolerances {
  double hermiticity = 1e-10;
  double trace = 1e-8;
  double min_eigenvalue = -1e-8;
};

class DensityMatrix {
 public:
  // Validating constructor: Hermiticity to 1e-10, trace to 1e-8, smallest
  // eigenvalue >= -1e-8.
  static DensityMatrix from_matrix(SpaceSpec space, Mat m,
                                   const DensityTolerances& tol = DensityTolerances{}) {
    if (m.rows() != m.cols() || m.rows() != space.total_dim())
      throw DimensionMismatch("DensityMatrix: matrix does not match space");
    detail::require_finite(m, "DensityMatrix");
    if (detail::hermiticity_defect(m) > tol.hermiticity)
      throw ValidationError("DensityMatrix: not Hermitian within tolerance");
    if (std::abs(m.trace().real() - 1.0) > tol.trace || std::abs(m.trace().imag()) > tol.trace)
      throw ValidationError("DensityMatrix: trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < tol.min_eigenvalue)
      throw ValidationError("DensityMatrix: negative eigenvalue beyond tolerance");
    return DensityMatrix(std::move(space), std::move(m));
  }

  static DensityMatrix pure(const Ket& k) {
    return DensityMatrix(k.space(), k.vector() * k.vector().adjoint());
  }

  // Engine-internal: skips the eigenvalue check. Steppers re-validate at
  // their output boundaries.
  static DensityMatrix unchecked(SpaceSpec space, Mat m) {
    return DensityMatrix(std::move(space), std::move(m));
  }

  const SpaceSpec& space() const { return space_; }
  const Mat& matrix() const { return m_; }
  int dim() const { return space_.total_dim(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m_ + m_.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  DensityMatrix(SpaceSpec space, Mat m) : space_(std::move(space)), m_(std::move(m)) {}
  SpaceSpec space_;
  Mat m_;
};

// ---------------------------------------------------------------------------
// Fock-space constructors.
// ---------------------------------------------------------------------------

// a|n> = sqrt(n)|n-1> on the truncated basis.
inline Operator annihilation(int dim) {
  if (dim < 2) throw InvalidDimension("annihilation: dim must be >= 2");
  Mat m = Mat::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return Operator(SpaceSpec::single(dim), std::move(m));
}

inline Operator dagger(const Operator& op) {
  return Operator(op.space(), op.matrix().adjoint());
}

inline Operator creation(int dim) { return dagger(annihilation(dim)); }

inline Operator number_op(int dim) {
  if (dim < 1) throw InvalidDimension("number_op: dim must be >= 1");
  Mat m = Mat::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m(n, n) = static_cast<double>(n);
  return Operator(SpaceSpec::single(dim), std::move(m));
}

// Dimensionless quadrature b + b^dag; physical scalings live in the callers.
inline Operator quadrature(int dim) {
  if (dim < 2) throw InvalidDimension("quadrature: dim must be >= 2");
  const Operator a = annihilation(dim);
  return Operator(a.space(), a.matrix() + a.matrix().adjoint());
}

// Canonical pair q = (b + b^dag)/sqrt(2), p = i(b^dag - b)/sqrt(2), [q,p] = i.
inline Operator position_op(int dim) {
  const Operator a = annihilation(dim);
  return Operator(a.space(), (a.matrix() + a.matrix().adjoint()) / std::sqrt(2.0));
}

inline Operator momentum_op(int dim) {
  const Operator a = annihilation(dim);
  return Operator(a.space(), cx(0, 1) * (a.matrix().adjoint() - a.matrix()) / std::sqrt(2.0));
}

inline Operator identity_op(const SpaceSpec& space) {
  return Operator(space, Mat::Identity(space.total_dim(), space.total_dim()));
}

// Diagonal operator from a list of eigenvalues (e.g. a position grid).
inline Operator diagonal_op(std::vector<double> values) {
  const int d = static_cast<int>(values.size());
  if (d < 1) throw InvalidDimension("diagonal_op: empty value list");
  Mat m = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) m(i, i) = values[i];
  return Operator(SpaceSpec::single(d), std::move(m));
}

// ---------------------------------------------------------------------------
// Coherent states and displacements.
// ---------------------------------------------------------------------------

struct CoherentState {
  Ket ket;
  double tail_mass;  // weight of the discarded Fock levels
};

// Truncated expansion of |alpha>. Preconditions: |alpha|^2 <= dim/4 and the
// discarded tail below 1e-10; adequacy is reported, not silently ignored.
inline CoherentState coherent_state_with_tail(cx alpha, int dim) {
  if (dim < 1) throw InvalidDimension("coherent_state: dim must be >= 1");
  const double n_bar = std::norm(alpha);
  if (n_bar > dim / 4.0)
    throw TruncationError("coherent_state: |alpha|^2 exceeds dim/4, truncation inadequate");
  // Coefficients in log space: c_n = exp(-n_bar/2 + n ln|a| - ln(n!)/2) e^{i n arg a}.
  Vec v(dim);
  const double log_abs = n_bar > 0.0 ? 0.5 * std::log(n_bar) : 0.0;
  const double phase = std::arg(alpha);
  double kept = 0.0;
  for (int n = 0; n < dim; ++n) {
    const double ln_c = -0.5 * n_bar + n * log_abs - 0.5 * std::lgamma(n + 1.0);
    const double mag = (n_bar == 0.0 && n > 0) ? 0.0 : std::exp(ln_c);
    v(n) = std::polar(mag, n * phase);
    kept += mag * mag;
  }
  const double tail = 1.0 - kept;
  if (tail > 1e-10)
    throw TruncationError("coherent_state: tail mass " + fmt_g17(tail) + " exceeds 1e-10");
  return CoherentState{Ket::normalized(SpaceSpec::single(dim), std::move(v)), tail};
}

inline Ket coherent_state(cx alpha, int dim) { return coherent_state_with_tail(alpha, dim).ket; }

// ---------------------------------------------------------------------------
// Algebraic operations.
// ---------------------------------------------------------------------------

inline Operator kron(const Operator& a, const Operator& b) {
  const int da = a.dim(), db = b.dim();
  Mat m(da * db, da * db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < da; ++j)
      m.block(i * db, j * db, db, db) = a.matrix()(i, j) * b.matrix();
  return Operator(tensor(a.space(), b.space()), std::move(m));
}

inline Operator commutator(const Operator& a, const Operator& b) {
  if (a.space() != b.space()) throw DimensionMismatch("commutator: space mismatch");
  return Operator(a.space(), a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

// exp(scale * op). Hermitian inputs (detected to 1e-12) go through the
// eigendecomposition; anything else falls back to scaling-and-squaring.
inline Operator expm(const Operator& op, cx scale = cx(1, 0)) {
  const Mat& m = op.matrix();
  if (detail::hermiticity_defect(m) <= 1e-12) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()));
    Vec phases(op.dim());
    for (int i = 0; i < op.dim(); ++i) phases(i) = std::exp(scale * es.eigenvalues()(i));
    Mat out = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    return Operator(op.space(), std::move(out));
  }
  Mat scaled = scale * m;
  return Operator(op.space(), scaled.exp());
}

// exp(alpha a^dag - alpha* a) in the truncated Fock basis.
inline Operator displacement(cx alpha, int dim) {
  const Operator a = annihilation(dim);
  // Exponent is anti-Hermitian: i * H with H Hermitian.
  Mat h = cx(0, -1) * (alpha * a.matrix().adjoint() - std::conj(alpha) * a.matrix());
  return expm(Operator(a.space(), std::move(h)), cx(0, 1));
}

inline Ket apply(const Operator& op, const Ket& k) {
  if (op.space() != k.space()) throw DimensionMismatch("apply: space mismatch");
  return Ket::normalized(k.space(), op.matrix() * k.vector());
}

// ---------------------------------------------------------------------------
// Partial trace and state metrics.
// ---------------------------------------------------------------------------

// Reduced state on subsystem `keep`; trace preserving and positivity
// preserving on valid inputs.
inline DensityMatrix partial_trace(const DensityMatrix& rho, int keep) {
  const SpaceSpec& sp = rho.space();
  if (sp.subsystems() < 2) throw DimensionMismatch("partial_trace: need >= 2 subsystems");
  if (keep < 0 || keep >= sp.subsystems()) throw DimensionMismatch("partial_trace: bad index");
  const int dl = sp.dim_before(keep), dk = sp.dim_at(keep), dr = sp.dim_after(keep);
  Mat out = Mat::Zero(dk, dk);
  const Mat& m = rho.matrix();
  for (int l = 0; l < dl; ++l)
    for (int i = 0; i < dk; ++i)
      for (int j = 0; j < dk; ++j) {
        cx s = 0.0;
        const int ri = (l * dk + i) * dr, rj = (l * dk + j) * dr;
        for (int r = 0; r < dr; ++r) s += m(ri + r, rj + r);
        out(i, j) += s;
      }
  return DensityMatrix::unchecked(SpaceSpec::single(dk), std::move(out));
}

inline cx expectation(const DensityMatrix& rho, const Operator& op) {
  if (rho.space() != op.space()) throw DimensionMismatch("expectation: space mismatch");
  return (op.matrix() * rho.matrix()).trace();
}

inline cx expectation(const Ket& k, const Operator& op) {
  if (k.space() != op.space()) throw DimensionMismatch("expectation: space mismatch");
  return k.vector().dot(op.matrix() * k.vector());
}

// (1/2) ||rho1 - rho2||_1 via the eigenvalues of the (Hermitian) difference.
inline double trace_distance(const DensityMatrix& r1, const DensityMatrix& r2) {
  if (r1.space() != r2.space()) throw DimensionMismatch("trace_distance: space mismatch");
  Mat d = r1.matrix() - r2.matrix();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ||op||_1 for a Hermitian operator (sum of |eigenvalues|).
inline double trace_norm_hermitian(const Operator& op) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (op.matrix() + op.matrix().adjoint()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

inline double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

// Variance of a Hermitian observable.
inline double variance(const DensityMatrix& rho, const Operator& op) {
  const double m1 = expectation(rho, op).real();
  const double m2 = (op.matrix() * op.matrix() * rho.matrix()).trace().real();
  return m2 - m1 * m1;
}

}  // namespace qcsim

#endif  // QCSIM_OPERATORS_HPP
