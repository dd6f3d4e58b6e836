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

// Ito stochastic master equations: the conditioning superoperator, seeded
// Wiener noise, measurement records, heterodyne unravelling, record-driven
// stochastic Hamiltonians, and ensemble aggregation.

#ifndef QCSIM_STOCHASTIC_HPP
#define QCSIM_STOCHASTIC_HPP

#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcsim/lindblad.hpp"
#include "qcsim/rng.hpp"

namespace qcsim {

// ---------------------------------------------------------------------------
// Measurement channels
// ---------------------------------------------------------------------------

enum class ChannelKind {
  DiffusiveReal,  // Hermitian op, one real Wiener increment per step
  Heterodyne,     // lowering-type op, complex dZ = (dW1 + i dW2)/sqrt(2)
};

class MeasurementChannel {
 public:
  MeasurementChannel(ChannelKind kind, double rate, Operator op)
      : kind_(kind), rate_(rate), op_(std::move(op)) {
    if (rate_ < 0) throw ValidationError("MeasurementChannel: negative rate");
    if (kind_ == ChannelKind::DiffusiveReal && !op_.is_hermitian(1e-10))
      throw ValidationError("MeasurementChannel: diffusive-real channel requires Hermitian op");
  }

  ChannelKind kind() const { return kind_; }
  double rate() const { return rate_; }
  const Operator& op() const { return op_; }

  // Normals consumed from the noise stream per step.
  int normals_per_step() const { return kind_ == ChannelKind::DiffusiveReal ? 1 : 2; }

 private:
  ChannelKind kind_;
  double rate_;
  Operator op_;
};

// ---------------------------------------------------------------------------
// Measurement record: per-channel increment series plus accumulated currents.
// For heterodyne channels J = (J_x + i J_y)/2, so J_x = 2 Re J, J_y = 2 Im J.
// ---------------------------------------------------------------------------

struct RecordChannel {
  ChannelKind kind = ChannelKind::DiffusiveReal;
  std::vector<cx> increments;  // dy in the real part, or complex dJ
  cx j_accum = 0.0;

  double j_x() const { return kind == ChannelKind::Heterodyne ? 2.0 * j_accum.real() : j_accum.real(); }
  double j_y() const { return kind == ChannelKind::Heterodyne ? 2.0 * j_accum.imag() : 0.0; }
};

struct MeasurementRecord {
  double dt = 0.0;
  std::vector<RecordChannel> channels;

  // Columns: step, time, channel, increment_real, increment_imag.
  void write_csv(std::ostream& os) const {
    os << "step,time,channel,increment_real,increment_imag\n";
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const auto& series = channels[c].increments;
      for (std::size_t k = 0; k < series.size(); ++k) {
        os << k << ',' << fmt_g17(static_cast<double>(k) * dt) << ',' << c << ','
           << fmt_g17(series[k].real()) << ',' << fmt_g17(series[k].imag()) << '\n';
      }
    }
  }
};

// ---------------------------------------------------------------------------
// The conditioning superoperator H[A]rho = A rho + rho A^dag
//                                          - tr(A rho + rho A^dag) rho.
// Traceless by construction; vanishes on the pointer states of A.
// ---------------------------------------------------------------------------

inline Operator h_superop(const Operator& a, const DensityMatrix& rho) {
  if (a.space() != rho.space()) throw DimensionMismatch("h_superop: space mismatch");
  Mat t = a.matrix() * rho.matrix();
  Mat out = t + t.adjoint().eval();
  out -= out.trace() * rho.matrix();
  return Operator(a.space(), std::move(out));
}

namespace detail {

// out += a * M + b * M^dag, tiled like herm_combine.
inline void axpy_with_adjoint(const MatRM& M, MatRM& out, cx a, cx b) {
  const int d = static_cast<int>(M.rows());
  constexpr int B = 64;
  const int nb = (d + B - 1) / B;
  parallel_for(nb, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t bi = b0; bi < b1; ++bi) {
      const int i0 = static_cast<int>(bi) * B, i1 = std::min(d, i0 + B);
      for (int j0 = 0; j0 < d; j0 += B) {
        const int j1 = std::min(d, j0 + B);
        for (int i = i0; i < i1; ++i)
          for (int j = j0; j < j1; ++j) out(i, j) += a * M(i, j) + b * std::conj(M(j, i));
      }
    }
  });
}

// Sparse view of a probe operator for cheap expectations along trajectories.
struct ProbeView {
  struct Entry {
    int i, j;
    cx v;
  };
  std::vector<Entry> entries;

  explicit ProbeView(const Mat& p) {
    const int d = static_cast<int>(p.rows());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (p(i, j) != cx(0, 0)) entries.push_back({i, j, p(i, j)});
  }

  cx trace_with(const MatRM& rho) const {  // tr(P rho) = sum_ij P_ij rho_ji
    cx s = 0.0;
    for (const auto& e : entries) s += e.v * rho(e.j, e.i);
    return s;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Compiled SME stepper. The deterministic part is the model generator plus
// each channel's dissipator/dephasing; the stochastic part is the
// conditioning superoperator driven by the channel's Wiener increments.
// ---------------------------------------------------------------------------

struct SmeOptions {
  bool allow_unstable_dt = false;  // overrides the dt <= 0.01/max(rate) bound
  int posdef_check_interval = 250;
};

class CompiledSme {
 public:
  CompiledSme(const LindbladModel& model, const std::vector<MeasurementChannel>& channels)
      : dim_(model.dim()), gen_(augment(model, channels)) {
    max_rate_ = model.max_rate();
    for (const auto& ch : channels) {
      if (ch.op().space() != model.space())
        throw DimensionMismatch("CompiledSme: channel space mismatch");
      max_rate_ = std::max(max_rate_, ch.rate());
      channels_.push_back({ch.kind(), ch.rate(), detail::StructuredOp::from(ch.op().matrix())});
    }
  }

  int dim() const { return dim_; }
  int normals_per_step() const {
    int n = 0;
    for (const auto& c : channels_) n += (c.kind == ChannelKind::DiffusiveReal) ? 1 : 2;
    return n;
  }

  void check_dt(double dt, bool allow_unstable) const {
    if (dt <= 0) throw ConfigError("sme: dt must be positive");
    if (!allow_unstable && max_rate_ > 0 && dt > 0.01 / max_rate_ * (1.0 + 1e-9))
      throw StabilityError("sme: dt exceeds 0.01/max(rate); pass allow_unstable_dt to override");
  }

  // One Euler-Maruyama step in place. `normals` supplies N(0,1) draws in
  // channel order; record increments (dy or dJ) are written to rec.
  void step(MatRM& rho, double dt, const double* normals, cx* rec, MatRM& upd, MatRM& t1,
            MatRM& t2) const {
    gen_.rhs_into(rho, upd, t1, t2);
    upd = rho + dt * upd;
    const double sqrt_dt = std::sqrt(dt);
    int c = 0;
    cx rho_coeff = 0.0;
    for (std::size_t k = 0; k < channels_.size(); ++k) {
      const auto& ch = channels_[k];
      ch.op.apply(rho, t1);
      const cx m = t1.trace();  // <op>^c
      if (ch.kind == ChannelKind::DiffusiveReal) {
        const double dW = sqrt_dt * normals[c++];
        const double s = std::sqrt(0.5 * ch.rate) * dW;
        detail::axpy_with_adjoint(t1, upd, s, s);
        rho_coeff -= s * 2.0 * m.real();
        rec[k] = cx(ch.rate * m.real() * dt + std::sqrt(0.5 * ch.rate) * dW, 0.0);
      } else {
        const double dW1 = sqrt_dt * normals[c++];
        const double dW2 = sqrt_dt * normals[c++];
        const cx dZ(dW1 / std::sqrt(2.0), dW2 / std::sqrt(2.0));
        const double s = std::sqrt(ch.rate);
        detail::axpy_with_adjoint(t1, upd, s * std::conj(dZ), s * dZ);
        rho_coeff -= s * 2.0 * (std::conj(dZ) * m).real();
        rec[k] = ch.rate * m * dt + s * dZ;
      }
    }
    if (rho_coeff != cx(0, 0)) upd += rho_coeff * rho;
    const double tr = upd.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr))
      throw StepFailure("sme: non-positive or non-finite trace after step");
    rho = upd / tr;
  }

  // Catastrophic positivity loss check (min eigenvalue < -1e-3).
  void check_positivity(const MatRM& rho, int step_index) const {
    Eigen::SelfAdjointEigenSolver<MatRM> es(rho, Eigen::EigenvaluesOnly);
    const double mineig = es.eigenvalues().minCoeff();
    if (mineig < -1e-3)
      throw StepFailure("sme: positivity catastrophically lost at step " +
                        std::to_string(step_index) + " (min eigenvalue " + fmt_g17(mineig) + ")");
  }

  double max_rate() const { return max_rate_; }

 private:
  static LindbladModel augment(const LindbladModel& model,
                               const std::vector<MeasurementChannel>& channels) {
    std::vector<DissipatorTerm> dis = model.dissipators();
    std::vector<DephasingTerm> dep = model.dephasings();
    for (const auto& ch : channels) {
      if (ch.kind() == ChannelKind::DiffusiveReal)
        dep.push_back({ch.rate(), ch.op()});
      else
        dis.push_back({ch.rate(), ch.op()});
    }
    return LindbladModel(model.hamiltonian(), std::move(dis), std::move(dep));
  }

  struct ChannelTerm {
    ChannelKind kind;
    double rate;
    detail::StructuredOp op;
  };

  int dim_;
  CompiledGenerator gen_;
  std::vector<ChannelTerm> channels_;
  double max_rate_ = 0.0;
};

// Single Euler-Maruyama update of the conditional master equation. `normals`
// holds one N(0,1) draw per diffusive channel and two per heterodyne channel.
struct SmeStepResult {
  DensityMatrix state;
  std::vector<cx> record_increments;
};

inline SmeStepResult sme_step(const LindbladModel& model,
                              const std::vector<MeasurementChannel>& channels,
                              const DensityMatrix& rho, double dt, std::span<const double> normals,
                              const SmeOptions& opts = {}) {
  if (rho.space() != model.space()) throw DimensionMismatch("sme_step: space mismatch");
  CompiledSme sme(model, channels);
  sme.check_dt(dt, opts.allow_unstable_dt);
  if (static_cast<int>(normals.size()) < sme.normals_per_step())
    throw ConfigError("sme_step: not enough noise increments supplied");
  const int d = model.dim();
  MatRM r = rho.matrix(), upd(d, d), t1(d, d), t2(d, d);
  std::vector<cx> rec(channels.size(), cx(0, 0));
  sme.step(r, dt, normals.data(), rec.data(), upd, t1, t2);
  Mat out = r;
  out = 0.5 * (out + out.adjoint().eval());
  return SmeStepResult{DensityMatrix::unchecked(model.space(), std::move(out)), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

struct TrajectoryOptions {
  std::vector<double> store_times;  // snapshot times (must lie on the step grid)
  int posdef_check_interval = 250;
  bool allow_unstable_dt = false;
};

struct Trajectory {
  std::vector<double> times;               // every step, including t = 0
  std::vector<std::vector<cx>> probes;     // [probe][step]
  std::vector<double> store_times;
  std::vector<DensityMatrix> states;       // conditional states at store_times
  MeasurementRecord record;
  std::uint64_t seed = 0;
};

namespace detail {

inline int step_index_for(double t, double dt, const char* what) {
  const double k = t / dt;
  const int ki = static_cast<int>(std::llround(k));
  if (std::abs(k - ki) > 1e-6)
    throw ConfigError(std::string(what) + ": time " + fmt_g17(t) + " not on the step grid");
  return ki;
}

}  // namespace detail

inline Trajectory simulate_trajectory(const LindbladModel& model,
                                      const std::vector<MeasurementChannel>& channels,
                                      const DensityMatrix& rho0, const NoisePlan& plan,
                                      const std::vector<Operator>& probes,
                                      const TrajectoryOptions& opts = {}) {
  if (rho0.space() != model.space()) throw DimensionMismatch("simulate_trajectory: space mismatch");
  for (const auto& p : probes)
    if (p.space() != model.space()) throw DimensionMismatch("simulate_trajectory: probe mismatch");

  CompiledSme sme(model, channels);
  sme.check_dt(plan.dt, opts.allow_unstable_dt);

  std::vector<detail::ProbeView> views;
  views.reserve(probes.size());
  for (const auto& p : probes) views.emplace_back(p.matrix());

  std::vector<int> store_steps;
  for (double t : opts.store_times) {
    const int k = detail::step_index_for(t, plan.dt, "simulate_trajectory");
    if (k < 0 || k > plan.n_steps)
      throw ConfigError("simulate_trajectory: store time outside the plan");
    store_steps.push_back(k);
  }

  Trajectory traj;
  traj.seed = plan.seed;
  traj.record.dt = plan.dt;
  traj.record.channels.resize(channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c) {
    traj.record.channels[c].kind = channels[c].kind();
    traj.record.channels[c].increments.reserve(plan.n_steps);
  }
  traj.probes.resize(probes.size());

  const int d = model.dim();
  MatRM rho = rho0.matrix(), upd(d, d), t1(d, d), t2(d, d);
  NoiseSource noise(plan);
  std::vector<double> normals(std::max(1, sme.normals_per_step()));
  std::vector<cx> rec(std::max<std::size_t>(1, channels.size()));

  auto emit = [&](int step) {
    traj.times.push_back(step * plan.dt);
    for (std::size_t p = 0; p < views.size(); ++p) traj.probes[p].push_back(views[p].trace_with(rho));
    for (std::size_t s = 0; s < store_steps.size(); ++s) {
      if (store_steps[s] == step) {
        Mat m = rho;
        m = 0.5 * (m + m.adjoint().eval());
        m /= m.trace().real();
        traj.store_times.push_back(step * plan.dt);
        traj.states.push_back(DensityMatrix::unchecked(model.space(), std::move(m)));
      }
    }
  };

  emit(0);
  for (int step = 0; step < plan.n_steps; ++step) {
    for (int i = 0; i < sme.normals_per_step(); ++i) normals[i] = noise.normal();
    try {
      sme.step(rho, plan.dt, normals.data(), rec.data(), upd, t1, t2);
    } catch (const StepFailure& e) {
      throw StepFailure(std::string(e.what()) + " [step " + std::to_string(step) + ", seed " +
                        std::to_string(plan.seed) + "]");
    }
    // Cheap per-step monitor; full spectrum at the configured interval.
    double min_diag = 0.0;
    for (int i = 0; i < d; ++i) min_diag = std::min(min_diag, rho(i, i).real());
    if (min_diag < -1e-3 ||
        (opts.posdef_check_interval > 0 && (step + 1) % opts.posdef_check_interval == 0)) {
      sme.check_positivity(rho, step);
    }
    for (std::size_t c = 0; c < channels.size(); ++c) {
      traj.record.channels[c].increments.push_back(rec[c]);
      traj.record.channels[c].j_accum += rec[c];
    }
    emit(step + 1);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Ensemble mean of conditional states at grid times. Trajectory seeds derive
// deterministically from the base seed; aggregation sums in index order, so
// results do not depend on the worker count.
//
// PureStateEm is an optimization for the common pure-state, all-diffusive
// case: it steps the equivalent stochastic Schroedinger equation
//   d|psi> = [-iH - (c - <c>)^2/2] |psi> dt + (c - <c>)|psi> dW,  c = sqrt(G/2) X
// whose projector reproduces the density-matrix unravelling. DensityEm is
// the default and matches sme_step exactly.
// ---------------------------------------------------------------------------

enum class Unravelling { DensityEm, PureStateEm };

namespace detail {

struct SseStepper {
  StructuredOp h;
  struct Chan {
    double rate;
    StructuredOp op;
  };
  std::vector<Chan> chans;
  int dim;

  SseStepper(const LindbladModel& model, const std::vector<MeasurementChannel>& channels)
      : dim(model.dim()) {
    if (!model.dissipators().empty() || !model.dephasings().empty())
      throw ConfigError("pure-state unravelling requires all irreversibility in the channels");
    h = StructuredOp::from(model.hamiltonian().matrix());
    for (const auto& ch : channels) {
      if (ch.kind() != ChannelKind::DiffusiveReal)
        throw ConfigError("pure-state unravelling requires diffusive-real channels");
      chans.push_back({ch.rate(), StructuredOp::from(ch.op().matrix())});
    }
  }

  void step(Vec& psi, double dt, const double* normals, cx* rec, Vec& dpsi, Vec& u, Vec& w) const {
    h.apply_vec(psi, dpsi);
    dpsi *= cx(0, -1) * dt;
    const double sqrt_dt = std::sqrt(dt);
    int c = 0;
    for (std::size_t k = 0; k < chans.size(); ++k) {
      const double scale = std::sqrt(0.5 * chans[k].rate);
      chans[k].op.apply_vec(psi, u);              // X psi
      const double mx = psi.dot(u).real();        // <X>
      const double dW = sqrt_dt * normals[c++];
      u -= mx * psi;                               // (X - <X>) psi
      chans[k].op.apply_vec(u, w);
      w -= mx * u;                                 // (X - <X>)^2 psi
      dpsi += (scale * dW) * u - (0.5 * scale * scale * dt) * w;
      rec[k] = cx(chans[k].rate * mx * dt + scale * dW, 0.0);
    }
    psi += dpsi;
    psi /= psi.norm();
  }
};

}  // namespace detail

inline std::vector<DensityMatrix> ensemble_mean(const LindbladModel& model,
                                                const std::vector<MeasurementChannel>& channels,
                                                const DensityMatrix& rho0, int n_traj,
                                                std::uint64_t base_seed,
                                                const std::vector<double>& t_grid, double dt,
                                                Unravelling method = Unravelling::DensityEm) {
  if (n_traj < 1) throw ConfigError("ensemble_mean: n_traj must be >= 1");
  detail::check_grid(t_grid);
  std::vector<int> grid_steps;
  for (double t : t_grid) grid_steps.push_back(detail::step_index_for(t, dt, "ensemble_mean"));
  const int n_steps = grid_steps.back();
  const int d = model.dim();

  std::optional<Vec> psi0;
  if (method == Unravelling::PureStateEm) {
    if (purity(rho0) < 1.0 - 1e-9)
      throw ConfigError("ensemble_mean: pure-state unravelling requires a pure initial state");
    Eigen::SelfAdjointEigenSolver<Mat> es(rho0.matrix());
    psi0 = es.eigenvectors().col(d - 1);  // dominant eigenvector
  }

  std::vector<MatRM> accum(t_grid.size(), MatRM::Zero(d, d));

  // Steppers are immutable after construction and shared across workers.
  std::optional<CompiledSme> sme;
  std::optional<detail::SseStepper> sse;
  if (method == Unravelling::DensityEm) {
    sme.emplace(model, channels);
    sme->check_dt(dt, false);
  } else {
    sse.emplace(model, channels);
  }

  // One trajectory's states at the grid times.
  auto run_one = [&](std::uint64_t seed, std::vector<MatRM>& out) {
    NoisePlan plan(seed, dt, n_steps);
    NoiseSource noise(plan);
    std::vector<cx> rec(std::max<std::size_t>(1, channels.size()));
    std::size_t g = 0;
    if (method == Unravelling::DensityEm) {
      MatRM rho = rho0.matrix(), upd(d, d), t1(d, d), t2(d, d);
      std::vector<double> normals(std::max(1, sme->normals_per_step()));
      if (grid_steps[g] == 0) out[g++] = rho;
      for (int step = 0; step < n_steps; ++step) {
        for (int i = 0; i < sme->normals_per_step(); ++i) normals[i] = noise.normal();
        sme->step(rho, dt, normals.data(), rec.data(), upd, t1, t2);
        while (g < grid_steps.size() && grid_steps[g] == step + 1) out[g++] = rho;
      }
    } else {
      Vec psi = *psi0, dpsi(d), u(d), w(d);
      std::vector<double> normals(std::max<std::size_t>(1, channels.size()));
      if (grid_steps[g] == 0) out[g++] = psi * psi.adjoint();
      for (int step = 0; step < n_steps; ++step) {
        for (std::size_t i = 0; i < channels.size(); ++i) normals[i] = noise.normal();
        sse->step(psi, dt, normals.data(), rec.data(), dpsi, u, w);
        while (g < grid_steps.size() && grid_steps[g] == step + 1) out[g++] = psi * psi.adjoint();
      }
    }
  };

  const int workers = ThreadPool::instance().size();
  std::vector<std::vector<MatRM>> slots(workers, std::vector<MatRM>(t_grid.size(), MatRM::Zero(d, d)));
  std::vector<std::string> errors(workers);
  for (int base = 0; base < n_traj; base += workers) {
    const int batch = std::min(workers, n_traj - base);
    parallel_for(batch, [&](std::int64_t s0, std::int64_t s1) {
      for (std::int64_t s = s0; s < s1; ++s) {
        errors[s].clear();
        try {
          run_one(derive_seed(base_seed, static_cast<std::uint64_t>(base + s)), slots[s]);
        } catch (const Error& e) {
          errors[s] = e.what();
        }
      }
    });
    for (int s = 0; s < batch; ++s) {
      if (!errors[s].empty())
        throw StepFailure("ensemble_mean: trajectory " + std::to_string(base + s) + " failed: " +
                          errors[s]);
      for (std::size_t g = 0; g < t_grid.size(); ++g) accum[g] += slots[s][g];
    }
  }

  std::vector<DensityMatrix> out;
  out.reserve(t_grid.size());
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    Mat m = accum[g] / static_cast<double>(n_traj);
    m = 0.5 * (m + m.adjoint().eval());
    m /= m.trace().real();
    out.push_back(DensityMatrix::unchecked(model.space(), std::move(m)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Record-driven classical control of the mechanics: conjugation by
//   dU = exp[-i w_m b^dag b dt - i G0 |a0|^2 (b+b^dag) dt
//            - i (2 G0 a0 / sqrt(kappa)) (b+b^dag) dW1]
// with dW1 recovered from the heterodyne record increment dJ. Exponentiating
// the full stochastic exponent keeps the Ito dW1^2 = dt contribution.
// ---------------------------------------------------------------------------

class RecordDrivenPropagator {
 public:
  RecordDrivenPropagator(double omega_m, double g0, double kappa, double alpha0, int dim)
      : kappa_(kappa), alpha0_(alpha0) {
    const Mat n = number_op(dim).matrix();
    const Mat x = quadrature(dim).matrix();
    a_dt_ = omega_m * n + (g0 * alpha0 * alpha0) * x;
    b_dw_ = (2.0 * g0 * alpha0 / std::sqrt(kappa)) * x;
  }

  double wiener_from_record(cx dJ, double dt) const {
    const cx dZ = (dJ - kappa_ * alpha0_ * dt) / std::sqrt(kappa_);
    return std::sqrt(2.0) * dZ.real();
  }

  void apply(Mat& rho, double dt, double dW1) const {
    Eigen::SelfAdjointEigenSolver<Mat> es(a_dt_ * dt + b_dw_ * dW1);
    Vec phases(rho.rows());
    for (int i = 0; i < rho.rows(); ++i) phases(i) = std::exp(cx(0, -1) * es.eigenvalues()(i));
    const Mat u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    rho = u * rho * u.adjoint();
  }

 private:
  double kappa_, alpha0_;
  Mat a_dt_, b_dw_;
};

inline DensityMatrix record_driven_unitary_step(double omega_m, double g0, double kappa,
                                                double alpha0, cx dJ, double dt,
                                                const DensityMatrix& mech) {
  if (mech.space().subsystems() != 1)
    throw DimensionMismatch("record_driven_unitary_step: expected a mechanics-only state");
  RecordDrivenPropagator prop(omega_m, g0, kappa, alpha0, mech.dim());
  Mat rho = mech.matrix();
  prop.apply(rho, dt, prop.wiener_from_record(dJ, dt));
  return DensityMatrix::unchecked(mech.space(), std::move(rho));
}

// ---------------------------------------------------------------------------
// Hybrid diagnostics from a heterodyne trajectory ensemble: the quantum
// marginal, the empirical classical density over the cavity amplitude, and
// averages of amplitude-dependent observables.
// ---------------------------------------------------------------------------

struct HybridSample {
  cx alpha;            // conditional <a>^c
  DensityMatrix mech;  // conditional mechanics state
};

class HybridState {
 public:
  HybridState(DensityMatrix rho_q, std::vector<HybridSample> samples)
      : rho_q_(std::move(rho_q)), samples_(std::move(samples)) {}

  const DensityMatrix& rho_q() const { return rho_q_; }
  const std::vector<HybridSample>& samples() const { return samples_; }

  double total_weight() const { return 1.0; }

  std::vector<std::pair<cx, double>> classical_density() const {
    const double w = 1.0 / static_cast<double>(samples_.size());
    std::vector<std::pair<cx, double>> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.emplace_back(s.alpha, w);
    return out;
  }

  cx hybrid_average(const std::function<Operator(cx)>& obs) const {
    cx acc = 0.0;
    for (const auto& s : samples_) acc += expectation(s.mech, obs(s.alpha));
    return acc / static_cast<double>(samples_.size());
  }

 private:
  DensityMatrix rho_q_;
  std::vector<HybridSample> samples_;
};

inline HybridState hybrid_diagnostics(std::vector<HybridSample> samples) {
  if (samples.empty()) throw ConfigError("hybrid_diagnostics: empty ensemble");
  const SpaceSpec space = samples.front().mech.space();
  Mat acc = Mat::Zero(space.total_dim(), space.total_dim());
  for (const auto& s : samples) {
    if (s.mech.space() != space) throw DimensionMismatch("hybrid_diagnostics: space mismatch");
    acc += s.mech.matrix();
  }
  acc /= static_cast<double>(samples.size());
  acc = 0.5 * (acc + acc.adjoint().eval());
  acc /= acc.trace().real();
  return HybridState(DensityMatrix::unchecked(space, std::move(acc)), std::move(samples));
}

}  // namespace qcsim

#endif  // QCSIM_STOCHASTIC_HPP
