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

// The three concrete experiment families: the impulsive kick on a target
// oscillator, the continuously measured controller coupled to a target, and
// the driven optomechanical cavity with its adiabatically eliminated
// counterpart. Builders translate every paper-facing convention into the
// engine's Gamma/4 double-commutator form exactly once, here.

#ifndef QCSIM_SCENARIOS_HPP
#define QCSIM_SCENARIOS_HPP

#include <json.hpp>

#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qcsim/lindblad.hpp"
#include "qcsim/stochastic.hpp"

namespace qcsim {

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature (Golub-Welsch): integral of exp(-y^2) f(y).
// ---------------------------------------------------------------------------

struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw ConfigError("gauss_hermite: need at least one node");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(0.5 * i);
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  const double mu0 = std::sqrt(kPi);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    rule.weights(i) = mu0 * v0 * v0;
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Impulse model: U(X) = exp(-i X q) with q = (b + b^dag)/sqrt(2), the kick
// strength distributed as a Gaussian with mean kappa_c * q_bar and variance
// sigma * kappa_c^2. The derived decoherence scale is Gamma = 4 sigma
// kappa_c^2 (hbar = 1).
// ---------------------------------------------------------------------------

struct ImpulseScenario {
  double kappa_c = 0.0;  // impulsive coupling strength
  double q_bar = 0.0;    // controller mean position
  double sigma = 0.0;    // controller position variance
  int target_dim = 0;

  double gamma() const { return 4.0 * sigma * kappa_c * kappa_c; }
  double kick_mean() const { return kappa_c * q_bar; }
  double kick_variance() const { return sigma * kappa_c * kappa_c; }

  void validate() const {
    if (sigma < 0.0) throw ValidationError("ImpulseScenario: sigma must be >= 0");
    if (target_dim < 2) throw InvalidDimension("ImpulseScenario: target_dim must be >= 2");
  }
};

namespace detail {

// Kick propagators from one eigendecomposition of q.
class KickFamily {
 public:
  explicit KickFamily(int dim) : es_(position_op(dim).matrix()) {}

  Mat unitary(double kick) const {
    Vec phases(es_.eigenvalues().size());
    for (int i = 0; i < phases.size(); ++i)
      phases(i) = std::exp(cx(0, -1) * kick * es_.eigenvalues()(i));
    return es_.eigenvectors() * phases.asDiagonal() * es_.eigenvectors().adjoint();
  }

 private:
  Eigen::SelfAdjointEigenSolver<Mat> es_;
};

inline Mat impulse_mixture(const ImpulseScenario& s, const Mat& rho_in, const KickFamily& kicks,
                           int n_nodes) {
  const GaussHermiteRule rule = gauss_hermite(n_nodes);
  const double spread = std::sqrt(2.0 * s.kick_variance());
  Mat out = Mat::Zero(rho_in.rows(), rho_in.cols());
  for (int i = 0; i < n_nodes; ++i) {
    const Mat u = kicks.unitary(s.kick_mean() + spread * rule.nodes(i));
    out += (rule.weights(i) / std::sqrt(kPi)) * (u * rho_in * u.adjoint());
  }
  return out;
}

}  // namespace detail

// Exact Gaussian mixture of kicks by Gauss-Hermite quadrature. Node doubling
// must reproduce the result to 1e-9, otherwise the quadrature is inadequate.
inline DensityMatrix impulse_exact(const ImpulseScenario& s, const DensityMatrix& rho_in,
                                   int n_nodes = 64) {
  s.validate();
  if (rho_in.dim() != s.target_dim) throw DimensionMismatch("impulse_exact: dimension mismatch");
  detail::KickFamily kicks(s.target_dim);
  if (s.sigma == 0.0) {
    const Mat u = kicks.unitary(s.kick_mean());
    return DensityMatrix::unchecked(rho_in.space(), u * rho_in.matrix() * u.adjoint());
  }
  Mat coarse = detail::impulse_mixture(s, rho_in.matrix(), kicks, n_nodes);
  Mat fine = detail::impulse_mixture(s, rho_in.matrix(), kicks, 2 * n_nodes);
  if ((coarse - fine).cwiseAbs().maxCoeff() > 1e-9)
    throw QuadratureError("impulse_exact: node doubling changes the mixture by more than 1e-9");
  return DensityMatrix::unchecked(rho_in.space(), std::move(fine));
}

// Second-order truncation of the mixture:
//   U rho U^dag - (Gamma/8) [q, [q, U rho U^dag]].
// Hermitian and unit trace; may be slightly non-positive.
inline DensityMatrix impulse_truncated(const ImpulseScenario& s, const DensityMatrix& rho_in) {
  s.validate();
  if (rho_in.dim() != s.target_dim)
    throw DimensionMismatch("impulse_truncated: dimension mismatch");
  detail::KickFamily kicks(s.target_dim);
  const Mat u = kicks.unitary(s.kick_mean());
  const Mat kicked = u * rho_in.matrix() * u.adjoint();
  const Mat q = position_op(s.target_dim).matrix();
  const Mat inner = q * kicked - kicked * q;
  Mat out = kicked - (s.gamma() / 8.0) * (q * inner - inner * q);
  return DensityMatrix::unchecked(rho_in.space(), std::move(out));
}

// Conditional state after reading the controller position: a pure kick with
// X = kappa_c * q_result.
inline Ket impulse_conditional(const ImpulseScenario& s, const Ket& psi_in, double q_result) {
  s.validate();
  if (psi_in.dim() != s.target_dim)
    throw DimensionMismatch("impulse_conditional: dimension mismatch");
  detail::KickFamily kicks(s.target_dim);
  return Ket::normalized(psi_in.space(), kicks.unitary(s.kappa_c * q_result) * psi_in.vector());
}

// ---------------------------------------------------------------------------
// Controller-target model: H = H_s + kappa_c X x with X diagonal on a grid
// (H_c = 0), continuously monitored in X. The grid spans
// x0 +- kGridSpanSigmas initial standard deviations.
// ---------------------------------------------------------------------------

inline constexpr double kGridSpanSigmas = 8.0;

struct ControllerTargetScenario {
  double gamma = 0.0;    // measurement / decoherence rate
  double kappa_c = 0.0;  // coupling of X to the target position
  double x0 = 0.0;       // controller initial mean
  double sigma0 = 0.0;   // controller initial variance
  double omega_s = 0.0;  // target oscillator frequency
  int controller_points = 0;
  int target_dim = 0;

  void validate() const {
    if (gamma < 0.0) throw ValidationError("ControllerTargetScenario: gamma must be >= 0");
    if (sigma0 < 0.0) throw ValidationError("ControllerTargetScenario: sigma0 must be >= 0");
    if (controller_points < 2)
      throw InvalidDimension("ControllerTargetScenario: controller grid needs >= 2 points");
    if (target_dim < 2) throw InvalidDimension("ControllerTargetScenario: target_dim must be >= 2");
  }

  std::vector<double> grid() const {
    const double sd = std::sqrt(std::max(sigma0, 1e-300));
    std::vector<double> g(controller_points);
    for (int i = 0; i < controller_points; ++i)
      g[i] = x0 + sd * kGridSpanSigmas * (2.0 * i / (controller_points - 1.0) - 1.0);
    return g;
  }

  // Gaussian position amplitudes on the grid (variance sigma0 in the weights).
  Ket controller_ket() const {
    const std::vector<double> g = grid();
    Vec v(controller_points);
    for (int i = 0; i < controller_points; ++i) {
      const double z = g[i] - x0;
      v(i) = std::exp(-z * z / (4.0 * sigma0));
    }
    return Ket::normalized(SpaceSpec::single(controller_points), std::move(v));
  }
};

struct ControllerTargetSetup {
  LindbladModel model;
  std::vector<MeasurementChannel> channels;
  Ket initial;            // controller Gaussian (x) target ket
  Operator controller_x;  // X (x) 1
};

// Full bipartite model; the target enters through its canonical position
// q = (b + b^dag)/sqrt(2) and starts in `target` (vacuum by default).
inline ControllerTargetSetup build_full_bipartite(const ControllerTargetScenario& s) {
  s.validate();
  const Operator x_ctrl = diagonal_op(s.grid());
  const Operator id_ctrl = identity_op(x_ctrl.space());
  const Operator n_t = number_op(s.target_dim);
  const Operator q_t = position_op(s.target_dim);
  const Operator id_t = identity_op(n_t.space());

  Operator h = s.omega_s * kron(id_ctrl, n_t) + s.kappa_c * kron(x_ctrl, q_t);
  const Operator x_full = kron(x_ctrl, id_t);
  LindbladModel model(h, {}, {});
  std::vector<MeasurementChannel> channels{
      MeasurementChannel(ChannelKind::DiffusiveReal, s.gamma, x_full)};
  Ket initial = tensor(s.controller_ket(), basis_ket(n_t.space(), 0));
  return ControllerTargetSetup{std::move(model), std::move(channels), std::move(initial), x_full};
}

struct ControllerOnlySetup {
  LindbladModel model;
  std::vector<MeasurementChannel> channels;
  Ket initial;
  Operator x;
};

// The controller alone under continuous measurement (kappa_c ignored).
inline ControllerOnlySetup build_controller_only(const ControllerTargetScenario& s) {
  s.validate();
  const Operator x = diagonal_op(s.grid());
  LindbladModel model(0.0 * x, {}, {});
  std::vector<MeasurementChannel> channels{MeasurementChannel(ChannelKind::DiffusiveReal, s.gamma, x)};
  return ControllerOnlySetup{std::move(model), std::move(channels), s.controller_ket(), x};
}

// Effective target model from the sigma-expansion:
//   drho = -i[H_s, rho] - i kappa X0 [q, rho] - kappa^2 sigma0 [q,[q,rho]].
// The engine convention -(Gamma/4)[q,[q,.]] makes Gamma_eff = 4 kappa^2 sigma0.
inline LindbladModel build_effective_target(const ControllerTargetScenario& s) {
  s.validate();
  const Operator n_t = number_op(s.target_dim);
  const Operator q_t = position_op(s.target_dim);
  Operator h = s.omega_s * n_t + (s.kappa_c * s.x0) * q_t;
  std::vector<DephasingTerm> deph;
  const double gamma_eff = 4.0 * s.kappa_c * s.kappa_c * s.sigma0;
  if (gamma_eff > 0.0) deph.push_back({gamma_eff, q_t});
  return LindbladModel(std::move(h), {}, std::move(deph));
}

// One unitary step of the target driven by the instantaneous classical
// control value x_t.
inline DensityMatrix conditional_target_step(const Operator& h_s, double kappa_c, double x_t,
                                             const DensityMatrix& rho, double dt) {
  if (h_s.space() != rho.space())
    throw DimensionMismatch("conditional_target_step: space mismatch");
  const Operator q = position_op(rho.dim());
  const Operator u = expm(h_s + (kappa_c * x_t) * q, cx(0, -dt));
  return DensityMatrix::unchecked(rho.space(), u.matrix() * rho.matrix() * u.matrix().adjoint());
}

// ---------------------------------------------------------------------------
// Optomechanics: driven damped cavity coupled to a mechanical resonator by
// radiation pressure, H_I = Delta a^dag a + w_m b^dag b
//                         + G0 a^dag a (b + b^dag) + E* a + E a^dag,
// with cavity decay kappa D[a].
// ---------------------------------------------------------------------------

struct OptomechScenario {
  double omega_m = 0.0;  // mechanical frequency
  double delta = 0.0;    // cavity detuning Delta = w_c - w_L
  double g0 = 0.0;       // vacuum optomechanical coupling
  double kappa = 0.0;    // cavity decay rate
  cx drive_e = 0.0;      // E = sqrt(kappa) E_L, frequency units
  int cavity_dim = 0;
  int mech_dim = 0;

  void validate() const {
    if (kappa <= 0.0) throw ValidationError("OptomechScenario: kappa must be positive");
    if (cavity_dim < 2 || mech_dim < 2)
      throw InvalidDimension("OptomechScenario: dims must be >= 2");
  }

  // Steady-state amplitude of the uncoupled driven cavity.
  cx alpha0() const { return cx(0, -1) * drive_e / cx(0.5 * kappa, delta); }
};

// Drive that realizes a requested (complex) steady-state amplitude.
inline cx drive_for_alpha0(cx alpha0, double kappa, double delta) {
  return cx(0, 1) * alpha0 * cx(0.5 * kappa, delta);
}

// Lab-frame bipartite model (cavity (x) mechanics).
inline LindbladModel build_optomech_full(const OptomechScenario& s) {
  s.validate();
  if (std::norm(s.alpha0()) > s.cavity_dim / 4.0)
    throw TruncationError("build_optomech_full: cavity truncation inadequate for alpha0");
  const Operator a = annihilation(s.cavity_dim);
  const Operator n_a = number_op(s.cavity_dim);
  const Operator id_a = identity_op(a.space());
  const Operator n_b = number_op(s.mech_dim);
  const Operator x_b = quadrature(s.mech_dim);
  const Operator id_b = identity_op(n_b.space());

  Operator h = s.delta * kron(n_a, id_b) + s.omega_m * kron(id_a, n_b) +
               s.g0 * kron(n_a, x_b) +
               kron(Operator(a.space(), std::conj(s.drive_e) * a.matrix() +
                                            s.drive_e * a.matrix().adjoint()),
                    id_b);
  std::vector<DissipatorTerm> dis{{s.kappa, kron(a, id_b)}};
  return LindbladModel(std::move(h), std::move(dis), {});
}

// The same dynamics in the frame displaced by alpha0. The linear cavity
// terms cancel against the drive, leaving
//   H = Delta a^dag a + w_m b^dag b
//       + G0 (a^dag a + alpha0 a^dag + alpha0* a + |alpha0|^2)(b + b^dag),
// with kappa D[a]. A cavity-local frame change leaves the mechanics marginal
// untouched, so this integrates the same reduced dynamics at a far smaller
// Hamiltonian norm (the displaced cavity sits near the vacuum).
inline LindbladModel build_optomech_displaced(const OptomechScenario& s) {
  s.validate();
  const cx a0 = s.alpha0();
  const Operator a = annihilation(s.cavity_dim);
  const Operator n_a = number_op(s.cavity_dim);
  const Operator id_a = identity_op(a.space());
  const Operator n_b = number_op(s.mech_dim);
  const Operator x_b = quadrature(s.mech_dim);
  const Operator id_b = identity_op(n_b.space());

  Mat cav_factor = n_a.matrix() + a0 * a.matrix().adjoint() + std::conj(a0) * a.matrix() +
                   std::norm(a0) * Mat::Identity(s.cavity_dim, s.cavity_dim);
  Operator h = s.delta * kron(n_a, id_b) + s.omega_m * kron(id_a, n_b) +
               s.g0 * kron(Operator(a.space(), std::move(cav_factor)), x_b);
  std::vector<DissipatorTerm> dis{{s.kappa, kron(a, id_b)}};
  return LindbladModel(std::move(h), std::move(dis), {});
}

// Reduced mechanics-only model after adiabatic elimination of the cavity:
//   drho_m = -i[H_m, rho_m] + Gamma D[b+b^dag] rho_m,
//   H_m = w_m b^dag b + G0 |alpha0|^2 (b+b^dag),  Gamma = 4 G0^2 |alpha0|^2 / kappa.
inline LindbladModel build_optomech_reduced(const OptomechScenario& s) {
  s.validate();
  const double a0_sq = std::norm(s.alpha0());
  const Operator n_b = number_op(s.mech_dim);
  const Operator x_b = quadrature(s.mech_dim);
  Operator h = s.omega_m * n_b + (s.g0 * a0_sq) * x_b;
  const double gamma_red = 4.0 * s.g0 * s.g0 * a0_sq / s.kappa;
  std::vector<DissipatorTerm> dis;
  if (gamma_red > 0.0) dis.push_back({gamma_red, x_b});
  return LindbladModel(std::move(h), std::move(dis), {});
}

inline MeasurementChannel optomech_heterodyne_channel(const OptomechScenario& s) {
  const Operator a = annihilation(s.cavity_dim);
  const Operator id_b = identity_op(SpaceSpec::single(s.mech_dim));
  return MeasurementChannel(ChannelKind::Heterodyne, s.kappa, kron(a, id_b));
}

// Steady-state off-diagonal blocks of the near-vacuum expansion, given the
// diagonal blocks (mechanics-only operators):
//   rho10 = -i G0 a0 / (kappa/2 + i Delta) (x rho00 - rho11 x)
//   rho01 = +i G0 a0 / (kappa/2 - i Delta) (rho00 x - x rho11)
inline std::pair<Operator, Operator> adiabatic_offdiag(const OptomechScenario& s,
                                                       const Operator& rho00,
                                                       const Operator& rho11) {
  if (rho00.space() != rho11.space()) throw DimensionMismatch("adiabatic_offdiag: space mismatch");
  if (rho00.dim() != s.mech_dim)
    throw DimensionMismatch("adiabatic_offdiag: expected mechanics-only blocks");
  const Mat x = quadrature(s.mech_dim).matrix();
  const cx a0 = s.alpha0();
  const cx c10 = cx(0, -1) * s.g0 * a0 / cx(0.5 * s.kappa, s.delta);
  const cx c01 = cx(0, 1) * s.g0 * a0 / cx(0.5 * s.kappa, -s.delta);
  Operator rho10(rho00.space(), c10 * (x * rho00.matrix() - rho11.matrix() * x));
  Operator rho01(rho00.space(), c01 * (rho00.matrix() * x - x * rho11.matrix()));
  return {std::move(rho10), std::move(rho01)};
}

// ---------------------------------------------------------------------------
// G0 = (w_c / L) sqrt(hbar / (2 m w_m)); hbar = 1 in internal units, and the
// SI helper carries hbar explicitly for laboratory numbers.
// ---------------------------------------------------------------------------

inline double vacuum_coupling_rate(double omega_c, double length, double mass, double omega_m) {
  if (omega_c <= 0 || length <= 0 || mass <= 0 || omega_m <= 0)
    throw ValidationError("vacuum_coupling_rate: inputs must be positive");
  return (omega_c / length) * std::sqrt(1.0 / (2.0 * mass * omega_m));
}

inline double vacuum_coupling_rate_si(double omega_c, double length, double mass, double omega_m) {
  constexpr double hbar = 1.054571817e-34;  // J s
  if (omega_c <= 0 || length <= 0 || mass <= 0 || omega_m <= 0)
    throw ValidationError("vacuum_coupling_rate_si: inputs must be positive");
  return (omega_c / length) * std::sqrt(hbar / (2.0 * mass * omega_m));
}

// ---------------------------------------------------------------------------
// Scenario JSON documents: {"type": ..., exact field names}; unknown fields
// are rejected.
// ---------------------------------------------------------------------------

using ScenarioVariant = std::variant<ImpulseScenario, ControllerTargetScenario, OptomechScenario>;

namespace detail {

inline void reject_unknown_fields(const nlohmann::json& j, const std::vector<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || (it.key() == k);
    if (!ok) throw ConfigError("scenario: unknown field '" + it.key() + "'");
  }
}

inline double get_num(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ConfigError(std::string("scenario: missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

inline int get_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw ConfigError(std::string("scenario: missing integer field '") + key + "'");
  return j.at(key).get<int>();
}

inline std::pair<int, int> get_dims(const nlohmann::json& j) {
  if (!j.contains("dims") || !j.at("dims").is_array() || j.at("dims").size() != 2)
    throw ConfigError("scenario: 'dims' must be a two-element array");
  return {j.at("dims").at(0).get<int>(), j.at("dims").at(1).get<int>()};
}

inline cx get_complex(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("scenario: missing field '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_number()) return cx(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2) return cx(v.at(0).get<double>(), v.at(1).get<double>());
  throw ConfigError(std::string("scenario: '") + key + "' must be a number or [re, im]");
}

}  // namespace detail

inline ImpulseScenario impulse_from_json(const nlohmann::json& j) {
  detail::reject_unknown_fields(j, {"type", "kappa_c", "q_bar", "sigma", "target_dim"});
  ImpulseScenario s;
  s.kappa_c = detail::get_num(j, "kappa_c");
  s.q_bar = detail::get_num(j, "q_bar");
  s.sigma = detail::get_num(j, "sigma");
  s.target_dim = detail::get_int(j, "target_dim");
  s.validate();
  return s;
}

inline ControllerTargetScenario controller_target_from_json(const nlohmann::json& j) {
  detail::reject_unknown_fields(j, {"type", "gamma", "kappa_c", "x0", "sigma0", "omega_s", "dims"});
  ControllerTargetScenario s;
  s.gamma = detail::get_num(j, "gamma");
  s.kappa_c = detail::get_num(j, "kappa_c");
  s.x0 = detail::get_num(j, "x0");
  s.sigma0 = detail::get_num(j, "sigma0");
  s.omega_s = detail::get_num(j, "omega_s");
  std::tie(s.controller_points, s.target_dim) = detail::get_dims(j);
  s.validate();
  return s;
}

inline OptomechScenario optomech_from_json(const nlohmann::json& j) {
  detail::reject_unknown_fields(j, {"type", "omega_m", "delta", "g0", "kappa", "drive_e", "dims"});
  OptomechScenario s;
  s.omega_m = detail::get_num(j, "omega_m");
  s.delta = detail::get_num(j, "delta");
  s.g0 = detail::get_num(j, "g0");
  s.kappa = detail::get_num(j, "kappa");
  s.drive_e = detail::get_complex(j, "drive_e");
  std::tie(s.cavity_dim, s.mech_dim) = detail::get_dims(j);
  s.validate();
  return s;
}

inline ScenarioVariant scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw ConfigError("scenario: document must carry a string 'type' field");
  const std::string type = j.at("type").get<std::string>();
  if (type == "impulse") return impulse_from_json(j);
  if (type == "controller_target") return controller_target_from_json(j);
  if (type == "optomech") return optomech_from_json(j);
  throw ConfigError("scenario: unknown type '" + type + "'");
}

}  // namespace qcsim

#endif  // QCSIM_SCENARIOS_HPP
