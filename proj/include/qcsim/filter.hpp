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

// Classical conditional description of the controller variable: a grid
// density driven by dP = sqrt(2 Gamma) (X - <X>) P dW, and the Gaussian
// moment pair d<X> = sqrt(2 Gamma) sigma dW, dsigma = -2 Gamma sigma dt.

#ifndef QCSIM_FILTER_HPP
#define QCSIM_FILTER_HPP

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

#include "qcsim/core.hpp"
#include "qcsim/rng.hpp"

namespace qcsim {

// ---------------------------------------------------------------------------
// GridDensity: ascending grid of X eigenvalues with normalized weights.
// ---------------------------------------------------------------------------

class GridDensity {
 public:
  GridDensity(Eigen::VectorXd x_values, Eigen::VectorXd weights)
      : x_(std::move(x_values)), w_(std::move(weights)) {
    if (x_.size() != w_.size() || x_.size() == 0)
      throw ValidationError("GridDensity: grid/weight size mismatch");
    for (int i = 1; i < x_.size(); ++i)
      if (x_(i) <= x_(i - 1)) throw ValidationError("GridDensity: grid must be ascending");
    if (w_.minCoeff() < 0.0) throw ValidationError("GridDensity: negative weight");
    if (std::abs(w_.sum() - 1.0) > 1e-10) throw ValidationError("GridDensity: weights must sum to 1");
  }

  // Gaussian weights sampled on n points spanning mean +- span_sigmas stddevs.
  static GridDensity gaussian(double mean, double var, int n = 200, double span_sigmas = 6.0) {
    if (n < 2) throw ValidationError("GridDensity: need at least 2 points");
    if (var <= 0.0) throw ValidationError("GridDensity: variance must be positive");
    const double sd = std::sqrt(var);
    Eigen::VectorXd x(n), w(n);
    for (int i = 0; i < n; ++i) {
      x(i) = mean + sd * span_sigmas * (2.0 * i / (n - 1.0) - 1.0);
      const double z = (x(i) - mean) / sd;
      w(i) = std::exp(-0.5 * z * z);
    }
    w /= w.sum();
    return GridDensity(std::move(x), std::move(w));
  }

  const Eigen::VectorXd& x_values() const { return x_; }
  const Eigen::VectorXd& weights() const { return w_; }
  int size() const { return static_cast<int>(x_.size()); }

  double mean() const { return x_.dot(w_); }
  double variance() const {
    const double m = mean();
    return ((x_.array() - m).square() * w_.array()).sum();
  }

 private:
  Eigen::VectorXd x_, w_;
};

// ---------------------------------------------------------------------------
// GaussianBelief: conditional mean and variance of the controller variable.
// ---------------------------------------------------------------------------

struct GaussianBelief {
  double mean = 0.0;
  double variance = 0.0;

  GaussianBelief(double mean_, double variance_) : mean(mean_), variance(variance_) {
    if (variance < 0.0) throw ValidationError("GaussianBelief: negative variance");
  }
};

// ---------------------------------------------------------------------------
// grid_step: Ito update dP = sqrt(2 Gamma)(X - <X>) P dW, then clipping of
// any negative weights (finite-dt artifact) and renormalization. The clipped
// mass is reported, never hidden.
// ---------------------------------------------------------------------------

struct GridStepResult {
  GridDensity density;
  double clipped_mass;
};

inline GridStepResult grid_step(const GridDensity& p, double gamma, double dW, double dt) {
  if (gamma < 0.0) throw ValidationError("grid_step: negative rate");
  if (dt <= 0.0) throw ConfigError("grid_step: dt must be positive");
  if (gamma * dt > 0.1) throw StabilityError("grid_step: Gamma * dt exceeds 0.1");
  const double m = p.mean();
  Eigen::VectorXd w =
      p.weights().array() * (1.0 + std::sqrt(2.0 * gamma) * dW * (p.x_values().array() - m));
  double clipped = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    if (w(i) < 0.0) {
      clipped -= w(i);
      w(i) = 0.0;
    }
  }
  const double total = w.sum();
  if (total <= 0.0) throw StepFailure("grid_step: all weight clipped");
  w /= total;
  return GridStepResult{GridDensity(p.x_values(), std::move(w)), clipped};
}

// ---------------------------------------------------------------------------
// gaussian_step: mean += sqrt(2 Gamma) sigma dW; variance follows the
// deterministic law dsigma = -2 Gamma sigma dt, either as a forward Euler
// update or through the exact exponential factor.
// ---------------------------------------------------------------------------

enum class VarianceUpdate { Euler, Exact };

inline GaussianBelief gaussian_step(const GaussianBelief& b, double gamma, double dW, double dt,
                                    VarianceUpdate update = VarianceUpdate::Exact) {
  if (gamma < 0.0) throw ValidationError("gaussian_step: negative rate");
  if (dt <= 0.0) throw ConfigError("gaussian_step: dt must be positive");
  const double mean = b.mean + std::sqrt(2.0 * gamma) * b.variance * dW;
  const double factor =
      update == VarianceUpdate::Exact ? std::exp(-2.0 * gamma * dt) : (1.0 - 2.0 * gamma * dt);
  if (factor < 0.0) throw StabilityError("gaussian_step: Euler variance update unstable");
  return GaussianBelief(mean, b.variance * factor);
}

// ---------------------------------------------------------------------------
// unconditional_check: averaging the grid update over antithetic noise pairs
// (+dW, -dW) must return the input density (the noise average of the
// conditional dynamics leaves the diagonal weights unchanged).
// ---------------------------------------------------------------------------

struct UnconditionalCheck {
  double max_pair_deviation;    // worst |avg(+dW,-dW) - p| over sampled pairs
  double max_mean_deviation;    // |mean over all draws - p|, max over grid
  int pairs;
};

inline UnconditionalCheck unconditional_check(const GridDensity& p, double gamma, double dt,
                                              int n_pairs = 1000, std::uint64_t seed = 1) {
  if (n_pairs < 1) throw ConfigError("unconditional_check: need at least one pair");
  CounterRng rng(seed);
  const double sqrt_dt = std::sqrt(dt);
  Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(p.size());
  double worst_pair = 0.0;
  for (int k = 0; k < n_pairs; ++k) {
    const double dW = sqrt_dt * rng.next_normal();
    const auto up = grid_step(p, gamma, dW, dt);
    const auto dn = grid_step(p, gamma, -dW, dt);
    Eigen::VectorXd avg = 0.5 * (up.density.weights() + dn.density.weights());
    worst_pair = std::max(worst_pair, (avg - p.weights()).cwiseAbs().maxCoeff());
    mean_acc += 0.5 * (up.density.weights() + dn.density.weights());
  }
  mean_acc /= static_cast<double>(n_pairs);
  return UnconditionalCheck{worst_pair, (mean_acc - p.weights()).cwiseAbs().maxCoeff(), n_pairs};
}

// ---------------------------------------------------------------------------
// Innovation extraction: recovers the Wiener increment from a record
// increment, dW = sqrt(2/Gamma) (dy - Gamma <X>^c dt), so quantum and
// classical filters can be driven by the same record.
// ---------------------------------------------------------------------------

inline double innovation_from_record(double dy, double gamma, double conditional_mean, double dt) {
  if (gamma <= 0.0) throw ValidationError("innovation_from_record: rate must be positive");
  return std::sqrt(2.0 / gamma) * (dy - gamma * conditional_mean * dt);
}

// Drives a grid density with a recorded dy series, recomputing the
// innovation from the filter's own conditional mean at every step.
struct GridFilterRun {
  std::vector<double> means;
  std::vector<double> variances;
  GridDensity final_density;
  double max_clipped_mass;
};

inline GridFilterRun drive_grid_with_record(const GridDensity& p0, double gamma,
                                            const std::vector<cx>& dy_series, double dt) {
  GridDensity p = p0;
  GridFilterRun run{{p.mean()}, {p.variance()}, p, 0.0};
  for (const cx& dy : dy_series) {
    const double dW = innovation_from_record(dy.real(), gamma, p.mean(), dt);
    auto res = grid_step(p, gamma, dW, dt);
    p = res.density;
    run.max_clipped_mass = std::max(run.max_clipped_mass, res.clipped_mass);
    run.means.push_back(p.mean());
    run.variances.push_back(p.variance());
  }
  run.final_density = p;
  return run;
}

}  // namespace qcsim

#endif  // QCSIM_FILTER_HPP
