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

#ifndef QCSIM_RNG_HPP
#define QCSIM_RNG_HPP

#include <cmath>
#include <cstdint>

#include "qcsim/core.hpp"

namespace qcsim {

// Counter-based generator (splitmix64): the n-th output is a pure function
// of (seed, n), which makes noise streams reproducible bit-for-bit and safe
// to fan out across workers.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Per-trajectory seed: hash of (base seed, trajectory index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(base ^ mix64(index + 0x51ED270B7A94F3ull));
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in (0, 1]: 53-bit mantissa, never exactly 0 so log() is safe.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; draws are consumed in pairs.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Seeded description of a Wiener discretization: identical plans yield
// identical increments, bit-for-bit.
struct NoisePlan {
  std::uint64_t seed = 0;
  double dt = 0.0;
  int n_steps = 0;

  NoisePlan(std::uint64_t seed_, double dt_, int n_steps_)
      : seed(seed_), dt(dt_), n_steps(n_steps_) {
    if (dt <= 0.0) throw ConfigError("NoisePlan: dt must be positive");
    if (n_steps < 0) throw ConfigError("NoisePlan: n_steps must be >= 0");
  }
};

// Stream of Wiener increments dW ~ Normal(0, dt) for one trajectory.
class NoiseSource {
 public:
  explicit NoiseSource(const NoisePlan& plan) : rng_(plan.seed), sqrt_dt_(std::sqrt(plan.dt)) {}

  double wiener() { return sqrt_dt_ * rng_.next_normal(); }
  double normal() { return rng_.next_normal(); }

 private:
  CounterRng rng_;
  double sqrt_dt_;
};

}  // namespace qcsim

#endif  // QCSIM_RNG_HPP
