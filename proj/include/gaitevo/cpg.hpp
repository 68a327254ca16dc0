// Copyright 2026 The Gaitevo Authors.
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

#pragma once

// Hopf-oscillator central pattern generator. Each leg reads the x-component of
// one converged oscillator, delayed by a per-leg fraction of the period.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gaitevo/common.hpp"

namespace gaitevo {

struct HopfState {
  double x = 0.0;
  double y = 0.0;

  double radius() const { return std::hypot(x, y); }
  bool operator==(const HopfState&) const = default;
};

using OscillatorState = std::array<HopfState, kLegs>;

struct CpgConfig {
  double mu = 0.2;      // squared limit-cycle amplitude
  double alpha = 10.0;  // convergence rate, 1/s
  double period = 2.0;  // seconds
  std::array<double, kLegs> phase_offsets{0.0, 0.5, 0.25, 0.75};  // LF, RF, LH, RH

  static CpgConfig walk() { return {}; }
  static CpgConfig trot() {
    CpgConfig c;
    c.phase_offsets = {0.0, 0.5, 0.5, 0.0};
    return c;
  }

  double angular_frequency() const { return 2.0 * kPi / period; }

  void validate() const {
    if (!(period > 0.0) || !std::isfinite(period)) throw ConfigError("cpg.period", "must be > 0");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("cpg.mu", "must be > 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("cpg.alpha", "must be > 0");
    for (double o : phase_offsets) {
      if (!(o >= 0.0 && o < 1.0)) throw ConfigError("cpg.phase_offsets", "must lie in [0, 1)");
    }
  }
};

namespace detail {

inline HopfState hopf_field(const HopfState& s, const CpgConfig& cfg) {
  const double w = cfg.angular_frequency();
  const double g = cfg.alpha * (cfg.mu - (s.x * s.x + s.y * s.y));
  return {g * s.x - w * s.y, g * s.y + w * s.x};
}

inline HopfState rk4(const HopfState& s, const CpgConfig& cfg, double dt) {
  auto add = [](const HopfState& a, const HopfState& b, double h) {
    return HopfState{a.x + h * b.x, a.y + h * b.y};
  };
  const HopfState k1 = hopf_field(s, cfg);
  const HopfState k2 = hopf_field(add(s, k1, 0.5 * dt), cfg);
  const HopfState k3 = hopf_field(add(s, k2, 0.5 * dt), cfg);
  const HopfState k4 = hopf_field(add(s, k3, dt), cfg);
  return {s.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          s.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y)};
}

}  // namespace detail

/// Advances a single oscillator by one RK4 step. Requires 0 < dt <= T/100.
inline HopfState step_oscillator(const HopfState& state, const CpgConfig& cfg, double dt) {
  if (!std::isfinite(state.x) || !std::isfinite(state.y)) {
    throw std::invalid_argument("step_oscillator: non-finite oscillator state");
  }
  if (!(dt > 0.0) || dt > cfg.period / 100.0) {
    throw std::invalid_argument("step_oscillator: dt must satisfy 0 < dt <= T/100");
  }
  return detail::rk4(state, cfg, dt);
}

/// Advances all four oscillators.
inline OscillatorState step_oscillator(const OscillatorState& state, const CpgConfig& cfg,
                                       double dt) {
  OscillatorState out;
  for (int j = 0; j < kLegs; ++j) out[j] = step_oscillator(state[j], cfg, dt);
  return out;
}

using RhythmSignal = Vec4;

/// One period of the converged oscillator, tabulated once and read back with
/// cubic Hermite interpolation. rho_j(t) = rho_base(t - offset_j * T).
class RhythmGenerator {
 public:
  static constexpr int kTableSize = 2048;

  explicit RhythmGenerator(const CpgConfig& cfg = {}) : cfg_(cfg) {
    cfg_.validate();
    table_.resize(kTableSize + 1);
    const double dt = cfg_.period / kTableSize;
    HopfState s{std::sqrt(cfg_.mu), 0.0};
    for (int i = 0; i < kTableSize; ++i) {
      table_[i] = s;
      s = detail::rk4(s, cfg_, dt);
    }
    table_[kTableSize] = table_[0];
  }

  const CpgConfig& config() const { return cfg_; }

  /// x-component of the converged oscillator (phase zero at t = 0).
  double base(double t) const {
    const double T = cfg_.period;
    double u = std::fmod(t, T);
    if (u < 0.0) u += T;
    const double h = T / kTableSize;
    double pos = u / h;
    int i = static_cast<int>(pos);
    if (i >= kTableSize) i = kTableSize - 1;
    const double s = pos - i;
    const HopfState& a = table_[i];
    const HopfState& b = table_[i + 1];
    const double da = detail::hopf_field(a, cfg_).x * h;
    const double db = detail::hopf_field(b, cfg_).x * h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * a.x + (s3 - 2 * s2 + s) * da + (-2 * s3 + 3 * s2) * b.x +
           (s3 - s2) * db;
  }

  RhythmSignal at(double t) const {
    RhythmSignal r;
    for (int j = 0; j < kLegs; ++j) r[j] = base(t - cfg_.phase_offsets[j] * cfg_.period);
    return r;
  }

  /// Gait phase of a leg in [0, 1); stance occupies [0, 0.5).
  double leg_phase(int leg, double t) const {
    double p = t / cfg_.period - cfg_.phase_offsets[leg];
    p -= std::floor(p);
    return p >= 1.0 ? 0.0 : p;
  }

  bool in_stance(int leg, double t) const { return leg_phase(leg, t) < 0.5; }

 private:
  CpgConfig cfg_;
  std::vector<HopfState> table_;
};

inline RhythmSignal rhythm_at(const RhythmGenerator& gen, double t) {
  if (t < 0.0) throw std::invalid_argument("rhythm_at: t must be >= 0");
  return gen.at(t);
}

}  // namespace gaitevo
