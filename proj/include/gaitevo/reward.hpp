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

// Six-term locomotion reward with a speed-tracking curriculum factor, total
// joint power, and the wide stability margin.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "gaitevo/common.hpp"

namespace gaitevo {

enum class FootVelocityForm {
  Penalty,  // -c_f * sum ||V_f||^2 * dt over feet in contact
  Printed,  // c_f * sum_{feet in contact} min(V_d, V_c)
};

struct RewardConfig {
  // Order: velocity, energy, base motion, foot velocity, touchdown, unexpected contact.
  std::array<double, 6> weights{1.5, 0.07, 0.6, 0.3, 0.1, 0.1};
  double c_b = 4.0;
  double c_f = 2.5;
  double desired_speed = 0.5;  // V_d, m/s
  double dt = 0.02;            // control step, s
  bool energy_absolute = false;
  FootVelocityForm foot_velocity_form = FootVelocityForm::Penalty;
};

struct RewardInputs {
  double forward_speed = 0.0;  // V_c (= V_x), m/s
  Vec3 base_angular_velocity = Vec3::Zero();
  Vec12 torques = Vec12::Zero();
  Vec12 joint_velocities = Vec12::Zero();
  std::array<bool, kLegs> foot_contact{};
  std::array<Vec3, kLegs> foot_velocity{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  int desired_support = 0;       // C_d
  int unexpected_contacts = 0;   // C_u
};

struct RewardBreakdown {
  enum Index { Velocity = 0, Energy, BaseMotion, FootVelocity, Touchdown, Unexpected };
  std::array<double, 6> components{};
  double curriculum = 1.0;
  double total = 0.0;
};

/// c_k = 1 - tanh(4.5 * min(Vx - Vd, 0)^2).
inline double curriculum_factor(double vx, double vd) {
  const double lag = std::min(vx - vd, 0.0);
  return 1.0 - std::tanh(4.5 * lag * lag);
}

inline RewardBreakdown compute_reward(const RewardInputs& in, const RewardConfig& cfg) {
  RewardBreakdown out;
  const double ck = curriculum_factor(in.forward_speed, cfg.desired_speed);
  out.curriculum = ck;
  const double tracked = std::min(cfg.desired_speed, in.forward_speed);

  double work = 0.0;
  for (int i = 0; i < kJoints; ++i) {
    const double p = in.torques[i] * in.joint_velocities[i];
    work += cfg.energy_absolute ? std::abs(p) : p;
  }
  const double wxy2 = in.base_angular_velocity.x() * in.base_angular_velocity.x() +
                      in.base_angular_velocity.y() * in.base_angular_velocity.y();

  int support = 0;
  double foot_term = 0.0;
  for (int l = 0; l < kLegs; ++l) {
    if (!in.foot_contact[l]) continue;
    ++support;
    if (cfg.foot_velocity_form == FootVelocityForm::Penalty) {
      foot_term -= cfg.c_f * in.foot_velocity[l].squaredNorm() * cfg.dt;
    } else {
      foot_term += cfg.c_f * tracked;
    }
  }

  auto& r = out.components;
  r[RewardBreakdown::Velocity] = tracked;
  r[RewardBreakdown::Energy] = -ck * work * cfg.dt;
  r[RewardBreakdown::BaseMotion] = ck * (std::tanh(cfg.c_b * wxy2) - 1.0);
  r[RewardBreakdown::FootVelocity] = foot_term;
  r[RewardBreakdown::Touchdown] = -static_cast<double>(std::max(support - in.desired_support, 0));
  r[RewardBreakdown::Unexpected] = -static_cast<double>(in.unexpected_contacts);

  double total = 0.0;
  for (int i = 0; i < 6; ++i) total += cfg.weights[i] * r[i];
  out.total = total;
  return out;
}

/// Total power: sum over joints of |tau * qdot| (W).
inline double power(const Vec12& torques, const Vec12& joint_velocities) {
  return (torques.array() * joint_velocities.array()).abs().sum();
}

/// Distance from the CoM ground projection to the support polygon's diagonal
/// intersection (4 supports, ordered LF, RF, RH, LH) or centroid (3 supports).
/// Empty when fewer than 3 supports or the diagonals are parallel.
inline std::optional<double> wsm(const Vec2& com_xy, std::span<const Vec2> support) {
  if (support.size() == 3) {
    const Vec2 c = (support[0] + support[1] + support[2]) / 3.0;
    return (com_xy - c).norm();
  }
  if (support.size() != 4) return std::nullopt;
  // Diagonals: 0-2 and 1-3.
  const Vec2 p = support[0], r = support[2] - support[0];
  const Vec2 q = support[1], s = support[3] - support[1];
  const double denom = r.x() * s.y() - r.y() * s.x();
  const double scale = std::max(r.norm() * s.norm(), 1e-300);
  if (std::abs(denom) <= 1e-12 * scale) return std::nullopt;
  const Vec2 qp = q - p;
  const double t = (qp.x() * s.y() - qp.y() * s.x()) / denom;
  const Vec2 x = p + t * r;
  return (com_xy - x).norm();
}

}  // namespace gaitevo
