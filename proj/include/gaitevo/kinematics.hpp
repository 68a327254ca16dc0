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

// Serial-chain kinematics for a 3-joint leg in the hip frame (x forward,
// y lateral, z up). Abduction rotates about x; hip and knee pitch about y.
// The knee angle is relative to the thigh and is <= 0 on the working branch.

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gaitevo/common.hpp"

namespace gaitevo {

struct LegGeometry {
  double hip_len = 0.1;
  double thigh_len = 0.2;
  double shank_len = 0.2;
  bool left = true;

  double side() const { return left ? 1.0 : -1.0; }
  double max_reach() const { return thigh_len + shank_len; }
  double min_reach() const { return std::abs(thigh_len - shank_len); }

  static LegGeometry for_leg(int leg) {
    LegGeometry g;
    g.left = is_left(leg);
    return g;
  }
};

using FootPosition = Vec3;
using LegAngles = Vec3;  // abd, hip, knee

/// Planar (x, z) of the foot in the abducted sagittal plane.
inline Vec2 planar_fk(double hip, double knee, const LegGeometry& g) {
  return {-g.thigh_len * std::sin(hip) - g.shank_len * std::sin(hip + knee),
          -g.thigh_len * std::cos(hip) - g.shank_len * std::cos(hip + knee)};
}

inline Vec3 rotate_abduction(const Vec3& p, double abd) {
  const double c = std::cos(abd), s = std::sin(abd);
  return {p.x(), c * p.y() - s * p.z(), s * p.y() + c * p.z()};
}

inline FootPosition leg_fk(const LegAngles& q, const LegGeometry& g) {
  const Vec2 pl = planar_fk(q[1], q[2], g);
  return rotate_abduction({pl.x(), g.side() * g.hip_len, pl.y()}, q[0]);
}

/// Knee joint position in the hip frame.
inline Vec3 knee_position(const LegAngles& q, const LegGeometry& g) {
  return rotate_abduction(
      {-g.thigh_len * std::sin(q[1]), g.side() * g.hip_len, -g.thigh_len * std::cos(q[1])}, q[0]);
}

/// d(foot)/dq, columns abd, hip, knee.
inline Mat3 foot_jacobian(const LegAngles& q, const LegGeometry& g) {
  const double h = q[1], k = q[2];
  const double dx_dh = -g.thigh_len * std::cos(h) - g.shank_len * std::cos(h + k);
  const double dx_dk = -g.shank_len * std::cos(h + k);
  const double dz_dh = g.thigh_len * std::sin(h) + g.shank_len * std::sin(h + k);
  const double dz_dk = g.shank_len * std::sin(h + k);
  const Vec2 pl = planar_fk(h, k, g);
  const Vec3 unrot{pl.x(), g.side() * g.hip_len, pl.y()};
  const double c = std::cos(q[0]), s = std::sin(q[0]);
  Mat3 J;
  J.col(0) = Vec3{0.0, -s * unrot.y() - c * unrot.z(), c * unrot.y() - s * unrot.z()};
  J.col(1) = rotate_abduction({dx_dh, 0.0, dz_dh}, q[0]);
  J.col(2) = rotate_abduction({dx_dk, 0.0, dz_dk}, q[0]);
  return J;
}

/// d(knee)/dq; the knee column is zero.
inline Mat3 knee_jacobian(const LegAngles& q, const LegGeometry& g) {
  const double h = q[1];
  const Vec3 unrot{-g.thigh_len * std::sin(h), g.side() * g.hip_len, -g.thigh_len * std::cos(h)};
  const double c = std::cos(q[0]), s = std::sin(q[0]);
  Mat3 J;
  J.col(0) = Vec3{0.0, -s * unrot.y() - c * unrot.z(), c * unrot.y() - s * unrot.z()};
  J.col(1) = rotate_abduction({-g.thigh_len * std::cos(h), 0.0, g.thigh_len * std::sin(h)}, q[0]);
  J.col(2).setZero();
  return J;
}

/// Planar two-link IK on the knee-backward branch (knee <= 0).
/// Returns (hip, knee). Throws OutOfWorkspaceError if unreachable.
inline Vec2 planar_ik(double x, double z, const LegGeometry& g) {
  const double l1 = g.thigh_len, l2 = g.shank_len;
  const double r = std::hypot(x, z);
  constexpr double kTol = 1e-12;
  if (r > l1 + l2 + kTol) {
    throw OutOfWorkspaceError("leg_ik: target beyond full extension", r - (l1 + l2));
  }
  if (r < std::abs(l1 - l2) - kTol) {
    throw OutOfWorkspaceError("leg_ik: target inside minimum reach", std::abs(l1 - l2) - r);
  }
  const double c = std::clamp((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double knee = -std::acos(c);
  const double u = -x, w = -z;
  const double hip = std::atan2(u, w) - std::atan2(l2 * std::sin(knee), l1 + l2 * std::cos(knee));
  return {hip, knee};
}

inline LegAngles leg_ik(const FootPosition& p, const LegGeometry& g) {
  const double d2 = p.y() * p.y() + p.z() * p.z();
  const double h2 = g.hip_len * g.hip_len;
  if (d2 < h2 - 1e-12) {
    throw OutOfWorkspaceError("leg_ik: target inside the hip offset cylinder",
                              g.hip_len - std::sqrt(d2));
  }
  // In the abducted frame the foot sits at (x, side*hip, -L).
  const double L = std::sqrt(std::max(0.0, d2 - h2));
  const double abd = std::atan2(p.z(), p.y()) - std::atan2(-L, g.side() * g.hip_len);
  const double abd_wrapped = std::remainder(abd, 2.0 * kPi);
  const Vec2 hk = planar_ik(p.x(), -L, g);
  return {abd_wrapped, hk.x(), hk.y()};
}

}  // namespace gaitevo
