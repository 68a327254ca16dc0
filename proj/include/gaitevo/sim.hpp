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

// Reduced-order quadruped: a floating rigid base carrying the lumped leg
// masses, twelve PD-driven joints with reflected inertia, massless links and
// penalty spring-damper contact with regularized Coulomb friction. Contact
// forces at a leg point act on the base and, through the leg Jacobian, on the
// joints, so contact power splits exactly between the two.
//
// Integration is semi-implicit Euler. Gravity is the one exception: being
// uniform, it is integrated in closed form so ballistic phases carry no drift.

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "gaitevo/common.hpp"
#include "gaitevo/cpg.hpp"
#include "gaitevo/kinematics.hpp"
#include "gaitevo/reward.hpp"
#include "gaitevo/terrain.hpp"

namespace gaitevo {

struct PdGains {
  double kp = 0.0;
  double kd = 0.0;
};

struct RobotModel {
  double base_mass = 10.5;
  double leg_mass = 2.0;  // per leg, lumped at mid-thigh
  LegGeometry geometry{};
  double torque_limit = 33.5;
  std::array<PdGains, kJointsPerLeg> gains{PdGains{80.0, 2.0}, PdGains{120.0, 4.0},
                                          PdGains{90.0, 3.0}};
  double initial_height = 0.26;
  Vec3 initial_angles{0.0, 0.9, -1.8};
  double hip_offset_x = 0.19;
  double hip_offset_y = 0.05;
  Vec3 body_half_extents{0.22, 0.08, 0.05};
  double joint_inertia = 0.05;  // kg m^2, reflected rotor + link
  double joint_damping = 0.01;  // N m s / rad
  Vec3 joint_lower{-0.8, -1.0, -2.7};
  Vec3 joint_upper{0.8, 3.5, -0.3};

  double total_mass() const { return base_mass + kLegs * leg_mass; }

  Vec3 hip_offset(int leg) const {
    return {is_front(leg) ? hip_offset_x : -hip_offset_x,
            is_left(leg) ? hip_offset_y : -hip_offset_y, 0.0};
  }

  /// Body inertia about the base origin: box plus point leg masses at mid-thigh.
  Mat3 inertia() const {
    const Vec3 e = 2.0 * body_half_extents;
    Mat3 I = Mat3::Zero();
    I(0, 0) = base_mass / 12.0 * (e.y() * e.y() + e.z() * e.z());
    I(1, 1) = base_mass / 12.0 * (e.x() * e.x() + e.z() * e.z());
    I(2, 2) = base_mass / 12.0 * (e.x() * e.x() + e.y() * e.y());
    for (int l = 0; l < kLegs; ++l) {
      const Vec3 r = hip_offset(l) + Vec3{0.0, (is_left(l) ? 1.0 : -1.0) * geometry.hip_len,
                                          -0.5 * geometry.thigh_len};
      I += leg_mass * (r.squaredNorm() * Mat3::Identity() - r * r.transpose());
    }
    return I;
  }

  LegGeometry leg_geometry(int leg) const {
    LegGeometry g = geometry;
    g.left = is_left(leg);
    return g;
  }

  void validate() const {
    if (!(base_mass > 0 && leg_mass > 0 && torque_limit > 0 && joint_inertia > 0)) {
      throw ConfigError("robot", "masses, torque limit and joint inertia must be positive");
    }
    for (const auto& g : gains) {
      if (g.kp < 0 || g.kd < 0) throw ConfigError("robot.gains", "must be non-negative");
    }
  }
};

struct ContactParams {
  bool enabled = true;
  double stiffness = 3e4;          // N/m
  double damping = 300.0;          // N s/m
  double friction = 0.8;           // Coulomb coefficient
  double stiction_velocity = 1e-3; // m/s regularization threshold
  double friction_mass = 0.5;      // kg; caps friction at what stops the point in one substep
  double max_penetration = 0.05;   // m; deeper penetration does not add force
};

struct Disturbance {
  bool enabled = false;
  Vec3 force{0.0, 30.0, 0.0};  // N, world frame
  // On during [1,2), [3,4), ... seconds of episode time.
  bool active(double t) const { return enabled && static_cast<long>(std::floor(t)) % 2 == 1; }
};

enum class ObservationMode { Full, Partial };

inline int observation_dim(ObservationMode m) { return m == ObservationMode::Full ? 49 : 37; }

struct SimConfig {
  double control_dt = 0.02;
  int substeps = 8;
  int episode_steps = 300;
  double fall_height = 0.12;
  double fall_angle = 0.8;
  double init_jitter = 0.0;  // rad, uniform
  ObservationMode observation = ObservationMode::Full;
  TerrainSpec terrain{};
  ContactParams contact{};
  RewardConfig reward{};
  CpgConfig cpg{};  // stance schedule for the touchdown term
  Disturbance disturbance{};

  double substep_dt() const { return control_dt / substeps; }

  void validate() const {
    if (!(control_dt > 0.0)) throw ConfigError("sim.control_dt", "must be > 0");
    if (substeps < 1) throw ConfigError("sim.substeps", "must be >= 1");
    if (episode_steps < 1) throw ConfigError("sim.episode_steps", "must be >= 1");
    terrain.validate();
    cpg.validate();
  }
};

struct RobotState {
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Vec3 linear_velocity = Vec3::Zero();   // world
  Vec3 angular_velocity = Vec3::Zero();  // body
  Vec12 q = Vec12::Zero();
  Vec12 qd = Vec12::Zero();
  Vec12 torques = Vec12::Zero();  // last substep
  std::array<bool, kLegs> foot_contact{};
  std::array<Vec3, kLegs> foot_force{};     // world, N
  std::array<Vec3, kLegs> foot_position{};  // world
  std::array<Vec3, kLegs> foot_velocity{};  // world
  int unexpected_contacts = 0;
  double time = 0.0;
  int step = 0;

  Vec3 rpy() const {
    const auto& o = orientation;
    const double roll =
        std::atan2(2.0 * (o.w() * o.x() + o.y() * o.z()), 1.0 - 2.0 * (o.x() * o.x() + o.y() * o.y()));
    const double pitch = std::asin(std::clamp(2.0 * (o.w() * o.y() - o.z() * o.x()), -1.0, 1.0));
    const double yaw =
        std::atan2(2.0 * (o.w() * o.z() + o.x() * o.y()), 1.0 - 2.0 * (o.y() * o.y() + o.z() * o.z()));
    return {roll, pitch, yaw};
  }

  bool finite() const {
    return position.allFinite() && orientation.coeffs().allFinite() && linear_velocity.allFinite() &&
           angular_velocity.allFinite() && q.allFinite() && qd.allFinite();
  }
};

using Observation = VecX;

// Block boundaries of the full observation.
struct ObservationLayout {
  static constexpr int kVelocity = 0;
  static constexpr int kJointVelocity = 3;
  static constexpr int kPose = 15;
  static constexpr int kPoseRate = 18;
  static constexpr int kContact = 21;
  static constexpr int kContactForce = 25;
  static constexpr int kFootPosition = 37;
  static constexpr int kEnd = 49;
};

/// PD torque with zero desired joint velocity, clamped to +-limit.
inline double pd_torque(double q_hat, double q, double q_dot, const PdGains& gains, double limit) {
  const double tau = gains.kp * (q_hat - q) - gains.kd * q_dot;
  return std::clamp(tau, -limit, limit);
}

inline Observation build_observation(const RobotState& s, const RobotModel& model,
                                     ObservationMode mode) {
  Observation o(observation_dim(mode));
  const Mat3 R = s.orientation.toRotationMatrix();
  o.segment<3>(ObservationLayout::kVelocity) = R.transpose() * s.linear_velocity;
  o.segment<12>(ObservationLayout::kJointVelocity) = s.qd;
  o.segment<3>(ObservationLayout::kPose) = s.rpy();
  o.segment<3>(ObservationLayout::kPoseRate) = s.angular_velocity;
  for (int l = 0; l < kLegs; ++l) {
    o[ObservationLayout::kContact + l] = s.foot_contact[l] ? 1.0 : 0.0;
    o.segment<3>(ObservationLayout::kContactForce + 3 * l) = s.foot_force[l];
  }
  if (mode == ObservationMode::Full) {
    for (int l = 0; l < kLegs; ++l) {
      o.segment<3>(ObservationLayout::kFootPosition + 3 * l) =
          model.hip_offset(l) + leg_fk(s.q.segment<3>(3 * l), model.leg_geometry(l));
    }
  }
  return o;
}

struct StepInfo {
  RewardBreakdown reward;
  double power = 0.0;
  std::optional<double> wsm;
  bool fell = false;
  bool truncated = false;
  int desired_support = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Number of legs the gait schedule wants on the ground at time t.
inline int desired_support(const CpgConfig& cpg, double t) {
  int n = 0;
  for (int l = 0; l < kLegs; ++l) {
    double p = t / cpg.period - cpg.phase_offsets[l];
    p -= std::floor(p);
    if (p < 0.5) ++n;
  }
  return n;
}

class QuadrupedEnv {
 public:
  explicit QuadrupedEnv(SimConfig cfg = {}, RobotModel model = {})
      : cfg_(std::move(cfg)), model_(std::move(model)) {
    cfg_.validate();
    model_.validate();
    inertia_ = model_.inertia();
    inertia_inv_ = inertia_.inverse();
  }

  const SimConfig& config() const { return cfg_; }
  SimConfig& mutable_config() { return cfg_; }
  const RobotModel& model() const { return model_; }
  RobotModel& mutable_model() { return model_; }
  const RobotState& state() const { return state_; }
  void set_state(const RobotState& s) { state_ = s; }
  int observation_size() const { return observation_dim(cfg_.observation); }

  /// Places the robot at the initial pose over the terrain origin. Joint
  /// jitter is drawn only when an rng is supplied and init_jitter > 0.
  Observation reset(Rng* rng = nullptr) {
    state_ = RobotState{};
    state_.position = {0.0, 0.0, model_.initial_height + terrain_height(cfg_.terrain, 0.0, 0.0)};
    for (int l = 0; l < kLegs; ++l) state_.q.segment<3>(3 * l) = model_.initial_angles;
    if (rng != nullptr && cfg_.init_jitter > 0.0) {
      for (int i = 0; i < kJoints; ++i) state_.q[i] += uniform(*rng, -cfg_.init_jitter, cfg_.init_jitter);
    }
    refresh_kinematics();
    return observation();
  }

  Observation observation() const { return build_observation(state_, model_, cfg_.observation); }

  StepResult step(const Vec12& target) {
    if (!target.allFinite()) throw std::invalid_argument("step: non-finite joint targets");
    Vec12 clamped = target;
    for (int l = 0; l < kLegs; ++l) {
      for (int j = 0; j < kJointsPerLeg; ++j) {
        double& v = clamped[joint_index(l, j)];
        v = std::clamp(v, model_.joint_lower[j], model_.joint_upper[j]);
      }
    }
    const double h = cfg_.substep_dt();
    for (int k = 0; k < cfg_.substeps; ++k) {
      substep(clamped, h);
      if (!state_.finite()) throw SimulationDiverged("simulation produced non-finite state");
    }
    state_.step += 1;
    state_.time = state_.step * cfg_.control_dt;

    StepResult out;
    out.observation = observation();
    if (!out.observation.allFinite()) throw SimulationDiverged("non-finite observation");

    RewardInputs in;
    in.forward_speed = state_.linear_velocity.x();
    in.base_angular_velocity = state_.angular_velocity;
    in.torques = state_.torques;
    in.joint_velocities = state_.qd;
    in.foot_contact = state_.foot_contact;
    in.foot_velocity = state_.foot_velocity;
    in.desired_support = desired_support(cfg_.cpg, state_.time);
    in.unexpected_contacts = state_.unexpected_contacts;
    RewardConfig rc = cfg_.reward;
    rc.dt = cfg_.control_dt;
    out.info.reward = compute_reward(in, rc);
    out.info.desired_support = in.desired_support;
    out.info.power = power(state_.torques, state_.qd);
    out.info.wsm = support_margin();
    out.reward = out.info.reward.total;

    const Vec3 rpy = state_.rpy();
    const double ground = terrain_height(cfg_.terrain, state_.position.x(), state_.position.y());
    out.info.fell = state_.position.z() - ground < cfg_.fall_height ||
                    std::abs(rpy.x()) > cfg_.fall_angle || std::abs(rpy.y()) > cfg_.fall_angle;
    out.info.truncated = !out.info.fell && state_.step >= cfg_.episode_steps;
    out.done = out.info.fell || out.info.truncated;
    return out;
  }

  std::optional<double> support_margin() const {
    // Quadrilateral order LF, RF, RH, LH.
    static constexpr std::array<int, 4> kOrder{0, 1, 3, 2};
    std::vector<Vec2> feet;
    for (int l : kOrder) {
      if (state_.foot_contact[l]) feet.push_back(state_.foot_position[l].head<2>());
    }
    return wsm(state_.position.head<2>(), feet);
  }

  /// Base and joint kinetic energy plus gravitational potential (J).
  double mechanical_energy() const {
    const double m = model_.total_mass();
    const Vec3& w = state_.angular_velocity;
    double e = 0.5 * m * state_.linear_velocity.squaredNorm() + 0.5 * w.dot(inertia_ * w) +
               m * kGravity * state_.position.z();
    e += 0.5 * model_.joint_inertia * state_.qd.squaredNorm();
    return e;
  }

 private:
  struct ContactResult {
    Vec3 force = Vec3::Zero();
    bool touching = false;
  };

  ContactResult contact_force(const Vec3& p, const Vec3& v, double h) const {
    ContactResult out;
    if (!cfg_.contact.enabled) return out;
    const double ground = terrain_height(cfg_.terrain, p.x(), p.y());
    const Vec3 n = terrain_normal(cfg_.terrain, p.x(), p.y());
    const double depth = std::min((ground - p.z()) * n.z(), cfg_.contact.max_penetration);
    if (depth <= 0.0) return out;
    const double vn = v.dot(n);
    const double fn = std::max(0.0, cfg_.contact.stiffness * depth - cfg_.contact.damping * vn);
    if (fn <= 0.0) return out;
    out.touching = true;
    out.force = fn * n;
    const Vec3 vt = v - vn * n;
    const double speed = vt.norm();
    if (speed > 0.0) {
      const double coulomb = cfg_.contact.friction * fn;
      const double regularized = coulomb * std::min(1.0, speed / cfg_.contact.stiction_velocity);
      const double stopping = cfg_.contact.friction_mass * speed / h;
      out.force -= std::min(regularized, stopping) * (vt / speed);
    }
    return out;
  }

  void refresh_kinematics() {
    const Mat3 R = state_.orientation.toRotationMatrix();
    const Vec3 w_world = R * state_.angular_velocity;
    for (int l = 0; l < kLegs; ++l) {
      const LegGeometry g = model_.leg_geometry(l);
      const Vec3 ql = state_.q.segment<3>(3 * l);
      const Vec3 pb = model_.hip_offset(l) + leg_fk(ql, g);
      const Vec3 rw = R * pb;
      state_.foot_position[l] = state_.position + rw;
      state_.foot_velocity[l] = state_.linear_velocity + w_world.cross(rw) +
                                R * (foot_jacobian(ql, g) * state_.qd.segment<3>(3 * l));
    }
  }

  void substep(const Vec12& target, double h) {
    const Mat3 R = state_.orientation.toRotationMatrix();
    const Vec3 w_world = R * state_.angular_velocity;
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
    Vec12 joint_load = Vec12::Zero();
    int unexpected = 0;

    for (int l = 0; l < kLegs; ++l) {
      const LegGeometry g = model_.leg_geometry(l);
      const Vec3 ql = state_.q.segment<3>(3 * l);
      const Vec3 qdl = state_.qd.segment<3>(3 * l);

      const Mat3 Jf = foot_jacobian(ql, g);
      const Vec3 rf = R * (model_.hip_offset(l) + leg_fk(ql, g));
      const Vec3 pf = state_.position + rf;
      const Vec3 vf = state_.linear_velocity + w_world.cross(rf) + R * (Jf * qdl);
      const ContactResult cf = contact_force(pf, vf, h);
      force += cf.force;
      torque += rf.cross(cf.force);
      joint_load.segment<3>(3 * l) += Jf.transpose() * (R.transpose() * cf.force);
      state_.foot_contact[l] = cf.touching;
      state_.foot_force[l] = cf.force;
      state_.foot_position[l] = pf;
      state_.foot_velocity[l] = vf;

      const Mat3 Jk = knee_jacobian(ql, g);
      const Vec3 rk = R * (model_.hip_offset(l) + knee_position(ql, g));
      const Vec3 vk = state_.linear_velocity + w_world.cross(rk) + R * (Jk * qdl);
      const ContactResult ck = contact_force(state_.position + rk, vk, h);
      if (ck.touching) {
        ++unexpected;
        force += ck.force;
        torque += rk.cross(ck.force);
        joint_load.segment<3>(3 * l) += Jk.transpose() * (R.transpose() * ck.force);
      }
    }

    bool body_touch = false;
    const Vec3& e = model_.body_half_extents;
    for (int c = 0; c < 8; ++c) {
      const Vec3 corner{(c & 1) ? e.x() : -e.x(), (c & 2) ? e.y() : -e.y(),
                        (c & 4) ? e.z() : -e.z()};
      const Vec3 rc = R * corner;
      const ContactResult cb =
          contact_force(state_.position + rc, state_.linear_velocity + w_world.cross(rc), h);
      if (cb.touching) {
        body_touch = true;
        force += cb.force;
        torque += rc.cross(cb.force);
      }
    }
    if (body_touch) ++unexpected;
    state_.unexpected_contacts = unexpected;

    if (cfg_.disturbance.active(state_.time)) force += cfg_.disturbance.force;

    Vec12 tau;
    for (int l = 0; l < kLegs; ++l) {
      for (int j = 0; j < kJointsPerLeg; ++j) {
        const int i = joint_index(l, j);
        tau[i] = pd_torque(target[i], state_.q[i], state_.qd[i], model_.gains[j], model_.torque_limit);
      }
    }
    state_.torques = tau;

    const Vec12 qdd = (tau + joint_load - model_.joint_damping * state_.qd) / model_.joint_inertia;

    const Vec3 gravity{0.0, 0.0, -kGravity};
    const double m = model_.total_mass();
    state_.linear_velocity += (force / m) * h + gravity * h;
    state_.position += (state_.linear_velocity - 0.5 * gravity * h) * h;

    // Angular momentum in the world frame, then rotate with the updated rate.
    const Vec3 L = R * (inertia_ * state_.angular_velocity) + torque * h;
    const Vec3 w_new = R * (inertia_inv_ * (R.transpose() * L));
    const double angle = w_new.norm() * h;
    if (angle > 0.0) {
      state_.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, w_new.normalized())) *
                           state_.orientation;
      state_.orientation.normalize();
    }
    const Mat3 R_new = state_.orientation.toRotationMatrix();
    state_.angular_velocity = inertia_inv_ * (R_new.transpose() * L);

    state_.qd += qdd * h;
    state_.q += state_.qd * h;
    state_.time += h;
  }

  SimConfig cfg_;
  RobotModel model_;
  Mat3 inertia_;
  Mat3 inertia_inv_;
  RobotState state_;
};

}  // namespace gaitevo
