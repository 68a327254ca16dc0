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

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gaitevo {

inline constexpr int kLegs = 4;
inline constexpr int kJointsPerLeg = 3;
inline constexpr int kJoints = kLegs * kJointsPerLeg;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;
inline constexpr const char* kVersion = "0.1.0";

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec12 = Eigen::Matrix<double, kJoints, 1>;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Leg order is fixed everywhere: LF, RF, LH, RH. Joints per leg: abd, hip, knee.
enum class Leg : int { LF = 0, RF = 1, LH = 2, RH = 3 };

inline constexpr bool is_left(int leg) { return leg == 0 || leg == 2; }
inline constexpr bool is_front(int leg) { return leg == 0 || leg == 1; }
inline constexpr int joint_index(int leg, int joint) { return leg * kJointsPerLeg + joint; }

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class OutOfWorkspaceError : public Error {
 public:
  OutOfWorkspaceError(const std::string& what, double shortfall)
      : Error(what), shortfall_(shortfall) {}
  // Distance (m) by which the target misses the reachable set.
  double shortfall() const { return shortfall_; }

 private:
  double shortfall_;
};

class SimulationDiverged : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// ---------------------------------------------------------------------------
// Hashing and seeding

// FNV-1a over raw bytes.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t checksum(std::span<const double> values,
                              std::uint64_t h = 1469598103934665603ULL) {
  return fnv1a(values.data(), values.size_bytes(), h);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

// Named sub-stream of a master seed: "env", "policy", "ga", "init", ...
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view name,
                                 std::uint64_t index = 0) {
  const std::uint64_t tag = fnv1a(name.data(), name.size());
  return splitmix64(splitmix64(master ^ tag) + index);
}

inline Rng make_stream(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
  return Rng(stream_seed(master, name, index));
}

// Fresh distribution objects per draw so no hidden state lives outside the engine.
inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }
inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool all_finite(const Eigen::Ref<const MatX>& m) { return m.allFinite(); }

}  // namespace gaitevo
