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

// Procedural heightfields varying along x only. Base terrains are a flat
// lead-in followed by an unbounded slope or staircase. Composite terrains
// repeat a unit of [flat l0][up l2][top l1][down l2] `repeats` times.

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gaitevo/common.hpp"

namespace gaitevo {

enum class TerrainKind { Flat, Slope, Stairs, UpDownSlope, UpDownStairs, UpSlopeDownStairs };

struct TerrainSpec {
  TerrainKind kind = TerrainKind::Flat;
  double slope_deg = 15.0;  // Slope only
  double rise = 0.15;       // step height h
  double run = 0.3;         // Stairs only; composites use l2 / unit_steps
  double l0 = 1.0;          // flat lead-in
  double l1 = 1.0;          // flat top of a composite unit
  double l2 = 1.65;         // length of one up or down part
  int unit_steps = 4;       // steps per stair part; also sets composite ramp height
  int repeats = 10;

  double unit_height() const { return unit_steps * rise; }
  double unit_length() const { return l0 + 2.0 * l2 + l1; }

  void validate() const {
    if (kind == TerrainKind::Slope && !(std::abs(slope_deg) < 89.0)) {
      throw ConfigError("terrain.slope_deg", "must lie in (-89, 89)");
    }
    if (!(rise >= 0.0)) throw ConfigError("terrain.rise", "must be >= 0");
    if (!(run > 0.0)) throw ConfigError("terrain.run", "must be > 0");
    if (!(l0 >= 0.0) || !(l1 >= 0.0) || !(l2 > 0.0)) {
      throw ConfigError("terrain.l0/l1/l2", "lengths must be non-negative (l2 > 0)");
    }
    if (unit_steps < 1) throw ConfigError("terrain.unit_steps", "must be >= 1");
    if (repeats < 1) throw ConfigError("terrain.repeats", "must be >= 1");
  }

  bool operator==(const TerrainSpec&) const = default;
};

namespace detail {

// Risers sit at whole multiples of the run; a point within this many runs
// above a riser still belongs to the lower tread, absorbing rounding in x / run.
inline constexpr double kRiserTolerance = 1e-9;

// Stair profile rising `steps` risers over `length`, first riser at u = 0+.
inline double stair_up(double u, double length, int steps, double rise) {
  if (u <= 0.0) return 0.0;
  if (u >= length) return steps * rise;
  const double run = length / steps;
  return rise * std::min<double>(steps, std::ceil(u / run - kRiserTolerance));
}

struct Profile {
  double z;
  double dzdx;
};

inline Profile unit_profile(const TerrainSpec& s, double u) {
  const double H = s.unit_height();
  const double ramp = H / s.l2;
  const double up_start = s.l0;
  const double top_start = s.l0 + s.l2;
  const double down_start = top_start + s.l1;
  const double end = down_start + s.l2;
  const bool stairs_up = s.kind == TerrainKind::UpDownStairs;
  const bool stairs_down =
      s.kind == TerrainKind::UpDownStairs || s.kind == TerrainKind::UpSlopeDownStairs;
  if (u < up_start) return {0.0, 0.0};
  if (u < top_start) {
    const double v = u - up_start;
    if (stairs_up) return {stair_up(v, s.l2, s.unit_steps, s.rise), 0.0};
    return {ramp * v, ramp};
  }
  if (u < down_start) return {H, 0.0};
  if (u < end) {
    const double v = end - u;  // mirror of the up part
    if (stairs_down) return {stair_up(v, s.l2, s.unit_steps, s.rise), 0.0};
    return {ramp * v, -ramp};
  }
  return {0.0, 0.0};
}

inline Profile profile(const TerrainSpec& s, double x) {
  switch (s.kind) {
    case TerrainKind::Flat:
      return {0.0, 0.0};
    case TerrainKind::Slope: {
      if (x <= s.l0) return {0.0, 0.0};
      const double t = std::tan(s.slope_deg * kPi / 180.0);
      return {t * (x - s.l0), t};
    }
    case TerrainKind::Stairs:
      if (x <= s.l0) return {0.0, 0.0};
      return {s.rise * std::ceil((x - s.l0) / s.run - kRiserTolerance), 0.0};
    default: {
      if (x < 0.0) return {0.0, 0.0};
      const double L = s.unit_length();
      const double n = std::floor(x / L);
      if (n >= s.repeats) return {0.0, 0.0};
      return unit_profile(s, x - n * L);
    }
  }
}

}  // namespace detail

/// Ground height (m) at (x, y). Pure and single-valued.
inline double terrain_height(const TerrainSpec& spec, double x, double /*y*/) {
  return detail::profile(spec, x).z;
}

/// Upward unit normal of the local surface; vertical on stair treads.
inline Vec3 terrain_normal(const TerrainSpec& spec, double x, double /*y*/) {
  const double g = detail::profile(spec, x).dzdx;
  return Vec3{-g, 0.0, 1.0}.normalized();
}

inline std::string to_string(TerrainKind k) {
  switch (k) {
    case TerrainKind::Flat: return "flat";
    case TerrainKind::Slope: return "slope";
    case TerrainKind::Stairs: return "stairs";
    case TerrainKind::UpDownSlope: return "updownslope";
    case TerrainKind::UpDownStairs: return "updownstairs";
    case TerrainKind::UpSlopeDownStairs: return "upslope_downstairs";
  }
  return "?";
}

inline TerrainKind parse_terrain_kind(const std::string& name) {
  for (auto k : {TerrainKind::Flat, TerrainKind::Slope, TerrainKind::Stairs,
                 TerrainKind::UpDownSlope, TerrainKind::UpDownStairs,
                 TerrainKind::UpSlopeDownStairs}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("terrain.kind", "unknown terrain '" + name + "'");
}

/// Parses "flat", "slope:<deg>", "stairs[:<rise>[:<run>]]", "updownslope",
/// "updownstairs", "upslope_downstairs".
inline TerrainSpec parse_terrain(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.empty()) throw ConfigError("terrain", "empty terrain description");
  TerrainSpec spec;
  spec.kind = parse_terrain_kind(parts[0]);
  auto number = [&](std::size_t i) {
    try {
      std::size_t used = 0;
      double v = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("terrain", "bad number '" + parts[i] + "'");
    }
  };
  if (spec.kind == TerrainKind::Slope && parts.size() > 1) spec.slope_deg = number(1);
  if (spec.kind == TerrainKind::Stairs) {
    if (parts.size() > 1) spec.rise = number(1);
    if (parts.size() > 2) spec.run = number(2);
  }
  const std::size_t allowed = spec.kind == TerrainKind::Slope    ? 2
                              : spec.kind == TerrainKind::Stairs ? 3
                                                                 : 1;
  if (parts.size() > allowed) throw ConfigError("terrain", "too many parameters in '" + text + "'");
  spec.validate();
  return spec;
}

/// (x, z) samples every `resolution` metres over [0, span].
inline void write_terrain_csv(std::ostream& os, const TerrainSpec& spec, double span,
                              double resolution = 0.01) {
  os << "x,z\n";
  const long rows = std::lround(span / resolution) + 1;
  os.precision(17);
  for (long i = 0; i < rows; ++i) {
    const double x = static_cast<double>(i) * resolution;
    os << x << ',' << terrain_height(spec, x, 0.0) << '\n';
  }
}

}  // namespace gaitevo
