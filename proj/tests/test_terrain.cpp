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

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "gaitevo/terrain.hpp"

namespace gaitevo {
namespace {

std::vector<std::pair<double, double>> parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "x,z");
  std::vector<std::pair<double, double>> rows;
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

TEST(Terrain, FlatIsZero) {
  const TerrainSpec s;
  for (double x = -3.0; x < 30.0; x += 0.37) EXPECT_EQ(terrain_height(s, x, 0.4), 0.0);
  EXPECT_EQ(terrain_normal(s, 1.0, 0.0), Vec3(0.0, 0.0, 1.0));
}

TEST(Terrain, SlopeRisesByTangent) {
  const TerrainSpec s = parse_terrain("slope:15");
  EXPECT_EQ(terrain_height(s, s.l0, 0.0), 0.0);
  EXPECT_NEAR(terrain_height(s, s.l0 + 1.0, 0.0), std::tan(15.0 * kPi / 180.0), 1e-12);
  EXPECT_NEAR(terrain_height(s, s.l0 + 1.0, 0.0), 0.26795, 1e-5);
  const Vec3 n = terrain_normal(s, s.l0 + 0.5, 0.0);
  EXPECT_NEAR(n.norm(), 1.0, 1e-15);
  EXPECT_NEAR(std::acos(n.z()), 15.0 * kPi / 180.0, 1e-12);
}

TEST(Terrain, StairsRiseOneStepPerRun) {
  const TerrainSpec s = parse_terrain("stairs");
  EXPECT_EQ(terrain_height(s, s.l0 + 0.5 * s.run, 0.0), 0.15);
  EXPECT_EQ(terrain_height(s, s.l0 + s.run, 0.0), 0.15);
  EXPECT_NEAR(terrain_height(s, s.l0 + 1.5 * s.run, 0.0), 0.30, 1e-15);
  EXPECT_EQ(terrain_normal(s, s.l0 + 0.1, 0.0), Vec3(0.0, 0.0, 1.0));
}

TEST(Terrain, PureAndSingleValued) {
  for (const char* name : {"slope:10", "stairs", "updownslope", "updownstairs", "upslope_downstairs"}) {
    const TerrainSpec s = parse_terrain(name);
    for (double x = 0.0; x < 12.0; x += 0.013) {
      EXPECT_EQ(terrain_height(s, x, 0.0), terrain_height(s, x, 0.0));
      EXPECT_EQ(terrain_height(s, x, 0.0), terrain_height(s, x, 3.0));
    }
  }
}

TEST(Terrain, CompositeUnitIsSymmetricAboutApex) {
  const TerrainSpec s = parse_terrain("updownslope");
  for (int n = 0; n < 3; ++n) {
    const double apex = n * s.unit_length() + s.l0 + s.l2 + 0.5 * s.l1;
    for (double u = 0.0; u <= s.l2 + 0.5 * s.l1; u += 0.0071) {
      EXPECT_NEAR(terrain_height(s, apex - u, 0.0), terrain_height(s, apex + u, 0.0), 1e-9);
    }
    EXPECT_NEAR(terrain_height(s, apex, 0.0), s.unit_height(), 1e-12);
  }
}

TEST(Terrain, ParseRejectsNonsense) {
  EXPECT_THROW(parse_terrain("lava"), ConfigError);
  EXPECT_THROW(parse_terrain("slope:abc"), ConfigError);
  EXPECT_THROW(parse_terrain("slope:95"), ConfigError);
  EXPECT_THROW(parse_terrain("flat:1"), ConfigError);
  EXPECT_THROW(parse_terrain("stairs:-0.1"), ConfigError);
  const TerrainSpec s = parse_terrain("stairs:0.1:0.25");
  EXPECT_EQ(s.rise, 0.1);
  EXPECT_EQ(s.run, 0.25);
}

TEST(TerrainCsv, FlatSpanHas1001Rows) {
  std::ostringstream os;
  write_terrain_csv(os, TerrainSpec{}, 10.0, 0.01);
  const auto rows = parse_csv(os.str());
  ASSERT_EQ(rows.size(), 1001u);
  for (const auto& [x, z] : rows) EXPECT_EQ(z, 0.0);
  EXPECT_NEAR(rows.back().first, 10.0, 1e-12);
}

TEST(TerrainCsv, StairHeightsAreMultiplesOfRise) {
  std::ostringstream os;
  write_terrain_csv(os, parse_terrain("stairs"), 10.0, 0.01);
  std::set<long> levels;
  for (const auto& [x, z] : parse_csv(os.str())) {
    const double k = z / 0.15;
    EXPECT_NEAR(k, std::round(k), 1e-12) << "x=" << x;
    levels.insert(std::lround(k));
  }
  EXPECT_GT(levels.size(), 20u);
}

}  // namespace
}  // namespace gaitevo
