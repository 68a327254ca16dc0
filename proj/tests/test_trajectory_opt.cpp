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

#include "gaitevo/sim.hpp"
#include "gaitevo/trajectory_opt.hpp"
#include "support/landscape.hpp"

namespace gaitevo {
namespace {

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

FootTrajectory uniform_trajectory(const std::vector<Vec2>& pts) {
  FootTrajectory t;
  for (auto& leg : t.legs) leg = pts;
  return t;
}

TEST(Waypoints, DefaultShapeIsReachableClosedLoop) {
  const FootTrajectory t = default_trajectory();
  ASSERT_EQ(t.size(), 8);
  t.validate(LegGeometry{});
  EXPECT_EQ(t.legs[0][0], Vec2(0.03, -0.25));
  EXPECT_EQ(t.legs[0][4], Vec2(-0.03, -0.25));
  EXPECT_NEAR(t.legs[0][6].y(), -0.25 + 0.03, 1e-15);
  EXPECT_THROW(default_trajectory({5, 0.03, 0.03, 0.25}), std::invalid_argument);
}

TEST(Waypoints, SamplingSameCountIsIdentity) {
  const FootTrajectory t = default_trajectory();
  EXPECT_EQ(sample_waypoints(t, 8), t);
}

TEST(Waypoints, CircleSampledAtQuarters) {
  const double r = 0.1;
  std::vector<Vec2> circle;
  for (int i = 0; i < 64; ++i) {
    const double a = 2.0 * kPi * i / 64;
    circle.push_back({r * std::cos(a), -0.25 + r * std::sin(a)});
  }
  const FootTrajectory s = sample_waypoints(uniform_trajectory(circle), 4);
  for (int i = 0; i < 4; ++i) {
    const double a = 2.0 * kPi * i / 4;
    EXPECT_LT((s.legs[0][i] - Vec2(r * std::cos(a), -0.25 + r * std::sin(a))).norm(), 1e-6);
  }
}

TEST(Waypoints, ResampledPointsLieOnSegments) {
  const std::vector<Vec2> poly{{0.05, -0.3}, {-0.05, -0.3}, {-0.02, -0.22}, {0.04, -0.25}, {0.06, -0.27}};
  const FootTrajectory s = sample_waypoints(uniform_trajectory(poly), 8);
  for (const Vec2& p : s.legs[2]) {
    double best = 1e9;
    for (std::size_t i = 0; i < poly.size(); ++i) best = std::min(best, segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
    EXPECT_LT(best, 1e-9);
  }
}

TEST(Genome, ZeroGenomeIsIdentity) {
  const FootTrajectory t = default_trajectory();
  EXPECT_EQ(apply_genome(t, Genome::zeros(8, GenomeMode::Shared)), t);
  EXPECT_EQ(apply_genome(t, Genome::zeros(8, GenomeMode::PerLeg)), t);
  EXPECT_THROW(apply_genome(t, Genome::zeros(7, GenomeMode::Shared)), std::invalid_argument);
}

TEST(Genome, SingleShiftMovesOneWaypoint) {
  const FootTrajectory t = default_trajectory();
  Genome g = Genome::zeros(8, GenomeMode::Shared);
  g.v[3] = {0.01, 0.0};
  const FootTrajectory out = apply_genome(t, g);
  for (int l = 0; l < kLegs; ++l) {
    for (int i = 0; i < 8; ++i) {
      EXPECT_EQ(out.legs[l][i], i == 3 ? Vec2(t.legs[l][i] + Vec2(0.01, 0.0)) : t.legs[l][i]);
    }
  }
  Genome per = Genome::zeros(8, GenomeMode::PerLeg);
  per.v[2 * 8 + 5] = {0.0, 0.01};
  const FootTrajectory o2 = apply_genome(t, per);
  EXPECT_EQ(o2.legs[2][5], Vec2(t.legs[2][5] + Vec2(0.0, 0.01)));
  EXPECT_EQ(o2.legs[1][5], t.legs[1][5]);
}

TEST(Genome, RepairLandsOnBoundaryAlongRay) {
  const double reach = 0.4;
  Rng rng(3);
  for (int n = 0; n < 200; ++n) {
    const Vec2 p(uniform(rng, -0.1, 0.1), uniform(rng, -0.35, -0.15));
    const Vec2 v(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.0));
    const Vec2 q = repair_waypoint(p, v, reach);
    if ((p + v).norm() <= reach) {
      EXPECT_EQ(q, p + v);
      continue;
    }
    // Bisection along the ray for the boundary crossing.
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((p + mid * v).norm() <= reach ? lo : hi) = mid;
    }
    EXPECT_LT((q - (p + lo * v)).norm(), 1e-9);
    EXPECT_NEAR(q.norm(), reach, 1e-9);
  }
}

std::vector<Scored> population(Rng& rng, int n, int k) {
  std::vector<Scored> pop;
  for (int i = 0; i < n; ++i) {
    Genome g{std::vector<Vec2>(k)};
    for (Vec2& x : g.v) x = {uniform(rng, -0.02, 0.02), uniform(rng, -0.02, 0.02)};
    pop.push_back({g, uniform(rng, -10.0, 0.0)});
  }
  return pop;
}

TEST(Ga, DegenerateOperatorsCopyParents) {
  Rng rng(4);
  const auto pop = population(rng, 10, 8);
  GaParams p;
  p.crossover = 0.0;
  p.sigma = 0.0;
  const auto kids = ga_generation(pop, 25, p, rng);
  ASSERT_EQ(kids.size(), 25u);
  EXPECT_EQ(kids[0], best_of(pop).genome);
  for (const Genome& k : kids) {
    bool found = false;
    for (const Scored& s : pop) found = found || s.genome == k;
    EXPECT_TRUE(found);
  }
}

TEST(Ga, IdenticalPopulationStaysIdentical) {
  Rng rng(5);
  Genome g{std::vector<Vec2>(8, Vec2(0.01, -0.02))};
  std::vector<Scored> pop(6, Scored{g, -1.0});
  GaParams p;
  p.sigma = 0.0;
  for (const Genome& k : ga_generation(pop, 12, p, rng)) EXPECT_EQ(k, g);
}

TEST(Ga, DeterministicForSeed) {
  Rng a(6), b(6), data(7);
  const auto pop = population(data, 10, 8);
  EXPECT_EQ(ga_generation(pop, 40, GaParams{}, a), ga_generation(pop, 40, GaParams{}, b));
}

TEST(Candidates, FirstGenerationStartsFromZero) {
  Rng rng(8);
  for (CandidateRule rule : {CandidateRule::Genetic, CandidateRule::Uniform, CandidateRule::Normal}) {
    const auto c = next_candidates(rule, {}, 10, 8, GaParams{}, rng);
    ASSERT_EQ(c.size(), 10u);
    EXPECT_EQ(c[0], Genome::zeros(8, GenomeMode::Shared));
  }
  const auto u = next_candidates(CandidateRule::Uniform, {}, 50, 8, GaParams{}, rng);
  for (std::size_t i = 1; i < u.size(); ++i) {
    for (const Vec2& x : u[i].v) {
      EXPECT_GE(x.minCoeff(), 0.0);
      EXPECT_LE(x.maxCoeff(), 0.01);
    }
  }
}

TEST(Candidates, SamplingRulesKeepIncumbent) {
  Rng rng(9);
  const auto pop = population(rng, 10, 8);
  const auto c = next_candidates(CandidateRule::Normal, pop, 10, 8, GaParams{}, rng);
  EXPECT_EQ(c[0], best_of(pop).genome);
}

// Minimal environment for ec_evaluate.
struct StubEnv {
  double reward = 0.0;
  int fall_at = -1;
  int t = 0;
  int resets = 0;
  struct Info {
    bool fell = false;
  };
  struct Result {
    VecX observation;
    double reward;
    bool done;
    Info info;
  };
  VecX reset() {
    t = 0;
    ++resets;
    return VecX::Zero(3);
  }
  Result step(const Vec12& target) {
    EXPECT_TRUE(target.allFinite());
    ++t;
    const bool fell = t == fall_at;
    return {VecX::Constant(3, t), reward, fell, {fell}};
  }
};

struct Fixture {
  RhythmGenerator gen;
  RbfnParams shape = make_rbfn(gen);
  FootTrajectory base = default_trajectory();
};

TEST(EcEvaluate, ConstantRewardStubs) {
  Fixture f;
  for (double r : {0.0, 1.0}) {
    StubEnv env{r};
    int pushed = 0;
    const FitnessRecord rec = ec_evaluate(
        Genome::zeros(8, GenomeMode::Shared), f.base, f.gen, f.shape, env, [](const VecX&) { return VecX::Zero(12); },
        [&](const VecX&, const VecX&, double, const VecX&, bool) { ++pushed; }, 300, 0.02);
    EXPECT_EQ(rec.fitness, 300.0 * r);
    EXPECT_EQ(pushed, 300);
    EXPECT_EQ(rec.steps, 300);
    EXPECT_TRUE(rec.params.has_value());
  }
}

TEST(EcEvaluate, FallEndsAccumulation) {
  Fixture f;
  StubEnv env{1.0, 37};
  int pushed = 0;
  bool last_terminal = false;
  const FitnessRecord rec = ec_evaluate(
      Genome::zeros(8, GenomeMode::Shared), f.base, f.gen, f.shape, env, [](const VecX&) { return VecX::Zero(12); },
      [&](const VecX&, const VecX&, double, const VecX&, bool term) {
        ++pushed;
        last_terminal = term;
      },
      300, 0.02);
  EXPECT_EQ(rec.fitness, 37.0);
  EXPECT_EQ(pushed, 37);
  EXPECT_TRUE(last_terminal);
}

TEST(EcEvaluate, FitFailureIsSentinelWithoutRollout) {
  Fixture f;
  StubEnv env{1.0};
  TrajectoryFit strict;
  strict.settings.delta = 1e-12;
  strict.settings.max_solves = 2;
  int pushed = 0;
  const FitnessRecord rec = ec_evaluate(
      Genome::zeros(8, GenomeMode::Shared), f.base, f.gen, f.shape, env, [](const VecX&) { return VecX::Zero(12); },
      [&](const VecX&, const VecX&, double, const VecX&, bool) { ++pushed; }, 300, 0.02, strict);
  EXPECT_TRUE(std::isinf(rec.fitness));
  EXPECT_LT(rec.fitness, 0.0);
  EXPECT_EQ(pushed, 0);
  EXPECT_EQ(env.resets, 0);
  EXPECT_FALSE(rec.params.has_value());
}

TEST(EcEvaluate, DefaultTrajectoryFitsWithinTolerance) {
  Fixture f;
  const RbfnParams p = fit_trajectory(f.base, f.gen, f.shape);
  // Dense check between fit samples as well as at them.
  const auto dense = reference_targets(f.base, f.gen, 400);
  EXPECT_LE(fit_residual(dense, p), 0.05);
  EXPECT_LT(p.weights.cwiseAbs().maxCoeff(), 10.0);
}

TEST(EcEvaluate, ZeroGenomeMatchesPlainRollout) {
  Fixture f;
  QuadrupedEnv env;
  EcConfig cfg;
  cfg.generations = 1;
  cfg.candidates = 1;
  cfg.rollout_steps = 100;
  Rng rng(10);
  auto eval = [&](const Genome& g) {
    return ec_evaluate(g, f.base, f.gen, f.shape, env, [](const VecX&) { return VecX::Zero(12); },
                       [](const VecX&, const VecX&, double, const VecX&, bool) {}, cfg.rollout_steps, 0.02);
  };
  const OptimizeResult res = optimize_reference(8, cfg, rng, eval);
  EXPECT_EQ(res.best.genome, Genome::zeros(8, GenomeMode::Shared));
  EXPECT_EQ(res.best.trajectory, f.base);

  const RbfnParams p = fit_trajectory(f.base, f.gen, f.shape);
  QuadrupedEnv plain;
  plain.reset();
  double total = 0.0;
  for (int t = 0; t < 100; ++t) {
    const StepResult r = plain.step(forward(f.gen.at(t * 0.02), p));
    total += r.reward;
    if (r.done) break;
  }
  EXPECT_EQ(res.best.fitness, total);
  EXPECT_TRUE(std::isfinite(total));
}

TEST(Optimize, ConvergesTowardZeroOnNormBowl) {
  EcConfig cfg;
  cfg.generations = 15;
  cfg.candidates = 20;
  Rng rng(11);
  // Start away from the optimum: the bowl is centred on zero offset but the
  // evaluated genome is shifted, so generation 1's zero genome is not optimal.
  testing::StubLandscape land;
  land.optimum.v.assign(8, Vec2::Zero());
  Genome shift{std::vector<Vec2>(8, Vec2(0.03, -0.02))};
  auto eval = [&](const Genome& g) {
    Genome moved = g;
    for (int i = 0; i < g.size(); ++i) moved.v[i] += shift.v[i];
    FitnessRecord r = land(moved);
    r.genome = g;
    return r;
  };
  const OptimizeResult res = optimize_reference(8, cfg, rng, eval);
  EXPECT_TRUE(testing::non_decreasing(res.best_history));
  EXPECT_GT(res.best_history.back(), res.best_history.front());
  EXPECT_GE(res.best.fitness, eval(Genome::zeros(8, GenomeMode::Shared)).fitness);
}

TEST(Optimize, BestHistoryIsMonotoneForEveryRule) {
  for (CandidateRule rule : {CandidateRule::Genetic, CandidateRule::Uniform, CandidateRule::Normal}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      const auto land = testing::StubLandscape::random(8, rng);
      EcConfig cfg;
      cfg.rule = rule;
      const OptimizeResult res = optimize_reference(8, cfg, rng, land);
      EXPECT_TRUE(testing::non_decreasing(res.best_history));
      EXPECT_EQ(res.evaluations, cfg.generations * cfg.candidates);
      EXPECT_EQ(res.best.fitness, res.best_history.back());
    }
  }
}

TEST(Optimize, DeterministicForSeed) {
  Rng land_rng(12);
  const auto land = testing::StubLandscape::random(8, land_rng);
  Rng a(13), b(13);
  const OptimizeResult ra = optimize_reference(8, EcConfig{}, a, land);
  const OptimizeResult rb = optimize_reference(8, EcConfig{}, b, land);
  EXPECT_EQ(ra.best.genome, rb.best.genome);
  EXPECT_EQ(ra.best.fitness, rb.best.fitness);
}

TEST(Optimize, AllFailuresReportNoImprovement) {
  Rng rng(14);
  EcConfig cfg;
  cfg.generations = 2;
  cfg.candidates = 3;
  const OptimizeResult res = optimize_reference(8, cfg, rng, [](const Genome& g) {
    FitnessRecord r;
    r.genome = g;
    return r;
  });
  EXPECT_FALSE(res.improved);
  EXPECT_EQ(res.evaluations, 6);
}

TEST(Optimize, ValidatesConfig) {
  EcConfig cfg;
  cfg.generations = 0;
  Rng rng(1);
  EXPECT_THROW(optimize_reference(8, cfg, rng, testing::StubLandscape{}), ConfigError);
}

}  // namespace
}  // namespace gaitevo
