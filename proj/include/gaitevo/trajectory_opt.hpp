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

// Reference trajectory optimization. A foot trajectory is a closed polygon of
// k sagittal-plane waypoints per leg indexed uniformly over gait phase. A
// genome adds one offset vector per waypoint; candidates are scored by a
// fixed-policy rollout and the best candidate's RBFN fit is installed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gaitevo/common.hpp"
#include "gaitevo/cpg.hpp"
#include "gaitevo/kinematics.hpp"
#include "gaitevo/rbfn.hpp"

namespace gaitevo {

/// Waypoints (x, z) in each leg's hip frame, phase i / k for waypoint i.
struct FootTrajectory {
  std::array<std::vector<Vec2>, kLegs> legs;

  int size() const { return static_cast<int>(legs[0].size()); }

  bool operator==(const FootTrajectory& o) const {
    for (int l = 0; l < kLegs; ++l) {
      if (legs[l].size() != o.legs[l].size()) return false;
      for (std::size_t i = 0; i < legs[l].size(); ++i) {
        if (legs[l][i] != o.legs[l][i]) return false;
      }
    }
    return true;
  }

  void validate(const LegGeometry& g) const {
    const std::size_t k = legs[0].size();
    if (k < 4) throw std::invalid_argument("FootTrajectory: need at least 4 waypoints");
    for (const auto& leg : legs) {
      if (leg.size() != k) throw std::invalid_argument("FootTrajectory: legs differ in length");
      for (const Vec2& p : leg) {
        if (!p.allFinite() || p.norm() > g.max_reach() + 1e-9) {
          throw OutOfWorkspaceError("FootTrajectory: unreachable waypoint", p.norm() - g.max_reach());
        }
      }
    }
  }
};

struct TrajectoryShape {
  int waypoints = 8;
  double stride = 0.03;   // half stride, m
  double lift = 0.03;     // swing apex above stance, m
  double height = 0.25;   // stance depth below the hip, m
};

/// Stance (first half of the phase) sweeps the foot backward along the
/// ground line; swing returns it along a raised sine arc.
inline FootTrajectory default_trajectory(const TrajectoryShape& shape = {}) {
  const int k = shape.waypoints;
  if (k < 4 || k % 2 != 0) throw std::invalid_argument("default_trajectory: k must be even and >= 4");
  std::vector<Vec2> pts(k);
  const int half = k / 2;
  for (int i = 0; i < k; ++i) {
    if (i <= half) {
      const double s = static_cast<double>(i) / half;
      pts[i] = {shape.stride * (1.0 - 2.0 * s), -shape.height};
    } else {
      const double s = static_cast<double>(i - half) / half;
      pts[i] = {shape.stride * (2.0 * s - 1.0), -shape.height + shape.lift * std::sin(kPi * s)};
    }
  }
  FootTrajectory t;
  for (auto& leg : t.legs) leg = pts;
  return t;
}

/// Point on the closed polygon at phase in [0, 1).
inline Vec2 trajectory_point(const std::vector<Vec2>& pts, double phase) {
  const int k = static_cast<int>(pts.size());
  double u = (phase - std::floor(phase)) * k;
  int i = static_cast<int>(std::floor(u));
  if (i >= k) i = k - 1;
  const double s = u - i;
  if (s == 0.0) return pts[i];
  return (1.0 - s) * pts[i] + s * pts[(i + 1) % k];
}

/// k phase-uniform samples per leg. Identity when k equals the stored count.
inline FootTrajectory sample_waypoints(const FootTrajectory& traj, int k) {
  if (k < 4) throw std::invalid_argument("sample_waypoints: k must be >= 4");
  if (k == traj.size()) return traj;
  FootTrajectory out;
  for (int l = 0; l < kLegs; ++l) {
    out.legs[l].resize(k);
    for (int i = 0; i < k; ++i) out.legs[l][i] = trajectory_point(traj.legs[l], static_cast<double>(i) / k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Genomes

enum class GenomeMode { Shared, PerLeg };

/// Offset vectors: k entries in shared mode, 4k (leg-major) in per-leg mode.
struct Genome {
  std::vector<Vec2> v;

  static Genome zeros(int k, GenomeMode mode) {
    return {std::vector<Vec2>(mode == GenomeMode::Shared ? k : kLegs * k, Vec2::Zero())};
  }
  int size() const { return static_cast<int>(v.size()); }
  double squared_norm() const {
    double s = 0.0;
    for (const Vec2& x : v) s += x.squaredNorm();
    return s;
  }
  bool operator==(const Genome&) const = default;
};

/// p + v, pulled back along the ray from p to the reach circle when p + v
/// leaves it. A start point outside the circle is projected radially.
inline Vec2 repair_waypoint(const Vec2& p, const Vec2& v, double reach) {
  const Vec2 q = p + v;
  if (q.norm() <= reach) return q;
  if (p.norm() >= reach || v.squaredNorm() == 0.0) return q * (reach / q.norm());
  // Largest t in [0, 1] with |p + t v| = reach.
  const double a = v.squaredNorm();
  const double b = 2.0 * p.dot(v);
  const double c = p.squaredNorm() - reach * reach;
  const double t = (-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  return p + std::clamp(t, 0.0, 1.0) * v;
}

inline FootTrajectory apply_genome(const FootTrajectory& base, const Genome& g,
                                   const LegGeometry& geom = {}) {
  const int k = base.size();
  const bool shared = g.size() == k;
  if (!shared && g.size() != kLegs * k) throw std::invalid_argument("apply_genome: genome size mismatch");
  FootTrajectory out = base;
  for (int l = 0; l < kLegs; ++l) {
    for (int i = 0; i < k; ++i) {
      const Vec2& d = g.v[shared ? i : l * k + i];
      out.legs[l][i] = repair_waypoint(base.legs[l][i], d, geom.max_reach());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory to RBFN

/// Joint targets at `samples` phase-uniform times over one period. Each leg
/// reads its own phase on its polygon.
inline std::vector<FitTarget> reference_targets(const FootTrajectory& traj, const RhythmGenerator& gen,
                                                int samples, const LegGeometry& geom = {}) {
  const double T = gen.config().period;
  std::vector<FitTarget> out(samples);
  for (int i = 0; i < samples; ++i) {
    const double t = i * T / samples;
    out[i].rho = gen.at(t);
    for (int l = 0; l < kLegs; ++l) {
      LegGeometry g = geom;
      g.left = is_left(l);
      const Vec2 p = trajectory_point(traj.legs[l], gen.leg_phase(l, t));
      out[i].joints.segment<3>(3 * l) = leg_ik({p.x(), g.side() * g.hip_len, p.y()}, g);
    }
  }
  return out;
}

/// Tolerance and sampling for turning a trajectory into RBFN weights. The
/// fit is a least-squares fit over `samples_per_neuron * H` phase samples, so
/// the reference is controlled between samples as well as at them.
struct TrajectoryFit {
  int samples_per_neuron = 4;
  FitSettings settings{0.05, 1e-8, 100};
};

inline RbfnParams fit_trajectory(const FootTrajectory& traj, const RhythmGenerator& gen,
                                 const RbfnParams& shape, const TrajectoryFit& tf = {},
                                 const LegGeometry& geom = {}) {
  const int samples = std::max(1, tf.samples_per_neuron) * shape.neurons();
  return fit(reference_targets(traj, gen, samples, geom), tf.settings, shape);
}

// ---------------------------------------------------------------------------
// Candidate generation

enum class CandidateRule { Genetic, Uniform, Normal };

struct GaParams {
  int tournament = 3;
  double crossover = 0.5;  // per-waypoint swap probability; 0 disables
  double mutation = 0.2;   // per-coordinate probability
  double sigma = 0.01;     // m
  double uniform_hi = 0.01;  // Uniform rule samples [0, uniform_hi]
  double normal_sigma = 0.01;
};

struct Scored {
  Genome genome;
  double fitness = -std::numeric_limits<double>::infinity();
};

inline const Scored& best_of(const std::vector<Scored>& pop) {
  return *std::max_element(pop.begin(), pop.end(),
                           [](const Scored& a, const Scored& b) { return a.fitness < b.fitness; });
}

/// Next generation: the elite unmodified, then tournament-selected parents
/// recombined per waypoint and mutated per coordinate.
inline std::vector<Genome> ga_generation(const std::vector<Scored>& pop, int n, const GaParams& p, Rng& rng) {
  if (pop.empty()) throw std::invalid_argument("ga_generation: empty population");
  auto pick = [&]() -> const Genome& {
    std::size_t best = std::uniform_int_distribution<std::size_t>(0, pop.size() - 1)(rng);
    for (int r = 1; r < p.tournament; ++r) {
      const std::size_t c = std::uniform_int_distribution<std::size_t>(0, pop.size() - 1)(rng);
      if (pop[c].fitness > pop[best].fitness) best = c;
    }
    return pop[best].genome;
  };
  std::vector<Genome> out;
  out.reserve(n);
  if (n > 0) out.push_back(best_of(pop).genome);
  while (static_cast<int>(out.size()) < n) {
    Genome child = pick();
    if (p.crossover > 0.0) {
      const Genome& other = pick();
      for (int i = 0; i < child.size(); ++i) {
        if (uniform(rng, 0.0, 1.0) < p.crossover) child.v[i] = other.v[i];
      }
    }
    for (Vec2& x : child.v) {
      for (int d = 0; d < 2; ++d) {
        if (uniform(rng, 0.0, 1.0) < p.mutation) x[d] += p.sigma * standard_normal(rng);
      }
    }
    out.push_back(std::move(child));
  }
  return out;
}

/// Fresh random offsets for the sampling baselines.
inline Genome sample_genome(CandidateRule rule, int size, const GaParams& p, Rng& rng) {
  Genome g{std::vector<Vec2>(size)};
  for (Vec2& x : g.v) {
    for (int d = 0; d < 2; ++d) {
      x[d] = rule == CandidateRule::Uniform ? uniform(rng, 0.0, p.uniform_hi)
                                            : p.normal_sigma * standard_normal(rng);
    }
  }
  return g;
}

/// Candidates for one generation. The first generation is the zero genome
/// plus random offsets; later GA generations evolve the scored population,
/// while the sampling rules keep the incumbent and redraw the rest.
inline std::vector<Genome> next_candidates(CandidateRule rule, const std::vector<Scored>& scored,
                                           int n, int genome_size, const GaParams& p, Rng& rng) {
  std::vector<Genome> out;
  if (scored.empty() || rule != CandidateRule::Genetic) {
    out.push_back(scored.empty() ? Genome{std::vector<Vec2>(genome_size, Vec2::Zero())}
                                 : best_of(scored).genome);
    while (static_cast<int>(out.size()) < n) {
      if (rule == CandidateRule::Genetic) {
        Genome g{std::vector<Vec2>(genome_size)};
        for (Vec2& x : g.v) x = {p.sigma * standard_normal(rng), p.sigma * standard_normal(rng)};
        out.push_back(std::move(g));
      } else {
        out.push_back(sample_genome(rule, genome_size, p, rng));
      }
    }
    out.resize(n);
    return out;
  }
  return ga_generation(scored, n, p, rng);
}

// ---------------------------------------------------------------------------
// Evaluation and the outer loop

struct FitnessRecord {
  Genome genome;
  double fitness = -std::numeric_limits<double>::infinity();
  std::optional<RbfnParams> params;  // empty when fitting failed
  FootTrajectory trajectory;
  int steps = 0;  // executed rollout steps
};

struct EcConfig {
  int generations = 10;  // N_EC_episode
  int candidates = 40;   // N
  int rollout_steps = 300;  // N_EC_step
  GenomeMode genome_mode = GenomeMode::Shared;
  CandidateRule rule = CandidateRule::Genetic;
  GaParams ga{};
  TrajectoryFit fit{};

  void validate() const {
    if (generations < 1) throw ConfigError("ec.generations", "must be >= 1");
    if (candidates < 1) throw ConfigError("ec.candidates", "must be >= 1");
    if (rollout_steps < 1) throw ConfigError("ec.rollout_steps", "must be >= 1");
    if (ga.tournament < 1) throw ConfigError("ec.tournament", "must be >= 1");
    if (!(ga.sigma >= 0.0)) throw ConfigError("ec.sigma", "must be >= 0");
  }
};

/// Rollout of one candidate with the policy held fixed (the env is reset to
/// its canonical start). `env` provides reset() -> obs and step(targets) ->
/// {observation, reward, done, info.fell}; `policy(obs)` returns the residual
/// and `sink(obs, action, reward, next_obs, terminal)` receives transitions.
template <typename Env, typename Policy, typename Sink>
FitnessRecord ec_evaluate(const Genome& genome, const FootTrajectory& base, const RhythmGenerator& gen,
                          const RbfnParams& shape, Env& env, Policy&& policy, Sink&& sink,
                          int rollout_steps, double control_dt, const TrajectoryFit& fit_settings = {},
                          const LegGeometry& geom = {}) {
  FitnessRecord rec;
  rec.genome = genome;
  rec.trajectory = apply_genome(base, genome, geom);
  try {
    rec.params = fit_trajectory(rec.trajectory, gen, shape, fit_settings, geom);
  } catch (const NonConvergenceError&) {
    return rec;
  } catch (const OutOfWorkspaceError&) {
    return rec;
  }
  double total = 0.0;
  VecX obs = env.reset();
  for (int t = 0; t < rollout_steps; ++t) {
    const VecX delta = policy(obs);
    const Vec12 target = forward(gen.at(t * control_dt), *rec.params) + delta;
    const auto res = env.step(target);
    total += res.reward;
    ++rec.steps;
    sink(obs, delta, res.reward, res.observation, res.info.fell);
    if (res.done) break;
    obs = res.observation;
  }
  rec.fitness = total;
  return rec;
}

struct OptimizeResult {
  FitnessRecord best;
  std::vector<double> best_history;  // running best after each generation
  std::vector<double> generation_mean;  // mean finite fitness per generation
  int evaluations = 0;
  int total_steps = 0;
  bool improved = false;  // some candidate fitted successfully
};

/// Runs `generations` rounds of `candidates` evaluations and returns the best
/// record ever seen. `evaluate(genome)` returns a FitnessRecord.
template <typename Evaluate>
OptimizeResult optimize_reference(int genome_size, const EcConfig& cfg, Rng& rng, Evaluate&& evaluate,
                                  const std::function<void(int, const std::vector<Scored>&)>& on_generation = {}) {
  cfg.validate();
  OptimizeResult out;
  std::vector<Scored> scored;
  double running = -std::numeric_limits<double>::infinity();
  for (int gen = 0; gen < cfg.generations; ++gen) {
    const auto genomes = next_candidates(cfg.rule, scored, cfg.candidates, genome_size, cfg.ga, rng);
    std::vector<Scored> next;
    double sum = 0.0;
    int finite = 0;
    for (const Genome& g : genomes) {
      FitnessRecord rec = evaluate(g);
      ++out.evaluations;
      out.total_steps += rec.steps;
      if (std::isfinite(rec.fitness)) {
        sum += rec.fitness;
        ++finite;
        if (!out.improved || rec.fitness > out.best.fitness) {
          out.best = rec;
          out.improved = true;
        }
      }
      next.push_back({g, rec.fitness});
    }
    running = std::max(running, out.improved ? out.best.fitness : running);
    out.best_history.push_back(running);
    out.generation_mean.push_back(finite > 0 ? sum / finite : -std::numeric_limits<double>::infinity());
    if (on_generation) on_generation(gen, next);
    scored = std::move(next);
  }
  return out;
}

}  // namespace gaitevo
