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

// Alternating training loop. RL phases collect episodes with the control
// a(t) = a_ref(t) + da(t) and take SAC gradient steps while the RBFN is held
// fixed; at step thresholds the loop switches to a reference-optimization
// phase that holds the policy fixed. Both phases write to one replay buffer.
//
// Rounds are episode-synchronous: each of K workers collects one episode
// from the same parameter snapshot, transitions enter the buffer in worker
// order, then every gradient step averages one minibatch gradient per worker.
// K = 1 is the serial loop.

#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "gaitevo/checkpoint.hpp"
#include "gaitevo/common.hpp"
#include "gaitevo/cpg.hpp"
#include "gaitevo/rbfn.hpp"
#include "gaitevo/sac.hpp"
#include "gaitevo/sim.hpp"
#include "gaitevo/trajectory_opt.hpp"

namespace gaitevo {

enum class ReferenceMode { Fixed, Genetic, Uniform, Normal };

inline std::string to_string(ReferenceMode m) {
  switch (m) {
    case ReferenceMode::Fixed: return "fixed";
    case ReferenceMode::Genetic: return "genetic";
    case ReferenceMode::Uniform: return "uniform";
    case ReferenceMode::Normal: return "normal";
  }
  return "?";
}

inline ReferenceMode parse_reference_mode(const std::string& s) {
  for (auto m : {ReferenceMode::Fixed, ReferenceMode::Genetic, ReferenceMode::Uniform, ReferenceMode::Normal}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("reference", "unknown reference mode '" + s + "'");
}

struct GroupPreset {
  ObservationMode observation;
  ReferenceMode reference;
};

/// Groups 0-5: observation size crossed with how the reference is updated.
inline GroupPreset group_preset(int group) {
  switch (group) {
    case 0: return {ObservationMode::Partial, ReferenceMode::Fixed};
    case 1: return {ObservationMode::Full, ReferenceMode::Fixed};
    case 2: return {ObservationMode::Full, ReferenceMode::Genetic};
    case 3: return {ObservationMode::Full, ReferenceMode::Uniform};
    case 4: return {ObservationMode::Full, ReferenceMode::Normal};
    case 5: return {ObservationMode::Partial, ReferenceMode::Genetic};
  }
  throw ConfigError("group", "must be in 0..5");
}

struct TrainConfig {
  std::uint64_t seed = 1;
  long max_steps = 1'000'000;  // RL-phase environment steps
  long rag_interval = 50'000;
  long first_rag_at = 10'000;
  long initial_steps = 10'000;  // no gradient steps before this many RL steps
  int workers = 1;
  int updates_per_step = 1;
  long checkpoint_interval = 0;  // RL steps between checkpoints; 0 = final only
  ReferenceMode reference = ReferenceMode::Genetic;
  SimConfig sim{};
  RobotModel robot{};
  sac::SacConfig sac{};
  EcConfig ec{};
  TrajectoryShape shape{};
  int rbfn_neurons = 20;
  double rbfn_sigma_sq = 0.04;

  void apply_group(int group) {
    const GroupPreset p = group_preset(group);
    sim.observation = p.observation;
    reference = p.reference;
  }

  void validate() const {
    if (max_steps < 0) throw ConfigError("training.max_steps", "must be >= 0");
    if (rag_interval <= 0) throw ConfigError("training.rag_interval", "must be > 0");
    if (initial_steps < 0) throw ConfigError("training.initial_steps", "must be >= 0");
    if (first_rag_at < initial_steps) {
      throw ConfigError("training.first_rag_at", "must be >= training.initial_steps");
    }
    if (workers < 1) throw ConfigError("training.workers", "must be >= 1");
    if (updates_per_step < 0) throw ConfigError("training.updates_per_step", "must be >= 0");
    if (checkpoint_interval < 0) throw ConfigError("training.checkpoint_interval", "must be >= 0");
    if (sac.batch_size < 1) throw ConfigError("sac.batch_size", "must be >= 1");
    if (!(sac.action_scale > 0.0)) throw ConfigError("sac.action_scale", "must be > 0");
    if (sac.hidden.empty()) throw ConfigError("sac.hidden", "need at least one hidden layer");
    for (int h : sac.hidden) {
      if (h < 1) throw ConfigError("sac.hidden", "layer sizes must be >= 1");
    }
    if (rbfn_neurons < 2) throw ConfigError("rbfn.neurons", "must be >= 2");
    if (!(rbfn_sigma_sq > 0.0)) throw ConfigError("rbfn.sigma_sq", "must be > 0");
    if (shape.waypoints < 4 || shape.waypoints % 2 != 0) {
      throw ConfigError("trajectory.waypoints", "must be even and >= 4");
    }
    sim.validate();
    robot.validate();
    ec.validate();
  }
};

/// Elementwise observation scaling applied inside the agent.
inline VecX default_observation_scale(ObservationMode mode) {
  VecX s = VecX::Ones(observation_dim(mode));
  using L = ObservationLayout;
  s.segment<12>(L::kJointVelocity).setConstant(0.1);
  s.segment<3>(L::kPoseRate).setConstant(0.5);
  s.segment<12>(L::kContactForce).setConstant(0.01);
  if (mode == ObservationMode::Full) s.segment<12>(L::kFootPosition).setConstant(4.0);
  return s;
}

inline CandidateRule candidate_rule(ReferenceMode m) {
  switch (m) {
    case ReferenceMode::Uniform: return CandidateRule::Uniform;
    case ReferenceMode::Normal: return CandidateRule::Normal;
    default: return CandidateRule::Genetic;
  }
}

// ---------------------------------------------------------------------------
// Records

struct StepRecord {
  long step = 0;  // global RL step index, 0-based
  int worker = 0;
  long episode = 0;
  int episode_step = 0;
  double reward = 0.0;
  RewardBreakdown breakdown;
  double power = 0.0;
  std::optional<double> wsm;
  Vec3 position = Vec3::Zero();
};

struct EpisodeRecord {
  long episode = 0;
  int worker = 0;
  long end_step = 0;  // global RL steps after this episode
  int length = 0;
  double total_reward = 0.0;
  bool fell = false;
  bool diverged = false;
};

enum class Phase { RL, RAG };

struct PhaseRecord {
  Phase kind = Phase::RL;
  long start_step = 0;
  long end_step = 0;
  std::uint64_t policy_before = 0, policy_after = 0;
  std::uint64_t rbfn_before = 0, rbfn_after = 0;
  std::uint64_t buffer_before = 0, buffer_after = 0;
};

struct RagRecord {
  long at_step = 0;
  long episode = 0;
  double best_fitness = 0.0;
  std::vector<double> best_history;
  std::vector<double> generation_mean;
  int evaluations = 0;
  long rollout_steps = 0;
  bool improved = false;
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpisodeRecord&)> on_episode;
  std::function<void(const RagRecord&)> on_rag;
  std::function<void(long at_step, int generation, const std::vector<Scored>&)> on_generation;
  std::function<void(const sac::GradientRound&)> on_gradient;
  std::function<void(const sac::UpdateStats&)> on_update;
  std::function<void(const Checkpoint&, long step, bool final)> on_checkpoint;
};

struct TrainState {
  TrainConfig cfg;
  long rl_steps = 0;
  long episodes = 0;
  long diverged = 0;
  long rag_rollout_steps = 0;
  long gradient_rounds = 0;
  long next_rag_at = 0;
  Phase phase = Phase::RL;
  sac::SacAgent agent;
  RbfnParams rbfn;
  FootTrajectory trajectory;
  std::unique_ptr<sac::ReplayBuffer> buffer;
  std::vector<Rng> env_rngs;     // one per worker
  std::vector<Rng> policy_rngs;  // one per worker
  Rng ga_rng;
  std::vector<double> episode_returns;
  std::vector<PhaseRecord> phases;
  std::vector<RagRecord> rags;
};

// ---------------------------------------------------------------------------

/// Runs job(0..n-1) on n threads and rethrows the first failure.
inline void run_threads(int n, const std::function<void(int)>& job) {
  if (n == 1) {
    job(0);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> threads;
    threads.reserve(n);
    for (int k = 0; k < n; ++k) {
      threads.emplace_back([&, k] {
        try {
          job(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline TrainState make_train_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.cfg = cfg;
  const int obs_dim = observation_dim(cfg.sim.observation);
  Rng init = make_stream(cfg.seed, "init");
  s.agent = sac::SacAgent(obs_dim, kJoints, cfg.sac, init);
  s.agent.obs_scale = default_observation_scale(cfg.sim.observation);
  s.buffer = std::make_unique<sac::ReplayBuffer>(obs_dim, kJoints, cfg.sac.buffer_capacity);
  for (int k = 0; k < cfg.workers; ++k) {
    s.env_rngs.push_back(make_stream(cfg.seed, "env", k));
    s.policy_rngs.push_back(make_stream(cfg.seed, "policy", k));
  }
  s.ga_rng = make_stream(cfg.seed, "ga");
  const RhythmGenerator gen(cfg.sim.cpg);
  s.trajectory = default_trajectory(cfg.shape);
  s.rbfn = fit_trajectory(s.trajectory, gen, make_rbfn(gen, cfg.rbfn_neurons, cfg.rbfn_sigma_sq), cfg.ec.fit,
                          cfg.robot.geometry);
  s.next_rag_at = cfg.first_rag_at;
  return s;
}

inline Checkpoint make_checkpoint(const TrainState& s) {
  Checkpoint ck;
  const auto& c = s.cfg;
  ck.put_u64("meta/seed", c.seed);
  ck.put_scalar("meta/observation_dim", s.agent.obs_dim);
  ck.put_scalar("meta/action_dim", s.agent.act_dim);
  ck.put_scalar("meta/action_scale", s.agent.cfg.action_scale);
  ck.put("meta/hidden", {static_cast<std::uint64_t>(c.sac.hidden.size())},
         std::vector<double>(c.sac.hidden.begin(), c.sac.hidden.end()));
  ck.put_scalar("counters/rl_steps", static_cast<double>(s.rl_steps));
  ck.put_scalar("counters/episodes", static_cast<double>(s.episodes));
  ck.put_scalar("counters/rag_updates", static_cast<double>(s.rags.size()));
  ck.put_scalar("counters/gradient_rounds", static_cast<double>(s.gradient_rounds));
  ck.put_u64("counters/buffer_insertions", s.buffer->insertions());
  ck.put("agent/obs_scale", s.agent.obs_scale);
  auto net = [&](const std::string& name, const sac::Network& n) { ck.put(name + "/params", n.params()); };
  auto opt = [&](const std::string& name, const sac::Optimizer& o) {
    ck.put(name + "/adam_m", o.m);
    ck.put(name + "/adam_v", o.v);
    ck.put_scalar(name + "/adam_steps", static_cast<double>(o.steps));
  };
  net("policy", s.agent.policy);
  net("q1", s.agent.q1);
  net("q2", s.agent.q2);
  net("q1_target", s.agent.q1_target);
  net("q2_target", s.agent.q2_target);
  opt("policy", s.agent.policy_opt);
  opt("q1", s.agent.q1_opt);
  opt("q2", s.agent.q2_opt);
  ck.put("rbfn/means", MatX(s.rbfn.means));
  ck.put_scalar("rbfn/sigma_sq", s.rbfn.sigma_sq);
  ck.put("rbfn/weights", MatX(s.rbfn.weights));
  ck.put("rbfn/bias", VecX(s.rbfn.bias));
  const auto& cpg = c.sim.cpg;
  ck.put("cpg/params", {5}, {cpg.mu, cpg.alpha, cpg.period, 0.0, 0.0});
  ck.put("cpg/phase_offsets", {4},
         {cpg.phase_offsets[0], cpg.phase_offsets[1], cpg.phase_offsets[2], cpg.phase_offsets[3]});
  for (int l = 0; l < kLegs; ++l) {
    MatX w(s.trajectory.size(), 2);
    for (int i = 0; i < s.trajectory.size(); ++i) w.row(i) = s.trajectory.legs[l][i].transpose();
    ck.put("trajectory/leg" + std::to_string(l), w);
  }
  for (std::size_t k = 0; k < s.env_rngs.size(); ++k) {
    auto st = rng_state(s.env_rngs[k]);
    ck.put("rng/env/" + std::to_string(k), {st.size()}, st);
    st = rng_state(s.policy_rngs[k]);
    ck.put("rng/policy/" + std::to_string(k), {st.size()}, st);
  }
  auto st = rng_state(s.ga_rng);
  ck.put("rng/ga", {st.size()}, st);
  return ck;
}

/// Policy, reference network and rhythm settings recovered from a checkpoint.
struct LoadedController {
  sac::SacAgent agent;
  RbfnParams rbfn;
  CpgConfig cpg;
};

inline LoadedController load_controller(const Checkpoint& ck) {
  LoadedController out;
  const VecX hidden = ck.vector("meta/hidden");
  out.agent.cfg.hidden.assign(hidden.data(), hidden.data() + hidden.size());
  out.agent.cfg.action_scale = ck.scalar("meta/action_scale");
  out.agent.obs_dim = static_cast<int>(ck.scalar("meta/observation_dim"));
  out.agent.act_dim = static_cast<int>(ck.scalar("meta/action_dim"));
  out.agent.obs_scale = ck.vector("agent/obs_scale");
  std::vector<int> sizes{out.agent.obs_dim};
  for (int h : out.agent.cfg.hidden) sizes.push_back(h);
  sizes.push_back(2 * out.agent.act_dim);
  out.agent.policy = sac::Network(sizes);
  const VecX p = ck.vector("policy/params");
  if (p.size() != out.agent.policy.num_params()) throw Error("checkpoint policy size mismatch");
  out.agent.policy.params() = p;
  out.rbfn.means = ck.matrix("rbfn/means");
  out.rbfn.sigma_sq = ck.scalar("rbfn/sigma_sq");
  out.rbfn.weights = ck.matrix("rbfn/weights");
  out.rbfn.bias = ck.vector("rbfn/bias");
  out.rbfn.validate();
  const VecX cp = ck.vector("cpg/params");
  const VecX off = ck.vector("cpg/phase_offsets");
  out.cpg.mu = cp[0];
  out.cpg.alpha = cp[1];
  out.cpg.period = cp[2];
  for (int l = 0; l < kLegs; ++l) out.cpg.phase_offsets[l] = off[l];
  return out;
}

// ---------------------------------------------------------------------------

namespace detail {

struct WorkerEpisode {
  std::vector<sac::Transition> transitions;
  std::vector<StepRecord> steps;
  double total = 0.0;
  bool fell = false;
  bool diverged = false;
};

inline WorkerEpisode collect_episode(const TrainState& s, const RhythmGenerator& gen, int worker, long cap,
                                     Rng& env_rng, Rng& policy_rng) {
  WorkerEpisode out;
  QuadrupedEnv env(s.cfg.sim, s.cfg.robot);
  VecX obs = env.reset(&env_rng);
  const double dt = s.cfg.sim.control_dt;
  try {
    for (int t = 0; t < s.cfg.sim.episode_steps && t < cap; ++t) {
      const auto sample = sac::policy_sample(obs, s.agent, policy_rng);
      const Vec12 target = forward(gen.at(t * dt), s.rbfn) + sample.action;
      const StepResult res = env.step(target);
      out.transitions.push_back({obs, sample.action, res.reward, res.observation, res.info.fell});
      StepRecord rec;
      rec.worker = worker;
      rec.episode_step = t;
      rec.reward = res.reward;
      rec.breakdown = res.info.reward;
      rec.power = res.info.power;
      rec.wsm = res.info.wsm;
      rec.position = env.state().position;
      out.steps.push_back(rec);
      out.total += res.reward;
      if (res.done) {
        out.fell = res.info.fell;
        break;
      }
      obs = res.observation;
    }
  } catch (const SimulationDiverged&) {
    out.diverged = true;
  }
  return out;
}

inline PhaseRecord open_phase(const TrainState& s, Phase kind) {
  PhaseRecord r;
  r.kind = kind;
  r.start_step = s.rl_steps;
  r.policy_before = s.agent.policy_checksum();
  r.rbfn_before = s.rbfn.checksum();
  r.buffer_before = s.buffer->insertions();
  return r;
}

inline void close_phase(TrainState& s, PhaseRecord r) {
  r.end_step = s.rl_steps;
  r.policy_after = s.agent.policy_checksum();
  r.rbfn_after = s.rbfn.checksum();
  r.buffer_after = s.buffer->insertions();
  s.phases.push_back(r);
}

}  // namespace detail

/// Reference-optimization phase with the policy held fixed. Rollouts start
/// from the canonical reset and append to the shared buffer.
inline RagRecord run_reference_phase(TrainState& s, const TrainHooks& hooks = {}) {
  const auto& cfg = s.cfg;
  const RhythmGenerator gen(cfg.sim.cpg);
  QuadrupedEnv env(cfg.sim, cfg.robot);
  EcConfig ec = cfg.ec;
  ec.rule = candidate_rule(cfg.reference);
  const int k = s.trajectory.size();
  const int genome_size = ec.genome_mode == GenomeMode::Shared ? k : kLegs * k;
  const sac::SacAgent& frozen = s.agent;
  auto policy = [&](const VecX& obs) -> VecX { return sac::policy_sample(obs, frozen, s.ga_rng).action; };
  auto sink = [&](const VecX& o, const VecX& a, double r, const VecX& o2, bool terminal) {
    s.buffer->push({o, a, r, o2, terminal});
  };
  auto evaluate = [&](const Genome& g) {
    try {
      return ec_evaluate(g, s.trajectory, gen, s.rbfn, env, policy, sink, ec.rollout_steps, cfg.sim.control_dt,
                         ec.fit, cfg.robot.geometry);
    } catch (const SimulationDiverged&) {
      FitnessRecord failed;
      failed.genome = g;
      return failed;
    }
  };
  RagRecord rec;
  rec.at_step = s.rl_steps;
  rec.episode = s.episodes;
  std::function<void(int, const std::vector<Scored>&)> on_gen;
  if (hooks.on_generation) on_gen = [&](int g, const std::vector<Scored>& p) { hooks.on_generation(rec.at_step, g, p); };
  OptimizeResult res = optimize_reference(genome_size, ec, s.ga_rng, evaluate, on_gen);
  rec.best_history = res.best_history;
  rec.generation_mean = res.generation_mean;
  rec.evaluations = res.evaluations;
  rec.rollout_steps = res.total_steps;
  rec.improved = res.improved;
  rec.best_fitness = res.improved ? res.best.fitness : -std::numeric_limits<double>::infinity();
  if (res.improved) {
    s.rbfn = *res.best.params;
    s.trajectory = res.best.trajectory;
  }
  s.rag_rollout_steps += res.total_steps;
  return rec;
}

/// Runs the alternating schedule until cfg.max_steps RL steps. Workers run on
/// their own threads when cfg.workers > 1.
inline TrainState parallel_train(const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  TrainState s = make_train_state(cfg);
  const RhythmGenerator gen(cfg.sim.cpg);
  const int K = cfg.workers;
  const sac::Executor exec = K > 1 ? sac::Executor(run_threads) : sac::Executor(sac::run_serial);
  long next_checkpoint = cfg.checkpoint_interval > 0 ? cfg.checkpoint_interval : -1;

  PhaseRecord current = detail::open_phase(s, Phase::RL);
  while (s.rl_steps < cfg.max_steps) {
    if (cfg.reference != ReferenceMode::Fixed && s.rl_steps >= s.next_rag_at) {
      detail::close_phase(s, current);
      s.phase = Phase::RAG;
      PhaseRecord rag = detail::open_phase(s, Phase::RAG);
      RagRecord rec = run_reference_phase(s, hooks);
      detail::close_phase(s, rag);
      s.rags.push_back(rec);
      if (hooks.on_rag) hooks.on_rag(rec);
      while (s.next_rag_at <= s.rl_steps) s.next_rag_at += cfg.rag_interval;
      s.phase = Phase::RL;
      current = detail::open_phase(s, Phase::RL);
    }

    // Collection round.
    const long remaining = cfg.max_steps - s.rl_steps;
    std::vector<detail::WorkerEpisode> eps(K);
    run_threads(K, [&](int k) {
      const long cap = remaining / K + (k < remaining % K ? 1 : 0);
      if (cap > 0) eps[k] = detail::collect_episode(s, gen, k, cap, s.env_rngs[k], s.policy_rngs[k]);
    });
    const long round_start = s.rl_steps;
    for (int k = 0; k < K; ++k) {
      auto& ep = eps[k];
      if (ep.transitions.empty() && !ep.diverged) continue;
      for (auto& t : ep.transitions) s.buffer->push(t);
      for (auto& r : ep.steps) {
        r.step = s.rl_steps++;
        r.episode = s.episodes;
        if (hooks.on_step) hooks.on_step(r);
      }
      if (ep.diverged) ++s.diverged;
      EpisodeRecord er{s.episodes, k, s.rl_steps, static_cast<int>(ep.steps.size()), ep.total, ep.fell, ep.diverged};
      s.episode_returns.push_back(ep.total);
      if (hooks.on_episode) hooks.on_episode(er);
      ++s.episodes;
    }
    if (s.rl_steps == round_start) throw Error("training made no progress: every worker diverged on its first step");

    // Gradient steps: one per RL step past initial_steps, shared across workers.
    const long eligible = std::max(0L, s.rl_steps - std::max(round_start, cfg.initial_steps));
    const long rounds = (eligible * cfg.updates_per_step + K - 1) / K;
    for (long g = 0; g < rounds; ++g) {
      if (s.buffer->size() < static_cast<std::size_t>(cfg.sac.batch_size)) break;
      std::vector<sac::Batch> batches(K);
      exec(K, [&](int k) { batches[k] = s.buffer->sample(cfg.sac.batch_size, s.policy_rngs[k]); });
      std::vector<Rng*> rngs;
      for (auto& r : s.policy_rngs) rngs.push_back(&r);
      const auto stats = sac::update(s.agent, batches, rngs, hooks.on_gradient, exec);
      ++s.gradient_rounds;
      if (hooks.on_update) hooks.on_update(stats);
    }

    if (next_checkpoint > 0 && s.rl_steps >= next_checkpoint) {
      if (hooks.on_checkpoint) hooks.on_checkpoint(make_checkpoint(s), s.rl_steps, false);
      while (next_checkpoint <= s.rl_steps) next_checkpoint += cfg.checkpoint_interval;
    }
  }
  detail::close_phase(s, current);
  if (hooks.on_checkpoint) hooks.on_checkpoint(make_checkpoint(s), s.rl_steps, true);
  return s;
}

/// Serial training: the synchronous loop with a single worker.
inline TrainState train(TrainConfig cfg, const TrainHooks& hooks = {}) {
  cfg.workers = 1;
  return parallel_train(cfg, hooks);
}

}  // namespace gaitevo
