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

// The train, eval and terrain commands behind the command-line tool.
//
// A training run directory holds:
//   manifest.json        config echo, seeds, timestamps, version
//   config.yaml          effective config; feeding it back reproduces the run
//   metrics.csv          one row per RL step
//   episodes.csv         one row per episode
//   reference.csv        one row per optimizer generation
//   checkpoint_<step>.bin, checkpoint_final.bin

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gaitevo/config.hpp"
#include "gaitevo/trainer.hpp"

namespace gaitevo {

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> group;
  std::optional<std::string> observation;
  bool disturb = false;
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Config file plus command-line overrides. A group override is applied
/// before the observation override.
inline TrainConfig load_train_config(const std::string& path, const TrainOverrides& o) {
  TrainConfig cfg = parse_config(read_file(path));
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.group) cfg.apply_group(*o.group);
  if (o.observation) cfg.sim.observation = parse_observation_mode(*o.observation);
  if (o.disturb) cfg.sim.disturbance.enabled = true;
  cfg.validate();
  return cfg;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void write_csv_number(std::ostream& os, double v) {
  if (std::isfinite(v)) {
    os << v;
  } else if (std::isnan(v)) {
    os << "nan";
  } else {
    os << (v > 0 ? "inf" : "-inf");
  }
}

inline constexpr const char* kMetricsHeader =
    "step,worker,episode,episode_step,reward,r_v,r_e,r_b,r_f,r_c,r_u,c_k,power,wsm,x,y,z,wall_s";
inline constexpr const char* kEpisodesHeader = "episode,worker,end_step,length,total_reward,fell,diverged";
inline constexpr const char* kReferenceHeader = "at_step,generation,best,mean,evaluated";

struct TrainSummary {
  long rl_steps = 0;
  long episodes = 0;
  long rag_updates = 0;
  std::string final_checkpoint;
};

inline TrainSummary cmd_train(const TrainConfig& cfg, const std::filesystem::path& out_dir,
                              std::ostream& log = std::cerr) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string started = utc_timestamp();
  const auto t0 = std::chrono::steady_clock::now();
  {
    std::ofstream(out_dir / "config.yaml") << to_yaml(cfg);
  }
  std::ofstream metrics(out_dir / "metrics.csv");
  std::ofstream episodes(out_dir / "episodes.csv");
  std::ofstream reference(out_dir / "reference.csv");
  metrics.precision(10);
  episodes.precision(10);
  reference.precision(10);
  metrics << kMetricsHeader << '\n';
  episodes << kEpisodesHeader << '\n';
  reference << kReferenceHeader << '\n';

  TrainSummary summary;
  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    metrics << r.step << ',' << r.worker << ',' << r.episode << ',' << r.episode_step << ',';
    write_csv_number(metrics, r.reward);
    for (double c : r.breakdown.components) {
      metrics << ',';
      write_csv_number(metrics, c);
    }
    metrics << ',' << r.breakdown.curriculum << ',' << r.power << ',';
    if (r.wsm) metrics << *r.wsm;
    metrics << ',' << r.position.x() << ',' << r.position.y() << ',' << r.position.z() << ',' << wall << '\n';
  };
  hooks.on_episode = [&](const EpisodeRecord& e) {
    episodes << e.episode << ',' << e.worker << ',' << e.end_step << ',' << e.length << ',' << e.total_reward << ','
             << e.fell << ',' << e.diverged << '\n';
  };
  hooks.on_generation = [&](long at, int g, const std::vector<Scored>& pop) {
    double best = -std::numeric_limits<double>::infinity(), sum = 0.0;
    int n = 0;
    for (const auto& s : pop) {
      if (!std::isfinite(s.fitness)) continue;
      best = std::max(best, s.fitness);
      sum += s.fitness;
      ++n;
    }
    reference << at << ',' << g << ',';
    write_csv_number(reference, best);
    reference << ',';
    write_csv_number(reference, n > 0 ? sum / n : std::nan(""));
    reference << ',' << pop.size() << '\n';
  };
  hooks.on_rag = [&](const RagRecord& r) {
    log << "reference update at step " << r.at_step << ": best fitness " << r.best_fitness << " after "
        << r.evaluations << " evaluations\n";
  };
  hooks.on_checkpoint = [&](const Checkpoint& ck, long step, bool final) {
    const fs::path p = out_dir / (final ? std::string("checkpoint_final.bin")
                                        : "checkpoint_" + std::to_string(step) + ".bin");
    ck.save(p.string());
    if (final) summary.final_checkpoint = p.string();
  };

  const TrainState state = parallel_train(cfg, hooks);
  summary.rl_steps = state.rl_steps;
  summary.episodes = state.episodes;
  summary.rag_updates = static_cast<long>(state.rags.size());

  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = "train";
  manifest["config"] = to_yaml(cfg);
  manifest["seeds"]["master"] = cfg.seed;
  for (const char* name : {"init", "ga"}) manifest["seeds"]["streams"][name] = stream_seed(cfg.seed, name);
  for (int k = 0; k < cfg.workers; ++k) {
    manifest["seeds"]["streams"]["env/" + std::to_string(k)] = stream_seed(cfg.seed, "env", k);
    manifest["seeds"]["streams"]["policy/" + std::to_string(k)] = stream_seed(cfg.seed, "policy", k);
  }
  manifest["started"] = started;
  manifest["finished"] = utc_timestamp();
  manifest["rl_steps"] = state.rl_steps;
  manifest["episodes"] = state.episodes;
  manifest["rag_updates"] = state.rags.size();
  manifest["diverged_episodes"] = state.diverged;
  manifest["buffer_insertions"] = state.buffer->insertions();
  manifest["final_checkpoint"] = fs::path(summary.final_checkpoint).filename().string();
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
  return summary;
}

struct EvalOptions {
  std::string checkpoint;
  TerrainSpec terrain{};
  int steps = 300;
  std::uint64_t seed = 1;
  double init_jitter = 0.0;
  bool disturb = false;
  double disturb_force = 30.0;  // N, lateral
  std::optional<std::string> observation;  // must match the checkpoint when given
};

struct EvalSummary {
  int steps = 0;
  double mean_speed = 0.0;
  double mean_power = 0.0;
  std::optional<double> mean_wsm;
  double total_reward = 0.0;
  bool fell = false;
};

inline std::string eval_header() {
  std::ostringstream h;
  h << "step,time,reward,r_v,r_e,r_b,r_f,r_c,r_u,c_k,power,wsm,x,y,z,roll,pitch,yaw";
  for (int i = 0; i < kJoints; ++i) h << ",q" << i;
  for (int l = 0; l < kLegs; ++l) h << ",foot" << l << "_x,foot" << l << "_y,foot" << l << "_z";
  return h.str();
}

/// Deterministic rollout of the policy mean on top of the stored reference.
inline EvalSummary cmd_eval(const EvalOptions& opt, std::ostream& csv) {
  const Checkpoint ck = Checkpoint::load(opt.checkpoint);
  const LoadedController ctl = load_controller(ck);
  SimConfig sim;
  sim.terrain = opt.terrain;
  sim.cpg = ctl.cpg;
  sim.episode_steps = std::max(opt.steps, 1);
  sim.init_jitter = opt.init_jitter;
  if (ctl.agent.obs_dim == observation_dim(ObservationMode::Full)) {
    sim.observation = ObservationMode::Full;
  } else if (ctl.agent.obs_dim == observation_dim(ObservationMode::Partial)) {
    sim.observation = ObservationMode::Partial;
  } else {
    throw Error("checkpoint has an unsupported observation size");
  }
  if (opt.observation && parse_observation_mode(*opt.observation) != sim.observation) {
    throw Error("checkpoint was trained with " + to_string(sim.observation) + " observations, not " +
                *opt.observation);
  }
  sim.disturbance.enabled = opt.disturb;
  sim.disturbance.force = {0.0, opt.disturb_force, 0.0};

  QuadrupedEnv env(sim);
  const RhythmGenerator gen(ctl.cpg);
  Rng rng = make_stream(opt.seed, "env");
  VecX obs = env.reset(&rng);
  csv.precision(10);
  csv << eval_header() << '\n';

  EvalSummary out;
  double speed = 0.0, pw = 0.0, wsm_sum = 0.0;
  int wsm_n = 0;
  for (int t = 0; t < opt.steps; ++t) {
    const Vec12 target = forward(gen.at(t * sim.control_dt), ctl.rbfn) + sac::policy_mean_action(obs, ctl.agent);
    const StepResult r = env.step(target);
    const RobotState& s = env.state();
    const Vec3 rpy = s.rpy();
    csv << t << ',' << s.time << ',' << r.reward;
    for (double c : r.info.reward.components) csv << ',' << c;
    csv << ',' << r.info.reward.curriculum << ',' << r.info.power << ',';
    if (r.info.wsm) csv << *r.info.wsm;
    csv << ',' << s.position.x() << ',' << s.position.y() << ',' << s.position.z() << ',' << rpy.x() << ','
        << rpy.y() << ',' << rpy.z();
    for (int i = 0; i < kJoints; ++i) csv << ',' << s.q[i];
    for (int l = 0; l < kLegs; ++l) {
      csv << ',' << s.foot_position[l].x() << ',' << s.foot_position[l].y() << ',' << s.foot_position[l].z();
    }
    csv << '\n';
    ++out.steps;
    out.total_reward += r.reward;
    speed += s.linear_velocity.x();
    pw += r.info.power;
    if (r.info.wsm) {
      wsm_sum += *r.info.wsm;
      ++wsm_n;
    }
    obs = r.observation;
    if (r.info.fell) {
      out.fell = true;
      break;
    }
  }
  if (out.steps > 0) {
    out.mean_speed = speed / out.steps;
    out.mean_power = pw / out.steps;
  }
  if (wsm_n > 0) out.mean_wsm = wsm_sum / wsm_n;
  return out;
}

inline long cmd_terrain(const TerrainSpec& spec, double span, double resolution, std::ostream& csv) {
  if (!(span >= 0.0)) throw ConfigError("span", "must be >= 0");
  if (!(resolution > 0.0)) throw ConfigError("resolution", "must be > 0");
  write_terrain_csv(csv, spec, span, resolution);
  return std::lround(span / resolution) + 1;
}

}  // namespace gaitevo
