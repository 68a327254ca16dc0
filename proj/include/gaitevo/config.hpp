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

// YAML training configuration. Every mapping is checked against its known
// keys; an unknown or mistyped key is a ConfigError naming the dotted path.
//
//   seed: 7                    # master seed
//   desired_speed: 0.5         # required, m/s
//   group: 2                   # preset 0..5 (observation x reference mode)
//   observation: full          # full | partial, overrides the group
//   reference: genetic         # fixed | genetic | uniform | normal, overrides the group
//   terrain: flat              # or "slope:15", or a mapping (see TerrainSpec)
//   training: {max_steps, rag_interval, first_rag_at, initial_steps, workers,
//              updates_per_step, checkpoint_interval}
//   sac: {hidden, lr, alpha, gamma, tau, batch_size, action_scale, buffer_capacity}
//   ec: {generations, candidates, rollout_steps, genome: shared|per_leg,
//        tournament, crossover, mutation, sigma, uniform_hi, normal_sigma,
//        fit_delta, fit_samples_per_neuron}
//   sim: {episode_steps, substeps, control_dt, init_jitter, fall_height, fall_angle}
//   reward: {weights, c_b, c_f, energy_absolute, foot_velocity: penalty|printed}
//   cpg: {gait: walk|trot, mu, alpha, period}
//   rbfn: {neurons, sigma_sq}
//   trajectory: {waypoints, stride, lift, height}
//   disturbance: {enabled, force: [x, y, z]}

#include <yaml-cpp/yaml.h>

#include <set>
#include <sstream>
#include <string>

#include "gaitevo/trainer.hpp"

namespace gaitevo {

namespace detail {

inline void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

template <typename T>
void read(const YAML::Node& node, const std::string& key, const std::string& path, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path.empty() ? key : path + "." + key, "wrong type");
  }
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline TerrainSpec read_terrain(const YAML::Node& node) {
  if (node.IsScalar()) return parse_terrain(node.as<std::string>());
  check_keys(node, "terrain", {"kind", "slope_deg", "rise", "run", "l0", "l1", "l2", "unit_steps", "repeats"});
  TerrainSpec t;
  std::string kind = "flat";
  read(node, "kind", "terrain", kind);
  t.kind = parse_terrain_kind(kind);
  read(node, "slope_deg", "terrain", t.slope_deg);
  read(node, "rise", "terrain", t.rise);
  read(node, "run", "terrain", t.run);
  read(node, "l0", "terrain", t.l0);
  read(node, "l1", "terrain", t.l1);
  read(node, "l2", "terrain", t.l2);
  read(node, "unit_steps", "terrain", t.unit_steps);
  read(node, "repeats", "terrain", t.repeats);
  t.validate();
  return t;
}

}  // namespace detail

inline ObservationMode parse_observation_mode(const std::string& s) {
  if (s == "full") return ObservationMode::Full;
  if (s == "partial") return ObservationMode::Partial;
  throw ConfigError("observation", "must be 'full' or 'partial'");
}

inline std::string to_string(ObservationMode m) { return m == ObservationMode::Full ? "full" : "partial"; }

/// Builds a TrainConfig from YAML text. `desired_speed` is required.
inline TrainConfig parse_config(const std::string& text) {
  using detail::check_keys;
  using detail::read;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<file>", std::string("YAML parse error: ") + e.what());
  }
  if (!root || root.IsNull()) throw ConfigError("desired_speed", "required field is missing");
  check_keys(root, "",
             {"seed", "desired_speed", "group", "observation", "reference", "terrain", "training", "sac", "ec", "sim",
              "reward", "cpg", "rbfn", "trajectory", "disturbance"});

  TrainConfig cfg;
  if (!root["desired_speed"]) throw ConfigError("desired_speed", "required field is missing");
  read(root, "desired_speed", "", cfg.sim.reward.desired_speed);
  if (!std::isfinite(cfg.sim.reward.desired_speed)) throw ConfigError("desired_speed", "must be finite");
  read(root, "seed", "", cfg.seed);
  int group = 2;
  read(root, "group", "", group);
  cfg.apply_group(group);
  if (root["observation"]) cfg.sim.observation = parse_observation_mode(root["observation"].as<std::string>());
  if (root["reference"]) cfg.reference = parse_reference_mode(root["reference"].as<std::string>());
  if (root["terrain"]) cfg.sim.terrain = detail::read_terrain(root["terrain"]);

  if (const auto n = root["training"]) {
    const std::string p = "training";
    check_keys(n, p, {"max_steps", "rag_interval", "first_rag_at", "initial_steps", "workers", "updates_per_step",
                      "checkpoint_interval"});
    read(n, "max_steps", p, cfg.max_steps);
    read(n, "rag_interval", p, cfg.rag_interval);
    read(n, "first_rag_at", p, cfg.first_rag_at);
    read(n, "initial_steps", p, cfg.initial_steps);
    read(n, "workers", p, cfg.workers);
    read(n, "updates_per_step", p, cfg.updates_per_step);
    read(n, "checkpoint_interval", p, cfg.checkpoint_interval);
  }
  if (const auto n = root["sac"]) {
    const std::string p = "sac";
    check_keys(n, p, {"hidden", "lr", "alpha", "gamma", "tau", "batch_size", "action_scale", "buffer_capacity"});
    read(n, "hidden", p, cfg.sac.hidden);
    read(n, "lr", p, cfg.sac.lr);
    read(n, "alpha", p, cfg.sac.alpha);
    read(n, "gamma", p, cfg.sac.gamma);
    read(n, "tau", p, cfg.sac.tau);
    read(n, "batch_size", p, cfg.sac.batch_size);
    read(n, "action_scale", p, cfg.sac.action_scale);
    read(n, "buffer_capacity", p, cfg.sac.buffer_capacity);
  }
  if (const auto n = root["ec"]) {
    const std::string p = "ec";
    check_keys(n, p, {"generations", "candidates", "rollout_steps", "genome", "tournament", "crossover", "mutation",
                      "sigma", "uniform_hi", "normal_sigma", "fit_delta", "fit_samples_per_neuron"});
    read(n, "generations", p, cfg.ec.generations);
    read(n, "candidates", p, cfg.ec.candidates);
    read(n, "rollout_steps", p, cfg.ec.rollout_steps);
    if (n["genome"]) {
      const auto g = n["genome"].as<std::string>();
      if (g == "shared") cfg.ec.genome_mode = GenomeMode::Shared;
      else if (g == "per_leg") cfg.ec.genome_mode = GenomeMode::PerLeg;
      else throw ConfigError("ec.genome", "must be 'shared' or 'per_leg'");
    }
    read(n, "tournament", p, cfg.ec.ga.tournament);
    read(n, "crossover", p, cfg.ec.ga.crossover);
    read(n, "mutation", p, cfg.ec.ga.mutation);
    read(n, "sigma", p, cfg.ec.ga.sigma);
    read(n, "uniform_hi", p, cfg.ec.ga.uniform_hi);
    read(n, "normal_sigma", p, cfg.ec.ga.normal_sigma);
    read(n, "fit_delta", p, cfg.ec.fit.settings.delta);
    read(n, "fit_samples_per_neuron", p, cfg.ec.fit.samples_per_neuron);
  }
  if (const auto n = root["sim"]) {
    const std::string p = "sim";
    check_keys(n, p, {"episode_steps", "substeps", "control_dt", "init_jitter", "fall_height", "fall_angle"});
    read(n, "episode_steps", p, cfg.sim.episode_steps);
    read(n, "substeps", p, cfg.sim.substeps);
    read(n, "control_dt", p, cfg.sim.control_dt);
    read(n, "init_jitter", p, cfg.sim.init_jitter);
    read(n, "fall_height", p, cfg.sim.fall_height);
    read(n, "fall_angle", p, cfg.sim.fall_angle);
  }
  if (const auto n = root["reward"]) {
    const std::string p = "reward";
    check_keys(n, p, {"weights", "c_b", "c_f", "energy_absolute", "foot_velocity"});
    if (n["weights"]) {
      std::vector<double> w;
      read(n, "weights", p, w);
      if (w.size() != 6) throw ConfigError("reward.weights", "need exactly six weights");
      std::copy(w.begin(), w.end(), cfg.sim.reward.weights.begin());
    }
    read(n, "c_b", p, cfg.sim.reward.c_b);
    read(n, "c_f", p, cfg.sim.reward.c_f);
    read(n, "energy_absolute", p, cfg.sim.reward.energy_absolute);
    if (n["foot_velocity"]) {
      const auto f = n["foot_velocity"].as<std::string>();
      if (f == "penalty") cfg.sim.reward.foot_velocity_form = FootVelocityForm::Penalty;
      else if (f == "printed") cfg.sim.reward.foot_velocity_form = FootVelocityForm::Printed;
      else throw ConfigError("reward.foot_velocity", "must be 'penalty' or 'printed'");
    }
  }
  if (const auto n = root["cpg"]) {
    const std::string p = "cpg";
    check_keys(n, p, {"gait", "mu", "alpha", "period"});
    if (n["gait"]) {
      const auto g = n["gait"].as<std::string>();
      if (g == "walk") cfg.sim.cpg.phase_offsets = CpgConfig::walk().phase_offsets;
      else if (g == "trot") cfg.sim.cpg.phase_offsets = CpgConfig::trot().phase_offsets;
      else throw ConfigError("cpg.gait", "must be 'walk' or 'trot'");
    }
    read(n, "mu", p, cfg.sim.cpg.mu);
    read(n, "alpha", p, cfg.sim.cpg.alpha);
    read(n, "period", p, cfg.sim.cpg.period);
  }
  if (const auto n = root["rbfn"]) {
    check_keys(n, "rbfn", {"neurons", "sigma_sq"});
    read(n, "neurons", "rbfn", cfg.rbfn_neurons);
    read(n, "sigma_sq", "rbfn", cfg.rbfn_sigma_sq);
  }
  if (const auto n = root["trajectory"]) {
    const std::string p = "trajectory";
    check_keys(n, p, {"waypoints", "stride", "lift", "height"});
    read(n, "waypoints", p, cfg.shape.waypoints);
    read(n, "stride", p, cfg.shape.stride);
    read(n, "lift", p, cfg.shape.lift);
    read(n, "height", p, cfg.shape.height);
  }
  if (const auto n = root["disturbance"]) {
    check_keys(n, "disturbance", {"enabled", "force"});
    read(n, "enabled", "disturbance", cfg.sim.disturbance.enabled);
    if (n["force"]) {
      std::vector<double> f;
      read(n, "force", "disturbance", f);
      if (f.size() != 3) throw ConfigError("disturbance.force", "need three components");
      cfg.sim.disturbance.force = {f[0], f[1], f[2]};
    }
  }
  cfg.validate();
  return cfg;
}

/// Canonical YAML for a config; parse_config(to_yaml(c)) reproduces c.
inline std::string to_yaml(const TrainConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "desired_speed" << YAML::Value << c.sim.reward.desired_speed;
  e << YAML::Key << "observation" << YAML::Value << to_string(c.sim.observation);
  e << YAML::Key << "reference" << YAML::Value << to_string(c.reference);
  const auto& t = c.sim.terrain;
  e << YAML::Key << "terrain" << YAML::Value << YAML::BeginMap << YAML::Key << "kind" << YAML::Value
    << to_string(t.kind) << YAML::Key << "slope_deg" << YAML::Value << t.slope_deg << YAML::Key << "rise"
    << YAML::Value << t.rise << YAML::Key << "run" << YAML::Value << t.run << YAML::Key << "l0" << YAML::Value
    << t.l0 << YAML::Key << "l1" << YAML::Value << t.l1 << YAML::Key << "l2" << YAML::Value << t.l2 << YAML::Key
    << "unit_steps" << YAML::Value << t.unit_steps << YAML::Key << "repeats" << YAML::Value << t.repeats
    << YAML::EndMap;
  e << YAML::Key << "training" << YAML::Value << YAML::BeginMap << YAML::Key << "max_steps" << YAML::Value
    << c.max_steps << YAML::Key << "rag_interval" << YAML::Value << c.rag_interval << YAML::Key << "first_rag_at"
    << YAML::Value << c.first_rag_at << YAML::Key << "initial_steps" << YAML::Value << c.initial_steps << YAML::Key
    << "workers" << YAML::Value << c.workers << YAML::Key << "updates_per_step" << YAML::Value
    << c.updates_per_step << YAML::Key << "checkpoint_interval" << YAML::Value << c.checkpoint_interval
    << YAML::EndMap;
  e << YAML::Key << "sac" << YAML::Value << YAML::BeginMap << YAML::Key << "hidden" << YAML::Value << YAML::Flow
    << c.sac.hidden << YAML::Key << "lr" << YAML::Value << c.sac.lr << YAML::Key << "alpha" << YAML::Value
    << c.sac.alpha << YAML::Key << "gamma" << YAML::Value << c.sac.gamma << YAML::Key << "tau" << YAML::Value
    << c.sac.tau << YAML::Key << "batch_size" << YAML::Value << c.sac.batch_size << YAML::Key << "action_scale"
    << YAML::Value << c.sac.action_scale << YAML::Key << "buffer_capacity" << YAML::Value
    << static_cast<unsigned long long>(c.sac.buffer_capacity) << YAML::EndMap;
  e << YAML::Key << "ec" << YAML::Value << YAML::BeginMap << YAML::Key << "generations" << YAML::Value
    << c.ec.generations << YAML::Key << "candidates" << YAML::Value << c.ec.candidates << YAML::Key
    << "rollout_steps" << YAML::Value << c.ec.rollout_steps << YAML::Key << "genome" << YAML::Value
    << (c.ec.genome_mode == GenomeMode::Shared ? "shared" : "per_leg") << YAML::Key << "tournament" << YAML::Value
    << c.ec.ga.tournament << YAML::Key << "crossover" << YAML::Value << c.ec.ga.crossover << YAML::Key
    << "mutation" << YAML::Value << c.ec.ga.mutation << YAML::Key << "sigma" << YAML::Value << c.ec.ga.sigma
    << YAML::Key << "uniform_hi" << YAML::Value << c.ec.ga.uniform_hi << YAML::Key << "normal_sigma"
    << YAML::Value << c.ec.ga.normal_sigma << YAML::Key << "fit_delta" << YAML::Value << c.ec.fit.settings.delta
    << YAML::Key << "fit_samples_per_neuron" << YAML::Value << c.ec.fit.samples_per_neuron << YAML::EndMap;
  e << YAML::Key << "sim" << YAML::Value << YAML::BeginMap << YAML::Key << "episode_steps" << YAML::Value
    << c.sim.episode_steps << YAML::Key << "substeps" << YAML::Value << c.sim.substeps << YAML::Key
    << "control_dt" << YAML::Value << c.sim.control_dt << YAML::Key << "init_jitter" << YAML::Value
    << c.sim.init_jitter << YAML::Key << "fall_height" << YAML::Value << c.sim.fall_height << YAML::Key
    << "fall_angle" << YAML::Value << c.sim.fall_angle << YAML::EndMap;
  const auto& r = c.sim.reward;
  e << YAML::Key << "reward" << YAML::Value << YAML::BeginMap << YAML::Key << "weights" << YAML::Value
    << YAML::Flow << std::vector<double>(r.weights.begin(), r.weights.end()) << YAML::Key << "c_b" << YAML::Value
    << r.c_b << YAML::Key << "c_f" << YAML::Value << r.c_f << YAML::Key << "energy_absolute" << YAML::Value
    << r.energy_absolute << YAML::Key << "foot_velocity" << YAML::Value
    << (r.foot_velocity_form == FootVelocityForm::Penalty ? "penalty" : "printed") << YAML::EndMap;
  const auto& g = c.sim.cpg;
  const bool trot = g.phase_offsets == CpgConfig::trot().phase_offsets;
  e << YAML::Key << "cpg" << YAML::Value << YAML::BeginMap << YAML::Key << "gait" << YAML::Value
    << (trot ? "trot" : "walk") << YAML::Key << "mu" << YAML::Value << g.mu << YAML::Key << "alpha" << YAML::Value
    << g.alpha << YAML::Key << "period" << YAML::Value << g.period << YAML::EndMap;
  e << YAML::Key << "rbfn" << YAML::Value << YAML::BeginMap << YAML::Key << "neurons" << YAML::Value
    << c.rbfn_neurons << YAML::Key << "sigma_sq" << YAML::Value << c.rbfn_sigma_sq << YAML::EndMap;
  e << YAML::Key << "trajectory" << YAML::Value << YAML::BeginMap << YAML::Key << "waypoints" << YAML::Value
    << c.shape.waypoints << YAML::Key << "stride" << YAML::Value << c.shape.stride << YAML::Key << "lift"
    << YAML::Value << c.shape.lift << YAML::Key << "height" << YAML::Value << c.shape.height << YAML::EndMap;
  const auto& d = c.sim.disturbance;
  e << YAML::Key << "disturbance" << YAML::Value << YAML::BeginMap << YAML::Key << "enabled" << YAML::Value
    << d.enabled << YAML::Key << "force" << YAML::Value << YAML::Flow
    << std::vector<double>{d.force.x(), d.force.y(), d.force.z()} << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace gaitevo
