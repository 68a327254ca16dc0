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


// gaitevo: train, eval and terrain commands.
// Exit codes: 0 success, 1 runtime failure, 2 config or usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gaitevo/commands.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw gaitevo::Error("cannot open '" + path + "' for writing");
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid evolutionary and reinforcement learning for quadruped gaits"};
  app.set_version_flag("--version", std::string(gaitevo::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "run";
  gaitevo::TrainOverrides ov;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, group;
  std::optional<std::string> observation;
  auto* train = app.add_subcommand("train", "Run hybrid training and write a run directory");
  train->add_option("--config", config_path, "YAML training config")->required();
  train->add_option("--seed", seed, "Master seed (overrides the config)");
  train->add_option("--out-dir", out_dir, "Run directory")->capture_default_str();
  train->add_option("--workers", workers, "Parallel workers K")->check(CLI::PositiveNumber);
  train->add_option("--group", group, "Experiment preset 0..5")->check(CLI::Range(0, 5));
  train->add_option("--observation", observation, "full|partial")->check(CLI::IsMember({"full", "partial"}));
  train->add_flag("--disturb", ov.disturb, "Apply periodic lateral base forces");

  gaitevo::EvalOptions eo;
  std::string eval_terrain = "flat";
  std::string eval_out;
  std::optional<std::string> eval_observation;
  auto* eval = app.add_subcommand("eval", "Roll out the deterministic policy from a checkpoint");
  eval->add_option("--checkpoint", eo.checkpoint, "Checkpoint file")->required();
  eval->add_option("--terrain", eval_terrain, "Terrain spec, e.g. flat, slope:15, stairs")->capture_default_str();
  eval->add_option("--steps", eo.steps, "Control steps")->check(CLI::NonNegativeNumber)->capture_default_str();
  eval->add_option("--seed", eo.seed, "Seed for the initial-state stream")->capture_default_str();
  eval->add_option("--init-jitter", eo.init_jitter, "Uniform joint jitter at reset (rad)")->capture_default_str();
  eval->add_option("--observation", eval_observation, "Expected observation mode: full|partial")
      ->check(CLI::IsMember({"full", "partial"}));
  eval->add_flag("--disturb", eo.disturb, "Apply lateral base forces during [1,2), [3,4), ... s");
  eval->add_option("--disturb-force", eo.disturb_force, "Disturbance magnitude (N)")->capture_default_str();
  eval->add_option("--output,--out", eval_out, "Per-step CSV path (stdout when omitted)");

  std::string terrain_spec = "flat";
  std::string terrain_out;
  double span = 10.0;
  double resolution = 0.01;
  auto* terrain = app.add_subcommand("terrain", "Export a terrain height profile as CSV");
  terrain->add_option("--spec", terrain_spec, "Terrain spec")->capture_default_str();
  terrain->add_option("--output,--out", terrain_out, "CSV path (stdout when omitted)");
  terrain->add_option("--span", span, "Profile length (m)")->capture_default_str();
  terrain->add_option("--resolution", resolution, "Sample spacing (m)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train) {
      ov.seed = seed;
      ov.workers = workers;
      ov.group = group;
      ov.observation = observation;
      const gaitevo::TrainConfig cfg = gaitevo::load_train_config(config_path, ov);
      const auto s = gaitevo::cmd_train(cfg, out_dir);
      std::cout << "steps " << s.rl_steps << ", episodes " << s.episodes << ", reference updates "
                << s.rag_updates << "\nfinal checkpoint " << s.final_checkpoint << '\n';
    } else if (*eval) {
      eo.terrain = gaitevo::parse_terrain(eval_terrain);
      eo.observation = eval_observation;
      std::ofstream file;
      std::ostream& csv = open_output(eval_out, file);
      const auto s = gaitevo::cmd_eval(eo, csv);
      std::ostream& summary = eval_out.empty() || eval_out == "-" ? std::cerr : std::cout;
      summary << "steps " << s.steps << (s.fell ? " (fell)" : "") << "\nmean speed " << s.mean_speed
              << " m/s\nmean power " << s.mean_power << " W\nmean wsm ";
      if (s.mean_wsm) {
        summary << *s.mean_wsm << " m\n";
      } else {
        summary << "n/a\n";
      }
    } else if (*terrain) {
      const gaitevo::TerrainSpec spec = gaitevo::parse_terrain(terrain_spec);
      std::ofstream file;
      std::ostream& csv = open_output(terrain_out, file);
      gaitevo::cmd_terrain(spec, span, resolution, csv);
    }
  } catch (const gaitevo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
