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

// Acceptance suite. Prints one PASS or FAIL line per criterion and exits
// nonzero when any criterion fails. Long-running training criteria use
// reduced networks (two hidden layers of 64) so the suite fits a single core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gaitevo/checkpoint.hpp"
#include "gaitevo/cpg.hpp"
#include "gaitevo/kinematics.hpp"
#include "gaitevo/rbfn.hpp"
#include "gaitevo/reward.hpp"
#include "gaitevo/sac.hpp"
#include "gaitevo/sim.hpp"
#include "gaitevo/trainer.hpp"
#include "gaitevo/trajectory_opt.hpp"
#include "support/gradcheck.hpp"
#include "support/landscape.hpp"
#include "support/oracles.hpp"
#include "support/point_mass.hpp"
#include "support/small_config.hpp"

namespace gaitevo {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Every best-fitness history seen by the suite, for the monotonicity check.
std::vector<std::vector<double>>& histories() {
  static std::vector<std::vector<double>> h;
  return h;
}

// Phase records from every training run, for the freeze and buffer checks.
struct RunAudit {
  std::vector<PhaseRecord> phases;
  long rl_steps = 0;
  long rag_rollout_steps = 0;
  std::uint64_t insertions = 0;
};

std::vector<RunAudit>& audits() {
  static std::vector<RunAudit> a;
  return a;
}

TrainState audited_train(const TrainConfig& cfg, TrainHooks hooks = {}) {
  TrainState s = parallel_train(cfg, hooks);
  audits().push_back({s.phases, s.rl_steps, s.rag_rollout_steps, s.buffer->insertions()});
  for (const RagRecord& r : s.rags) histories().push_back(r.best_history);
  return s;
}

TrainConfig reduced_config(std::uint64_t seed, int group, long steps) {
  TrainConfig c;
  c.seed = seed;
  c.apply_group(group);
  c.max_steps = steps;
  c.sim.reward.desired_speed = 0.5;
  c.sac.hidden = {64, 64};
  c.sac.batch_size = 64;
  return c;
}

double final_mean(const std::vector<double>& returns, std::size_t n = 10) {
  n = std::min(n, returns.size());
  double s = 0.0;
  for (std::size_t i = returns.size() - n; i < returns.size(); ++i) s += returns[i];
  return n > 0 ? s / n : std::nan("");
}

// ---------------------------------------------------------------------------

Outcome reward_components() {
  double worst = 0.0;
  int n = 0;
  for (const auto& c : testing::oracles()["reward_cases"]) {
    RewardConfig cfg;
    const double w[] = {1.5, 0.07, 0.6, 0.3, 0.1, 0.1};
    for (int i = 0; i < 6; ++i) {
      if (cfg.weights[i] != w[i]) return {false, "default weights differ"};
    }
    if (cfg.c_b != 4.0 || cfg.c_f != 2.5) return {false, "default coefficients differ"};
    RewardInputs in;
    in.forward_speed = c["forward_speed"];
    for (int i = 0; i < 3; ++i) in.base_angular_velocity[i] = c["angular_velocity"][i];
    for (int i = 0; i < kJoints; ++i) {
      in.torques[i] = c["torques"][i];
      in.joint_velocities[i] = c["joint_velocities"][i];
    }
    for (int l = 0; l < kLegs; ++l) {
      in.foot_contact[l] = c["contact"][l];
      for (int i = 0; i < 3; ++i) in.foot_velocity[l][i] = c["foot_velocity"][l][i];
    }
    in.desired_support = c["desired_support"];
    in.unexpected_contacts = c["unexpected"];
    cfg.desired_speed = c["desired_speed"];
    cfg.dt = c["dt"];
    const RewardBreakdown b = compute_reward(in, cfg);
    const auto& e = c["expected"];
    for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(b.components[i] - e["components"][i].get<double>()));
    worst = std::max(worst, std::abs(b.curriculum - e["curriculum"].get<double>()));
    worst = std::max(worst, std::abs(b.total - e["total"].get<double>()));
    ++n;
  }
  return {n == 10 && worst <= 1e-12, fmt("%d states, max error %.2e", n, worst)};
}

Outcome pd_arithmetic() {
  const double t = pd_torque(0.1, 0.0, 0.0, {80.0, 2.0}, 33.5);
  const double hi = pd_torque(1.0, 0.0, 0.0, {80.0, 2.0}, 33.5);
  const double lo = pd_torque(-1.0, 0.0, 0.0, {80.0, 2.0}, 33.5);
  return {t == 8.0 && hi == 33.5 && lo == -33.5, fmt("tau=%.17g, clamp=[%.17g, %.17g]", t, lo, hi)};
}

Outcome rbfn_activations() {
  const RhythmGenerator gen;
  const RbfnParams p = make_rbfn(gen, 20, 0.04);
  if (p.neurons() != 20) return {false, "wrong neuron count"};
  Rng rng(2026);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const RhythmSignal rho = gen.at(uniform(rng, 0.0, 2.0));
    const VecX R = hidden_activations(rho, p);
    for (int i = 0; i < 20; ++i) {
      double d2 = 0.0;
      for (int j = 0; j < 4; ++j) d2 += (rho[j] - p.means(i, j)) * (rho[j] - p.means(i, j));
      worst = std::max(worst, std::abs(R[i] - std::exp(-d2 / 0.04)));
    }
  }
  return {worst <= 1e-12, fmt("1000 samples, max error %.2e", worst)};
}

Outcome control_clock() {
  const RobotModel model;
  Vec12 hold;
  for (int l = 0; l < kLegs; ++l) hold.segment<3>(3 * l) = model.initial_angles;
  QuadrupedEnv env;
  env.reset();
  int to_two = 0, total = 0;
  StepResult r;
  do {
    r = env.step(hold);
    ++total;
    if (env.state().time <= 2.0 + 1e-12) to_two = total;
  } while (!r.done);
  return {to_two == 100 && total == 300 && r.info.truncated,
          fmt("2 s = %d steps, episode = %d steps (%.6f s)", to_two, total, env.state().time)};
}

TrainState schedule_run;

Outcome rag_schedule() {
  TrainConfig cfg = reduced_config(1, 2, 120'000);
  std::vector<long> boundaries{0};
  TrainHooks hooks;
  hooks.on_episode = [&](const EpisodeRecord& e) { boundaries.push_back(e.end_step); };
  schedule_run = audited_train(cfg, hooks);
  const long thresholds[] = {10'000, 60'000, 110'000};
  std::string seen;
  bool ok = schedule_run.rags.size() == 3;
  for (std::size_t i = 0; i < schedule_run.rags.size(); ++i) {
    const long at = schedule_run.rags[i].at_step;
    seen += (i ? "," : "") + std::to_string(at);
    if (i < 3) {
      const long expected = *std::lower_bound(boundaries.begin(), boundaries.end(), thresholds[i]);
      ok = ok && at == expected;
    }
  }
  return {ok, "updates at steps {" + seen + "}"};
}

Outcome ga_beats_fixed() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const double fixed = final_mean(audited_train(reduced_config(seed, 1, 50'000)).episode_returns);
    const double ga = final_mean(audited_train(reduced_config(seed, 2, 50'000)).episode_returns);
    if (ga > fixed) ++wins;
    detail += fmt("%sseed %d: GA %.2f vs fixed %.2f", seed > 1 ? "; " : "", static_cast<int>(seed), ga, fixed);
  }
  return {wins >= 2, fmt("%d/3 wins (", wins) + detail + ")"};
}

Outcome ga_beats_sampling() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng land_rng = make_stream(seed, "landscape");
    const auto land = testing::StubLandscape::random(8, land_rng);
    double best[3];
    const CandidateRule rules[] = {CandidateRule::Genetic, CandidateRule::Uniform, CandidateRule::Normal};
    for (int r = 0; r < 3; ++r) {
      EcConfig cfg;
      cfg.rule = rules[r];
      Rng rng = make_stream(seed, "ga");
      const OptimizeResult res = optimize_reference(8, cfg, rng, land);
      histories().push_back(res.best_history);
      best[r] = res.best.fitness;
    }
    if (best[0] >= best[1] && best[0] >= best[2]) ++wins;
    detail += fmt("%s%.2e/%.2e/%.2e", seed > 1 ? "; " : "", best[0], best[1], best[2]);
  }
  return {wins >= 4, fmt("%d/5 seeds, GA/uniform/normal best: ", wins) + detail};
}

Outcome best_monotone() {
  std::size_t bad = 0, total = 0;
  for (const auto& h : histories()) {
    ++total;
    if (!testing::non_decreasing(h)) ++bad;
  }
  return {bad == 0 && total > 0, fmt("%zu optimizer calls, %zu non-monotone", total, bad)};
}

Outcome freeze_invariants() {
  std::size_t rag = 0, rl = 0, broken = 0;
  for (const RunAudit& a : audits()) {
    for (const PhaseRecord& p : a.phases) {
      if (p.kind == Phase::RAG) {
        ++rag;
        if (p.policy_before != p.policy_after || p.start_step != p.end_step) ++broken;
      } else {
        ++rl;
        if (p.rbfn_before != p.rbfn_after) ++broken;
      }
    }
  }
  return {broken == 0 && rag > 0, fmt("%zu reference phases, %zu RL spans, %zu violations", rag, rl, broken)};
}

Outcome buffer_accounting() {
  std::size_t bad = 0;
  for (const RunAudit& a : audits()) {
    if (static_cast<long>(a.insertions) != a.rl_steps + a.rag_rollout_steps) ++bad;
  }
  const RunAudit& s = audits().front();
  return {bad == 0, fmt("%zu runs, %zu mismatches; schedule run %llu = %ld + %ld", audits().size(), bad,
                        static_cast<unsigned long long>(s.insertions), s.rl_steps, s.rag_rollout_steps)};
}

Outcome sac_gradients() {
  using namespace sac;
  SacConfig cfg;
  cfg.hidden = {8, 8};
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng init(seed), rng(seed + 100);
    SacAgent a(3, 2, cfg, init);
    a.q1_target.init(rng);
    a.q2_target.init(rng);
    const int B = 6;
    Batch b;
    b.obs = MatX::NullaryExpr(3, B, [&] { return uniform(rng, -1.0, 1.0); });
    b.next_obs = MatX::NullaryExpr(3, B, [&] { return uniform(rng, -1.0, 1.0); });
    b.action = MatX::NullaryExpr(2, B, [&] { return cfg.action_scale * uniform(rng, -0.9, 0.9); });
    b.reward = VecX::NullaryExpr(B, [&] { return uniform(rng, -1.0, 1.0); });
    b.done = VecX::Zero(B);
    b.done[0] = 1.0;
    const MatX noise = draw_noise(2, B, rng);
    const CriticLoss cl = critic_loss(b, a, 0.2, 0.99, noise);
    const VecX fd1 = testing::central_difference(
        [&](const VecX& p) {
          SacAgent c = a;
          c.q1.params() = p;
          return critic_loss(b, c, 0.2, 0.99, noise).loss1;
        },
        a.q1.params());
    const VecX fd2 = testing::central_difference(
        [&](const VecX& p) {
          SacAgent c = a;
          c.q2.params() = p;
          return critic_loss(b, c, 0.2, 0.99, noise).loss2;
        },
        a.q2.params());
    const PolicyLoss pl = policy_loss(b.obs, a, TwinCritic{a}, 0.2, noise);
    const VecX fdp = testing::central_difference(
        [&](const VecX& p) {
          SacAgent c = a;
          c.policy.params() = p;
          return policy_loss(b.obs, c, TwinCritic{c}, 0.2, noise).loss;
        },
        a.policy.params());
    worst = std::max({worst, testing::max_relative_error(cl.grad1, fd1), testing::max_relative_error(cl.grad2, fd2),
                      testing::max_relative_error(pl.grad, fdp)});
  }
  return {worst <= 1e-4, fmt("8-unit networks, 3 seeds, max relative error %.2e", worst)};
}

Outcome sac_point_mass() {
  double random = 0.0, learned = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = testing::point_mass_reach(seed, 20'000);
    random += r.random_return / 3.0;
    learned += r.learned_return / 3.0;
    detail += fmt("%s%.2f", seed > 1 ? ", " : "", r.learned_return);
  }
  // Returns are negative costs: ten times better means a tenth of the cost.
  return {learned >= random / 10.0,
          fmt("random %.2f, learned %.2f (%.1fx), per seed: ", random, learned, random / learned) + detail};
}

Outcome parallel_correctness() {
  TrainConfig cfg = testing::small_config(21);
  cfg.workers = 1;
  const bool same = make_checkpoint(parallel_train(cfg)).bytes() == make_checkpoint(train(cfg)).bytes();
  cfg.workers = 4;
  double worst = 0.0;
  long rounds = 0;
  TrainHooks hooks;
  hooks.on_gradient = [&](const sac::GradientRound& g) {
    ++rounds;
    auto check = [&](const std::vector<VecX>& parts, const VecX& mean) {
      VecX m = VecX::Zero(mean.size());
      for (const VecX& v : parts) m += v;
      worst = std::max(worst, (m / static_cast<double>(parts.size()) - mean).cwiseAbs().maxCoeff());
    };
    check(g.q1, g.q1_mean);
    check(g.q2, g.q2_mean);
    check(g.policy, g.policy_mean);
  };
  audited_train(cfg, hooks);
  return {same && rounds > 0 && worst <= 1e-12,
          fmt("K=1 %s serial; K=4 %ld rounds, max deviation %.2e", same ? "matches" : "differs from", rounds, worst)};
}

Outcome kinematics() {
  Rng rng(14);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    LegGeometry g;
    g.left = n % 2 == 0;
    const LegAngles q(uniform(rng, -0.8, 0.8), uniform(rng, -1.0, 2.5), uniform(rng, -2.7, -0.05));
    const Vec3 p = leg_fk(q, g);
    worst = std::max(worst, (leg_fk(leg_ik(p, g), g) - p).norm());
  }
  const double z = leg_fk({0.0, 0.9, -1.8}, LegGeometry{}).z();
  return {worst <= 1e-9 && std::abs(z - (-0.24864)) <= 1e-5,
          fmt("max round-trip error %.2e m, FK(0, 0.9, -1.8).z = %.8f", worst, z)};
}

Outcome cpg_limit_cycle() {
  const CpgConfig cfg;
  const int per_period = 1000;
  const double dt = cfg.period / per_period;
  HopfState s{0.05, 0.0};
  for (int i = 0; i < 10 * per_period; ++i) s = step_oscillator(s, cfg, dt);
  const double radius = s.radius();
  // Period from successive upward zero crossings of x.
  std::vector<double> up;
  double t = 0.0;
  for (int i = 0; i < 3 * per_period; ++i) {
    const HopfState n = step_oscillator(s, cfg, dt);
    if (s.x < 0.0 && n.x >= 0.0) up.push_back(t + dt * s.x / (s.x - n.x));
    s = n;
    t += dt;
  }
  const double period = up.size() >= 2 ? up[1] - up[0] : 0.0;
  const double rerr = std::abs(radius - std::sqrt(cfg.mu)) / std::sqrt(cfg.mu);
  const double perr = std::abs(period - cfg.period) / cfg.period;
  return {rerr <= 0.01 && perr <= 0.005,
          fmt("radius %.6f (%.3f%%), period %.6f s (%.3f%%)", radius, 100 * rerr, period, 100 * perr)};
}

Outcome determinism() {
  TrainConfig cfg = testing::small_config(33);
  cfg.max_steps = 2000;
  const std::string a = make_checkpoint(audited_train(cfg)).bytes();
  const std::string b = make_checkpoint(audited_train(cfg)).bytes();
  return {a == b, fmt("two serial runs, %zu checkpoint bytes, %s", a.size(), a == b ? "identical" : "different")};
}

}  // namespace
}  // namespace gaitevo

// Usage: acceptance [criterion numbers...]; runs all criteria by default.
int main(int argc, char** argv) {
  using namespace gaitevo;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"reward components on crafted states", reward_components},
      {"PD torque arithmetic and clamp", pd_arithmetic},
      {"RBFN activations against scalar evaluation", rbfn_activations},
      {"control clock: 2 s = 100 steps, 6 s = 300 steps", control_clock},
      {"reference updates at episode boundaries past 10k, 60k, 110k", rag_schedule},
      {"GA reference beats fixed reference in >= 2 of 3 seeds", ga_beats_fixed},
      {"GA candidates >= uniform and normal sampling in >= 4 of 5 seeds", ga_beats_sampling},
      {"best fitness non-decreasing in every optimizer call", best_monotone},
      {"policy frozen during reference phases, RBFN frozen during RL", freeze_invariants},
      {"buffer insertions = RL steps + reference rollout steps", buffer_accounting},
      {"SAC gradients match central differences", sac_gradients},
      {"SAC point-mass reach >= 10x better than random", sac_point_mass},
      {"parallel rounds: K=1 bitwise serial, K=4 gradient mean", parallel_correctness},
      {"kinematics round trip and initial foot height", kinematics},
      {"Hopf limit-cycle radius and period", cpg_limit_cycle},
      {"identical seed gives identical checkpoint bytes", determinism},
  };
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const int n = std::atoi(argv[a]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[a]);
      return 2;
    }
    selected[n - 1] = true;
  }
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
