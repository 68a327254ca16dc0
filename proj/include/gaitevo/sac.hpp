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

// Soft actor-critic: tanh-squashed Gaussian policy, twin soft Q-functions with
// Polyak-averaged targets, fixed temperature, and a uniform replay buffer.
//
// Every loss takes its Gaussian noise as an argument so gradients can be
// checked against finite differences with the sample held fixed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <unordered_set>
#include <vector>

#include "gaitevo/common.hpp"
#include "gaitevo/nn.hpp"

namespace gaitevo::sac {

using Network = nn::Mlp<double>;
using Optimizer = nn::Adam<double>;

struct SacConfig {
  std::vector<int> hidden{256, 256};
  double lr = 3e-4;
  double alpha = 0.2;
  double gamma = 0.99;
  double tau = 0.005;
  int batch_size = 256;
  double action_scale = 0.2;  // rad per joint
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  std::size_t buffer_capacity = 1'000'000;
};

struct Transition {
  VecX obs;
  VecX action;  // policy output space, already scaled
  double reward = 0.0;
  VecX next_obs;
  bool done = false;
};

struct Batch {
  MatX obs;       // obs_dim x B
  MatX action;    // act_dim x B
  VecX reward;    // B
  MatX next_obs;  // obs_dim x B
  VecX done;      // B, 1.0 for terminal
  int size() const { return static_cast<int>(reward.size()); }
};

/// Ring buffer of transitions. Appends are serialized; sampling is uniform
/// without replacement inside one minibatch.
class ReplayBuffer {
 public:
  ReplayBuffer(int obs_dim, int act_dim, std::size_t capacity = 1'000'000)
      : obs_dim_(obs_dim), act_dim_(act_dim), capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  }

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  std::uint64_t insertions() const { return insertions_; }

  void push(const Transition& t) {
    if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_ || t.action.size() != act_dim_) {
      throw std::invalid_argument("ReplayBuffer::push: dimension mismatch");
    }
    std::lock_guard<std::mutex> lock(mutex_);
    std::size_t slot;
    if (size_ < capacity_) {
      slot = size_++;
      obs_.resize(size_ * obs_dim_);
      next_obs_.resize(size_ * obs_dim_);
      act_.resize(size_ * act_dim_);
      reward_.resize(size_);
      done_.resize(size_);
    } else {
      slot = head_;
      head_ = (head_ + 1) % capacity_;
    }
    std::copy(t.obs.data(), t.obs.data() + obs_dim_, obs_.begin() + slot * obs_dim_);
    std::copy(t.next_obs.data(), t.next_obs.data() + obs_dim_, next_obs_.begin() + slot * obs_dim_);
    std::copy(t.action.data(), t.action.data() + act_dim_, act_.begin() + slot * act_dim_);
    reward_[slot] = t.reward;
    done_[slot] = t.done ? 1.0 : 0.0;
    ++insertions_;
  }

  Transition at(std::size_t i) const {
    Transition t;
    t.obs = Eigen::Map<const VecX>(obs_.data() + i * obs_dim_, obs_dim_);
    t.next_obs = Eigen::Map<const VecX>(next_obs_.data() + i * obs_dim_, obs_dim_);
    t.action = Eigen::Map<const VecX>(act_.data() + i * act_dim_, act_dim_);
    t.reward = reward_[i];
    t.done = done_[i] != 0.0;
    return t;
  }

  /// Distinct indices (Floyd's algorithm), in draw order.
  std::vector<std::size_t> sample_indices(int batch, Rng& rng) const {
    if (batch < 0 || static_cast<std::size_t>(batch) > size_) {
      throw std::invalid_argument("ReplayBuffer::sample: batch larger than buffer");
    }
    std::vector<std::size_t> out;
    std::unordered_set<std::size_t> seen;
    out.reserve(batch);
    for (std::size_t j = size_ - batch; j < size_; ++j) {
      std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
      if (seen.count(t)) t = j;
      seen.insert(t);
      out.push_back(t);
    }
    return out;
  }

  Batch sample(int batch, Rng& rng) const {
    const auto idx = sample_indices(batch, rng);
    Batch b;
    b.obs.resize(obs_dim_, batch);
    b.next_obs.resize(obs_dim_, batch);
    b.action.resize(act_dim_, batch);
    b.reward.resize(batch);
    b.done.resize(batch);
    for (int k = 0; k < batch; ++k) {
      const std::size_t i = idx[k];
      b.obs.col(k) = Eigen::Map<const VecX>(obs_.data() + i * obs_dim_, obs_dim_);
      b.next_obs.col(k) = Eigen::Map<const VecX>(next_obs_.data() + i * obs_dim_, obs_dim_);
      b.action.col(k) = Eigen::Map<const VecX>(act_.data() + i * act_dim_, act_dim_);
      b.reward[k] = reward_[i];
      b.done[k] = done_[i];
    }
    return b;
  }

 private:
  int obs_dim_;
  int act_dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::uint64_t insertions_ = 0;
  std::vector<double> obs_, next_obs_, act_, reward_, done_;
  mutable std::mutex mutex_;
};

struct SacAgent {
  SacConfig cfg;
  int obs_dim = 0;
  int act_dim = 0;
  VecX obs_scale;  // fixed input normalization, elementwise
  Network policy;  // obs -> [mean; log_std]
  Network q1, q2, q1_target, q2_target;  // [obs; action / scale] -> Q
  Optimizer policy_opt, q1_opt, q2_opt;

  SacAgent() = default;

  SacAgent(int observation_dim, int action_dim, const SacConfig& config, Rng& init_rng)
      : cfg(config), obs_dim(observation_dim), act_dim(action_dim) {
    obs_scale = VecX::Ones(obs_dim);
    auto sizes = [&](int in, int out) {
      std::vector<int> s{in};
      s.insert(s.end(), cfg.hidden.begin(), cfg.hidden.end());
      s.push_back(out);
      return s;
    };
    policy = Network(sizes(obs_dim, 2 * act_dim));
    q1 = Network(sizes(obs_dim + act_dim, 1));
    q2 = Network(sizes(obs_dim + act_dim, 1));
    policy.init(init_rng);
    q1.init(init_rng);
    q2.init(init_rng);
    q1_target = q1;
    q2_target = q2;
    policy_opt = Optimizer(policy.num_params(), cfg.lr);
    q1_opt = Optimizer(q1.num_params(), cfg.lr);
    q2_opt = Optimizer(q2.num_params(), cfg.lr);
  }

  std::uint64_t policy_checksum() const {
    return checksum({policy.params().data(), static_cast<std::size_t>(policy.num_params())});
  }
  std::uint64_t critic_checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const Network* n : {&q1, &q2, &q1_target, &q2_target}) {
      h = checksum({n->params().data(), static_cast<std::size_t>(n->num_params())}, h);
    }
    return h;
  }

  MatX scale_obs(const MatX& obs) const {
    return (obs.array().colwise() * obs_scale.array()).matrix();
  }
};

// ---------------------------------------------------------------------------
// Policy

struct PolicyBatch {
  MatX mean;
  MatX log_std;  // clamped
  MatX noise;
  MatX pre_tanh;  // u = mean + std * noise
  MatX action;    // scale * tanh(u)
  VecX logp;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> clamped;
  Network::Cache cache;
};

namespace detail {

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2), stable for large |u|.
inline double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

}  // namespace detail

inline PolicyBatch policy_forward(const SacAgent& agent, const MatX& obs, const MatX& noise) {
  const int A = agent.act_dim;
  const int B = static_cast<int>(obs.cols());
  if (noise.rows() != A || noise.cols() != B) throw std::invalid_argument("policy_forward: noise shape");
  PolicyBatch pb;
  const MatX out = agent.policy.forward(agent.scale_obs(obs), &pb.cache);
  pb.mean = out.topRows(A);
  const MatX raw_log_std = out.bottomRows(A);
  pb.clamped = (raw_log_std.array() < agent.cfg.log_std_min) ||
               (raw_log_std.array() > agent.cfg.log_std_max);
  pb.log_std = raw_log_std.array().max(agent.cfg.log_std_min).min(agent.cfg.log_std_max).matrix();
  pb.noise = noise;
  pb.pre_tanh = pb.mean.array() + pb.log_std.array().exp() * noise.array();
  pb.action = agent.cfg.action_scale * pb.pre_tanh.array().tanh();
  pb.logp.resize(B);
  const double log_scale = std::log(agent.cfg.action_scale);
  for (int b = 0; b < B; ++b) {
    double lp = 0.0;
    for (int i = 0; i < A; ++i) {
      const double e = noise(i, b);
      lp += -0.5 * e * e - pb.log_std(i, b) - detail::kHalfLog2Pi;
      lp -= log_scale + detail::log_one_minus_tanh_sq(pb.pre_tanh(i, b));
    }
    pb.logp[b] = lp;
  }
  return pb;
}

inline MatX draw_noise(int rows, int cols, Rng& rng) {
  MatX n(rows, cols);
  for (Eigen::Index j = 0; j < n.cols(); ++j) {
    for (Eigen::Index i = 0; i < n.rows(); ++i) n(i, j) = standard_normal(rng);
  }
  return n;
}

struct ActionSample {
  VecX action;
  double logp = 0.0;
};

/// a = scale * tanh(mean + std * eps) with its exact log-density.
inline ActionSample policy_sample(const VecX& obs, const SacAgent& agent, Rng& rng) {
  if (!obs.allFinite()) throw std::invalid_argument("policy_sample: non-finite observation");
  const PolicyBatch pb = policy_forward(agent, obs, draw_noise(agent.act_dim, 1, rng));
  return {pb.action.col(0), pb.logp[0]};
}

inline VecX policy_mean_action(const VecX& obs, const SacAgent& agent) {
  const MatX out = agent.policy.forward(agent.scale_obs(obs));
  return agent.cfg.action_scale * out.topRows(agent.act_dim).col(0).array().tanh().matrix();
}

/// Log-density of the squashed policy at a given action (|a| < scale).
inline double policy_log_density(const VecX& obs, const VecX& action, const SacAgent& agent) {
  const MatX out = agent.policy.forward(agent.scale_obs(obs));
  const double s = agent.cfg.action_scale;
  double lp = 0.0;
  for (int i = 0; i < agent.act_dim; ++i) {
    const double mean = out(i, 0);
    const double log_std =
        std::clamp(out(agent.act_dim + i, 0), agent.cfg.log_std_min, agent.cfg.log_std_max);
    const double u = std::atanh(action[i] / s);
    const double e = (u - mean) / std::exp(log_std);
    lp += -0.5 * e * e - log_std - detail::kHalfLog2Pi - std::log(s) -
          detail::log_one_minus_tanh_sq(u);
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Critics

inline MatX critic_input(const SacAgent& agent, const MatX& obs, const MatX& action) {
  MatX in(agent.obs_dim + agent.act_dim, obs.cols());
  in.topRows(agent.obs_dim) = agent.scale_obs(obs);
  in.bottomRows(agent.act_dim) = action / agent.cfg.action_scale;
  return in;
}

/// min(Q1, Q2) of the online critics and d(min)/d(action).
struct TwinCritic {
  const SacAgent& agent;

  Eigen::RowVectorXd operator()(const MatX& obs, const MatX& action, MatX* dq_da) const {
    const MatX in = critic_input(agent, obs, action);
    Network::Cache c1, c2;
    const MatX o1 = agent.q1.forward(in, &c1);
    const MatX o2 = agent.q2.forward(in, &c2);
    const int B = static_cast<int>(obs.cols());
    Eigen::RowVectorXd q(B);
    MatX pick1 = MatX::Zero(1, B), pick2 = MatX::Zero(1, B);
    for (int b = 0; b < B; ++b) {
      if (o1(0, b) <= o2(0, b)) {
        q[b] = o1(0, b);
        pick1(0, b) = 1.0;
      } else {
        q[b] = o2(0, b);
        pick2(0, b) = 1.0;
      }
    }
    if (dq_da) {
      const MatX d1 = agent.q1.backward(c1, pick1, nullptr);
      const MatX d2 = agent.q2.backward(c2, pick2, nullptr);
      *dq_da = (d1 + d2).bottomRows(agent.act_dim) / agent.cfg.action_scale;
    }
    return q;
  }
};

struct CriticLoss {
  double loss1 = 0.0;
  double loss2 = 0.0;
  VecX grad1;
  VecX grad2;
  VecX target;  // Q-hat per sample
};

/// Soft Bellman residual for both online critics. `next_noise` drives a'.
inline CriticLoss critic_loss(const Batch& batch, const SacAgent& agent, double alpha, double gamma,
                              const MatX& next_noise) {
  const int B = batch.size();
  if (B == 0) throw std::invalid_argument("critic_loss: empty batch");
  const PolicyBatch next = policy_forward(agent, batch.next_obs, next_noise);
  const MatX next_in = critic_input(agent, batch.next_obs, next.action);
  const MatX t1 = agent.q1_target.forward(next_in);
  const MatX t2 = agent.q2_target.forward(next_in);
  CriticLoss out;
  out.target.resize(B);
  for (int b = 0; b < B; ++b) {
    const double v_next = std::min(t1(0, b), t2(0, b)) - alpha * next.logp[b];
    out.target[b] = batch.reward[b] + gamma * (1.0 - batch.done[b]) * v_next;
  }
  const MatX in = critic_input(agent, batch.obs, batch.action);
  auto one = [&](const Network& net, double& loss, VecX& grad) {
    Network::Cache cache;
    const MatX q = net.forward(in, &cache);
    const MatX resid = q - out.target.transpose();
    loss = 0.5 * resid.squaredNorm() / B;
    grad = VecX::Zero(net.num_params());
    net.backward(cache, resid / B, &grad);
  };
  one(agent.q1, out.loss1, out.grad1);
  one(agent.q2, out.loss2, out.grad2);
  return out;
}

struct PolicyLoss {
  double loss = 0.0;
  VecX grad;
  double mean_logp = 0.0;
};

/// J = mean(alpha * logp(a|s) - Q(s, a)) with a reparameterized from `noise`.
/// `critic(obs, action, &dq_da)` returns a row of Q values.
template <typename Critic>
PolicyLoss policy_loss(const MatX& obs, const SacAgent& agent, const Critic& critic, double alpha,
                       const MatX& noise) {
  const int B = static_cast<int>(obs.cols());
  if (B == 0) throw std::invalid_argument("policy_loss: empty batch");
  const int A = agent.act_dim;
  const PolicyBatch pb = policy_forward(agent, obs, noise);
  MatX dq_da;
  const Eigen::RowVectorXd q = critic(obs, pb.action, &dq_da);

  PolicyLoss out;
  out.loss = (alpha * pb.logp.transpose() - q).sum() / B;
  out.mean_logp = pb.logp.mean();

  const double s = agent.cfg.action_scale;
  MatX d_out(2 * A, B);
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < A; ++i) {
      const double u = pb.pre_tanh(i, b);
      const double th = std::tanh(u);
      const double du = (alpha * 2.0 * th - dq_da(i, b) * s * (1.0 - th * th)) / B;
      d_out(i, b) = du;
      const double sigma = std::exp(pb.log_std(i, b));
      d_out(A + i, b) = pb.clamped(i, b) ? 0.0 : -alpha / B + du * sigma * pb.noise(i, b);
    }
  }
  out.grad = VecX::Zero(agent.policy.num_params());
  agent.policy.backward(pb.cache, d_out, &out.grad);
  return out;
}

// ---------------------------------------------------------------------------
// Updates

inline void soft_update(Network& target, const Network& online, double tau) {
  if (tau >= 1.0) {
    target.params() = online.params();
    return;
  }
  target.params() += tau * (online.params() - target.params());
}

/// Per-worker and averaged gradients of one aggregation round.
struct GradientRound {
  std::vector<VecX> q1, q2, policy;
  VecX q1_mean, q2_mean, policy_mean;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double policy_loss = 0.0;
  double mean_logp = 0.0;
};

inline VecX average(const std::vector<VecX>& grads) {
  VecX m = grads.front();
  for (std::size_t k = 1; k < grads.size(); ++k) m += grads[k];
  return m / static_cast<double>(grads.size());
}

/// Runs job(0..n-1); the default runs them in order on the calling thread.
using Executor = std::function<void(int, const std::function<void(int)>&)>;

inline void run_serial(int n, const std::function<void(int)>& job) {
  for (int k = 0; k < n; ++k) job(k);
}

/// One gradient step on both critics, then the policy, then the targets.
/// Worker k draws its noise from rngs[k]; the step uses the mean of the
/// per-worker gradients.
inline UpdateStats update(SacAgent& agent, const std::vector<Batch>& batches, const std::vector<Rng*>& rngs,
                          const std::function<void(const GradientRound&)>& on_round = {},
                          const Executor& exec = run_serial) {
  if (batches.empty()) throw std::invalid_argument("update: no minibatches");
  if (rngs.size() != batches.size()) throw std::invalid_argument("update: one rng per minibatch");
  const int K = static_cast<int>(batches.size());
  GradientRound round;
  round.q1.resize(K);
  round.q2.resize(K);
  round.policy.resize(K);
  std::vector<double> closs(K), ploss(K), logp(K);

  exec(K, [&](int k) {
    const MatX noise = draw_noise(agent.act_dim, batches[k].size(), *rngs[k]);
    CriticLoss cl = critic_loss(batches[k], agent, agent.cfg.alpha, agent.cfg.gamma, noise);
    closs[k] = 0.5 * (cl.loss1 + cl.loss2);
    round.q1[k] = std::move(cl.grad1);
    round.q2[k] = std::move(cl.grad2);
  });
  round.q1_mean = average(round.q1);
  round.q2_mean = average(round.q2);
  agent.q1_opt.lr = agent.cfg.lr;
  agent.q2_opt.lr = agent.cfg.lr;
  agent.policy_opt.lr = agent.cfg.lr;
  agent.q1_opt.step(agent.q1.params(), round.q1_mean);
  agent.q2_opt.step(agent.q2.params(), round.q2_mean);

  const TwinCritic critic{agent};
  exec(K, [&](int k) {
    const MatX noise = draw_noise(agent.act_dim, batches[k].size(), *rngs[k]);
    PolicyLoss pl = policy_loss(batches[k].obs, agent, critic, agent.cfg.alpha, noise);
    ploss[k] = pl.loss;
    logp[k] = pl.mean_logp;
    round.policy[k] = std::move(pl.grad);
  });
  round.policy_mean = average(round.policy);
  agent.policy_opt.step(agent.policy.params(), round.policy_mean);

  soft_update(agent.q1_target, agent.q1, agent.cfg.tau);
  soft_update(agent.q2_target, agent.q2, agent.cfg.tau);
  if (on_round) on_round(round);

  UpdateStats stats;
  for (int k = 0; k < K; ++k) {
    stats.critic_loss += closs[k] / K;
    stats.policy_loss += ploss[k] / K;
    stats.mean_logp += logp[k] / K;
  }
  return stats;
}

/// Serial update from the buffer. Empty result when the buffer is smaller than
/// one minibatch.
inline std::optional<UpdateStats> update(const ReplayBuffer& buffer, SacAgent& agent, Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(agent.cfg.batch_size)) return std::nullopt;
  std::vector<Batch> batches{buffer.sample(agent.cfg.batch_size, rng)};
  return update(agent, batches, {&rng});
}

}  // namespace gaitevo::sac
