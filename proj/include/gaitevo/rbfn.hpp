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

// Radial basis function network mapping the 4-leg rhythm signal to 12 joint
// references. Centers are the rhythm sampled H times across one period; only
// the linear readout (weights, bias) is ever fitted.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gaitevo/common.hpp"
#include "gaitevo/cpg.hpp"

namespace gaitevo {

using JointReference = Vec12;

struct RbfnParams {
  Eigen::Matrix<double, Eigen::Dynamic, kLegs> means;      // H x 4
  double sigma_sq = 0.04;
  Eigen::Matrix<double, Eigen::Dynamic, kJoints> weights;  // H x 12
  Vec12 bias = Vec12::Zero();

  int neurons() const { return static_cast<int>(means.rows()); }

  void validate() const {
    if (neurons() < 2) throw std::invalid_argument("RbfnParams: need at least 2 neurons");
    if (!(sigma_sq > 0.0)) throw std::invalid_argument("RbfnParams: sigma_sq must be > 0");
    if (weights.rows() != means.rows()) throw std::invalid_argument("RbfnParams: shape mismatch");
    if (!means.allFinite() || !weights.allFinite() || !bias.allFinite()) {
      throw std::invalid_argument("RbfnParams: non-finite entries");
    }
  }

  std::uint64_t checksum() const {
    std::uint64_t h = gaitevo::checksum({means.data(), static_cast<std::size_t>(means.size())});
    h = gaitevo::checksum({&sigma_sq, 1}, h);
    h = gaitevo::checksum({weights.data(), static_cast<std::size_t>(weights.size())}, h);
    return gaitevo::checksum({bias.data(), static_cast<std::size_t>(bias.size())}, h);
  }
};

/// means(i, j) = rho_j((i) * T / (H - 1)) for zero-based i.
inline Eigen::Matrix<double, Eigen::Dynamic, kLegs> compute_means(const RhythmGenerator& gen,
                                                                  int neurons) {
  if (neurons < 2) throw std::invalid_argument("compute_means: H must be >= 2");
  const double T = gen.config().period;
  Eigen::Matrix<double, Eigen::Dynamic, kLegs> m(neurons, kLegs);
  for (int i = 0; i < neurons; ++i) {
    m.row(i) = gen.at(i * T / (neurons - 1)).transpose();
  }
  return m;
}

inline RbfnParams make_rbfn(const RhythmGenerator& gen, int neurons = 20, double sigma_sq = 0.04) {
  RbfnParams p;
  p.means = compute_means(gen, neurons);
  p.sigma_sq = sigma_sq;
  p.weights = Eigen::Matrix<double, Eigen::Dynamic, kJoints>::Zero(neurons, kJoints);
  p.bias.setZero();
  return p;
}

inline VecX hidden_activations(const RhythmSignal& rho, const RbfnParams& params) {
  const int H = params.neurons();
  VecX r(H);
  for (int i = 0; i < H; ++i) {
    const double d2 = (rho.transpose() - params.means.row(i)).squaredNorm();
    r[i] = std::exp(-d2 / params.sigma_sq);
  }
  return r;
}

inline JointReference forward(const RhythmSignal& rho, const RbfnParams& params) {
  return params.weights.transpose() * hidden_activations(rho, params) + params.bias;
}

struct FitTarget {
  RhythmSignal rho;
  Vec12 joints;
};

struct FitSettings {
  double delta = 1e-3;            // rad, max per-joint error at every target
  double regularization = 1e-8;   // initial ridge strength
  int max_solves = 100;
};

inline double fit_residual(const std::vector<FitTarget>& targets, const RbfnParams& params) {
  double worst = 0.0;
  for (const auto& t : targets) {
    worst = std::max(worst, (forward(t.rho, params) - t.joints).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Fits weights and bias so every target is reproduced within delta. Ridge
/// least squares on the activation design matrix (bias unpenalized), retried
/// with weaker regularization until the residual check passes.
inline RbfnParams fit(const std::vector<FitTarget>& targets, const FitSettings& settings,
                      const RbfnParams& params) {
  if (targets.empty()) throw std::invalid_argument("fit: need at least one target");
  if (!(settings.delta > 0.0)) throw std::invalid_argument("fit: delta must be > 0");
  params.validate();

  const int H = params.neurons();
  const int n = static_cast<int>(targets.size());
  MatX design(n, H + 1);
  MatX rhs(n, kJoints);
  for (int k = 0; k < n; ++k) {
    design.row(k).head(H) = hidden_activations(targets[k].rho, params).transpose();
    design(k, H) = 1.0;
    rhs.row(k) = targets[k].joints.transpose();
  }

  RbfnParams out = params;
  double lambda = settings.regularization;
  double best = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < settings.max_solves; ++attempt) {
    MatX solution;
    if (lambda > 0.0) {
      MatX aug = MatX::Zero(n + H, H + 1);
      aug.topRows(n) = design;
      aug.bottomRows(H).leftCols(H) = std::sqrt(lambda) * MatX::Identity(H, H);
      MatX aug_rhs = MatX::Zero(n + H, kJoints);
      aug_rhs.topRows(n) = rhs;
      solution = aug.colPivHouseholderQr().solve(aug_rhs);
    } else {
      solution = design.completeOrthogonalDecomposition().solve(rhs);
    }
    out.weights = solution.topRows(H);
    out.bias = solution.row(H).transpose();
    const double res = out.weights.allFinite() && out.bias.allFinite()
                           ? fit_residual(targets, out)
                           : std::numeric_limits<double>::infinity();
    best = std::min(best, res);
    if (res <= settings.delta) return out;
    // Weaken the ridge; after it underflows fall back to the plain
    // minimum-norm solve once, then give up.
    if (lambda == 0.0) break;
    lambda = lambda > 1e-30 ? lambda * 0.1 : 0.0;
  }
  std::ostringstream msg;
  msg << "rbfn fit did not reach delta=" << settings.delta << " (best residual " << best << ")";
  throw NonConvergenceError(msg.str(), best);
}

}  // namespace gaitevo
