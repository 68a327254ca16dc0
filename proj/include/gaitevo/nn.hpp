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

// Fully connected tanh network with a linear output layer and hand-written
// backpropagation. All parameters live in one flat vector so optimizers,
// checkpoints and gradient averaging treat a network as a single array.
// Batches are column-major: one sample per column.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "gaitevo/common.hpp"

namespace gaitevo::nn {

template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using ConstMap = Eigen::Map<const Matrix>;
  using Map = Eigen::Map<Matrix>;

  struct Cache {
    std::vector<Matrix> activations;  // [0] is the input
  };

  Mlp() = default;

  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need input and output sizes");
    int offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(offset);
      offset += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_ = Vector::Zero(offset);
  }

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& sizes() const { return sizes_; }
  int num_params() const { return static_cast<int>(params_.size()); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  ConstMap weight(int l) const { return ConstMap(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]); }
  Map weight(int l) { return Map(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]); }
  auto bias(int l) const {
    return ConstMap(params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1], 1);
  }
  auto bias(int l) {
    return Map(params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1], 1);
  }

  /// Uniform(+-1/sqrt(fan_in)) for weights and biases.
  void init(Rng& rng, Scalar last_layer_scale = Scalar(1)) {
    for (int l = 0; l < layers(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
      const double s = l + 1 == layers() ? static_cast<double>(last_layer_scale) : 1.0;
      auto W = weight(l);
      for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = Scalar(s * uniform(rng, -bound, bound));
      auto b = bias(l);
      for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = Scalar(s * uniform(rng, -bound, bound));
    }
  }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    if (x.rows() != input_size()) throw std::invalid_argument("Mlp::forward: input size mismatch");
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(x);
    }
    Matrix h = x;
    for (int l = 0; l < layers(); ++l) {
      Matrix z = weight(l) * h;
      z.colwise() += bias(l).col(0);
      if (l + 1 < layers()) z = z.array().tanh().matrix();
      if (cache) cache->activations.push_back(z);
      h = std::move(z);
    }
    return h;
  }

  /// Backpropagates d(loss)/d(output). Adds parameter gradients into `grad`
  /// when non-null and returns d(loss)/d(input).
  Matrix backward(const Cache& cache, const Matrix& d_out, Vector* grad) const {
    Matrix delta = d_out;
    for (int l = layers() - 1; l >= 0; --l) {
      const Matrix& input = cache.activations[l];
      if (grad) {
        Eigen::Map<Matrix> gW(grad->data() + offsets_[l], sizes_[l + 1], sizes_[l]);
        Eigen::Map<Matrix> gb(grad->data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1], 1);
        gW.noalias() += delta * input.transpose();
        gb += delta.rowwise().sum();
      }
      Matrix d_in = weight(l).transpose() * delta;
      if (l > 0) d_in = (d_in.array() * (Scalar(1) - input.array().square())).matrix();
      delta = std::move(d_in);
    }
    return delta;
  }

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  Vector params_;
};

/// Adaptive-moment gradient descent on a flat parameter vector.
template <typename Scalar>
struct Adam {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vector m;
  Vector v;
  long steps = 0;

  Adam() = default;
  Adam(int n, double learning_rate) : lr(learning_rate), m(Vector::Zero(n)), v(Vector::Zero(n)) {}

  void step(Vector& params, const Vector& grad) {
    ++steps;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      params[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
};

}  // namespace gaitevo::nn
