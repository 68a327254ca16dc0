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

// Analytic fitness landscape over genomes: F(v) = -sum_i |v_i - v*_i|^2 with
// the optimum v* drawn per seed, so no rule starts at it.

#include "gaitevo/trajectory_opt.hpp"

namespace gaitevo::testing {

struct StubLandscape {
  Genome optimum;

  static StubLandscape random(int size, Rng& rng, double spread = 0.02) {
    StubLandscape s;
    s.optimum.v.resize(size);
    for (Vec2& x : s.optimum.v) x = {spread * standard_normal(rng), spread * standard_normal(rng)};
    return s;
  }

  FitnessRecord operator()(const Genome& g) const {
    FitnessRecord r;
    r.genome = g;
    double f = 0.0;
    for (int i = 0; i < g.size(); ++i) f -= (g.v[i] - optimum.v[i]).squaredNorm();
    r.fitness = f;
    r.steps = 1;
    return r;
  }
};

inline bool non_decreasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] < xs[i - 1]) return false;
  }
  return true;
}

}  // namespace gaitevo::testing
