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

// Frozen reference values produced by tests/oracles/generate.py.

#include <fstream>
#include <string>

#include "json.hpp"

namespace gaitevo::testing {

inline const nlohmann::json& oracles() {
  static const nlohmann::json data = [] {
    std::ifstream f(std::string(GAITEVO_TEST_DATA) + "/oracles.json");
    return nlohmann::json::parse(f);
  }();
  return data;
}

}  // namespace gaitevo::testing
