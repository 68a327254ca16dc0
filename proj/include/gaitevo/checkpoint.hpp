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

// Checkpoint container: named float64 arrays with shapes.
//
// Layout (all integers little-endian):
//   "GAITEVO1"
//   u64 array count
//   per array: u32 name length, name bytes, u32 rank, u64 dims[rank]
//   per array, in index order: IEEE-754 binary64 values, little-endian
//
// Arrays keep insertion order, so equal contents serialize to equal bytes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gaitevo/common.hpp"

namespace gaitevo {

inline constexpr char kCheckpointMagic[8] = {'G', 'A', 'I', 'T', 'E', 'V', 'O', '1'};

struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> data;

  bool operator==(const NamedArray& o) const {
    if (name != o.name || shape != o.shape || data.size() != o.data.size()) return false;
    return data.empty() || std::memcmp(data.data(), o.data.data(), data.size() * sizeof(double)) == 0;
  }
};

class Checkpoint {
 public:
  void put(std::string name, std::vector<std::uint64_t> shape, std::vector<double> data) {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    if (n != data.size()) throw std::invalid_argument("Checkpoint::put: shape does not match data for " + name);
    if (index_.count(name)) throw std::invalid_argument("Checkpoint::put: duplicate array " + name);
    index_[name] = arrays_.size();
    arrays_.push_back({std::move(name), std::move(shape), std::move(data)});
  }

  void put(const std::string& name, const MatX& m) {
    put(name, {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
        std::vector<double>(m.data(), m.data() + m.size()));
  }

  void put(const std::string& name, const VecX& v) {
    put(name, {static_cast<std::uint64_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size()));
  }

  void put_scalar(const std::string& name, double v) { put(name, {}, {v}); }

  /// Unsigned integer split into exact 32-bit halves (high, low).
  void put_u64(const std::string& name, std::uint64_t v) {
    put(name, {2}, {static_cast<double>(v >> 32), static_cast<double>(v & 0xffffffffULL)});
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const NamedArray& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("checkpoint has no array '" + name + "'");
    return arrays_[it->second];
  }

  VecX vector(const std::string& name) const {
    const auto& a = get(name);
    return Eigen::Map<const VecX>(a.data.data(), static_cast<Eigen::Index>(a.data.size()));
  }

  MatX matrix(const std::string& name) const {
    const auto& a = get(name);
    if (a.shape.size() != 2) throw Error("checkpoint array '" + name + "' is not a matrix");
    return Eigen::Map<const MatX>(a.data.data(), static_cast<Eigen::Index>(a.shape[0]),
                                  static_cast<Eigen::Index>(a.shape[1]));
  }

  double scalar(const std::string& name) const {
    const auto& a = get(name);
    if (a.data.size() != 1) throw Error("checkpoint array '" + name + "' is not a scalar");
    return a.data[0];
  }

  std::uint64_t u64(const std::string& name) const {
    const auto& a = get(name);
    if (a.data.size() != 2) throw Error("checkpoint array '" + name + "' is not a u64");
    return (static_cast<std::uint64_t>(a.data[0]) << 32) | static_cast<std::uint64_t>(a.data[1]);
  }

  const std::vector<NamedArray>& arrays() const { return arrays_; }

  bool operator==(const Checkpoint& o) const { return arrays_ == o.arrays_; }

  void write(std::ostream& os) const {
    os.write(kCheckpointMagic, 8);
    put_le<std::uint64_t>(os, arrays_.size());
    for (const auto& a : arrays_) {
      put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.name.size()));
      os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
      put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.shape.size()));
      for (auto d : a.shape) put_le<std::uint64_t>(os, d);
    }
    for (const auto& a : arrays_) {
      for (double v : a.data) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    }
    if (!os) throw Error("checkpoint write failed");
  }

  static Checkpoint read(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw Error("not a checkpoint (bad magic)");
    const auto count = get_le<std::uint64_t>(is);
    std::vector<NamedArray> arrays(count);
    for (auto& a : arrays) {
      const auto len = get_le<std::uint32_t>(is);
      a.name.resize(len);
      is.read(a.name.data(), len);
      const auto rank = get_le<std::uint32_t>(is);
      a.shape.resize(rank);
      for (auto& d : a.shape) d = get_le<std::uint64_t>(is);
      if (!is) throw Error("truncated checkpoint index");
    }
    Checkpoint ck;
    for (auto& a : arrays) {
      std::uint64_t n = 1;
      for (auto d : a.shape) n *= d;
      a.data.resize(n);
      for (auto& v : a.data) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
      if (!is) throw Error("truncated checkpoint data");
      ck.put(std::move(a.name), std::move(a.shape), std::move(a.data));
    }
    return ck;
  }

  std::string bytes() const {
    std::ostringstream os(std::ios::binary);
    write(os);
    return os.str();
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    write(f);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open checkpoint '" + path + "'");
    return read(f);
  }

 private:
  template <typename U>
  static void put_le(std::ostream& os, U v) {
    char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, sizeof(U));
  }

  template <typename U>
  static U get_le(std::istream& is) {
    unsigned char b[sizeof(U)] = {};
    is.read(reinterpret_cast<char*>(b), sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }

  std::vector<NamedArray> arrays_;
  std::map<std::string, std::size_t> index_;
};

/// Engine state as (high, low) 32-bit halves of each word, in the engine's
/// own text order.
inline std::vector<double> rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  std::istringstream is(os.str());
  std::vector<double> out;
  for (unsigned long long w; is >> w;) {
    out.push_back(static_cast<double>(w >> 32));
    out.push_back(static_cast<double>(w & 0xffffffffULL));
  }
  return out;
}

inline Rng rng_from_state(const std::vector<double>& halves) {
  if (halves.size() % 2 != 0) throw Error("rng state has odd length");
  std::ostringstream os;
  for (std::size_t i = 0; i < halves.size(); i += 2) {
    const auto w = (static_cast<std::uint64_t>(halves[i]) << 32) | static_cast<std::uint64_t>(halves[i + 1]);
    os << w << ' ';
  }
  Rng rng;
  std::istringstream is(os.str());
  is >> rng;
  if (!is) throw Error("malformed rng state");
  return rng;
}

}  // namespace gaitevo
