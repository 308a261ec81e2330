// Copyright 2026 The anneal_range Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace anneal_range {

/// Largest problem the brute-force routines will touch.
inline constexpr std::size_t kMaxEnumerableQubits = 24;

/// Hardware-representable magnitude for couplings and fields.
inline constexpr double kMaxIsingMagnitude = 2.0;

/// Spin configuration in the computational basis.
///
/// Spin +1 is bit 0 (arrow up), spin -1 is bit 1. Bitstrings put qubit 0 in
/// the leftmost character, and the packed index puts qubit 0 in the most
/// significant bit, so index order and bitstring order agree.
class SpinConfig {
 public:
  SpinConfig() = default;

  explicit SpinConfig(std::vector<std::int8_t> spins) : spins_(std::move(spins)) {
    for (auto s : spins_) {
      if (s != 1 && s != -1) throw std::invalid_argument("spin values must be +1 or -1");
    }
  }

  static SpinConfig all_up(std::size_t n) { return SpinConfig(std::vector<std::int8_t>(n, 1)); }

  static SpinConfig from_index(std::uint64_t index, std::size_t n) {
    std::vector<std::int8_t> s(n);
    for (std::size_t q = 0; q < n; ++q) s[q] = ((index >> (n - 1 - q)) & 1U) ? -1 : 1;
    return SpinConfig(std::move(s));
  }

  static SpinConfig from_bits(std::string_view bits) {
    std::vector<std::int8_t> s;
    s.reserve(bits.size());
    for (char c : bits) {
      if (c == '0') {
        s.push_back(1);
      } else if (c == '1') {
        s.push_back(-1);
      } else {
        throw std::invalid_argument("bitstring may only contain '0' and '1'");
      }
    }
    return SpinConfig(std::move(s));
  }

  std::size_t size() const { return spins_.size(); }
  std::int8_t operator[](std::size_t q) const { return spins_.at(q); }
  const std::vector<std::int8_t>& spins() const { return spins_; }

  std::uint64_t index() const {
    if (spins_.size() > 64) throw std::length_error("configuration too long to pack");
    std::uint64_t idx = 0;
    for (auto s : spins_) idx = (idx << 1U) | (s == -1 ? 1U : 0U);
    return idx;
  }

  std::string to_bits() const {
    std::string out;
    out.reserve(spins_.size());
    for (auto s : spins_) out.push_back(s == 1 ? '0' : '1');
    return out;
  }

  SpinConfig flipped(std::size_t q) const {
    SpinConfig out = *this;
    out.spins_.at(q) = static_cast<std::int8_t>(-out.spins_[q]);
    return out;
  }

  bool operator==(const SpinConfig&) const = default;
  // Lexicographic on the bitstring: +1 ('0') sorts before -1 ('1').
  std::strong_ordering operator<=>(const SpinConfig& other) const {
    return index_order(other);
  }

 private:
  std::strong_ordering index_order(const SpinConfig& other) const {
    const auto n = std::min(spins_.size(), other.spins_.size());
    for (std::size_t q = 0; q < n; ++q) {
      if (spins_[q] != other.spins_[q]) {
        return spins_[q] == 1 ? std::strong_ordering::less : std::strong_ordering::greater;
      }
    }
    return spins_.size() <=> other.spins_.size();
  }

  std::vector<std::int8_t> spins_;
};

struct Coupling {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;

  bool operator==(const Coupling&) const = default;
};

/// Dimensionless Ising problem H = sum J_ij s_i s_j + sum h_i s_i on an explicit graph.
class IsingProblem {
 public:
  IsingProblem() = default;

  IsingProblem(std::size_t n_qubits, std::vector<Coupling> couplings, std::vector<double> fields)
      : n_(n_qubits), couplings_(std::move(couplings)), fields_(std::move(fields)) {
    if (n_ == 0) throw std::invalid_argument("problem needs at least one qubit");
    if (fields_.size() != n_) throw std::invalid_argument("field vector length must equal n_qubits");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto& c : couplings_) {
      if (c.i == c.j) throw std::invalid_argument("self-coupling is not allowed");
      if (c.i > c.j) std::swap(c.i, c.j);
      if (c.j >= n_) throw std::invalid_argument("coupling index out of range");
      if (!seen.emplace(c.i, c.j).second) throw std::invalid_argument("duplicate coupling");
      if (std::abs(c.value) > kMaxIsingMagnitude) throw std::invalid_argument("|J| exceeds hardware range");
    }
    for (double h : fields_) {
      if (std::abs(h) > kMaxIsingMagnitude) throw std::invalid_argument("|h| exceeds hardware range");
    }
  }

  std::size_t n_qubits() const { return n_; }
  const std::vector<Coupling>& couplings() const { return couplings_; }
  const std::vector<double>& fields() const { return fields_; }

  bool operator==(const IsingProblem&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<Coupling> couplings_;
  std::vector<double> fields_;
};

inline void require_same_length(const IsingProblem& p, const SpinConfig& s) {
  if (s.size() != p.n_qubits()) throw std::invalid_argument("configuration length does not match problem");
}

inline double energy(const IsingProblem& problem, const SpinConfig& config) {
  require_same_length(problem, config);
  double e = 0.0;
  for (const auto& c : problem.couplings()) e += c.value * config[c.i] * config[c.j];
  for (std::size_t q = 0; q < problem.n_qubits(); ++q) e += problem.fields()[q] * config[q];
  return e;
}

/// Classical energies of every configuration, indexed by SpinConfig::index().
///
/// Terms are accumulated in the same order as energy(), so entries agree with it
/// bit for bit.
inline std::vector<double> energy_table(const IsingProblem& problem) {
  const auto n = problem.n_qubits();
  if (n > kMaxEnumerableQubits) throw std::length_error("problem too large to enumerate");
  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<double> table(dim);
  auto spin = [n](std::uint64_t idx, std::size_t q) { return ((idx >> (n - 1 - q)) & 1U) ? -1.0 : 1.0; };
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    double e = 0.0;
    for (const auto& c : problem.couplings()) e += c.value * spin(idx, c.i) * spin(idx, c.j);
    for (std::size_t q = 0; q < n; ++q) e += problem.fields()[q] * spin(idx, q);
    table[idx] = e;
  }
  return table;
}

struct Level {
  double energy = 0.0;
  SpinConfig config;
};

/// All 2^n configurations sorted by energy; ties keep bitstring order.
inline std::vector<Level> enumerate(const IsingProblem& problem) {
  const auto table = energy_table(problem);
  std::vector<std::uint64_t> order(table.size());
  std::iota(order.begin(), order.end(), std::uint64_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return table[a] < table[b]; });
  std::vector<Level> out;
  out.reserve(order.size());
  for (auto idx : order) out.push_back({table[idx], SpinConfig::from_index(idx, problem.n_qubits())});
  return out;
}

inline std::size_t hamming(const SpinConfig& a, const SpinConfig& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming distance needs equal lengths");
  std::size_t d = 0;
  for (std::size_t q = 0; q < a.size(); ++q) d += (a[q] != b[q]);
  return d;
}

/// Spin-reversal gauge: h_i -> m_i h_i, J_ij -> m_i m_j J_ij.
inline IsingProblem gauge_transform(const IsingProblem& problem, const SpinConfig& mask) {
  require_same_length(problem, mask);
  auto couplings = problem.couplings();
  for (auto& c : couplings) c.value *= mask[c.i] * mask[c.j];
  auto fields = problem.fields();
  for (std::size_t q = 0; q < fields.size(); ++q) fields[q] *= mask[q];
  return IsingProblem(problem.n_qubits(), std::move(couplings), std::move(fields));
}

/// Maps a configuration between the original and gauged frames; it is its own inverse.
inline SpinConfig apply_gauge(const SpinConfig& config, const SpinConfig& mask) {
  if (config.size() != mask.size()) throw std::invalid_argument("gauge mask length mismatch");
  std::vector<std::int8_t> s(config.size());
  for (std::size_t q = 0; q < s.size(); ++q) s[q] = static_cast<std::int8_t>(config[q] * mask[q]);
  return SpinConfig(std::move(s));
}

}  // namespace anneal_range
