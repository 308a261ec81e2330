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

// The 16-qubit search-range gadget: an inner ring of eight ferromagnetically
// coupled qubits, one pendant per inner qubit, and a tunable edge between two
// pendants that sets the barrier height between start state and true minimum.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anneal_range/ising.hpp"

namespace anneal_range {

enum class Role { OuterRing, InnerPlain, InnerDeep, InnerFree };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::OuterRing: return "OuterRing";
    case Role::InnerPlain: return "InnerPlain";
    case Role::InnerDeep: return "InnerDeep";
    case Role::InnerFree: return "InnerFree";
  }
  return "?";
}

inline double role_field(Role r) {
  switch (r) {
    case Role::OuterRing: return 1.0;
    case Role::InnerPlain: return -1.0;
    case Role::InnerDeep: return -1.95;
    case Role::InnerFree: return 0.0;
  }
  return 0.0;
}

enum class OutcomeClass { Start, TrueMin, FalseMin, Other };

inline const char* outcome_name(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::Start: return "start";
    case OutcomeClass::TrueMin: return "true";
    case OutcomeClass::FalseMin: return "false";
    case OutcomeClass::Other: return "other";
  }
  return "?";
}

inline constexpr std::size_t kGadgetQubits = 16;
inline constexpr std::size_t kRingSize = 8;
inline constexpr double kFalseGap = 0.2;
inline constexpr double kEnergyTol = 1e-12;
inline constexpr double kFalseMatchTol = 1e-9;

// Qubits 0..7 form the inner ring, 8 + k is the pendant of inner qubit k.
inline constexpr std::size_t pendant_of(std::size_t inner) { return kRingSize + inner; }
inline constexpr std::size_t inner_of(std::size_t outer) { return outer - kRingSize; }
inline constexpr bool is_inner(std::size_t q) { return q < kRingSize; }

struct GadgetSpec {
  double J_t = 0.0;
  std::array<Role, kGadgetQubits> role_map{};
  std::pair<std::size_t, std::size_t> barrier_pair{};
  SpinConfig start_state;
  SpinConfig true_min;
  std::vector<SpinConfig> false_set;  // sorted in bitstring order
  double true_energy = 0.0;
  double start_energy = 0.0;

  bool in_false_set(const SpinConfig& c) const {
    return std::binary_search(false_set.begin(), false_set.end(), c);
  }

  SpinConfig barrier_state() const { return start_state.flipped(barrier_pair.first); }
};

struct Gadget {
  GadgetSpec spec;
  IsingProblem problem;
};

class GadgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline IsingProblem gadget_problem(const std::array<Role, kRingSize>& inner_roles,
                                   std::pair<std::size_t, std::size_t> barrier, double J_t) {
  std::vector<Coupling> couplings;
  for (std::size_t k = 0; k < kRingSize; ++k) {
    couplings.push_back({k, (k + 1) % kRingSize, -1.0});
    couplings.push_back({k, pendant_of(k), -1.0});
  }
  couplings.push_back({barrier.first, barrier.second, -J_t});
  std::vector<double> fields(kGadgetQubits);
  for (std::size_t k = 0; k < kRingSize; ++k) {
    fields[k] = role_field(inner_roles[k]);
    fields[pendant_of(k)] = role_field(Role::OuterRing);
  }
  return IsingProblem(kGadgetQubits, std::move(couplings), std::move(fields));
}

namespace detail {

inline SpinConfig start_from_true(const SpinConfig& true_min, std::pair<std::size_t, std::size_t> barrier) {
  return true_min.flipped(barrier.first)
      .flipped(barrier.second)
      .flipped(inner_of(barrier.first))
      .flipped(inner_of(barrier.second));
}

// Single-flip descent from `from` to `to` through the inner spins they differ
// on, never going uphill. Tries every order, which is cheap for a handful of spins.
inline bool has_downhill_inner_path(const IsingProblem& p, const SpinConfig& from, const SpinConfig& to) {
  std::vector<std::size_t> diff;
  for (std::size_t q = 0; q < from.size(); ++q) {
    if (from[q] != to[q]) diff.push_back(q);
  }
  std::sort(diff.begin(), diff.end());
  do {
    SpinConfig cur = from;
    double e = energy(p, cur);
    bool ok = true;
    for (auto q : diff) {
      cur = cur.flipped(q);
      double e2 = energy(p, cur);
      if (e2 > e + kEnergyTol) {
        ok = false;
        break;
      }
      e = e2;
    }
    if (ok) return true;
  } while (std::next_permutation(diff.begin(), diff.end()));
  return false;
}

struct LandscapeFacts {
  std::uint64_t true_index = 0;
  bool unique_min = false;
  double e_true = 0.0;
  std::vector<std::uint64_t> false_indices;
};

inline LandscapeFacts scan_landscape(const IsingProblem& p) {
  LandscapeFacts f;
  const auto table = energy_table(p);
  const auto it = std::min_element(table.begin(), table.end());
  f.true_index = static_cast<std::uint64_t>(it - table.begin());
  f.e_true = *it;
  f.unique_min = std::count_if(table.begin(), table.end(),
                               [&](double e) { return std::abs(e - f.e_true) <= kEnergyTol; }) == 1;
  for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
    if (std::abs(table[idx] - (f.e_true + kFalseGap)) <= kFalseMatchTol &&
        static_cast<std::size_t>(std::popcount(idx ^ f.true_index)) >= 6) {
      f.false_indices.push_back(idx);
    }
  }
  return f;
}

}  // namespace detail

/// Checks every structural and landscape invariant by enumeration.
/// Returns the list of violated constraints; empty means valid.
inline std::vector<std::string> validate_gadget(const GadgetSpec& g, const IsingProblem& p) {
  std::vector<std::string> bad;
  if (p.n_qubits() != kGadgetQubits) {
    bad.push_back("problem must have 16 qubits");
    return bad;
  }
  std::array<int, 4> counts{};
  for (auto r : g.role_map) counts[static_cast<int>(r)]++;
  if (counts != std::array<int, 4>{8, 4, 2, 2}) bad.push_back("role multiset is not {Outer x8, Plain x4, Deep x2, Free x2}");
  for (std::size_t q = 0; q < kGadgetQubits; ++q) {
    if (p.fields()[q] != role_field(g.role_map[q])) bad.push_back("field of qubit " + std::to_string(q) + " disagrees with role");
  }

  const auto facts = detail::scan_landscape(p);
  if (!facts.unique_min) bad.push_back("global minimum is not unique");
  if (SpinConfig::from_index(facts.true_index, kGadgetQubits) != g.true_min) bad.push_back("true_min is not the global minimum");

  const auto h = hamming(g.start_state, g.true_min);
  std::size_t outer_flips = 0;
  for (std::size_t q = kRingSize; q < kGadgetQubits; ++q) outer_flips += g.start_state[q] != g.true_min[q];
  if (h != 4 || outer_flips != 2) bad.push_back("start differs from true_min by other than 2 outer + 2 inner flips");

  const double e_start = energy(p, g.start_state);
  const double e_barrier = energy(p, g.barrier_state());
  if (std::abs(e_barrier - (e_start + 2.0 * g.J_t)) > kEnergyTol) bad.push_back("barrier state is not at start + 2 J_t");

  if (g.false_set.empty()) bad.push_back("false set is empty");
  std::vector<SpinConfig> expected;
  for (auto idx : facts.false_indices) expected.push_back(SpinConfig::from_index(idx, kGadgetQubits));
  if (expected != g.false_set) bad.push_back("false set disagrees with enumeration");
  for (const auto& f : g.false_set) {
    if (std::abs(energy(p, f) - energy(p, g.true_min) - kFalseGap) > kEnergyTol) {
      bad.push_back("false member not at E_true + 0.2");
      break;
    }
    std::size_t inner_diff = 0;
    for (std::size_t q = 0; q < kRingSize; ++q) inner_diff += f[q] != g.start_state[q];
    if (inner_diff != 6) {
      bad.push_back("false member does not differ from start on exactly six inner spins");
      break;
    }
  }

  const auto [a, b] = g.barrier_pair;
  for (std::size_t q = 0; q < kGadgetQubits; ++q) {
    if (q == a || q == b) continue;
    if (!(energy(p, g.start_state.flipped(q)) > e_start + kEnergyTol)) {
      bad.push_back("single flip of qubit " + std::to_string(q) + " from start is not uphill");
      break;
    }
  }
  if (g.J_t > 0 && !(energy(p, g.start_state.flipped(a)) > e_start && energy(p, g.start_state.flipped(b)) > e_start)) {
    bad.push_back("start is not a strict local minimum");
  }
  const auto both = g.start_state.flipped(a).flipped(b);
  if (!detail::has_downhill_inner_path(p, both, g.true_min)) bad.push_back("no non-increasing path after the outer flips");
  return bad;
}

/// Builds the gadget for barrier coupling J_t by searching role placements in
/// lexicographic order and returning the first one that satisfies every
/// invariant. Throws GadgetError naming the last violated constraint if none does.
inline Gadget build_gadget(double J_t) {
  if (!(J_t >= 0.0 && J_t <= 1.0)) throw std::out_of_range("J_t must lie in [0, 1]");

  std::array<Role, kRingSize> roles{Role::InnerPlain, Role::InnerPlain, Role::InnerPlain, Role::InnerPlain,
                                    Role::InnerDeep,  Role::InnerDeep,  Role::InnerFree,  Role::InnerFree};
  std::string last_violation = "no candidate examined";
  const std::uint64_t dim = std::uint64_t{1} << kGadgetQubits;
  const auto spin = [](std::uint64_t idx, std::size_t q) {
    return ((idx >> (kGadgetQubits - 1 - q)) & 1U) ? -1.0 : 1.0;
  };
  do {
    // The tunable edge is the only pair-dependent term, so one table per role
    // assignment serves every barrier pair.
    const auto base = energy_table(gadget_problem(roles, {kRingSize, kRingSize + 1}, 0.0));
    for (std::size_t a = kRingSize; a < kGadgetQubits; ++a) {
      for (std::size_t b = a + 1; b < kGadgetQubits; ++b) {
        const auto pair = std::make_pair(a, b);
        const auto p = gadget_problem(roles, pair, J_t);

        std::uint64_t best = 0;
        double best_e = base[0] - J_t * spin(0, a) * spin(0, b);
        for (std::uint64_t idx = 1; idx < dim; ++idx) {
          const double e = base[idx] - J_t * spin(idx, a) * spin(idx, b);
          if (e < best_e) {
            best_e = e;
            best = idx;
          }
        }
        const auto tmin = SpinConfig::from_index(best, kGadgetQubits);
        const auto start = detail::start_from_true(tmin, pair);
        const double e0 = energy(p, start);
        if (std::abs(energy(p, start.flipped(a)) - (e0 + 2.0 * J_t)) > kEnergyTol) {
          last_violation = "barrier state is not at start + 2 J_t";
          continue;
        }
        bool uphill = true;
        for (std::size_t q = 0; q < kGadgetQubits && uphill; ++q) {
          if (q != a && q != b) uphill = energy(p, start.flipped(q)) > e0 + kEnergyTol;
        }
        if (!uphill) {
          last_violation = "start state is not a local minimum";
          continue;
        }
        if (!detail::has_downhill_inner_path(p, start.flipped(a).flipped(b), tmin)) {
          last_violation = "no non-increasing path after the outer flips";
          continue;
        }
        const auto facts = detail::scan_landscape(p);

        GadgetSpec g;
        g.J_t = J_t;
        for (std::size_t k = 0; k < kRingSize; ++k) {
          g.role_map[k] = roles[k];
          g.role_map[pendant_of(k)] = Role::OuterRing;
        }
        g.barrier_pair = pair;
        g.true_min = tmin;
        g.start_state = start;
        for (auto idx : facts.false_indices) g.false_set.push_back(SpinConfig::from_index(idx, kGadgetQubits));
        g.true_energy = facts.e_true;
        g.start_energy = e0;
        auto bad = validate_gadget(g, p);
        if (bad.empty()) return {std::move(g), p};
        last_violation = bad.front();
      }
    }
  } while (std::next_permutation(roles.begin(), roles.end()));
  throw GadgetError("gadget search failed: " + last_violation);
}

inline OutcomeClass classify(const SpinConfig& config, const GadgetSpec& g) {
  if (config == g.start_state) return OutcomeClass::Start;
  if (config == g.true_min) return OutcomeClass::TrueMin;
  if (g.in_false_set(config)) return OutcomeClass::FalseMin;
  return OutcomeClass::Other;
}

}  // namespace anneal_range
