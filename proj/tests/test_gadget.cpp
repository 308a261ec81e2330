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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "anneal_range/gadget.hpp"

namespace ar = anneal_range;

namespace {

// Independent energy: spins decoded from the index, J matrix built by hand.
std::vector<double> reference_table(const ar::IsingProblem& p) {
  const std::size_t n = p.n_qubits();
  std::vector<double> out(std::size_t{1} << n);
  for (std::uint64_t idx = 0; idx < out.size(); ++idx) {
    double e = 0.0;
    for (const auto& c : p.couplings()) {
      const double si = ((idx >> (n - 1 - c.i)) & 1U) ? -1.0 : 1.0;
      const double sj = ((idx >> (n - 1 - c.j)) & 1U) ? -1.0 : 1.0;
      e += c.value * si * sj;
    }
    for (std::size_t q = 0; q < n; ++q) e += p.fields()[q] * (((idx >> (n - 1 - q)) & 1U) ? -1.0 : 1.0);
    out[idx] = e;
  }
  return out;
}

class GadgetAtJt : public ::testing::TestWithParam<double> {};

}  // namespace

TEST_P(GadgetAtJt, SatisfiesLandscapeInvariants) {
  const double jt = GetParam();
  const auto g = ar::build_gadget(jt);
  const auto& s = g.spec;
  EXPECT_TRUE(ar::validate_gadget(s, g.problem).empty());

  const auto table = reference_table(g.problem);
  const auto tmin = static_cast<std::uint64_t>(std::min_element(table.begin(), table.end()) - table.begin());
  EXPECT_EQ(tmin, s.true_min.index());
  const double e_true = table[tmin];
  EXPECT_EQ(std::count_if(table.begin(), table.end(), [&](double e) { return std::abs(e - e_true) < 1e-9; }), 1);

  EXPECT_NEAR(table[s.start_state.index()] - e_true, 2.1, 1e-9);
  EXPECT_NEAR(table[s.barrier_state().index()] - table[s.start_state.index()], 2.0 * jt, 1e-9);
  EXPECT_EQ(ar::hamming(s.start_state, s.true_min), 4u);

  // Start is a local minimum under single flips; only the barrier pair may be flat at J_t = 0.
  const auto e0 = table[s.start_state.index()];
  for (std::size_t q = 0; q < ar::kGadgetQubits; ++q) {
    const double e1 = table[s.start_state.flipped(q).index()];
    if (q == s.barrier_pair.first || q == s.barrier_pair.second) {
      EXPECT_GE(e1, e0 - 1e-12);
    } else {
      EXPECT_GT(e1, e0);
    }
  }

  std::size_t n_false = 0;
  for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
    if (std::abs(table[idx] - e_true - 0.2) < 1e-9 && std::popcount(idx ^ tmin) >= 6) {
      ++n_false;
      EXPECT_TRUE(s.in_false_set(ar::SpinConfig::from_index(idx, 16)));
    }
  }
  EXPECT_EQ(n_false, s.false_set.size());
  EXPECT_EQ(s.false_set.size(), jt == 0.0 ? 256u : 128u);
  EXPECT_TRUE(std::is_sorted(s.false_set.begin(), s.false_set.end()));
}

INSTANTIATE_TEST_SUITE_P(Grid, GadgetAtJt, ::testing::Values(0.0, 0.1, 0.3, 0.5, 0.7, 1.0));

TEST(Gadget, RoleLayoutAndFields) {
  const auto g = ar::build_gadget(1.0);
  int outer = 0, plain = 0, deep = 0, free_ = 0;
  for (std::size_t q = 0; q < ar::kGadgetQubits; ++q) {
    const auto r = g.spec.role_map[q];
    EXPECT_EQ(g.problem.fields()[q], ar::role_field(r));
    if (q >= ar::kRingSize) { EXPECT_EQ(r, ar::Role::OuterRing); }
    outer += r == ar::Role::OuterRing;
    plain += r == ar::Role::InnerPlain;
    deep += r == ar::Role::InnerDeep;
    free_ += r == ar::Role::InnerFree;
  }
  EXPECT_EQ(outer, 8);
  EXPECT_EQ(plain, 4);
  EXPECT_EQ(deep, 2);
  EXPECT_EQ(free_, 2);
  EXPECT_GE(g.spec.barrier_pair.first, ar::kRingSize);
  EXPECT_EQ(g.problem.couplings().size(), 17u);
}

TEST(Gadget, KnownConfiguration) {
  const auto g = ar::build_gadget(1.0);
  EXPECT_EQ(g.spec.true_min.to_bits(), "1111111111111111");
  EXPECT_EQ(g.spec.start_state.to_bits(), "1111100111111001");
  EXPECT_EQ(g.spec.barrier_pair, std::make_pair(std::size_t{13}, std::size_t{14}));
}

TEST(Gadget, RejectsOutOfRangeCoupling) {
  EXPECT_THROW(ar::build_gadget(-0.1), std::out_of_range);
  EXPECT_THROW(ar::build_gadget(1.5), std::out_of_range);
}

TEST(Gadget, ValidatorFlagsCorruption) {
  const auto g = ar::build_gadget(0.5);
  auto s = g.spec;
  s.start_state = s.start_state.flipped(0);
  EXPECT_FALSE(ar::validate_gadget(s, g.problem).empty());

  s = g.spec;
  s.false_set.pop_back();
  EXPECT_FALSE(ar::validate_gadget(s, g.problem).empty());

  s = g.spec;
  std::swap(s.role_map[0], s.role_map[4]);
  if (s.role_map[0] != g.spec.role_map[0]) { EXPECT_FALSE(ar::validate_gadget(s, g.problem).empty()); }
}

TEST(Gadget, Classify) {
  const auto g = ar::build_gadget(1.0);
  const auto& s = g.spec;
  EXPECT_EQ(ar::classify(s.start_state, s), ar::OutcomeClass::Start);
  EXPECT_EQ(ar::classify(s.true_min, s), ar::OutcomeClass::TrueMin);
  EXPECT_EQ(ar::classify(s.false_set.front(), s), ar::OutcomeClass::FalseMin);
  EXPECT_EQ(ar::classify(s.true_min.flipped(0), s), ar::OutcomeClass::Other);
}
