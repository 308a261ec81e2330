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

#include <array>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "anneal_range/ising.hpp"

namespace anneal_range {

/// Chimera graph of M x N unit cells, each a K_{4,4}.
///
/// Qubit id = 8 (N r + c) + k. Qubits k < 4 are vertical and couple to the
/// same k in cell (r + 1, c); qubits k >= 4 are horizontal and couple to the
/// same k in cell (r, c + 1).
class ChimeraGraph {
 public:
  ChimeraGraph(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("Chimera grid must be non-empty");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t n_qubits() const { return 8 * rows_ * cols_; }

  std::size_t id(std::size_t r, std::size_t c, std::size_t k) const { return 8 * (cols_ * r + c) + k; }

  bool has_edge(std::size_t u, std::size_t v) const {
    if (u >= n_qubits() || v >= n_qubits() || u == v) return false;
    const auto ku = u % 8, kv = v % 8;
    const auto cu = u / 8, cv = v / 8;
    if (cu == cv) return (ku < 4) != (kv < 4);
    if (ku != kv) return false;
    const auto ru = cu / cols_, cu_col = cu % cols_;
    const auto rv = cv / cols_, cv_col = cv % cols_;
    if (ku < 4) return cu_col == cv_col && (ru + 1 == rv || rv + 1 == ru);
    return ru == rv && (cu_col + 1 == cv_col || cv_col + 1 == cu_col);
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
};

struct ChimeraLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::set<std::size_t> dead_qubits;
  std::vector<std::vector<std::size_t>> copy_maps;  // gadget qubit -> hardware qubit
};

/// Two disjoint placements of the 16-qubit gadget inside a 2 x 2 block of
/// cells. Entries are block-local ids 8 (2 r + c) + k.
inline constexpr std::array<std::array<std::size_t, 16>, 2> kBlockTemplates{{
    {0, 4, 1, 5, 2, 18, 20, 16, 6, 3, 17, 13, 7, 21, 19, 22},
    {12, 8, 24, 31, 25, 28, 26, 10, 11, 14, 30, 23, 9, 27, 29, 15},
}};

inline std::size_t block_to_hardware(const ChimeraGraph& g, std::size_t r0, std::size_t c0, std::size_t local) {
  const auto cell = local / 8;
  return g.id(r0 + cell / 2, c0 + cell % 2, local % 8);
}

inline std::vector<std::size_t> place_template(const ChimeraGraph& g, std::size_t t, std::size_t r0, std::size_t c0) {
  std::vector<std::size_t> out;
  for (auto local : kBlockTemplates.at(t)) out.push_back(block_to_hardware(g, r0, c0, local));
  return out;
}

/// Violations of the layout invariants for copies of `problem`; empty means valid.
inline std::vector<std::string> validate_layout(const IsingProblem& problem, const ChimeraLayout& layout) {
  std::vector<std::string> bad;
  const ChimeraGraph g(layout.rows, layout.cols);
  std::set<std::size_t> used;
  for (std::size_t i = 0; i < layout.copy_maps.size(); ++i) {
    const auto& m = layout.copy_maps[i];
    const auto tag = "copy " + std::to_string(i) + ": ";
    if (m.size() != problem.n_qubits()) {
      bad.push_back(tag + "wrong map length");
      continue;
    }
    for (auto hq : m) {
      if (hq >= g.n_qubits()) bad.push_back(tag + "qubit out of range");
      if (layout.dead_qubits.count(hq)) bad.push_back(tag + "uses dead qubit " + std::to_string(hq));
      if (!used.insert(hq).second) bad.push_back(tag + "overlaps another copy at " + std::to_string(hq));
    }
    for (const auto& c : problem.couplings()) {
      if (!g.has_edge(m[c.i], m[c.j])) {
        bad.push_back(tag + "edge (" + std::to_string(c.i) + "," + std::to_string(c.j) + ") is not a Chimera edge");
      }
    }
  }
  return bad;
}

/// Packs disjoint gadget copies onto an M x N Chimera graph, avoiding dead
/// qubits. Aligned 2 x 2 blocks are filled first in row-major order, then any
/// remaining room is tried at unaligned block origins.
inline ChimeraLayout tile(const IsingProblem& problem, std::size_t rows, std::size_t cols,
                          const std::set<std::size_t>& dead_qubits) {
  const ChimeraGraph g(rows, cols);
  ChimeraLayout layout{rows, cols, dead_qubits, {}};
  for (std::size_t t = 0; t < kBlockTemplates.size(); ++t) {
    const ChimeraLayout probe{2, 2, {}, {place_template(ChimeraGraph(2, 2), t, 0, 0)}};
    if (!validate_layout(problem, probe).empty()) throw std::invalid_argument("gadget edge unmappable under the default embedding");
  }
  if (rows < 2 || cols < 2) return layout;

  std::vector<bool> used(g.n_qubits(), false);
  for (auto q : dead_qubits) {
    if (q < used.size()) used[q] = true;
  }
  auto try_place = [&](std::size_t r0, std::size_t c0) {
    for (std::size_t t = 0; t < kBlockTemplates.size(); ++t) {
      auto m = place_template(g, t, r0, c0);
      bool free = true;
      for (auto q : m) free = free && !used[q];
      if (!free) continue;
      for (auto q : m) used[q] = true;
      layout.copy_maps.push_back(std::move(m));
    }
  };
  for (std::size_t r = 0; r + 1 < rows; r += 2) {
    for (std::size_t c = 0; c + 1 < cols; c += 2) try_place(r, c);
  }
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      if (r % 2 == 0 && c % 2 == 0) continue;
      try_place(r, c);
    }
  }
  return layout;
}

}  // namespace anneal_range
