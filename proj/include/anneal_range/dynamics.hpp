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

// Dissipative reverse-anneal dynamics.
//
// Two population models are provided. The tracked-eigenstate model is the
// textbook adiabatic Pauli master equation over the lowest eigenstates of
// H(s); it is exact in its own terms but only practical for small problems.
// The configuration model works in the space of classical configurations
// below an energy window, dressed by the transverse field to second order,
// and is what the gadget experiments use.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "anneal_range/gadget.hpp"
#include "anneal_range/ising.hpp"
#include "anneal_range/schedule.hpp"
#include "anneal_range/spectrum.hpp"

namespace anneal_range {

enum class BasisMode { EnergyEigenbasis, ComputationalBasis };

inline const char* basis_mode_name(BasisMode m) {
  return m == BasisMode::EnergyEigenbasis ? "eigenbasis" : "computational";
}

inline BasisMode parse_basis_mode(const std::string& s) {
  if (s == "eigenbasis" || s == "EnergyEigenbasis") return BasisMode::EnergyEigenbasis;
  if (s == "computational" || s == "ComputationalBasis") return BasisMode::ComputationalBasis;
  throw std::invalid_argument("unknown basis mode: " + s);
}

inline constexpr double kDefaultEtaLow = 0.3;
inline constexpr double kDefaultEtaRatio = 5.0;  // eta_high / eta_low

/// Ohmic bath coupled to sigma^z of every qubit. Energies in GHz.
struct BathModel {
  double eta = kDefaultEtaLow;
  double temperature = 0.26;
  double cutoff = 100.0;
  BasisMode basis_mode = BasisMode::EnergyEigenbasis;
  double linewidth = 0.5;  // GHz, Lorentzian broadening of incoherent tunnelling

  void validate() const {
    if (!(eta >= 0.0)) throw std::invalid_argument("eta must be non-negative");
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    if (!(cutoff > temperature)) throw std::invalid_argument("cutoff must exceed temperature");
    if (!(linewidth >= 0.0)) throw std::invalid_argument("linewidth must be non-negative");
  }
};

/// Bath spectral function S(omega) in rad/ns for omega in GHz; omega > 0 is
/// energy given to the bath. S(omega) / S(-omega) = exp(omega / T).
inline double spectral_density(double omega, const BathModel& bath) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (std::abs(omega) < 1e-12 * bath.temperature) return two_pi * bath.temperature;
  return two_pi * omega * std::exp(-std::abs(omega) / bath.cutoff) / (-std::expm1(-omega / bath.temperature));
}

inline constexpr double kNsPerUs = 1000.0;

/// gamma(i -> j) in 1/us between eigenstates of H/B scaled by B_scale (GHz):
/// eta S(omega_ij) sum_k |<i|Z_k|j>|^2 with omega_ij = B_scale (E_i - E_j).
inline Eigen::MatrixXd transition_rates(const EigenSystem& es, const BathModel& bath, double B_scale) {
  bath.validate();
  const auto m = static_cast<Eigen::Index>(es.values.size());
  const auto dim = es.vectors.rows();
  const auto n = static_cast<std::size_t>(std::countr_zero(static_cast<std::uint64_t>(dim)));
  if ((Eigen::Index{1} << n) != dim) throw std::invalid_argument("eigenvector length is not a power of two");
  Eigen::MatrixXd M2 = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd z(dim);
  for (std::size_t k = 0; k < n; ++k) {
    for (Eigen::Index x = 0; x < dim; ++x) z(x) = ((static_cast<std::uint64_t>(x) >> (n - 1 - k)) & 1U) ? -1.0 : 1.0;
    const Eigen::MatrixXd ZV = z.asDiagonal() * es.vectors;
    const Eigen::MatrixXd E = es.vectors.transpose() * ZV;
    M2 += E.cwiseAbs2();
  }
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j) continue;
      const double w = B_scale * (es.values[static_cast<std::size_t>(i)] - es.values[static_cast<std::size_t>(j)]);
      R(i, j) = bath.eta * spectral_density(w, bath) * M2(i, j) * kNsPerUs;
    }
  }
  return R;
}

/// Populations over a set of tracked states plus probability that left them.
struct PopulationState {
  double s = 1.0;
  std::vector<std::uint64_t> states;  // configuration indices (configuration model) or level labels
  std::vector<double> populations;
  double leaked = 0.0;
  std::size_t n_qubits = 0;
  std::vector<std::string> warnings;

  double total() const {
    double t = leaked;
    for (double p : populations) t += p;
    return t;
  }
};

// ---------------------------------------------------------------------------
// Configuration model

struct DynamicsOptions {
  double window = 2.5;          // classical energy window above the ground state
  bool cotunnelling = true;     // second-order moves along couplers
  double ramp_ds = 0.004;       // generator refresh spacing in s along ramps
  double max_substep_us = 0.05;
  double leak_warn = 0.05;
  bool two_sided_dressing = false;  // also let lower neighbours push a level up
};

namespace detail {

inline double dressing_shift(double eps, double A, bool two_sided) {
  if (eps < 0.0 && !two_sided) return 0.0;
  const double sg = eps >= 0.0 ? 1.0 : -1.0;
  return 0.5 * (eps - sg * std::sqrt(eps * eps + 4.0 * A * A));
}

}  // namespace detail

/// Master equation over classical configurations within an energy window.
///
/// In eigenbasis mode each configuration stands for the eigenstate it
/// adiabatically connects to: its energy carries the second-order transverse
/// dressing, and neighbours reachable by one flip or by a coupled pair flip
/// exchange population through incoherent tunnelling with matrix element
/// Delta^2 / (omega^2 + Delta^2 + W^2). In computational mode energies are
/// bare and only single flips are allowed.
class ConfigurationModel {
 public:
  struct Move {
    std::uint32_t a = 0;  // local index
    std::uint64_t b = 0;  // global index of target
    std::int32_t b_local = -1;
    std::uint16_t i = 0;
    std::uint16_t j = 0;
    bool pair = false;
  };

  ConfigurationModel(const IsingProblem& problem, const DynamicsOptions& opts) : n_(problem.n_qubits()), opts_(opts) {
    table_ = energy_table(problem);
    const double e0 = *std::min_element(table_.begin(), table_.end());
    std::vector<std::int64_t> local(table_.size(), -1);
    for (std::uint64_t x = 0; x < table_.size(); ++x) {
      if (table_[x] <= e0 + opts.window + 1e-9) {
        local[x] = static_cast<std::int64_t>(states_.size());
        states_.push_back(x);
      }
    }
    for (std::uint32_t a = 0; a < states_.size(); ++a) {
      const auto x = states_[a];
      for (std::size_t q = 0; q < n_; ++q) {
        const auto y = x ^ bit(q);
        add_move(a, y, local, static_cast<std::uint16_t>(q), 0, false);
      }
      if (opts.cotunnelling) {
        for (const auto& c : problem.couplings()) {
          const auto y = x ^ bit(c.i) ^ bit(c.j);
          add_move(a, y, local, static_cast<std::uint16_t>(c.i), static_cast<std::uint16_t>(c.j), true);
        }
      }
    }
  }

  std::size_t size() const { return states_.size(); }
  const std::vector<std::uint64_t>& states() const { return states_; }
  std::size_t n_qubits() const { return n_; }
  const std::vector<double>& energies() const { return table_; }

  std::int64_t local_index(std::uint64_t x) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), x);
    if (it == states_.end() || *it != x) return -1;
    return it - states_.begin();
  }

  /// Energy (GHz) of configuration x at schedule point (A, B).
  double level_energy(std::uint64_t x, double A, double B, BasisMode mode) const {
    double e = B * table_[x];
    if (mode == BasisMode::ComputationalBasis || A == 0.0) return e;
    for (std::size_t q = 0; q < n_; ++q) e += detail::dressing_shift(B * (table_[x ^ bit(q)] - table_[x]), A, opts_.two_sided_dressing);
    return e;
  }

  /// Rate of one move in 1/us given level energies ea, eb (GHz).
  double move_rate(const Move& mv, double ea, double eb, double A, double B, const BathModel& bath) const {
    double delta = 0.0;
    if (!mv.pair) {
      delta = 2.0 * A;
    } else {
      const auto x = states_[mv.a];
      const double e_a = B * table_[x], e_b = B * table_[mv.b];
      const double e1 = B * table_[x ^ bit(mv.i)], e2 = B * table_[x ^ bit(mv.j)];
      const double t = 0.5 * A * A * (1.0 / (e1 - e_a) + 1.0 / (e2 - e_a) + 1.0 / (e1 - e_b) + 1.0 / (e2 - e_b));
      delta = 2.0 * std::abs(t);
    }
    if (delta == 0.0) return 0.0;
    const double w = ea - eb;
    const double d2 = delta * delta;
    const double m2 = d2 / (w * w + d2 + bath.linewidth * bath.linewidth);
    return bath.eta * spectral_density(w, bath) * m2 * kNsPerUs;
  }

  /// Column-stochastic generator Q (dp/dt = Q p) and per-state leak rates.
  Eigen::SparseMatrix<double> generator(double A, double B, const BathModel& bath, std::vector<double>& leak) const {
    const auto mode = bath.basis_mode;
    std::vector<double> lev(states_.size());
    for (std::size_t a = 0; a < states_.size(); ++a) lev[a] = level_energy(states_[a], A, B, mode);
    leak.assign(states_.size(), 0.0);
    std::vector<double> out(states_.size(), 0.0);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(moves_.size() + states_.size());
    for (const auto& mv : moves_) {
      if (mv.pair && mode == BasisMode::ComputationalBasis) continue;
      const double ea = lev[mv.a];
      const double eb = mv.b_local >= 0 ? lev[static_cast<std::size_t>(mv.b_local)] : level_energy(mv.b, A, B, mode);
      const double r = move_rate(mv, ea, eb, A, B, bath);
      if (r == 0.0) continue;
      out[mv.a] += r;
      if (mv.b_local >= 0) {
        trip.emplace_back(mv.b_local, static_cast<int>(mv.a), r);
      } else {
        leak[mv.a] += r;
      }
    }
    for (std::size_t a = 0; a < states_.size(); ++a) trip.emplace_back(static_cast<int>(a), static_cast<int>(a), -out[a]);
    const auto n = static_cast<int>(states_.size());
    Eigen::SparseMatrix<double> Q(n, n);
    Q.setFromTriplets(trip.begin(), trip.end());
    return Q;
  }

 private:
  std::uint64_t bit(std::size_t q) const { return std::uint64_t{1} << (n_ - 1 - q); }

  void add_move(std::uint32_t a, std::uint64_t y, const std::vector<std::int64_t>& local, std::uint16_t i, std::uint16_t j,
                bool pair) {
    if (pair) {
      // Only genuine second-order processes: both intermediates above both ends.
      const auto x = states_[a];
      const double lo = std::max(table_[x], table_[y]);
      if (!(std::min(table_[x ^ bit(i)], table_[x ^ bit(j)]) > lo + 1e-9)) return;
    }
    moves_.push_back({a, y, static_cast<std::int32_t>(local[y]), i, j, pair});
  }

  std::size_t n_;
  DynamicsOptions opts_;
  std::vector<double> table_;
  std::vector<std::uint64_t> states_;
  std::vector<Move> moves_;
};

namespace detail {

// TR-BDF2 steps of dp/dt = Q p - leak .* p over `duration`, sharing one LU
// factorization between both stages. Leaked mass is accumulated separately.
inline void integrate_constant(const Eigen::SparseMatrix<double>& Q, const std::vector<double>& leak, double duration,
                               double max_step, Eigen::VectorXd& p, double& leaked) {
  if (duration <= 0.0) return;
  const auto n = Q.rows();
  const int steps = std::max(1, static_cast<int>(std::ceil(duration / max_step - 1e-9)));
  const double h = duration / steps;
  const double g = 2.0 - std::numbers::sqrt2;
  const double c = 0.5 * g * h;  // equals (1 - g) / (2 - g) * h for this g
  Eigen::SparseMatrix<double> L = Q;
  for (Eigen::Index a = 0; a < n; ++a) L.coeffRef(a, a) -= leak[static_cast<std::size_t>(a)];
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  Eigen::SparseMatrix<double> M = I - c * L;
  Eigen::SparseMatrix<double> Pl = I + c * L;
  M.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw std::runtime_error("sparse LU failed in dynamics integrator");
  const double w1 = 1.0 / (g * (2.0 - g));
  const double w0 = (1.0 - g) * (1.0 - g) / (g * (2.0 - g));
  Eigen::VectorXd lk(n);
  for (Eigen::Index a = 0; a < n; ++a) lk(a) = leak[static_cast<std::size_t>(a)];
  for (int s = 0; s < steps; ++s) {
    const double before = p.sum();
    Eigen::VectorXd pg = lu.solve(Pl * p);
    Eigen::VectorXd pn = lu.solve(w1 * pg - w0 * p);
    for (Eigen::Index a = 0; a < n; ++a) {
      if (pn(a) < 0.0) pn(a) = 0.0;
    }
    // Whatever is missing left through the window boundary.
    const double after = pn.sum();
    if (lk.size() > 0 && lk.maxCoeff() > 0.0) {
      leaked += std::max(0.0, before - after);
    } else if (after > 0.0) {
      pn *= before / after;
    }
    p = pn;
  }
}

}  // namespace detail

/// Evolves a basis state along the waveform under the configuration model.
inline PopulationState evolve(const ConfigurationModel& model, const Waveform& wave, const ScheduleTable& sched,
                              const BathModel& bath, const DynamicsOptions& opts, const SpinConfig& start) {
  bath.validate();
  if (start.size() != model.n_qubits()) throw std::invalid_argument("start state length mismatch");
  const auto si = model.local_index(start.index());
  if (si < 0) throw std::invalid_argument("start state lies outside the energy window");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.size()));
  p(si) = 1.0;
  double leaked = 0.0;
  std::vector<double> leak;
  for (const auto& seg : wave.segments) {
    const double ds = seg.s_end - seg.s_start;
    const double dur = seg.t_end - seg.t_start;
    const int pieces = ds == 0.0 ? 1 : std::max(1, static_cast<int>(std::ceil(std::abs(ds) / opts.ramp_ds - 1e-9)));
    for (int k = 0; k < pieces; ++k) {
      const double sm = seg.s_start + ds * (k + 0.5) / pieces;
      const double A = sched.A(sm), B = sched.B(sm);
      if (bath.eta == 0.0) continue;
      const auto Q = model.generator(A, B, bath, leak);
      detail::integrate_constant(Q, leak, dur / pieces, opts.max_substep_us, p, leaked);
    }
  }
  PopulationState out;
  out.s = wave.segments.empty() ? 1.0 : wave.segments.back().s_end;
  out.states = model.states();
  out.populations.assign(p.data(), p.data() + p.size());
  out.leaked = leaked;
  out.n_qubits = model.n_qubits();
  if (leaked > opts.leak_warn) out.warnings.push_back("leaked probability " + std::to_string(leaked) + " exceeds threshold");
  return out;
}

inline PopulationState evolve(const IsingProblem& problem, const Waveform& wave, const ScheduleTable& sched,
                              const BathModel& bath, const DynamicsOptions& opts, const SpinConfig& start) {
  const ConfigurationModel model(problem, opts);
  return evolve(model, wave, sched, bath, opts, start);
}

// ---------------------------------------------------------------------------
// Tracked-eigenstate model

/// Adiabatic Pauli master equation over the m lowest eigenstates of
/// H(s) = B(s) (H_prob - Gamma sum X), tracked by maximal overlap between grid
/// points. Meant for small problems where m covers the relevant levels.
inline PopulationState evolve_tracked(const IsingProblem& problem, const Waveform& wave, const ScheduleTable& sched,
                                      const BathModel& bath, int m, int grid_steps, const SpinConfig& start) {
  bath.validate();
  if (m < 1) throw std::invalid_argument("m must be positive");
  const auto grid = sample_waveform(wave, static_cast<std::size_t>(std::max(grid_steps, 2)));
  auto solve = [&](double s) {
    const double B = sched.B(s);
    const double gam = B > 0.0 ? sched.A(s) / B : 0.0;
    const auto H = assemble(problem, gam);
    const int k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(m), H.dim()));
    return lowest_eigenpairs(H, k);
  };
  PopulationState out;
  out.n_qubits = problem.n_qubits();
  EigenSystem prev = solve(grid.front().s);
  const auto mk = static_cast<Eigen::Index>(prev.values.size());
  Eigen::VectorXd p = Eigen::VectorXd::Zero(mk);
  {
    Eigen::Index best = 0;
    double bo = -1.0;
    const auto si = static_cast<Eigen::Index>(start.index());
    for (Eigen::Index c = 0; c < mk; ++c) {
      const double o = std::abs(prev.vectors(si, c));
      if (o > bo) {
        bo = o;
        best = c;
      }
    }
    if (bo < 0.5) out.warnings.push_back("start state is not well represented by a tracked level");
    p(best) = 1.0;
  }
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double dt = grid[g].t - grid[g - 1].t;
    const double sm = 0.5 * (grid[g].s + grid[g - 1].s);
    EigenSystem cur = solve(grid[g].s);
    // Carry populations to the new levels by maximal overlap.
    Eigen::MatrixXd O = (prev.vectors.transpose() * cur.vectors).cwiseAbs();
    Eigen::VectorXd q = Eigen::VectorXd::Zero(mk);
    for (Eigen::Index i = 0; i < mk; ++i) {
      Eigen::Index j;
      const double o = O.row(i).maxCoeff(&j);
      if (o < 0.5) {
        out.leaked += p(i);
        out.warnings.push_back("level tracking overlap below 0.5");
      } else {
        q(j) += p(i);
      }
    }
    p = q;
    if (bath.eta > 0.0 && dt > 0.0) {
      const EigenSystem mid = solve(sm);
      const auto R = transition_rates(mid, bath, sched.B(sm));
      Eigen::MatrixXd Q = R.transpose();
      for (Eigen::Index i = 0; i < mk; ++i) Q(i, i) = -R.row(i).sum();
      Eigen::SparseMatrix<double> Qs = Q.sparseView();
      const std::vector<double> no_leak(static_cast<std::size_t>(mk), 0.0);
      double unused = 0.0;
      detail::integrate_constant(Qs, no_leak, dt, 0.01, p, unused);
    }
    prev = std::move(cur);
  }
  out.s = grid.back().s;
  for (Eigen::Index i = 0; i < mk; ++i) {
    // Label each level by its dominant basis state.
    Eigen::Index x;
    prev.vectors.col(i).cwiseAbs().maxCoeff(&x);
    out.states.push_back(static_cast<std::uint64_t>(x));
    out.populations.push_back(p(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

struct OutcomeHistogram {
  std::map<SpinConfig, std::uint64_t> counts;
  std::uint64_t leaked = 0;  // shots drawn from mass outside the tracked set
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;

  std::uint64_t total() const {
    std::uint64_t t = leaked;
    for (const auto& [c, n] : counts) t += n;
    return t;
  }
};

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Multinomial readout of a final population state. Leaked mass is kept as a
/// separate bucket that classifies as Other.
inline OutcomeHistogram sample_outcomes(const PopulationState& final_state, std::uint64_t shots, std::uint64_t seed) {
  std::vector<double> cum;
  double acc = 0.0;
  for (double p : final_state.populations) {
    acc += std::max(p, 0.0);
    cum.push_back(acc);
  }
  const double total = acc + std::max(final_state.leaked, 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("population state carries no probability");
  OutcomeHistogram h;
  h.shots = shots;
  h.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = uniform01(rng) * total;
    if (u >= acc) {
      ++h.leaked;
      continue;
    }
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cum.begin(), static_cast<std::ptrdiff_t>(cum.size()) - 1));
    ++h.counts[SpinConfig::from_index(final_state.states[idx], final_state.n_qubits)];
  }
  return h;
}

struct ClassCounts {
  std::uint64_t start = 0, true_min = 0, false_min = 0, other = 0;
  std::uint64_t shots() const { return start + true_min + false_min + other; }
};

inline ClassCounts classify_histogram(const OutcomeHistogram& h, const GadgetSpec& g) {
  ClassCounts c;
  c.other += h.leaked;
  for (const auto& [cfg, n] : h.counts) {
    switch (classify(cfg, g)) {
      case OutcomeClass::Start: c.start += n; break;
      case OutcomeClass::TrueMin: c.true_min += n; break;
      case OutcomeClass::FalseMin: c.false_min += n; break;
      case OutcomeClass::Other: c.other += n; break;
    }
  }
  return c;
}

struct ClassProbabilities {
  double start = 0, true_min = 0, false_min = 0, other = 0;
};

/// Exact class probabilities of a population state (no sampling noise).
inline ClassProbabilities class_populations(const PopulationState& st, const GadgetSpec& g) {
  ClassProbabilities c;
  c.other += st.leaked;
  for (std::size_t i = 0; i < st.states.size(); ++i) {
    const double p = st.populations[i];
    switch (classify(SpinConfig::from_index(st.states[i], st.n_qubits), g)) {
      case OutcomeClass::Start: c.start += p; break;
      case OutcomeClass::TrueMin: c.true_min += p; break;
      case OutcomeClass::FalseMin: c.false_min += p; break;
      case OutcomeClass::Other: c.other += p; break;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Spin-vector Monte Carlo

struct SvmcOptions {
  double temperature = 0.26;  // GHz
  std::size_t sweeps = 2000;  // Metropolis sweeps over the whole waveform
  std::uint64_t shots = 100;
  std::uint64_t seed = 1;
};

/// Planar rotors with energy -A sum sin(theta) + B H_prob(cos theta), annealed
/// along the waveform by Metropolis updates; readout by the sign of cos(theta).
inline OutcomeHistogram svmc_evolve(const IsingProblem& problem, const Waveform& wave, const ScheduleTable& sched,
                                    const SpinConfig& start, const SvmcOptions& o) {
  if (start.size() != problem.n_qubits()) throw std::invalid_argument("start state length mismatch");
  const auto n = problem.n_qubits();
  std::vector<std::vector<std::pair<std::size_t, double>>> nbr(n);
  for (const auto& c : problem.couplings()) {
    nbr[c.i].push_back({c.j, c.value});
    nbr[c.j].push_back({c.i, c.value});
  }
  OutcomeHistogram h;
  h.shots = o.shots;
  h.seed = o.seed;
  std::mt19937_64 rng(o.seed);
  const double T = wave.total_time();
  for (std::uint64_t shot = 0; shot < o.shots; ++shot) {
    std::vector<double> th(n);
    for (std::size_t q = 0; q < n; ++q) th[q] = start[q] == 1 ? 0.0 : std::numbers::pi;
    for (std::size_t sw = 0; sw < o.sweeps; ++sw) {
      const double t = T * (static_cast<double>(sw) + 0.5) / static_cast<double>(o.sweeps);
      const double s = wave.s_at(t);
      const double A = sched.A(s), B = sched.B(s);
      for (std::size_t q = 0; q < n; ++q) {
        const double nt = std::numbers::pi * uniform01(rng);
        double local = problem.fields()[q];
        for (auto [j, J] : nbr[q]) local += J * std::cos(th[j]);
        const double dE = -A * (std::sin(nt) - std::sin(th[q])) + B * local * (std::cos(nt) - std::cos(th[q]));
        const double u = uniform01(rng);
        if (dE <= 0.0 || u < std::exp(-dE / o.temperature)) th[q] = nt;
      }
    }
    std::vector<std::int8_t> out(n);
    for (std::size_t q = 0; q < n; ++q) out[q] = std::cos(th[q]) >= 0.0 ? 1 : -1;
    ++h.counts[SpinConfig(std::move(out))];
  }
  return h;
}

}  // namespace anneal_range
