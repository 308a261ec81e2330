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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anneal_range/ising.hpp"
#include "anneal_range/schedule.hpp"

namespace anneal_range {

/// H / B = -Gamma sum_i X_i + H_prob in the computational basis, applied
/// matrix-free. Basis index = SpinConfig::index().
class SparseHamiltonian {
 public:
  SparseHamiltonian(const IsingProblem& problem, double gamma)
      : n_(problem.n_qubits()), gamma_(gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("Gamma must be non-negative");
    if (n_ > kMaxEnumerableQubits) throw std::length_error("problem too large for the dense state vector");
    diag_ = energy_table(problem);
    scale_ = 0.0;
    for (double d : diag_) scale_ = std::max(scale_, std::abs(d));
    scale_ += static_cast<double>(n_) * gamma_;
    if (scale_ == 0.0) scale_ = 1.0;
  }

  std::size_t n_qubits() const { return n_; }
  std::size_t dim() const { return diag_.size(); }
  double gamma() const { return gamma_; }
  const std::vector<double>& diagonal() const { return diag_; }
  /// Upper bound on the spectral radius, used to make tolerances relative.
  double scale() const { return scale_; }

  /// Nonzero (column, value) pairs of one row.
  std::vector<std::pair<std::uint64_t, double>> row(std::uint64_t r) const {
    std::vector<std::pair<std::uint64_t, double>> out;
    if (diag_[r] != 0.0) out.emplace_back(r, diag_[r]);
    if (gamma_ != 0.0) {
      for (std::size_t b = 0; b < n_; ++b) out.emplace_back(r ^ (std::uint64_t{1} << b), -gamma_);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  void apply(const double* x, double* y) const {
    const std::uint64_t d = dim();
    for (std::uint64_t i = 0; i < d; ++i) y[i] = diag_[i] * x[i];
    if (gamma_ == 0.0) return;
    // Bit b pairs blocks of length 2^b; walking them keeps memory access contiguous.
    for (std::size_t b = 0; b < n_; ++b) {
      const std::uint64_t stride = std::uint64_t{1} << b;
      for (std::uint64_t base = 0; base < d; base += 2 * stride) {
        double* y0 = y + base;
        double* y1 = y + base + stride;
        const double* x0 = x + base;
        const double* x1 = x + base + stride;
        for (std::uint64_t j = 0; j < stride; ++j) {
          y0[j] -= gamma_ * x1[j];
          y1[j] -= gamma_ * x0[j];
        }
      }
    }
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd Y(X.rows(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) apply(X.col(c).data(), Y.col(c).data());
    return Y;
  }

  Eigen::MatrixXd dense() const {
    const auto d = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (auto [c, v] : row(static_cast<std::uint64_t>(r))) M(r, static_cast<Eigen::Index>(c)) = v;
    }
    return M;
  }

 private:
  std::size_t n_;
  double gamma_;
  std::vector<double> diag_;
  double scale_;
};

inline SparseHamiltonian assemble(const IsingProblem& problem, double gamma) { return SparseHamiltonian(problem, gamma); }

struct EigenSystem {
  double gamma = 0.0;
  std::vector<double> values;  // ascending
  Eigen::MatrixXd vectors;     // one column per value
  std::vector<double> residuals;
  int iterations = 0;
};

struct EigenOptions {
  double tol = 1e-10;  // residual norm relative to H.scale()
  int max_iter = 5000;
  int block = 0;  // 0 = max(k + 4, number of guesses)
  int n_check = 0;  // leading pairs that must meet tol; 0 = all k
};

class EigenSolverError : public std::runtime_error {
 public:
  EigenSolverError(const std::string& what, std::vector<double> best) : std::runtime_error(what), best_residuals(std::move(best)) {}
  std::vector<double> best_residuals;
};

namespace detail {

// Orthonormalizes the columns of V against Q (already orthonormal) and each
// other, dropping columns that become numerically dependent.
inline Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& V) {
  std::vector<Eigen::VectorXd> kept;
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    Eigen::VectorXd v = V.col(c);
    const double n0 = v.norm();
    if (n0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      if (Q.cols() > 0) v -= Q * (Q.transpose() * v);
      for (const auto& k : kept) v -= k * k.dot(v);
    }
    const double n1 = v.norm();
    if (n1 > 1e-10 * n0) kept.push_back(v / n1);
  }
  Eigen::MatrixXd out(V.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = kept[i];
  return out;
}

inline Eigen::MatrixXd hstack(std::initializer_list<const Eigen::MatrixXd*> parts) {
  Eigen::Index rows = 0, cols = 0;
  for (auto* p : parts) {
    if (p->cols() == 0) continue;
    rows = p->rows();
    cols += p->cols();
  }
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index at = 0;
  for (auto* p : parts) {
    if (p->cols() == 0) continue;
    out.middleCols(at, p->cols()) = *p;
    at += p->cols();
  }
  return out;
}

}  // namespace detail

/// k lowest eigenpairs by locally optimal block preconditioned conjugate
/// gradients with a diagonal preconditioner. Columns of `guesses` seed the block.
inline EigenSystem lowest_eigenpairs(const SparseHamiltonian& H, int k, const Eigen::MatrixXd* guesses = nullptr,
                                     const EigenOptions& opts = {}) {
  const auto dim = static_cast<Eigen::Index>(H.dim());
  if (k < 1 || k > dim) throw std::invalid_argument("k must lie in [1, dim]");
  int nb = opts.block > 0 ? opts.block : std::max<int>(k + 4, guesses ? static_cast<int>(guesses->cols()) : 0);
  nb = static_cast<int>(std::min<Eigen::Index>(std::max(nb, k), dim));
  const auto& d = H.diagonal();

  // Small problems go straight to a dense solver.
  if (dim <= 256) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.dense());
    EigenSystem out;
    out.gamma = H.gamma();
    out.vectors = es.eigenvectors().leftCols(k);
    for (int i = 0; i < k; ++i) out.values.push_back(es.eigenvalues()(i));
    Eigen::MatrixXd R = H.apply(out.vectors) - out.vectors * Eigen::VectorXd(es.eigenvalues().head(k)).asDiagonal();
    for (int i = 0; i < k; ++i) out.residuals.push_back(R.col(i).norm());
    return out;
  }

  // No transverse field: the matrix is diagonal and the basis vectors are exact.
  if (H.gamma() == 0.0) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)]; });
    EigenSystem out;
    out.gamma = 0.0;
    out.vectors = Eigen::MatrixXd::Zero(dim, k);
    for (int i = 0; i < k; ++i) {
      out.vectors(order[static_cast<std::size_t>(i)], i) = 1.0;
      out.values.push_back(d[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
      out.residuals.push_back(0.0);
    }
    return out;
  }

  // Initial block: guesses first, then basis vectors of the lowest diagonal
  // entries with a deterministic perturbation.
  Eigen::MatrixXd X0(dim, nb);
  int filled = 0;
  if (guesses) {
    if (guesses->rows() != dim) throw std::invalid_argument("guess vectors have the wrong length");
    for (Eigen::Index c = 0; c < guesses->cols() && filled < nb; ++c) X0.col(filled++) = guesses->col(c);
  }
  if (filled < nb) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)]; });
    std::uint64_t state = 0x9E3779B97F4A7C15ULL;
    auto next = [&]() {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      return (static_cast<double>(state >> 11) / 9007199254740992.0) - 0.5;
    };
    for (int j = 0; filled < nb; ++j, ++filled) {
      Eigen::VectorXd v(dim);
      for (Eigen::Index i = 0; i < dim; ++i) v(i) = 1e-3 * next();
      v(order[static_cast<std::size_t>(j)]) += 1.0;
      X0.col(filled) = v;
    }
  }
  Eigen::MatrixXd empty(dim, 0);
  Eigen::MatrixXd X = detail::orthonormal_complement(empty, X0);
  if (X.cols() < k) throw std::invalid_argument("initial block is rank deficient");

  const double abs_tol = opts.tol * H.scale();
  Eigen::MatrixXd P(dim, 0);
  Eigen::MatrixXd HX = H.apply(X);
  Eigen::VectorXd lambda;
  std::vector<double> best(static_cast<std::size_t>(k), INFINITY);
  const Eigen::Index n_check = opts.n_check > 0 ? std::min(opts.n_check, k) : k;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X.transpose() * HX);
    X = X * es.eigenvectors();
    HX = HX * es.eigenvectors();
    lambda = es.eigenvalues();
  }
  const double floor = std::max(H.gamma(), 1e-3);
  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::Index m = X.cols();
    Eigen::MatrixXd R = HX - X * lambda.asDiagonal();
    bool done = true;
    std::vector<Eigen::Index> active;
    for (Eigen::Index c = 0; c < m; ++c) {
      const double rn = R.col(c).norm();
      if (c < k) best[static_cast<std::size_t>(c)] = rn;
      if (c < n_check && rn > abs_tol) done = false;
      if (rn > abs_tol) active.push_back(c);
    }
    if (done) {
      EigenSystem out;
      out.gamma = H.gamma();
      out.vectors = X.leftCols(k);
      for (int i = 0; i < k; ++i) {
        out.values.push_back(lambda(i));
        out.residuals.push_back(best[static_cast<std::size_t>(i)]);
      }
      out.iterations = it;
      return out;
    }
    Eigen::MatrixXd W(dim, static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto c = active[a];
      for (Eigen::Index i = 0; i < dim; ++i) {
        double den = d[static_cast<std::size_t>(i)] - lambda(c);
        if (std::abs(den) < floor) den = den < 0 ? -floor : floor;
        W(i, static_cast<Eigen::Index>(a)) = R(i, c) / den;
      }
    }
    Eigen::MatrixXd Wo = detail::orthonormal_complement(X, W);
    Eigen::MatrixXd XW = detail::hstack({&X, &Wo});
    Eigen::MatrixXd Po = detail::orthonormal_complement(XW, P);
    Eigen::MatrixXd V = detail::hstack({&XW, &Po});
    Eigen::MatrixXd HV(dim, V.cols());
    HV.leftCols(m) = HX;
    if (V.cols() > m) HV.rightCols(V.cols() - m) = H.apply(V.rightCols(V.cols() - m));
    Eigen::MatrixXd G = V.transpose() * HV;
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    Eigen::MatrixXd C = es.eigenvectors().leftCols(m);
    Eigen::MatrixXd Xn = V * C;
    Eigen::MatrixXd HXn = HV * C;
    // Search direction: the part of the update outside the old block.
    if (V.cols() > m) {
      P = V.rightCols(V.cols() - m) * C.bottomRows(V.cols() - m);
    } else {
      P.resize(dim, 0);
    }
    X = Xn;
    HX = HXn;
    lambda = es.eigenvalues().head(m);
    // Periodic re-orthonormalization keeps rounding from accumulating in X.
    if ((it + 1) % 25 == 0) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
      Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, m);
      Eigen::MatrixXd HQ = H.apply(Q);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(Q.transpose() * HQ);
      X = Q * es2.eigenvectors();
      HX = HQ * es2.eigenvectors();
      lambda = es2.eigenvalues();
    }
  }
  throw EigenSolverError("eigensolver did not converge", best);
}

/// Eigenvector guesses used for crossing work: the lowest eigenstates at
/// Gamma = 1 plus the basis state of the known classical minimum.
inline Eigen::MatrixXd crossing_guesses(const IsingProblem& problem, const SpinConfig& true_min, int n_low = 5) {
  const auto H1 = assemble(problem, 1.0);
  const auto es = lowest_eigenpairs(H1, n_low);
  Eigen::MatrixXd G(static_cast<Eigen::Index>(H1.dim()), n_low + 1);
  G.leftCols(n_low) = es.vectors;
  G.col(n_low).setZero();
  G(static_cast<Eigen::Index>(true_min.index()), n_low) = 1.0;
  return G;
}

struct GapResult {
  double gap = 0.0;
  EigenSystem system;
};

/// E1 - E0 at Gamma. The returned eigensystem can seed the next call.
inline GapResult gap(const IsingProblem& problem, double gamma, const Eigen::MatrixXd* warm_start = nullptr,
                     const EigenOptions& opts = {}) {
  const auto H = assemble(problem, gamma);
  auto es = lowest_eigenpairs(H, 2, warm_start, opts);
  return {std::max(0.0, es.values[1] - es.values[0]), std::move(es)};
}

struct BracketStep {
  double lo = 0.0;
  double hi = 0.0;
  double mid = 0.0;
  double derivative = 0.0;
  double gap = 0.0;
};

struct CrossingReport {
  double J_t = 0.0;
  double gamma_cross = 0.0;
  double gap_upper_bound = 0.0;
  double B_low = 0.0;   // GHz, low-noise schedule at s(Gamma_cross)
  double B_high = 0.0;  // GHz, high-noise schedule
  bool noise_floor = false;
  std::vector<BracketStep> history;
};

struct CrossingOptions {
  double lo = 1e-4;
  double hi = 0.2;
  double fd_step = 1e-5;
  double width_tol = 1e-10;
  double noise_rel = 1e-6;
  int max_steps = 200;
};

/// Bisection on the central-difference derivative of the gap. The gap at the
/// returned point bounds the minimum gap from above.
inline CrossingReport locate_crossing(const IsingProblem& problem, double J_t, const Eigen::MatrixXd& guesses,
                                      const CrossingOptions& o = {}, const ScheduleTable* low = nullptr,
                                      const ScheduleTable* high = nullptr) {
  if (!(o.lo > o.fd_step && o.hi > o.lo)) throw std::invalid_argument("invalid crossing bracket");
  // Each solve starts from the previous solution, except that the last seed
  // column always keeps the caller's true-minimum guess so the block cannot
  // lose that state when the levels exchange character.
  EigenOptions eo;
  eo.block = static_cast<int>(guesses.cols());
  eo.n_check = 2;
  Eigen::MatrixXd warm = guesses;
  const Eigen::Index last = guesses.cols() - 1;
  auto gap_at = [&](double g) {
    const auto H = assemble(problem, g);
    auto es = lowest_eigenpairs(H, static_cast<int>(guesses.cols()), &warm, eo);
    warm.leftCols(last) = es.vectors.leftCols(last);
    warm.col(last) = guesses.col(last);
    return std::max(0.0, es.values[1] - es.values[0]);
  };
  auto deriv = [&](double g) { return (gap_at(g + o.fd_step) - gap_at(g - o.fd_step)) / (2.0 * o.fd_step); };

  CrossingReport rep;
  rep.J_t = J_t;
  double lo = o.lo, hi = o.hi;
  const double d_lo = deriv(lo);
  const double d_hi = deriv(hi);
  if (!(d_lo < 0.0 && d_hi > 0.0)) throw std::runtime_error("gap derivative does not change sign inside the bracket");
  double mid = 0.5 * (lo + hi);
  double gmid = 0.0;
  for (int step = 0; step < o.max_steps; ++step) {
    mid = 0.5 * (lo + hi);
    gmid = gap_at(mid);
    const double dm = deriv(mid);
    rep.history.push_back({lo, hi, mid, dm, gmid});
    if (std::abs(dm) < o.noise_rel * gmid) {
      rep.noise_floor = true;
      break;
    }
    if (dm < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= o.width_tol) break;
  }
  rep.gamma_cross = mid;
  rep.gap_upper_bound = gmid;
  if (low) rep.B_low = low->B(low->s_of_gamma(mid));
  if (high) rep.B_high = high->B(high->s_of_gamma(mid));
  return rep;
}

}  // namespace anneal_range
