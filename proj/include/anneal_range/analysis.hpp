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
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anneal_range/dynamics.hpp"
#include "anneal_range/schedule.hpp"

namespace anneal_range {

/// One measured (device, J_t, s*, tau) point.
struct ExperimentRecord {
  std::string device;
  double J_t = 0.0;
  double s_star = 0.0;
  double gamma_star = 0.0;
  double tau_us = 0.0;
  ClassCounts counts;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  std::uint64_t point = 0;  // position in the sweep
  std::vector<std::pair<std::string, std::uint64_t>> top_configs;  // most frequent readouts
  std::optional<ClassProbabilities> exact;  // populations before sampling, when known
  std::vector<std::string> warnings;
};

/// Violations of the record invariants; pass a schedule to also check Gamma*.
inline std::vector<std::string> validate_record(const ExperimentRecord& r, const ScheduleTable* sched = nullptr,
                                                double gamma_tol = 1e-6) {
  std::vector<std::string> bad;
  if (r.counts.shots() != r.shots) bad.push_back("class counts do not sum to shots");
  if (r.shots == 0) bad.push_back("record has no shots");
  if (sched != nullptr) {
    const double g = sched->gamma(r.s_star);
    if (std::abs(g - r.gamma_star) > gamma_tol) bad.push_back("gamma_star inconsistent with the schedule at s_star");
  }
  return bad;
}

struct ClassEstimate {
  double p = 0.0;
  double se = 0.0;
};

struct ClassEstimates {
  ClassEstimate start, true_min, false_min, other;
};

inline ClassEstimate binomial_estimate(std::uint64_t k, std::uint64_t n) {
  const double p = static_cast<double>(k) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

inline ClassEstimates class_probabilities(const ExperimentRecord& r) {
  if (r.shots == 0) throw std::invalid_argument("record has no shots");
  if (r.counts.shots() != r.shots) throw std::invalid_argument("class counts do not sum to shots");
  return {binomial_estimate(r.counts.start, r.shots), binomial_estimate(r.counts.true_min, r.shots),
          binomial_estimate(r.counts.false_min, r.shots), binomial_estimate(r.counts.other, r.shots)};
}

// ---------------------------------------------------------------------------
// Branching fit: P_false(tau) = 1 - (1 - R) exp(-kappa tau)

struct BranchingFit {
  double R_false = 0.0;
  double kappa = 0.0;  // 1/us
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double rss = 0.0;
  std::size_t n_points = 0;
  bool kappa_identifiable = true;
  std::vector<std::string> notes;

  double sigma_R() const { return std::sqrt(covariance(0, 0)); }
  double sigma_kappa() const { return std::sqrt(covariance(1, 1)); }
};

inline double branching_model(double R, double kappa, double tau) { return 1.0 - (1.0 - R) * std::exp(-kappa * tau); }

namespace detail {

struct FitPoint {
  double tau;
  double p;
  double w;  // residual weight (1 / variance, or 1)
};

inline double fit_rss(const std::vector<FitPoint>& pts, double R, double k) {
  double s = 0.0;
  for (const auto& q : pts) {
    const double r = q.p - branching_model(R, k, q.tau);
    s += q.w * r * r;
  }
  return s;
}

// Rows scaled by sqrt(w).
inline Eigen::MatrixXd fit_jacobian(const std::vector<FitPoint>& pts, double R, double k) {
  Eigen::MatrixXd J(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double e = std::exp(-k * pts[i].tau);
    const double sw = std::sqrt(pts[i].w);
    J(static_cast<Eigen::Index>(i), 0) = sw * e;
    J(static_cast<Eigen::Index>(i), 1) = sw * (1.0 - R) * pts[i].tau * e;
  }
  return J;
}

// Bounded Levenberg-Marquardt from one start; returns the final (R, kappa).
inline std::pair<double, double> lm_solve(const std::vector<FitPoint>& pts, double R, double k) {
  double lambda = 1e-3;
  double f = fit_rss(pts, R, k);
  for (int it = 0; it < 1000; ++it) {
    const auto J = fit_jacobian(pts, R, k);
    Eigen::VectorXd r(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) = std::sqrt(pts[i].w) * (pts[i].p - branching_model(R, k, pts[i].tau));
    }
    const Eigen::Matrix2d JtJ = J.transpose() * J;
    const Eigen::Vector2d g = J.transpose() * r;
    bool moved = false;
    while (lambda < 1e12) {
      Eigen::Matrix2d A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::Vector2d d = A.ldlt().solve(g);
      const double Rn = std::clamp(R + d(0), 0.0, 1.0);
      const double kn = std::max(k + d(1), 0.0);
      const double fn = fit_rss(pts, Rn, kn);
      if (fn <= f) {
        const double step = std::abs(Rn - R) + std::abs(kn - k) / std::max(1.0, k);
        R = Rn;
        k = kn;
        const double df = f - fn;
        f = fn;
        lambda = std::max(lambda * 0.3, 1e-15);
        moved = true;
        if (step < 1e-15 || df <= 1e-30 * std::max(1.0, f)) return {R, k};
        break;
      }
      lambda *= 10.0;
    }
    if (!moved) break;
  }
  return {R, k};
}

}  // namespace detail

struct BranchingFitOptions {
  // 0: unweighted fit, covariance (J^T J)^-1 RSS / (n - 2).
  // > 0: residuals weighted by the binomial variance at this shot count,
  //      covariance (J^T W J)^-1.
  std::uint64_t shots = 0;
};

/// Least-squares fit of (R_false, kappa) with a fixed multi-start grid.
inline BranchingFit branching_fit(std::vector<std::pair<double, double>> points, const BranchingFitOptions& opts = {}) {
  if (points.size() < 3) throw std::invalid_argument("branching fit needs at least 3 points");
  std::sort(points.begin(), points.end());
  std::vector<detail::FitPoint> pts;
  const bool weighted = opts.shots > 0;
  const double n_shots = static_cast<double>(opts.shots);
  for (const auto& [t, p] : points) {
    if (!(t >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("invalid fit point");
    double w = 1.0;
    if (weighted) {
      // Keep the variance away from zero at p = 0 or 1.
      const double pc = std::clamp(p, 0.5 / n_shots, 1.0 - 0.5 / n_shots);
      w = n_shots / (pc * (1.0 - pc));
    }
    pts.push_back({t, p, w});
  }
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < pts.size(); ++i) distinct += pts[i].tau != pts[i - 1].tau ? 1 : 0;
  if (distinct < 2) throw std::invalid_argument("branching fit needs at least 2 distinct hold times");

  BranchingFit out;
  out.n_points = pts.size();
  const auto [pmin, pmax] = std::minmax_element(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.p < b.p; });
  const double spread = pmax->p - pmin->p;
  const double tmax = pts.back().tau;
  const double dof = static_cast<double>(pts.size()) - 2.0;
  const double inf = std::numeric_limits<double>::infinity();

  if (spread <= 1e-12) {
    // Flat data: kappa cannot be told apart from zero (or from infinity when P = 1).
    out.R_false = std::clamp(pmin->p, 0.0, 1.0);
    out.kappa = 0.0;
    out.kappa_identifiable = false;
    out.notes.push_back("all P_false equal; kappa unidentifiable");
    out.rss = detail::fit_rss(pts, out.R_false, 0.0);
    double sw = 0.0;
    for (const auto& q : pts) sw += q.w;
    out.covariance(0, 0) = weighted ? 1.0 / sw : out.rss / dof / sw;
    out.covariance(1, 1) = inf;
    return out;
  }

  double bestR = 0.0, bestk = 0.0, bestf = inf;
  const std::array<double, 5> Rs{0.05, 0.25, 0.5, 0.75, 0.95};
  const std::array<double, 5> kt{0.1, 0.5, 2.0, 8.0, 32.0};  // kappa * tau_max
  for (double R0 : Rs) {
    for (double k0 : kt) {
      const auto [R, k] = detail::lm_solve(pts, R0, tmax > 0.0 ? k0 / tmax : k0);
      const double f = detail::fit_rss(pts, R, k);
      if (f < bestf) {
        bestf = f;
        bestR = R;
        bestk = k;
      }
    }
  }
  if (weighted) {
    // Re-weight with the fitted curve instead of the noisy observations.
    for (int pass = 0; pass < 20; ++pass) {
      for (auto& q : pts) {
        const double pc = std::clamp(branching_model(bestR, bestk, q.tau), 0.5 / n_shots, 1.0 - 0.5 / n_shots);
        q.w = n_shots / (pc * (1.0 - pc));
      }
      const auto [R, k] = detail::lm_solve(pts, bestR, bestk);
      const double change = std::abs(R - bestR) + std::abs(k - bestk);
      bestR = R;
      bestk = k;
      if (change < 1e-13) break;
    }
    bestf = detail::fit_rss(pts, bestR, bestk);
  }
  out.R_false = bestR;
  out.kappa = bestk;
  out.rss = bestf;
  const auto J = detail::fit_jacobian(pts, bestR, bestk);
  const Eigen::Matrix2d JtJ = J.transpose() * J;
  const double scale = weighted ? 1.0 : bestf / dof;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(JtJ);
  if (lu.rank() < 2 || dof <= 0.0) {
    out.kappa_identifiable = false;
    out.notes.push_back("singular normal matrix at the optimum");
    out.covariance(0, 0) = JtJ(0, 0) > 0.0 && dof > 0.0 ? scale / JtJ(0, 0) : inf;
    out.covariance(1, 1) = inf;
  } else {
    out.covariance = lu.inverse() * scale;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  }
  if (bestR >= 1.0) {
    out.kappa_identifiable = false;
    out.notes.push_back("R_false at its upper bound; kappa unidentifiable");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep statistics

struct SweepPoint {
  double gamma = 0.0;
  double p = 0.0;
};

namespace detail {

// Pools records sharing Gamma* and returns class probability per Gamma*, ascending.
template <class Field>
std::vector<SweepPoint> pooled(const std::vector<ExperimentRecord>& recs, Field field) {
  std::map<double, std::pair<std::uint64_t, std::uint64_t>> acc;
  for (const auto& r : recs) {
    auto& a = acc[r.gamma_star];
    a.first += field(r.counts);
    a.second += r.shots;
  }
  std::vector<SweepPoint> out;
  for (const auto& [g, kn] : acc) {
    if (kn.second == 0) throw std::invalid_argument("record has no shots");
    out.push_back({g, static_cast<double>(kn.first) / static_cast<double>(kn.second)});
  }
  return out;
}

}  // namespace detail

inline std::vector<SweepPoint> sweep_curve(const std::vector<ExperimentRecord>& recs, OutcomeClass c) {
  return detail::pooled(recs, [c](const ClassCounts& k) {
    switch (c) {
      case OutcomeClass::Start: return k.start;
      case OutcomeClass::TrueMin: return k.true_min;
      case OutcomeClass::FalseMin: return k.false_min;
      case OutcomeClass::Other: break;
    }
    return k.other;
  });
}

/// Largest measured P_TrueMin; ties go to the larger Gamma*.
inline SweepPoint peak_true_min(const std::vector<SweepPoint>& curve) {
  if (curve.empty()) throw std::invalid_argument("empty sweep");
  if (curve.size() < 3) throw std::invalid_argument("peak search needs at least 3 Gamma* values");
  SweepPoint best = curve.front();
  for (const auto& q : curve) {
    if (q.p > best.p || (q.p == best.p && q.gamma > best.gamma)) best = q;
  }
  return best;
}

inline SweepPoint peak_true_min(const std::vector<ExperimentRecord>& recs) {
  return peak_true_min(sweep_curve(recs, OutcomeClass::TrueMin));
}

inline double default_plateau_gamma(Device d) { return d == Device::LowNoise ? 0.1 : 0.05; }

/// max P over points with Gamma* <= gamma_max.
inline double plateau_false_min(const std::vector<SweepPoint>& curve, double gamma_max) {
  double best = -1.0;
  for (const auto& q : curve) {
    if (q.gamma <= gamma_max) best = std::max(best, q.p);
  }
  if (best < 0.0) throw std::invalid_argument("no sweep point at or below gamma_max");
  return best;
}

inline double plateau_false_min(const std::vector<ExperimentRecord>& recs, double gamma_max) {
  return plateau_false_min(sweep_curve(recs, OutcomeClass::FalseMin), gamma_max);
}

/// Gamma* where P_Start first drops below 0.5 scanning up from small Gamma*,
/// interpolated linearly between the bracketing points.
inline double exit_threshold(const std::vector<SweepPoint>& curve) {
  if (curve.size() < 2) throw std::invalid_argument("exit threshold needs at least 2 points");
  std::vector<SweepPoint> c = curve;
  std::sort(c.begin(), c.end(), [](auto& a, auto& b) { return a.gamma < b.gamma; });
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i - 1].p >= 0.5 && c[i].p < 0.5) {
      const double w = (c[i - 1].p - 0.5) / (c[i - 1].p - c[i].p);
      return c[i - 1].gamma + w * (c[i].gamma - c[i - 1].gamma);
    }
  }
  throw std::domain_error("P_start does not cross 0.5 within the sweep");
}

inline double exit_threshold(const std::vector<ExperimentRecord>& recs) {
  return exit_threshold(sweep_curve(recs, OutcomeClass::Start));
}

}  // namespace anneal_range
