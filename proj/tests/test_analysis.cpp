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
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "anneal_range/analysis.hpp"
#include "anneal_range/schedule.hpp"

namespace ar = anneal_range;

namespace {

const std::vector<double> kTaus{1, 2, 5, 10, 20, 50, 100};

std::vector<std::pair<double, double>> exact_points(double R, double k) {
  std::vector<std::pair<double, double>> pts;
  for (double t : kTaus) pts.emplace_back(t, 1.0 - (1.0 - R) * std::exp(-k * t));
  return pts;
}

ar::ExperimentRecord record(std::uint64_t s, std::uint64_t t, std::uint64_t f, std::uint64_t o) {
  ar::ExperimentRecord r;
  r.device = "low_noise";
  r.counts = {s, t, f, o};
  r.shots = s + t + f + o;
  return r;
}

std::vector<ar::SweepPoint> curve(const std::vector<double>& g, const std::vector<double>& p) {
  std::vector<ar::SweepPoint> out;
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back({g[i], p[i]});
  return out;
}

}  // namespace

TEST(ClassProbabilities, Fractions) {
  const auto e = ar::class_probabilities(record(500, 300, 150, 50));
  EXPECT_DOUBLE_EQ(e.start.p, 0.5);
  EXPECT_DOUBLE_EQ(e.true_min.p, 0.3);
  EXPECT_DOUBLE_EQ(e.false_min.p, 0.15);
  EXPECT_DOUBLE_EQ(e.other.p, 0.05);
  EXPECT_EQ(e.start.p + e.true_min.p + e.false_min.p + e.other.p, 1.0);
  EXPECT_DOUBLE_EQ(e.true_min.se, std::sqrt(0.3 * 0.7 / 1000));
}

TEST(ClassProbabilities, WorstCaseStandardError) {
  const auto e = ar::class_probabilities(record(5000, 5000, 0, 0));
  EXPECT_EQ(e.start.se, 0.005);
}

TEST(ClassProbabilities, AllInStart) {
  const auto e = ar::class_probabilities(record(1000, 0, 0, 0));
  EXPECT_EQ(e.start.p, 1.0);
  EXPECT_EQ(e.start.se, 0.0);
  EXPECT_EQ(e.other.p, 0.0);
}

TEST(ClassProbabilities, RejectsInconsistentRecords) {
  auto r = record(1, 2, 3, 4);
  r.shots = 11;
  EXPECT_THROW(ar::class_probabilities(r), std::invalid_argument);
  EXPECT_FALSE(ar::validate_record(r).empty());
  EXPECT_THROW(ar::class_probabilities(record(0, 0, 0, 0)), std::invalid_argument);
}

TEST(ValidateRecord, GammaConsistency) {
  const auto sched = ar::synthetic_schedule(ar::Device::LowNoise);
  auto r = record(1, 1, 1, 1);
  r.s_star = 0.6;
  r.gamma_star = sched.gamma(0.6);
  EXPECT_TRUE(ar::validate_record(r, &sched).empty());
  r.gamma_star += 1e-4;
  EXPECT_FALSE(ar::validate_record(r, &sched).empty());
}

TEST(BranchingFit, RecoversExactData) {
  for (auto [R, k] : {std::pair{0.3, 0.05}, std::pair{0.1, 0.2}, std::pair{0.7, 0.01}}) {
    const auto f = ar::branching_fit(exact_points(R, k));
    EXPECT_NEAR(f.R_false, R, 1e-6);
    EXPECT_NEAR(f.kappa, k, 1e-6);
    EXPECT_LE(f.rss, 1e-10);
    EXPECT_EQ(f.n_points, 7u);
    EXPECT_TRUE(f.kappa_identifiable);
  }
}

TEST(BranchingFit, OrderInvariant) {
  auto pts = exact_points(0.4, 0.03);
  pts[2].second += 0.01;
  pts[5].second -= 0.02;
  const auto a = ar::branching_fit(pts);
  std::reverse(pts.begin(), pts.end());
  std::swap(pts[0], pts[3]);
  const auto b = ar::branching_fit(pts);
  EXPECT_EQ(a.R_false, b.R_false);
  EXPECT_EQ(a.kappa, b.kappa);
  EXPECT_EQ(a.rss, b.rss);
}

TEST(BranchingFit, BestOfAllStarts) {
  auto pts = exact_points(0.2, 0.08);
  pts[1].second += 0.03;
  pts[4].second -= 0.02;
  const auto f = ar::branching_fit(pts);
  std::vector<ar::detail::FitPoint> fp;
  for (auto [t, p] : pts) fp.push_back({t, p, 1.0});
  for (double R0 : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    for (double k0 : {0.001, 0.005, 0.02, 0.08, 0.32}) {
      const auto [R, k] = ar::detail::lm_solve(fp, R0, k0);
      EXPECT_LE(f.rss, ar::detail::fit_rss(fp, R, k) + 1e-15);
    }
  }
}

TEST(BranchingFit, CovarianceIsSymmetricPsdAndMatchesFormula) {
  auto pts = exact_points(0.35, 0.04);
  pts[0].second += 0.01;
  pts[3].second -= 0.015;
  pts[6].second -= 0.005;
  const auto f = ar::branching_fit(pts);
  EXPECT_EQ(f.covariance(0, 1), f.covariance(1, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(f.covariance);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
  // Independent Jacobian of 1 - (1 - R) exp(-k t).
  Eigen::MatrixXd J(7, 2);
  for (int i = 0; i < 7; ++i) {
    const double t = pts[static_cast<std::size_t>(i)].first;
    J(i, 0) = std::exp(-f.kappa * t);
    J(i, 1) = (1.0 - f.R_false) * t * std::exp(-f.kappa * t);
  }
  const Eigen::Matrix2d want = (J.transpose() * J).inverse() * (f.rss / 5.0);
  EXPECT_LT((want - f.covariance).cwiseAbs().maxCoeff(), 1e-8 * want.cwiseAbs().maxCoeff());
  EXPECT_NEAR(f.sigma_R(), std::sqrt(want(0, 0)), 1e-6 * std::sqrt(want(0, 0)));
}

TEST(BranchingFit, BoundsRespected) {
  std::vector<std::pair<double, double>> pts{{1, 0.9}, {2, 0.6}, {5, 0.3}, {10, 0.2}};
  const auto f = ar::branching_fit(pts);
  EXPECT_GE(f.R_false, 0.0);
  EXPECT_LE(f.R_false, 1.0);
  EXPECT_GE(f.kappa, 0.0);
}

TEST(BranchingFit, SaturatedCurveFlagged) {
  std::vector<std::pair<double, double>> pts;
  for (double t : kTaus) pts.emplace_back(t, 1.0);
  const auto f = ar::branching_fit(pts);
  EXPECT_EQ(f.R_false, 1.0);
  EXPECT_FALSE(f.kappa_identifiable);
  EXPECT_TRUE(std::isinf(f.covariance(1, 1)));
}

TEST(BranchingFit, FlatDataFlagged) {
  std::vector<std::pair<double, double>> pts{{1, 0.4}, {5, 0.4}, {20, 0.4 + 5e-13}};
  const auto f = ar::branching_fit(pts);
  EXPECT_FALSE(f.kappa_identifiable);
  EXPECT_NEAR(f.R_false, 0.4, 1e-12);
}

TEST(BranchingFit, RejectsTooFewPoints) {
  EXPECT_THROW(ar::branching_fit({{1, 0.2}, {2, 0.3}}), std::invalid_argument);
  EXPECT_THROW(ar::branching_fit({{5, 0.2}, {5, 0.3}, {5, 0.25}}), std::invalid_argument);
}

TEST(BranchingFit, WeightedModeRecoversExactData) {
  ar::BranchingFitOptions o;
  o.shots = 10000;
  const auto f = ar::branching_fit(exact_points(0.3, 0.05), o);
  EXPECT_NEAR(f.R_false, 0.3, 1e-6);
  EXPECT_NEAR(f.kappa, 0.05, 1e-6);
}

TEST(BranchingFit, NoisyRecoveryIsUnbiased) {
  // Averages over trials sit close to the truth; per-trial coverage is checked in the acceptance run.
  std::mt19937_64 rng(77);
  double sumR = 0.0, sumk = 0.0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::pair<double, double>> pts;
    for (auto [tau, p] : exact_points(0.3, 0.05)) {
      std::binomial_distribution<int> b(10000, p);
      pts.emplace_back(tau, b(rng) / 10000.0);
    }
    const auto f = ar::branching_fit(pts);
    sumR += f.R_false;
    sumk += f.kappa;
  }
  EXPECT_NEAR(sumR / trials, 0.3, 0.003);
  EXPECT_NEAR(sumk / trials, 0.05, 0.001);
}

TEST(PeakTrueMin, UnimodalAndTies) {
  const auto c = curve({0.1, 0.2, 0.3, 0.4}, {0.1, 0.6, 0.3, 0.2});
  EXPECT_EQ(ar::peak_true_min(c).gamma, 0.2);
  EXPECT_EQ(ar::peak_true_min(c).p, 0.6);
  const auto t = curve({0.1, 0.2, 0.3, 0.4}, {0.1, 0.6, 0.6, 0.2});
  EXPECT_EQ(ar::peak_true_min(t).gamma, 0.3);
  EXPECT_THROW(ar::peak_true_min(curve({0.1, 0.2}, {0.1, 0.2})), std::invalid_argument);
  EXPECT_THROW(ar::peak_true_min(std::vector<ar::SweepPoint>{}), std::invalid_argument);
}

TEST(PlateauFalseMin, Restriction) {
  EXPECT_EQ(ar::plateau_false_min(curve({0.02, 0.05, 0.2}, {0.0, 0.0, 0.9}), 0.1), 0.0);
  EXPECT_EQ(ar::plateau_false_min(curve({0.02, 0.05, 0.2, 0.3}, {0.2, 0.2, 0.9, 0.9}), 0.1), 0.2);
  EXPECT_THROW(ar::plateau_false_min(curve({0.2, 0.3}, {0.1, 0.1}), 0.1), std::invalid_argument);
  EXPECT_EQ(ar::default_plateau_gamma(ar::Device::LowNoise), 0.1);
  EXPECT_EQ(ar::default_plateau_gamma(ar::Device::HighNoise), 0.05);
}

TEST(ExitThreshold, StepAndLogistic) {
  EXPECT_DOUBLE_EQ(ar::exit_threshold(curve({0.1, 0.2, 0.3, 0.4}, {1.0, 1.0, 0.0, 0.0})), 0.25);
  std::vector<double> g, p;
  for (int i = 0; i <= 40; ++i) {
    g.push_back(0.005 * i);
    p.push_back(1.0 / (1.0 + std::exp((0.005 * i - 0.0737) / 0.01)));
  }
  EXPECT_NEAR(ar::exit_threshold(curve(g, p)), 0.0737, 0.005);
  EXPECT_THROW(ar::exit_threshold(curve({0.1, 0.2, 0.3}, {1.0, 0.9, 0.8})), std::domain_error);
}

TEST(SweepCurve, PoolsEqualGamma) {
  auto a = record(10, 0, 0, 0);
  auto b = record(0, 10, 0, 0);
  auto c = record(0, 0, 20, 0);
  a.gamma_star = b.gamma_star = 0.1;
  c.gamma_star = 0.05;
  const auto k = ar::sweep_curve({a, b, c}, ar::OutcomeClass::Start);
  ASSERT_EQ(k.size(), 2u);
  EXPECT_EQ(k[0].gamma, 0.05);
  EXPECT_EQ(k[1].p, 0.5);
}
