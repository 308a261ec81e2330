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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "anneal_range/experiment.hpp"

namespace ar = anneal_range;
namespace fs = std::filesystem;

namespace {

ar::ExperimentConfig small_config(const std::string& dir) {
  ar::ExperimentConfig c;
  c.devices = {"low_noise", "high_noise"};
  c.J_t = {1.0};
  c.s_star = {0.6, 0.8};
  c.tau_us = {1.0};
  c.shots = 200;
  c.output_dir = (fs::temp_directory_path() / dir).string();
  fs::remove_all(c.output_dir);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Grid, LinspaceStep) {
  const auto g = ar::linspace_step(0.40, 0.90, 0.01);
  ASSERT_EQ(g.size(), 51u);
  EXPECT_EQ(g.front(), 0.4);
  EXPECT_EQ(g[17], 0.57);
  EXPECT_EQ(g.back(), 0.9);
  EXPECT_EQ(ar::linspace_step(0.0, 1.0, 0.1).size(), 11u);
  EXPECT_THROW(ar::linspace_step(1.0, 0.0, 0.1), std::invalid_argument);
}

TEST(Config, DefaultsAndValidation) {
  ar::ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.tau_us, (std::vector<double>{5.0, 100.0}));
  EXPECT_EQ(c.J_t.size(), 11u);
  auto bad = c;
  bad.shots = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.devices = {"/no/such/schedule.csv"};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.tau_us.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.J_t = {1.2};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Config, HashIgnoresOutputDirOnly) {
  ar::ExperimentConfig a, b;
  b.output_dir = "elsewhere";
  EXPECT_EQ(ar::config_hash(a), ar::config_hash(b));
  b.seed += 1;
  EXPECT_NE(ar::config_hash(a), ar::config_hash(b));
  EXPECT_EQ(ar::config_hash(a).size(), 16u);
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(ar::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(ar::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(ar::hex64(0xabcULL), "0000000000000abc");
}

TEST(Seeds, DistinctPerPointAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(ar::point_seed(20260101, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(ar::point_seed(5, 7), ar::point_seed(5, 7));
  EXPECT_NE(ar::point_seed(5, 7), ar::point_seed(6, 7));
}

TEST(Jobs, EnvironmentDefault) {
  ::setenv("ANNEAL_RANGE_JOBS", "3", 1);
  EXPECT_EQ(ar::default_jobs(), 3u);
  ::setenv("ANNEAL_RANGE_JOBS", "zero", 1);
  EXPECT_EQ(ar::default_jobs(), 1u);
  ::unsetenv("ANNEAL_RANGE_JOBS");
  EXPECT_EQ(ar::default_jobs(), 1u);
}

TEST(Devices, EtaRatio) {
  ar::ExperimentConfig c;
  c.eta_low = 0.2;
  c.eta_ratio = 4.0;
  EXPECT_EQ(ar::resolve_device("low_noise", c).eta, 0.2);
  EXPECT_DOUBLE_EQ(ar::resolve_device("high_noise", c).eta, 0.8);
  c.eta = 0.5;
  EXPECT_EQ(ar::resolve_device("high_noise", c).eta, 0.5);
}

TEST(Tasks, FactorialOrder) {
  ar::ExperimentConfig c;
  c.devices = {"low_noise", "high_noise"};
  c.J_t = {0.0, 1.0};
  c.s_star = {0.5, 0.6, 0.7};
  c.tau_us = {5, 100};
  const auto t = ar::sweep_tasks(c);
  ASSERT_EQ(t.size(), 24u);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i].index, i);
  EXPECT_EQ(t[1].tau_us, 100.0);
  EXPECT_EQ(t[2].s_star, 0.6);
  EXPECT_EQ(t[6].jt, 1u);
  EXPECT_EQ(t[12].device, 1u);
}

TEST(Sweep, DeterministicFilesAndRecords) {
  auto c = small_config("ar_sweep_a");
  ar::SweepRunOptions ro;
  const auto a = ar::run_sweep(c, ro);
  ASSERT_EQ(a.size(), 4u);
  for (const auto& r : a) {
    EXPECT_EQ(r.counts.shots(), r.shots);
    EXPECT_TRUE(ar::validate_record(r).empty());
  }
  const auto sched = ar::synthetic_schedule(ar::Device::HighNoise);
  EXPECT_TRUE(ar::validate_record(a[2], &sched).empty());
  const fs::path d = c.output_dir;
  EXPECT_TRUE(fs::exists(d / "config.json"));
  EXPECT_TRUE(fs::exists(d / "summary.csv"));
  for (const auto& e : fs::directory_iterator(d)) EXPECT_EQ(e.path().filename().string().find("part"), std::string::npos);
  const auto first = slurp(d / "records.jsonl");
  EXPECT_EQ(first.rfind("{\"config_hash\":\"" + ar::config_hash(c) + "\"}", 0), 0u);

  auto c2 = c;
  c2.output_dir = (fs::temp_directory_path() / "ar_sweep_b").string();
  fs::remove_all(c2.output_dir);
  ro.jobs = 2;
  const auto b = ar::run_sweep(c2, ro);
  EXPECT_EQ(first, slurp(fs::path(c2.output_dir) / "records.jsonl"));
  EXPECT_EQ(slurp(d / "summary.csv"), slurp(fs::path(c2.output_dir) / "summary.csv"));
  fs::remove_all(c.output_dir);
  fs::remove_all(c2.output_dir);
}

TEST(Sweep, ResumeSkipsFinishedPoints) {
  auto c = small_config("ar_sweep_resume");
  const auto full = ar::run_sweep(c);
  const fs::path d = c.output_dir;
  const auto want = slurp(d / "records.jsonl");

  // Simulate an interrupted run: keep the header plus two records as a part file.
  {
    std::ifstream in(d / "records.jsonl");
    std::ofstream out(d / "records.part0.jsonl");
    std::string line;
    for (int i = 0; i < 3 && std::getline(in, line); ++i) out << line << '\n';
    out << "{\"torn";
  }
  fs::remove(d / "records.jsonl");
  std::size_t fresh = 0;
  ar::SweepRunOptions ro;
  ro.resume = true;
  ro.on_point = [&](const ar::ExperimentRecord&) { ++fresh; };
  const auto again = ar::run_sweep(c, ro);
  EXPECT_EQ(fresh, 2u);
  EXPECT_EQ(again.size(), full.size());
  EXPECT_EQ(slurp(d / "records.jsonl"), want);

  auto other = c;
  other.seed += 1;
  EXPECT_THROW(ar::run_sweep(other, ro), std::runtime_error);
  fs::remove_all(d);
}

TEST(Sweep, InMemoryMatchesPersisted) {
  auto c = small_config("ar_sweep_mem");
  ar::SweepRunOptions ro;
  ro.write_files = false;
  const auto a = ar::run_sweep(c, ro);
  EXPECT_FALSE(fs::exists(c.output_dir));
  const auto b = ar::run_sweep(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(ar::record_to_json(a[i]), ar::record_to_json(b[i]));
  fs::remove_all(c.output_dir);
}

TEST(Fit, GroupsAndRefusals) {
  std::vector<ar::ExperimentRecord> recs;
  auto add = [&](const std::string& dev, double jt, double tau, std::uint64_t nf) {
    ar::ExperimentRecord r;
    r.device = dev;
    r.J_t = jt;
    r.s_star = 0.57;
    r.tau_us = tau;
    r.counts = {0, 1000 - nf, nf, 0};
    r.shots = 1000;
    recs.push_back(r);
  };
  for (double t : {1.0, 5.0, 20.0, 100.0}) add("low_noise", 1.0, t, static_cast<std::uint64_t>(1000 * (1 - 0.7 * std::exp(-0.03 * t))));
  add("high_noise", 1.0, 5.0, 300);
  add("high_noise", 1.0, 100.0, 500);
  std::vector<std::string> refused;
  const auto rows = ar::fit_records(recs, 0.57, false, refused);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].device, "low_noise");
  EXPECT_NEAR(rows[0].fit.R_false, 0.3, 0.01);
  EXPECT_NEAR(rows[0].fit.kappa, 0.03, 0.003);
  ASSERT_EQ(refused.size(), 1u);
  EXPECT_NE(refused[0].find("high_noise"), std::string::npos);
  std::ostringstream os;
  ar::write_fit_csv(os, rows, "00");
  EXPECT_EQ(os.str().rfind("# config_hash=00\ndevice,J_t,R_false", 0), 0u);
}

TEST(Crossing, CsvFormat) {
  ar::CrossingReport r;
  r.J_t = 0.5;
  r.gamma_cross = 0.03;
  r.gap_upper_bound = 1e-9;
  r.B_low = 6.5;
  r.B_high = 7.25;
  std::ostringstream os;
  ar::write_crossing_csv(os, {r}, "h");
  EXPECT_EQ(os.str(), "# config_hash=h\nJ_t,gamma_cross,gap_upper_bound,B_low,B_high\n0.5,0.03,1e-09,6.5,7.25\n");
}
