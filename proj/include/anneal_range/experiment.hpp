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

// Sweep orchestration: configuration, per-point seeding, workers, resume.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "anneal_range/analysis.hpp"
#include "anneal_range/dynamics.hpp"
#include "anneal_range/gadget.hpp"
#include "anneal_range/io.hpp"
#include "anneal_range/schedule.hpp"
#include "anneal_range/spectrum.hpp"

namespace anneal_range {

/// Evenly spaced values lo, lo + step, ... up to hi (inclusive within 1e-9),
/// rounded to 12 decimals so grids print cleanly.
inline std::vector<double> linspace_step(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("invalid grid");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  return out;
}

struct ExperimentConfig {
  std::vector<std::string> devices{"low_noise", "high_noise"};  // or paths to schedule CSV files
  std::vector<double> J_t = linspace_step(0.0, 1.0, 0.1);
  std::vector<double> s_star = linspace_step(0.40, 0.90, 0.01);
  std::vector<double> tau_us{5.0, 100.0};
  std::uint64_t shots = 1000;
  std::uint64_t seed = 20260101;
  double eta_low = kDefaultEtaLow;
  double eta_ratio = kDefaultEtaRatio;
  std::optional<double> eta;  // overrides the per-device value
  double temperature = 0.26;
  double cutoff = 100.0;
  double linewidth = 0.5;
  BasisMode basis_mode = BasisMode::EnergyEigenbasis;
  double window = 2.5;
  bool cotunnelling = true;
  std::string output_dir = "run";

  void validate() const {
    if (devices.empty() || J_t.empty() || s_star.empty() || tau_us.empty()) throw std::invalid_argument("config lists must be non-empty");
    if (shots < 1) throw std::invalid_argument("shots must be at least 1");
    for (const auto& d : devices) {
      if (d == "low_noise" || d == "high_noise") continue;
      if (!std::filesystem::exists(d)) throw std::invalid_argument("schedule file does not exist: " + d);
    }
    for (double j : J_t) {
      if (!(j >= 0.0 && j <= 1.0)) throw std::invalid_argument("J_t outside [0, 1]");
    }
    for (double s : s_star) {
      if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s* outside (0, 1)");
    }
    for (double t : tau_us) {
      if (!(t >= 0.0)) throw std::invalid_argument("hold time must be non-negative");
    }
    if (!(eta_low >= 0.0 && eta_ratio > 0.0)) throw std::invalid_argument("invalid eta settings");
    BathModel b;
    b.temperature = temperature;
    b.cutoff = cutoff;
    b.linewidth = linewidth;
    b.validate();
  }
};

/// Everything that changes results; the output directory is left out.
inline json config_to_json(const ExperimentConfig& c) {
  json j = {{"devices", c.devices},
            {"J_t", c.J_t},
            {"s_star", c.s_star},
            {"tau_us", c.tau_us},
            {"shots", c.shots},
            {"seed", c.seed},
            {"eta_low", c.eta_low},
            {"eta_ratio", c.eta_ratio},
            {"temperature", c.temperature},
            {"cutoff", c.cutoff},
            {"linewidth", c.linewidth},
            {"basis_mode", basis_mode_name(c.basis_mode)},
            {"window", c.window},
            {"cotunnelling", c.cotunnelling}};
  if (c.eta) j["eta"] = *c.eta;
  return j;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of the canonical JSON dump (keys sorted) of any settings object.
inline std::string settings_hash(const json& j) { return hex64(fnv1a64(j.dump())); }

inline std::string config_hash(const ExperimentConfig& c) { return settings_hash(config_to_json(c)); }

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for sweep point `index`.
inline std::uint64_t point_seed(std::uint64_t master, std::uint64_t index) { return splitmix64(splitmix64(master) ^ index); }

/// Worker count from ANNEAL_RANGE_JOBS, else 1.
inline unsigned default_jobs() {
  if (const char* v = std::getenv("ANNEAL_RANGE_JOBS")) {
    try {
      const long n = std::stol(v);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

struct DeviceSetup {
  std::string label;
  ScheduleTable schedule;
  double eta = 0.0;
};

inline DeviceSetup resolve_device(const std::string& name, const ExperimentConfig& c) {
  DeviceSetup d;
  if (name == "low_noise" || name == "high_noise") {
    const auto dev = parse_device(name);
    d.label = device_name(dev);
    d.schedule = synthetic_schedule(dev);
    d.eta = dev == Device::LowNoise ? c.eta_low : c.eta_low * c.eta_ratio;
  } else {
    d.label = std::filesystem::path(name).stem().string();
    d.schedule = load_schedule(name);
    d.eta = c.eta_low;
  }
  if (c.eta) d.eta = *c.eta;
  return d;
}

struct SweepTask {
  std::uint64_t index = 0;
  std::size_t device = 0;
  std::size_t jt = 0;
  double s_star = 0.0;
  double tau_us = 0.0;
};

/// Full factorial in the order device, J_t, s*, tau.
inline std::vector<SweepTask> sweep_tasks(const ExperimentConfig& c) {
  std::vector<SweepTask> out;
  std::uint64_t k = 0;
  for (std::size_t d = 0; d < c.devices.size(); ++d) {
    for (std::size_t j = 0; j < c.J_t.size(); ++j) {
      for (double s : c.s_star) {
        for (double t : c.tau_us) out.push_back({k++, d, j, s, t});
      }
    }
  }
  return out;
}

inline DynamicsOptions dynamics_options(const ExperimentConfig& c) {
  DynamicsOptions o;
  o.window = c.window;
  o.cotunnelling = c.cotunnelling;
  return o;
}

inline BathModel bath_for(const ExperimentConfig& c, double eta) {
  BathModel b;
  b.eta = eta;
  b.temperature = c.temperature;
  b.cutoff = c.cutoff;
  b.linewidth = c.linewidth;
  b.basis_mode = c.basis_mode;
  return b;
}

/// Gadget and population model for one J_t, shared read-only by workers.
struct GadgetModel {
  Gadget gadget;
  std::unique_ptr<ConfigurationModel> model;
};

inline GadgetModel make_gadget_model(double J_t, const DynamicsOptions& o) {
  GadgetModel gm{build_gadget(J_t), nullptr};
  gm.model = std::make_unique<ConfigurationModel>(gm.gadget.problem, o);
  return gm;
}

inline std::vector<std::pair<std::string, std::uint64_t>> top_configs(const OutcomeHistogram& h, std::size_t k = 20) {
  std::vector<std::pair<std::string, std::uint64_t>> v;
  for (const auto& [c, n] : h.counts) v.emplace_back(c.to_bits(), n);
  std::stable_sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.second > b.second; });
  if (v.size() > k) v.resize(k);
  return v;
}

/// Simulates and samples one sweep point.
inline ExperimentRecord run_point(const SweepTask& t, const ExperimentConfig& c, const DeviceSetup& dev, const GadgetModel& gm) {
  const auto opts = dynamics_options(c);
  const auto bath = bath_for(c, dev.eta);
  const auto st = evolve(*gm.model, reverse_waveform(t.s_star, t.tau_us), dev.schedule, bath, opts, gm.gadget.spec.start_state);
  ExperimentRecord r;
  r.point = t.index;
  r.device = dev.label;
  r.J_t = c.J_t[t.jt];
  r.s_star = t.s_star;
  r.gamma_star = dev.schedule.gamma(t.s_star);
  r.tau_us = t.tau_us;
  r.seed = point_seed(c.seed, t.index);
  r.shots = c.shots;
  const auto hist = sample_outcomes(st, c.shots, r.seed);
  r.counts = classify_histogram(hist, gm.gadget.spec);
  r.top_configs = top_configs(hist);
  r.exact = class_populations(st, gm.gadget.spec);
  r.warnings = st.warnings;
  return r;
}

struct SweepRunOptions {
  unsigned jobs = 1;
  bool resume = false;
  bool write_files = true;
  std::function<void(const ExperimentRecord&)> on_point;  // called under a lock
};

namespace detail {

inline std::vector<ExperimentRecord> read_existing(const std::filesystem::path& dir) {
  std::vector<ExperimentRecord> out;
  if (!std::filesystem::exists(dir)) return out;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name == "records.jsonl" || (name.rfind("records.part", 0) == 0 && e.path().extension() == ".jsonl")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error&) {
        continue;  // a torn final line from an interrupted run
      }
      if (j.contains("device")) out.push_back(record_from_json(j));
    }
  }
  return out;
}

inline std::string read_hash_header(const std::filesystem::path& f) {
  std::ifstream in(f);
  std::string line;
  if (!std::getline(in, line)) return {};
  try {
    const auto j = json::parse(line);
    return j.value("config_hash", std::string{});
  } catch (const json::parse_error&) {
    return {};
  }
}

}  // namespace detail

/// Runs (or resumes) a sweep. Returns all records sorted by point index.
inline std::vector<ExperimentRecord> run_sweep(const ExperimentConfig& c, const SweepRunOptions& ro = {}) {
  c.validate();
  const auto hash = config_hash(c);
  const std::filesystem::path dir = c.output_dir;
  const auto tasks = sweep_tasks(c);

  std::map<std::uint64_t, ExperimentRecord> done;
  if (ro.write_files) {
    std::filesystem::create_directories(dir);
    if (ro.resume) {
      for (const auto& f : {dir / "config.json", dir / "records.part0.jsonl"}) {
        if (!std::filesystem::exists(f)) continue;
        std::string h;
        if (f.extension() == ".json") {
          std::ifstream in(f);
          h = json::parse(in).value("config_hash", std::string{});
        } else {
          h = detail::read_hash_header(f);
        }
        if (!h.empty() && h != hash) throw std::runtime_error("cannot resume: " + f.string() + " belongs to a different config");
      }
      for (auto& r : detail::read_existing(dir)) done.emplace(r.point, std::move(r));
    } else {
      for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("records.part", 0) == 0) std::filesystem::remove(e.path());
      }
    }
    json snap = config_to_json(c);
    snap["config_hash"] = hash;
    std::ofstream(dir / "config.json") << snap.dump(2) << '\n';
  }

  std::vector<DeviceSetup> devs;
  for (const auto& d : c.devices) devs.push_back(resolve_device(d, c));
  const auto opts = dynamics_options(c);
  std::vector<GadgetModel> models;
  for (double j : c.J_t) models.push_back(make_gadget_model(j, opts));

  std::vector<SweepTask> todo;
  for (const auto& t : tasks) {
    if (!done.count(t.index)) todo.push_back(t);
  }

  const unsigned jobs = std::max(1U, std::min<unsigned>(ro.jobs, static_cast<unsigned>(std::max<std::size_t>(todo.size(), 1))));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<ExperimentRecord> fresh;
  std::exception_ptr failure;
  auto worker = [&](unsigned w) {
    std::ofstream part;
    if (ro.write_files) {
      const auto path = dir / ("records.part" + std::to_string(w) + ".jsonl");
      const bool exists = std::filesystem::exists(path) && std::filesystem::file_size(path) > 0;
      bool torn = false;
      if (exists) {
        std::ifstream tail(path, std::ios::binary);
        tail.seekg(-1, std::ios::end);
        torn = tail.get() != '\n';
      }
      part.open(path, std::ios::app);
      if (torn) part << '\n';
      if (!exists) part << json{{"config_hash", hash}}.dump() << '\n' << std::flush;
    }
    for (;;) {
      const auto k = next.fetch_add(1);
      if (k >= todo.size()) break;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) break;
      }
      try {
        const auto& t = todo[k];
        auto rec = run_point(t, c, devs[t.device], models[t.jt]);
        if (part.is_open()) part << record_to_json(rec).dump() << '\n' << std::flush;
        std::lock_guard<std::mutex> lock(mu);
        if (ro.on_point) ro.on_point(rec);
        fresh.push_back(std::move(rec));
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        break;
      }
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& r : fresh) done.emplace(r.point, std::move(r));
  std::vector<ExperimentRecord> all;
  for (auto& [k, r] : done) {
    if (k < tasks.size()) all.push_back(r);
  }

  if (ro.write_files) {
    std::ofstream(dir / "records.jsonl") << [&] {
      std::ostringstream os;
      write_records_jsonl(os, all, hash);
      return os.str();
    }();
    std::ofstream csv(dir / "summary.csv");
    write_records_csv(csv, all, hash);
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const auto name = e.path().filename().string();
      if (name.rfind("records.part", 0) == 0) std::filesystem::remove(e.path());
    }
  }
  return all;
}

/// Records of one (device, J_t, tau) slice, ordered by s*.
inline std::vector<ExperimentRecord> select_records(const std::vector<ExperimentRecord>& recs, const std::string& device, double J_t,
                                                    double tau_us) {
  std::vector<ExperimentRecord> out;
  for (const auto& r : recs) {
    if (r.device == device && std::abs(r.J_t - J_t) < 1e-9 && std::abs(r.tau_us - tau_us) < 1e-9) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.s_star < b.s_star; });
  return out;
}

// ---------------------------------------------------------------------------
// Crossing table

struct CrossingConfig {
  std::vector<double> J_t = linspace_step(0.2, 1.0, 0.1);
  CrossingOptions options;
};

inline json crossing_config_to_json(const CrossingConfig& c) {
  return {{"J_t", c.J_t},
          {"lo", c.options.lo},
          {"hi", c.options.hi},
          {"fd_step", c.options.fd_step},
          {"width_tol", c.options.width_tol},
          {"noise_rel", c.options.noise_rel},
          {"max_steps", c.options.max_steps}};
}

inline CrossingReport crossing_for(double J_t, const CrossingOptions& o) {
  const auto g = build_gadget(J_t);
  const auto low = synthetic_schedule(Device::LowNoise);
  const auto high = synthetic_schedule(Device::HighNoise);
  const auto guesses = crossing_guesses(g.problem, g.spec.true_min);
  return locate_crossing(g.problem, J_t, guesses, o, &low, &high);
}

inline void write_crossing_csv(std::ostream& out, const std::vector<CrossingReport>& reps, const std::string& hash) {
  out << hash_header_line(hash) << '\n' << "J_t,gamma_cross,gap_upper_bound,B_low,B_high\n";
  for (const auto& r : reps) {
    out << format_double(r.J_t) << ',' << format_double(r.gamma_cross) << ',' << format_double(r.gap_upper_bound) << ','
        << format_double(r.B_low) << ',' << format_double(r.B_high) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Branching fits

struct FitRow {
  std::string device;
  double J_t = 0.0;
  BranchingFit fit;
};

/// One fit per (device, J_t) over records at s*; groups with fewer than 3
/// hold times are reported in `refused`.
inline std::vector<FitRow> fit_records(const std::vector<ExperimentRecord>& recs, double s_star, bool weighted,
                                       std::vector<std::string>& refused) {
  std::map<std::pair<std::string, double>, std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : recs) {
    if (std::abs(r.s_star - s_star) < 1e-9) groups[{r.device, r.J_t}].push_back(&r);
  }
  std::vector<FitRow> out;
  for (const auto& [key, rs] : groups) {
    std::set<double> taus;
    std::vector<std::pair<double, double>> pts;
    std::uint64_t shots = 0;
    for (const auto* r : rs) {
      taus.insert(r->tau_us);
      pts.emplace_back(r->tau_us, static_cast<double>(r->counts.false_min) / static_cast<double>(r->shots));
      shots = shots == 0 ? r->shots : std::min(shots, r->shots);
    }
    if (taus.size() < 3) {
      refused.push_back(key.first + " J_t=" + format_double(key.second) + ": " + std::to_string(taus.size()) + " hold times");
      continue;
    }
    BranchingFitOptions fo;
    if (weighted) fo.shots = shots;
    out.push_back({key.first, key.second, branching_fit(pts, fo)});
  }
  return out;
}

inline void write_fit_csv(std::ostream& out, const std::vector<FitRow>& rows, const std::string& hash) {
  out << hash_header_line(hash) << '\n' << "device,J_t,R_false,sigma_R,kappa_per_us,sigma_kappa,rss,n_points,kappa_identifiable\n";
  for (const auto& r : rows) {
    out << r.device << ',' << format_double(r.J_t) << ',' << format_double(r.fit.R_false) << ',' << format_double(r.fit.sigma_R()) << ','
        << format_double(r.fit.kappa) << ',' << format_double(r.fit.sigma_kappa()) << ',' << format_double(r.fit.rss) << ','
        << r.fit.n_points << ',' << (r.fit.kappa_identifiable ? "true" : "false") << '\n';
  }
}

}  // namespace anneal_range
