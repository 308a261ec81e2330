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

// anneal_range: command line driver for gadget, crossing, sweep, fit and
// schedule tasks.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anneal_range/analysis.hpp"
#include "anneal_range/chimera.hpp"
#include "anneal_range/experiment.hpp"
#include "anneal_range/gadget.hpp"
#include "anneal_range/io.hpp"
#include "anneal_range/schedule.hpp"
#include "anneal_range/spectrum.hpp"

namespace ar = anneal_range;

namespace {

// Writes to `path`, or stdout when empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Fills options of `sub` that were not given on the command line from a
// TOML file whose keys are the long option names without dashes.
void apply_config_file(CLI::App* sub, const std::string& path) {
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    auto* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") throw CLI::ConversionError("unknown config key '" + item.fullname() + "' in " + path);
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// ---------------------------------------------------------------------------
// gadget

struct GadgetArgs {
  double jt = 1.0;
  std::string export_path;
  std::string layout_path;
  std::size_t rows = 16, cols = 16;
  std::vector<std::size_t> dead;
};

int cmd_gadget(const GadgetArgs& a) {
  const ar::json settings = {{"command", "gadget"}, {"J_t", a.jt}, {"rows", a.rows}, {"cols", a.cols}, {"dead", a.dead}};
  const auto hash = ar::settings_hash(settings);
  const auto g = ar::build_gadget(a.jt);
  const auto& s = g.spec;
  const auto bad = ar::validate_gadget(s, g.problem);
  const double e_true = ar::energy(g.problem, s.true_min);
  const double e_start = ar::energy(g.problem, s.start_state);
  const double e_barrier = ar::energy(g.problem, s.barrier_state());
  const double e_false = s.false_set.empty() ? e_true : ar::energy(g.problem, s.false_set.front());

  std::size_t dmin = 99, dmax = 0;
  for (const auto& f : s.false_set) {
    dmin = std::min(dmin, ar::hamming(s.start_state, f));
    dmax = std::max(dmax, ar::hamming(s.start_state, f));
  }
  std::size_t inner_flips = 99;
  for (const auto& f : s.false_set) {
    std::size_t k = 0;
    for (std::size_t q = 0; q < ar::kRingSize; ++q) k += s.start_state[q] != f[q] ? 1 : 0;
    inner_flips = std::min(inner_flips, k);
  }

  std::ostringstream os;
  os << ar::hash_header_line(hash) << '\n';
  os << "J_t: " << fmt(a.jt) << '\n';
  os << "roles:";
  for (std::size_t q = 0; q < ar::kRingSize; ++q) os << ' ' << q << '=' << ar::role_name(s.role_map[q]);
  os << '\n';
  os << "barrier_pair: " << s.barrier_pair.first << ',' << s.barrier_pair.second << '\n';
  os << "start: " << s.start_state.to_bits() << "  E=" << fmt(e_start, 12) << '\n';
  os << "true:  " << s.true_min.to_bits() << "  E=" << fmt(e_true, 12) << '\n';
  os << "false_set: " << s.false_set.size() << " states at E=" << fmt(e_false, 12) << '\n';
  os << "dE(false,true): " << fmt(e_false - e_true, 12) << '\n';
  os << "dE(start,true): " << fmt(e_start - e_true, 12) << '\n';
  os << "barrier: " << fmt(e_barrier - e_start, 12) << " above start\n";
  os << "hamming(start,true): " << ar::hamming(s.start_state, s.true_min) << '\n';
  os << "hamming(start,false): " << dmin << ".." << dmax << '\n';
  os << "inner_flips(start,false): " << inner_flips << '\n';

  const auto levels = ar::enumerate(g.problem);
  os << "lowest levels:";
  std::size_t shown = 0;
  double last = levels.front().energy - 1.0;
  std::size_t count = 0;
  std::ostringstream lv;
  for (const auto& l : levels) {
    if (l.energy > last + 1e-9) {
      if (count > 0) lv << " (" << count << ")";
      if (++shown > 6) break;
      lv << ' ' << fmt(l.energy - e_true, 6);
      last = l.energy;
      count = 0;
    }
    ++count;
  }
  os << lv.str() << '\n';

  const std::set<std::size_t> dead(a.dead.begin(), a.dead.end());
  const auto layout = ar::tile(g.problem, a.rows, a.cols, dead);
  const auto layout_bad = ar::validate_layout(g.problem, layout);
  os << "chimera " << a.rows << 'x' << a.cols << ": " << layout.copy_maps.size() << " copies\n";
  os << "violations: " << bad.size() + layout_bad.size() << '\n';
  for (const auto& b : bad) os << "  " << b << '\n';
  for (const auto& b : layout_bad) os << "  " << b << '\n';
  std::cout << os.str();

  if (!a.export_path.empty()) {
    auto j = ar::gadget_to_json(g);
    j["config_hash"] = hash;
    emit(a.export_path, j.dump(2) + "\n");
  }
  if (!a.layout_path.empty()) emit(a.layout_path, ar::layout_to_json(layout).dump() + "\n");
  return bad.empty() && layout_bad.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// crossing

struct CrossingArgs {
  ar::CrossingConfig cfg;
  std::string out;
};

int cmd_crossing(const CrossingArgs& a) {
  const auto hash = ar::settings_hash(ar::crossing_config_to_json(a.cfg));
  std::vector<ar::CrossingReport> reps;
  for (double jt : a.cfg.J_t) {
    reps.push_back(ar::crossing_for(jt, a.cfg.options));
    std::cerr << "J_t=" << fmt(jt) << " gamma_cross=" << fmt(reps.back().gamma_cross, 8)
              << " gap<=" << fmt(reps.back().gap_upper_bound, 3) << '\n';
  }
  std::ostringstream os;
  ar::write_crossing_csv(os, reps, hash);
  emit(a.out, os.str());
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  ar::ExperimentConfig cfg;
  std::vector<double> s_range;  // lo, hi, step
  double eta = -1.0;
  std::string basis = "eigenbasis";
  bool no_cotunnelling = false;
  unsigned jobs = 1;
  bool resume = false;
  bool quiet = false;
};

int cmd_sweep(SweepArgs a) {
  if (!a.s_range.empty()) {
    if (a.s_range.size() != 3) throw CLI::ValidationError("--s-range", "expects lo hi step");
    a.cfg.s_star = ar::linspace_step(a.s_range[0], a.s_range[1], a.s_range[2]);
  }
  if (a.eta >= 0.0) a.cfg.eta = a.eta;
  a.cfg.basis_mode = ar::parse_basis_mode(a.basis);
  a.cfg.cotunnelling = !a.no_cotunnelling;
  ar::SweepRunOptions ro;
  ro.jobs = a.jobs;
  ro.resume = a.resume;
  const auto total = ar::sweep_tasks(a.cfg).size();
  std::size_t seen = 0;
  if (!a.quiet) {
    ro.on_point = [&](const ar::ExperimentRecord& r) {
      ++seen;
      std::cerr << '[' << seen << "] " << r.device << " J_t=" << fmt(r.J_t) << " s*=" << fmt(r.s_star) << " tau=" << fmt(r.tau_us)
                << " start/true/false/other=" << r.counts.start << '/' << r.counts.true_min << '/' << r.counts.false_min << '/'
                << r.counts.other << '\n';
    };
  }
  const auto recs = ar::run_sweep(a.cfg, ro);
  std::cout << "config_hash=" << ar::config_hash(a.cfg) << " points=" << recs.size() << '/' << total << " dir=" << a.cfg.output_dir
            << '\n';
  return recs.size() == total ? 0 : 1;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string records;
  double s_star = 0.57;
  bool weighted = false;
  std::string out;
};

int cmd_fit(const FitArgs& a) {
  const auto recs = ar::read_records(a.records);
  std::ifstream in(a.records, std::ios::binary);
  std::ostringstream raw;
  raw << in.rdbuf();
  const ar::json settings = {{"command", "fit"}, {"s_star", a.s_star}, {"weighted", a.weighted},
                             {"records_fnv", ar::hex64(ar::fnv1a64(raw.str()))}};
  std::vector<std::string> refused;
  const auto rows = ar::fit_records(recs, a.s_star, a.weighted, refused);
  for (const auto& r : refused) std::cerr << "refused fit (needs >= 3 hold times): " << r << '\n';
  if (rows.empty()) {
    std::cerr << "no group at s*=" << fmt(a.s_star) << " has enough hold times\n";
    return 2;
  }
  std::ostringstream os;
  ar::write_fit_csv(os, rows, ar::settings_hash(settings));
  emit(a.out, os.str());
  return refused.empty() ? 0 : 3;
}

// ---------------------------------------------------------------------------
// schedule

struct ShapeOverrides {
  std::optional<double> a, b, c, B0, anchor_s, anchor_gamma;
  std::optional<std::size_t> points;
};

struct ScheduleArgs {
  std::string device = "low_noise";
  ShapeOverrides shape;
  std::string file;
  std::vector<double> s_values;
  std::vector<double> gamma_values;
  std::string out;
};

int cmd_schedule_synth(const ScheduleArgs& a) {
  const auto dev = ar::parse_device(a.device);
  auto p = ar::default_synthetic_params(dev);
  const auto& o = a.shape;
  if (o.a) p.a = *o.a;
  if (o.b) p.b = *o.b;
  if (o.c) p.c = *o.c;
  if (o.B0) p.B0 = *o.B0;
  if (o.anchor_s) p.anchor_s = *o.anchor_s;
  if (o.anchor_gamma) p.anchor_gamma = *o.anchor_gamma;
  if (o.points) p.points = *o.points;
  const ar::json settings = {{"command", "schedule synth"}, {"a", p.a},        {"b", p.b},
                             {"c", p.c},                    {"B0", p.B0},      {"anchor_s", p.anchor_s},
                             {"anchor_gamma", p.anchor_gamma}, {"points", p.points}};
  const auto t = ar::synthetic_schedule(p, ar::device_name(dev));
  std::ostringstream os;
  os << ar::hash_header_line(ar::settings_hash(settings)) << '\n';
  ar::write_schedule(os, t);
  emit(a.out, os.str());
  return 0;
}

int cmd_schedule_inspect(const ScheduleArgs& a) {
  const auto t = a.file.empty() ? ar::synthetic_schedule(ar::parse_device(a.device)) : ar::load_schedule(a.file);
  std::ostringstream os;
  os << "schedule: " << t.label() << " rows=" << t.rows().size() << '\n';
  os << "gamma range: " << fmt(t.gamma_min(), 8) << " .. " << fmt(t.gamma_max(), 8) << '\n';
  for (double s : a.s_values) {
    os << "s=" << fmt(s) << " A=" << fmt(t.A(s), 8) << " B=" << fmt(t.B(s), 8) << " gamma=" << fmt(t.gamma(s), 8) << '\n';
  }
  for (double g : a.gamma_values) {
    const double s = t.s_of_gamma(g);
    os << "gamma=" << fmt(g) << " s=" << fmt(s, 10) << " B=" << fmt(t.B(s), 8) << '\n';
  }
  emit(a.out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reverse-annealing search-range experiments on an engineered Ising gadget"};
  app.require_subcommand(1);
  int rc = 0;

  GadgetArgs ga;
  auto* gadget = app.add_subcommand("gadget", "Build and check the gadget for one J_t");
  gadget->add_option("--jt", ga.jt, "Barrier coupling J_t")->check(CLI::Range(0.0, 1.0));
  gadget->add_option("--export", ga.export_path, "Write the gadget as JSON");
  gadget->add_option("--layout", ga.layout_path, "Write the Chimera copy maps as JSON");
  gadget->add_option("--rows", ga.rows, "Chimera rows")->check(CLI::PositiveNumber);
  gadget->add_option("--cols", ga.cols, "Chimera columns")->check(CLI::PositiveNumber);
  gadget->add_option("--dead", ga.dead, "Dead hardware qubits")->delimiter(',');
  gadget->callback([&] { rc = cmd_gadget(ga); });

  CrossingArgs ca;
  std::string crossing_cfg;
  auto* crossing = app.add_subcommand("crossing", "Locate the true/false avoided crossing per J_t");
  crossing->add_option("--config", crossing_cfg, "TOML config file; flags override it")->check(CLI::ExistingFile);
  crossing->add_option("--jt", ca.cfg.J_t, "J_t values")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  crossing->add_option("--lo", ca.cfg.options.lo, "Lower Gamma bracket");
  crossing->add_option("--hi", ca.cfg.options.hi, "Upper Gamma bracket");
  crossing->add_option("--out", ca.out, "CSV output (default stdout)");
  crossing->callback([&] {
    if (!crossing_cfg.empty()) apply_config_file(crossing, crossing_cfg);
    rc = cmd_crossing(ca);
  });

  SweepArgs sa;
  std::string sweep_cfg;
  sa.jobs = ar::default_jobs();
  auto* sweep = app.add_subcommand("sweep", "Simulate a device x J_t x s* x tau sweep");
  sweep->add_option("--config", sweep_cfg, "TOML config file; flags override it")->check(CLI::ExistingFile);
  sweep->add_option("--device", sa.cfg.devices, "low_noise, high_noise or a schedule CSV path")->delimiter(',');
  sweep->add_option("--jt", sa.cfg.J_t, "J_t values")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--s-star", sa.cfg.s_star, "s* values")->delimiter(',');
  sweep->add_option("--s-range", sa.s_range, "s* grid as lo hi step")->expected(3);
  sweep->add_option("--tau", sa.cfg.tau_us, "Hold times in us")->delimiter(',');
  sweep->add_option("--shots", sa.cfg.shots, "Readouts per point")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sa.cfg.seed, "Master seed");
  sweep->add_option("--eta-low", sa.cfg.eta_low, "Bath coupling of the low-noise device");
  sweep->add_option("--eta-ratio", sa.cfg.eta_ratio, "eta_high / eta_low");
  sweep->add_option("--eta", sa.eta, "Bath coupling for every device");
  sweep->add_option("--temperature", sa.cfg.temperature, "Bath temperature in GHz");
  sweep->add_option("--cutoff", sa.cfg.cutoff, "Ohmic cutoff in GHz");
  sweep->add_option("--linewidth", sa.cfg.linewidth, "Tunnelling linewidth in GHz");
  sweep->add_option("--basis-mode", sa.basis, "eigenbasis or computational")
      ->check(CLI::IsMember({"eigenbasis", "computational"}));
  sweep->add_option("--window", sa.cfg.window, "Energy window above the ground state");
  sweep->add_flag("--no-cotunnelling", sa.no_cotunnelling, "Disable coupled pair moves");
  sweep->add_option("--out", sa.cfg.output_dir, "Output directory");
  sweep->add_option("--jobs", sa.jobs, "Worker threads (default ANNEAL_RANGE_JOBS or 1)")->check(CLI::PositiveNumber);
  sweep->add_flag("--resume", sa.resume, "Skip points already persisted in the output directory");
  sweep->add_flag("--quiet", sa.quiet, "No per-point progress");
  sweep->callback([&] {
    if (!sweep_cfg.empty()) apply_config_file(sweep, sweep_cfg);
    rc = cmd_sweep(sa);
  });

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Branching fits per (device, J_t) at fixed s*");
  fit->add_option("--records", fa.records, "records.jsonl or summary CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--s-star", fa.s_star, "s* of the hold-time series");
  fit->add_flag("--weighted", fa.weighted, "Weight residuals by binomial variance");
  fit->add_option("--out", fa.out, "CSV output (default stdout)");
  fit->callback([&] { rc = cmd_fit(fa); });

  ScheduleArgs sca;
  auto* schedule = app.add_subcommand("schedule", "Synthesize or inspect annealing schedules");
  schedule->require_subcommand(1);
  auto* synth = schedule->add_subcommand("synth", "Write a synthetic schedule as CSV");
  synth->add_option("--device", sca.device, "low_noise or high_noise")->check(CLI::IsMember({"low_noise", "high_noise"}));
  synth->add_option("--a", sca.shape.a, "A(s) exponent");
  synth->add_option("--b", sca.shape.b, "B(s) exponent");
  synth->add_option("--c", sca.shape.c, "B(0) / B0");
  synth->add_option("--B0", sca.shape.B0, "B(1) in GHz");
  synth->add_option("--anchor-s", sca.shape.anchor_s, "s of the Gamma anchor");
  synth->add_option("--anchor-gamma", sca.shape.anchor_gamma, "Gamma at the anchor");
  synth->add_option("--points", sca.shape.points, "Grid points");
  synth->add_option("--out", sca.out, "CSV output (default stdout)");
  synth->callback([&] { rc = cmd_schedule_synth(sca); });
  auto* inspect = schedule->add_subcommand("inspect", "Report A, B and Gamma of a schedule");
  inspect->add_option("--file", sca.file, "Schedule CSV (default: synthetic device)")->check(CLI::ExistingFile);
  inspect->add_option("--device", sca.device, "low_noise or high_noise")->check(CLI::IsMember({"low_noise", "high_noise"}));
  inspect->add_option("--s", sca.s_values, "s values to report")->delimiter(',');
  inspect->add_option("--gamma", sca.gamma_values, "Gamma values to invert")->delimiter(',');
  inspect->add_option("--out", sca.out, "Output file (default stdout)");
  inspect->callback([&] { rc = cmd_schedule_inspect(sca); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return rc;
}
