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

// JSON and CSV persistence for problems, gadgets, layouts and records.

#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anneal_range/analysis.hpp"
#include "anneal_range/chimera.hpp"
#include "anneal_range/gadget.hpp"
#include "anneal_range/ising.hpp"
#include "anneal_range/schedule.hpp"

namespace anneal_range {

using json = nlohmann::json;

inline json problem_to_json(const IsingProblem& p) {
  json c = json::array();
  for (const auto& k : p.couplings()) c.push_back({k.i, k.j, k.value});
  return {{"n_qubits", p.n_qubits()}, {"couplings", c}, {"fields", p.fields()}};
}

inline IsingProblem problem_from_json(const json& j) {
  const auto n = j.at("n_qubits").get<std::size_t>();
  std::vector<Coupling> cs;
  for (const auto& c : j.at("couplings")) {
    if (!c.is_array() || c.size() != 3) throw std::invalid_argument("coupling entries must be [i, j, J]");
    cs.push_back({c[0].get<std::size_t>(), c[1].get<std::size_t>(), c[2].get<double>()});
  }
  return IsingProblem(n, std::move(cs), j.at("fields").get<std::vector<double>>());
}

inline json gadget_to_json(const Gadget& g) {
  const auto& s = g.spec;
  json roles = json::array();
  for (auto r : s.role_map) roles.push_back(role_name(r));
  json fs = json::array();
  for (const auto& c : s.false_set) fs.push_back(c.to_bits());
  return {{"J_t", s.J_t},
          {"problem", problem_to_json(g.problem)},
          {"role_map", roles},
          {"barrier_pair", {s.barrier_pair.first, s.barrier_pair.second}},
          {"start_state", s.start_state.to_bits()},
          {"true_min", s.true_min.to_bits()},
          {"false_set", fs},
          {"true_energy", s.true_energy},
          {"start_energy", s.start_energy}};
}

inline json layout_to_json(const ChimeraLayout& l) { return l.copy_maps; }

// ---------------------------------------------------------------------------
// Records

inline json record_to_json(const ExperimentRecord& r) {
  json top = json::array();
  for (const auto& [bits, n] : r.top_configs) top.push_back({bits, n});
  json j = {{"point", r.point},
            {"device", r.device},
            {"J_t", r.J_t},
            {"s_star", r.s_star},
            {"gamma_star", r.gamma_star},
            {"tau_us", r.tau_us},
            {"seed", r.seed},
            {"shots", r.shots},
            {"counts",
             {{"start", r.counts.start}, {"true", r.counts.true_min}, {"false", r.counts.false_min}, {"other", r.counts.other}}},
            {"top_configs", top}};
  if (r.exact) {
    j["exact"] = {{"start", r.exact->start}, {"true", r.exact->true_min}, {"false", r.exact->false_min}, {"other", r.exact->other}};
  }
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

inline ExperimentRecord record_from_json(const json& j) {
  ExperimentRecord r;
  r.point = j.value("point", std::uint64_t{0});
  r.device = j.at("device").get<std::string>();
  r.J_t = j.at("J_t").get<double>();
  r.s_star = j.at("s_star").get<double>();
  r.gamma_star = j.at("gamma_star").get<double>();
  r.tau_us = j.at("tau_us").get<double>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.shots = j.at("shots").get<std::uint64_t>();
  const auto& c = j.at("counts");
  r.counts.start = c.at("start").get<std::uint64_t>();
  r.counts.true_min = c.at("true").get<std::uint64_t>();
  r.counts.false_min = c.at("false").get<std::uint64_t>();
  r.counts.other = c.at("other").get<std::uint64_t>();
  if (j.contains("top_configs")) {
    for (const auto& t : j.at("top_configs")) r.top_configs.emplace_back(t[0].get<std::string>(), t[1].get<std::uint64_t>());
  }
  if (j.contains("exact")) {
    const auto& e = j.at("exact");
    r.exact = ClassProbabilities{e.at("start").get<double>(), e.at("true").get<double>(), e.at("false").get<double>(),
                                 e.at("other").get<double>()};
  }
  if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

inline std::string hash_header_line(const std::string& hash) { return "# config_hash=" + hash; }

/// JSON-lines: a header object carrying the config hash, then one record per line.
inline void write_records_jsonl(std::ostream& out, const std::vector<ExperimentRecord>& recs, const std::string& hash) {
  out << json{{"config_hash", hash}}.dump() << '\n';
  for (const auto& r : recs) out << record_to_json(r).dump() << '\n';
}

inline std::vector<ExperimentRecord> read_records_jsonl(std::istream& in) {
  std::vector<ExperimentRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    if (!j.contains("device")) continue;  // header
    out.push_back(record_from_json(j));
  }
  return out;
}

inline std::vector<ExperimentRecord> read_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_records_jsonl(in);
}

inline constexpr const char* kRecordCsvHeader = "device,J_t,s_star,gamma_star,tau_us,n_start,n_true,n_false,n_other,shots";

inline void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& recs, const std::string& hash) {
  out << hash_header_line(hash) << '\n' << kRecordCsvHeader << '\n';
  for (const auto& r : recs) {
    out << r.device << ',' << format_double(r.J_t) << ',' << format_double(r.s_star) << ',' << format_double(r.gamma_star) << ','
        << format_double(r.tau_us) << ',' << r.counts.start << ',' << r.counts.true_min << ',' << r.counts.false_min << ','
        << r.counts.other << ',' << r.shots << '\n';
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads the record CSV; '#' lines are comments, column order follows the header.
inline std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split_csv_line(line);
      for (const char* need : {"device", "J_t", "s_star", "gamma_star", "tau_us", "n_start", "n_true", "n_false", "n_other", "shots"}) {
        if (std::find(header.begin(), header.end(), need) == header.end()) throw std::invalid_argument(std::string("CSV lacks column ") + need);
      }
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw std::invalid_argument("CSV row has wrong number of cells: " + line);
    ExperimentRecord r;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& h = header[i];
      const auto& v = cells[i];
      if (h == "device") r.device = v;
      else if (h == "J_t") r.J_t = std::stod(v);
      else if (h == "s_star") r.s_star = std::stod(v);
      else if (h == "gamma_star") r.gamma_star = std::stod(v);
      else if (h == "tau_us") r.tau_us = std::stod(v);
      else if (h == "n_start") r.counts.start = std::stoull(v);
      else if (h == "n_true") r.counts.true_min = std::stoull(v);
      else if (h == "n_false") r.counts.false_min = std::stoull(v);
      else if (h == "n_other") r.counts.other = std::stoull(v);
      else if (h == "shots") r.shots = std::stoull(v);
    }
    r.point = out.size();
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_records_csv(in);
}

/// Dispatches on the file extension (.csv, otherwise JSON lines).
inline std::vector<ExperimentRecord> read_records(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_records_csv(path);
  return read_records_jsonl(path);
}

}  // namespace anneal_range
