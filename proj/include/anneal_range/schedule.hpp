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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace anneal_range {

enum class Device { LowNoise, HighNoise };

inline const char* device_name(Device d) { return d == Device::LowNoise ? "low_noise" : "high_noise"; }

inline Device parse_device(const std::string& s) {
  if (s == "low_noise" || s == "low" || s == "LowNoise") return Device::LowNoise;
  if (s == "high_noise" || s == "high" || s == "HighNoise") return Device::HighNoise;
  throw std::invalid_argument("unknown device: " + s);
}

struct ScheduleRow {
  double s = 0.0;
  double A = 0.0;  // GHz
  double B = 0.0;  // GHz
};

/// A(s), B(s) in GHz on a strictly increasing s grid, interpolated linearly.
class ScheduleTable {
 public:
  ScheduleTable() = default;

  ScheduleTable(std::vector<ScheduleRow> rows, std::string label) : rows_(std::move(rows)), label_(std::move(label)) {
    if (rows_.size() < 2) throw std::invalid_argument("schedule needs at least 2 rows");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const auto& r = rows_[i];
      if (!(r.s >= 0.0 && r.s <= 1.0)) throw std::invalid_argument("schedule s outside [0, 1]");
      if (!(r.A >= 0.0 && r.B >= 0.0)) throw std::invalid_argument("schedule energies must be non-negative");
      if (i == 0) continue;
      const auto& p = rows_[i - 1];
      if (!(r.s > p.s)) throw std::invalid_argument("schedule s must be strictly increasing");
      if (!(r.A < p.A)) throw std::invalid_argument("schedule A must be strictly decreasing");
      if (!(r.B > p.B)) throw std::invalid_argument("schedule B must be strictly increasing");
    }
  }

  const std::vector<ScheduleRow>& rows() const { return rows_; }
  const std::string& label() const { return label_; }
  double s_min() const { return rows_.front().s; }
  double s_max() const { return rows_.back().s; }

  double A(double s) const { return interp(s, &ScheduleRow::A); }
  double B(double s) const { return interp(s, &ScheduleRow::B); }

  /// Gamma(s) = A(s) / B(s).
  double gamma(double s) const {
    const double b = B(s);
    if (!(b > 0.0)) throw std::domain_error("gamma undefined where B = 0");
    return A(s) / b;
  }

  double gamma_max() const { return gamma(first_positive_B()); }
  double gamma_min() const { return gamma(s_max()); }

  /// Inverse of gamma by bisection on the monotone map.
  double s_of_gamma(double g) const {
    double lo = first_positive_B(), hi = s_max();
    if (!(g <= gamma(lo) && g >= gamma(hi))) throw std::out_of_range("gamma outside the attained range");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (gamma(mid) > g) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

 private:
  double interp(double s, double ScheduleRow::*field) const {
    if (!(s >= s_min() - 1e-15 && s <= s_max() + 1e-15)) throw std::out_of_range("s outside schedule range");
    s = std::clamp(s, s_min(), s_max());
    auto it = std::upper_bound(rows_.begin(), rows_.end(), s, [](double v, const ScheduleRow& r) { return v < r.s; });
    if (it == rows_.end()) return rows_.back().*field;
    if (it == rows_.begin()) return rows_.front().*field;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (s == lo.s) return lo.*field;
    const double w = (s - lo.s) / (hi.s - lo.s);
    return lo.*field + w * (hi.*field - lo.*field);
  }

  double first_positive_B() const {
    for (const auto& r : rows_) {
      if (r.B > 0.0) return r.s;
    }
    throw std::domain_error("B is zero everywhere");
  }

  std::vector<ScheduleRow> rows_;
  std::string label_;
};

/// Parameters of A(s) = A0 (1 - s)^a, B(s) = B0 (c + (1 - c) s^b), with A0 fixed
/// by Gamma(anchor_s) = anchor_gamma.
struct SyntheticScheduleParams {
  double a = 2.0;
  double b = 2.0;
  double c = 0.03;
  double B0 = 10.0;
  double anchor_s = 0.57;
  double anchor_gamma = 0.31;
  std::size_t points = 1001;
};

inline SyntheticScheduleParams default_synthetic_params(Device d) {
  SyntheticScheduleParams p;
  if (d == Device::HighNoise) {
    p.a = 3.0;
    p.anchor_gamma = 0.089;
  }
  return p;
}

inline ScheduleTable synthetic_schedule(const SyntheticScheduleParams& p, const std::string& label) {
  auto B = [&](double s) { return p.B0 * (p.c + (1.0 - p.c) * std::pow(s, p.b)); };
  const double A0 = p.anchor_gamma * B(p.anchor_s) / std::pow(1.0 - p.anchor_s, p.a);
  std::vector<ScheduleRow> rows(p.points);
  for (std::size_t i = 0; i < p.points; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(p.points - 1);
    rows[i] = {s, A0 * std::pow(1.0 - s, p.a), B(s)};
  }
  return ScheduleTable(std::move(rows), label);
}

inline ScheduleTable synthetic_schedule(Device d) { return synthetic_schedule(default_synthetic_params(d), device_name(d)); }

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_schedule(std::ostream& out, const ScheduleTable& t) {
  out << "s,A_GHz,B_GHz\n";
  for (const auto& r : t.rows()) out << format_double(r.s) << ',' << format_double(r.A) << ',' << format_double(r.B) << '\n';
}

inline void save_schedule(const ScheduleTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_schedule(out, t);
}

inline ScheduleTable load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  // Leading '#' lines are comments.
  do {
    if (!std::getline(in, line)) throw std::invalid_argument("empty schedule file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
  } while (!line.empty() && line[0] == '#');
  if (line != "s,A_GHz,B_GHz") throw std::invalid_argument("schedule header must be s,A_GHz,B_GHz");
  std::vector<ScheduleRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c)) {
      throw std::invalid_argument("malformed schedule row: " + line);
    }
    rows.push_back({std::stod(a), std::stod(b), std::stod(c)});
  }
  return ScheduleTable(std::move(rows), path);
}

// ---------------------------------------------------------------------------
// Waveforms

inline constexpr double kMaxAnnealRate = 0.2;  // 1/us, full sweep in 5 us

struct WaveSegment {
  double t_start = 0.0;  // us
  double t_end = 0.0;
  double s_start = 0.0;
  double s_end = 0.0;

  double s_at(double t) const {
    if (t <= t_start) return s_start;
    if (t >= t_end) return s_end;
    return s_start + (s_end - s_start) * (t - t_start) / (t_end - t_start);
  }
};

struct Waveform {
  std::vector<WaveSegment> segments;
  double total_time() const { return segments.empty() ? 0.0 : segments.back().t_end; }

  double s_at(double t) const {
    for (const auto& seg : segments) {
      if (t <= seg.t_end) return seg.s_at(t);
    }
    return segments.back().s_end;
  }
};

/// Reverse anneal: ramp 1 -> s_star at `rate`, hold for tau, ramp back to 1.
inline Waveform reverse_waveform(double s_star, double tau_us, double rate = kMaxAnnealRate) {
  if (!(s_star > 0.0 && s_star < 1.0)) throw std::invalid_argument("s_star must lie in (0, 1)");
  if (!(tau_us >= 0.0)) throw std::invalid_argument("hold time must be non-negative");
  if (!(rate > 0.0 && rate <= kMaxAnnealRate)) throw std::invalid_argument("rate must lie in (0, max rate]");
  const double ramp = (1.0 - s_star) / rate;
  Waveform w;
  w.segments.push_back({0.0, ramp, 1.0, s_star});
  double t = ramp;
  if (tau_us > 0.0) {
    w.segments.push_back({t, t + tau_us, s_star, s_star});
    t += tau_us;
  }
  w.segments.push_back({t, t + ramp, s_star, 1.0});
  return w;
}

struct WavePoint {
  double t = 0.0;
  double s = 0.0;
};

/// Uniform time grid with n_steps intervals, merged with every segment endpoint.
inline std::vector<WavePoint> sample_waveform(const Waveform& w, std::size_t n_steps) {
  if (n_steps < 2) throw std::invalid_argument("n_steps must be at least 2");
  if (w.segments.empty()) return {};
  const double T = w.total_time();
  std::vector<double> ts;
  for (std::size_t i = 0; i <= n_steps; ++i) ts.push_back(T * static_cast<double>(i) / static_cast<double>(n_steps));
  for (const auto& seg : w.segments) {
    ts.push_back(seg.t_start);
    ts.push_back(seg.t_end);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<WavePoint> out;
  for (double t : ts) {
    double s = w.s_at(t);
    for (const auto& seg : w.segments) {
      if (t == seg.t_start) s = seg.s_start;
      if (t == seg.t_end) s = seg.s_end;
    }
    out.push_back({t, s});
  }
  return out;
}

}  // namespace anneal_range
