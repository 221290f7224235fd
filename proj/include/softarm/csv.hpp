// Copyright 2026 The softarm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file csv.hpp
 *
 * CSV readers and writers. All files carry SI units (rad, bar, m, kg, s)
 * and may start with `#` comment lines holding provenance such as the seed.
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "softarm/errors.hpp"
#include "softarm/ilc.hpp"
#include "softarm/simulation.hpp"
#include "softarm/sysid.hpp"
#include "softarm/trajectory.hpp"

namespace softarm::csv {

/// Shortest text that reads back to the same double.
inline std::string number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class Writer {
 public:
  Writer(std::ostream& out, const std::vector<std::string>& header,
         const std::string& comment = {})
      : out_(out), columns_(header.size()) {
    if (!comment.empty()) out_ << "# " << comment << "\n";
    row_strings(header);
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw InvalidInput("csv row has the wrong width");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << number(values[i]);
    }
    out_ << '\n';
  }

 private:
  void row_strings(const std::vector<std::string>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << values[i];
    }
    out_ << '\n';
  }

  std::ostream& out_;
  std::size_t columns_;
};

/// Numeric table read by column name.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }

  std::vector<double> values(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw InvalidInput("csv column '" + name + "' missing");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(c)]);
    return out;
  }
};

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  return out;
}

inline Table read(std::istream& in) {
  Table t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw InvalidInput("csv line " + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " cells, header has " +
                         std::to_string(t.header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw InvalidInput("csv line " + std::to_string(line_no) + ": '" + c +
                           "' is not a number");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw InvalidInput("csv has no header");
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read(in);
}

inline const std::vector<std::string>& trace_header() {
  static const std::vector<std::string> h{
      "time",    "alpha_ref", "beta_ref", "alpha", "beta",   "alpha_meas",
      "beta_meas", "dp_alpha", "dp_beta", "p_bar", "p_a",    "p_b",
      "p_c",     "radius",    "mass",     "eject"};
  return h;
}

inline void write_trace(std::ostream& out, const std::vector<TraceSample>& trace,
                        const std::string& comment = {}) {
  Writer w(out, trace_header(), comment);
  for (const TraceSample& s : trace) {
    w.row({s.time, s.reference.alpha, s.reference.beta, s.angle.alpha,
           s.angle.beta, s.measured.alpha, s.measured.beta, s.delta.dp_alpha,
           s.delta.dp_beta, s.delta.p_bar, s.pressure.p_a, s.pressure.p_b,
           s.pressure.p_c, s.radius, s.mass, s.eject ? 1.0 : 0.0});
  }
}

/// A plan in the trace schema: the angles are the setpoints, the pressures
/// those of zero differences at the planned p̄.
inline void write_plan(std::ostream& out, const SetpointPlan& plan,
                       const ElongationMap& map, const PBarInterval& interval,
                       const std::string& comment = {}) {
  std::vector<TraceSample> rows;
  for (int k = 0; k < plan.size(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    TraceSample s;
    s.time = plan.time(k);
    s.reference = {plan.alpha[i], plan.beta[i]};
    s.angle = s.reference;
    s.measured = s.reference;
    s.delta = DeltaRepresentation{plan.p_bar[i], 0.0, 0.0};
    s.pressure = xi(s.delta);
    s.radius = radius_from_pbar(plan.p_bar[i], map, interval).radius;
    s.mass = plan.mass[i];
    s.eject = plan.eject[i] != 0;
    rows.push_back(s);
  }
  write_trace(out, rows, comment);
}

/// Reads a plan from any table with time, alpha_ref, beta_ref, p_bar and
/// mass columns (eject optional). Grip and eject markers are the first
/// increase and the following decrease of the mass.
inline SetpointPlan read_plan(const Table& t) {
  SetpointPlan plan;
  const auto time = t.values("time");
  if (time.size() < 2) throw InvalidInput("plan needs at least two samples");
  plan.ts = time[1] - time[0];
  for (std::size_t k = 1; k < time.size(); ++k) {
    if (std::abs(time[k] - time[k - 1] - plan.ts) > 1e-9) {
      throw InvalidInput("plan time column is not uniformly sampled");
    }
  }
  plan.alpha = t.values("alpha_ref");
  plan.beta = t.values("beta_ref");
  plan.p_bar = t.values("p_bar");
  plan.mass = t.values("mass");
  if (t.column("eject") >= 0) {
    for (double e : t.values("eject")) plan.eject.push_back(e != 0.0 ? 1 : 0);
  } else {
    plan.eject.assign(time.size(), 0);
  }
  for (int k = 1; k < plan.size(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (!plan.grip_index && plan.mass[i] > plan.mass[i - 1]) plan.grip_index = k;
    else if (plan.grip_index && !plan.eject_index && plan.mass[i] < plan.mass[i - 1]) {
      plan.eject_index = k;
    }
  }
  return plan;
}

inline void write_frequency_response(std::ostream& out,
                                     const FrequencyResponseData& data,
                                     const std::string& comment = {}) {
  Writer w(out, {"frequency_hz", "real", "imag", "variance"}, comment);
  for (const FrequencyPoint& p : data) {
    w.row({p.frequency_hz, p.response.real(), p.response.imag(), p.variance});
  }
}

inline FrequencyResponseData read_frequency_response(const Table& t,
                                                     const std::string& prefix = {}) {
  const auto f = t.values("frequency_hz");
  const auto re = t.values(prefix + "real");
  const auto im = t.values(prefix + "imag");
  const auto var = t.values(prefix + "variance");
  FrequencyResponseData out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    out.push_back(FrequencyPoint{f[i], Complex(re[i], im[i]), var[i]});
  }
  return out;
}

/// Both axes of one p̄ level on a shared frequency grid, columns prefixed
/// `alpha_` and `beta_`.
inline void write_bode(std::ostream& out, const PerAxis<FrequencyResponseData>& data,
                       const std::string& comment = {}) {
  if (data.alpha.size() != data.beta.size()) {
    throw InvalidInput("axes measured on different grids");
  }
  Writer w(out,
           {"frequency_hz", "alpha_real", "alpha_imag", "alpha_variance",
            "beta_real", "beta_imag", "beta_variance"},
           comment);
  for (std::size_t i = 0; i < data.alpha.size(); ++i) {
    const FrequencyPoint& a = data.alpha[i];
    const FrequencyPoint& b = data.beta[i];
    if (a.frequency_hz != b.frequency_hz) throw InvalidInput("axes measured on different grids");
    w.row({a.frequency_hz, a.response.real(), a.response.imag(), a.variance,
           b.response.real(), b.response.imag(), b.variance});
  }
}

inline void write_history(std::ostream& out, const IlcHistory& h,
                          const std::string& comment = {}) {
  Writer w(out, {"iteration", "rms_alpha", "rms_beta", "max_alpha", "max_beta"},
           comment);
  for (const IlcIterate& it : h.iterates) {
    w.row({static_cast<double>(it.iteration), it.metrics.rms.alpha,
           it.metrics.rms.beta, it.metrics.max.alpha, it.metrics.max.beta});
  }
}

inline void write_correction(std::ostream& out, const Eigen::VectorXd& u,
                             double ts, const std::string& comment = {}) {
  Writer w(out, {"time", "u_alpha", "u_beta"}, comment);
  for (Eigen::Index k = 0; k < u.size() / 2; ++k) {
    w.row({static_cast<double>(k) * ts, u(2 * k), u(2 * k + 1)});
  }
}

inline Eigen::VectorXd read_correction(const Table& t) {
  const auto a = t.values("u_alpha");
  const auto b = t.values("u_beta");
  Eigen::VectorXd u(static_cast<Eigen::Index>(2 * a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) {
    u(static_cast<Eigen::Index>(2 * k)) = a[k];
    u(static_cast<Eigen::Index>(2 * k + 1)) = b[k];
  }
  return u;
}

}  // namespace softarm::csv
