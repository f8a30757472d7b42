// Copyright 2026 The qfilter Authors
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

#include "qfilter/cli/records.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qfilter/errors.hpp"

namespace qfilter::cli {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory_header(std::ostream& out, const TrajectoryHeader& h) {
  out << "{\"schema\":\"" << kTrajectorySchema << "\",\"rng\":" << json(h.rng).dump()
      << ",\"seed\":" << h.seed << ",\"n_traj\":" << h.n_traj << ",\"scheme\":"
      << json(h.scheme).dump() << ",\"config\":" << h.config_json << "}\n";
}

void write_trajectory_lines(std::ostream& out, std::size_t id, const FilteredPath& path) {
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    const CMatrix& m = path.states[k].matrix();
    out << "{\"traj\":" << id << ",\"t\":" << format_double(path.grid[k]) << ",\"rho\":[";
    bool first = true;
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (!first) out << ',';
        first = false;
        out << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
      }
    }
    out << "],\"obs\":" << format_double(path.observation[k])
        << ",\"mart\":" << format_double(path.martingale[k]) << "}\n";
  }
}

TrajectoryFile read_trajectories(std::istream& in) {
  TrajectoryFile file;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty trajectory file");
  json head;
  try {
    head = json::parse(line);
  } catch (const json::parse_error&) {
    throw SchemaError("trajectory header is not JSON");
  }
  if (!head.is_object() || !head.contains("schema") || !head["schema"].is_string()) {
    throw SchemaError("trajectory header has no schema");
  }
  if (head["schema"].get<std::string>() != kTrajectorySchema) {
    throw SchemaError("unsupported trajectory schema '" + head["schema"].get<std::string>() + "'");
  }
  try {
    file.header.rng = head.at("rng").get<std::string>();
    file.header.seed = head.at("seed").get<std::uint64_t>();
    file.header.n_traj = head.at("n_traj").get<std::size_t>();
    file.header.scheme = head.at("scheme").get<std::string>();
    file.header.config_json = head.at("config").dump();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad trajectory header: ") + e.what());
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto id = j.at("traj").get<std::size_t>();
      if (id == file.paths.size()) {
        file.paths.emplace_back();
      } else if (id + 1 != file.paths.size()) {
        throw InvalidInput("trajectory ids out of order");
      }
      FilteredPath& p = file.paths.back();
      const double t = j.at("t").get<double>();
      if (!p.grid.empty() && !(t > p.grid.back())) throw InvalidInput("times out of order");
      const auto& r = j.at("rho");
      const std::size_t n2 = r.size() / 2;
      const auto dim = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n2))));
      if (r.size() % 2 != 0 || static_cast<std::size_t>(dim * dim) != n2) {
        throw InvalidInput("rho has the wrong length");
      }
      CMatrix m(dim, dim);
      std::size_t k = 0;
      for (Index a = 0; a < dim; ++a) {
        for (Index b = 0; b < dim; ++b, k += 2) {
          m(a, b) = Complex(r[k].get<double>(), r[k + 1].get<double>());
        }
      }
      p.grid.push_back(t);
      p.states.emplace_back(m);
      p.observation.push_back(j.at("obs").get<double>());
      p.martingale.push_back(j.at("mart").get<double>());
    } catch (const json::exception& e) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidInput& e) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (file.paths.size() != file.header.n_traj) {
    throw InvalidInput("file holds " + std::to_string(file.paths.size()) + " trajectories, header says " +
                       std::to_string(file.header.n_traj));
  }
  return file;
}

void write_summary_csv(std::ostream& out, const EnsembleSummary& summary,
                       const std::vector<DensityMatrix>& oracle, const std::string& scheme) {
  out << "# " << kSummarySchema << "\n";
  out << "# scheme=" << scheme << ",seed=" << summary.seed << ",n_traj=" << summary.trajectories
      << "\n";
  out << "t,i,j,mean_re,mean_im,se_re,se_im,oracle_re,oracle_im\n";
  for (std::size_t c = 0; c < summary.checkpoints.size(); ++c) {
    const CMatrix& m = summary.mean[c];
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        out << format_double(summary.checkpoints[c]) << ',' << i << ',' << j << ','
            << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag()) << ','
            << format_double(summary.stderr_real[c](i, j)) << ','
            << format_double(summary.stderr_imag[c](i, j)) << ','
            << format_double(oracle[c](i, j).real()) << ','
            << format_double(oracle[c](i, j).imag()) << '\n';
      }
    }
  }
}

void expect_csv_schema(std::istream& in, const std::string& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file");
  if (line != "# " + schema) throw SchemaError("unsupported schema line '" + line + "'");
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  expect_csv_schema(in, kSummarySchema);
  std::vector<SummaryRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    SummaryRow r{};
    char c;
    std::istringstream ss(line);
    if (!(ss >> r.t >> c >> r.i >> c >> r.j >> c >> r.mean_re >> c >> r.mean_im >> c >> r.se_re >>
          c >> r.se_im >> c >> r.oracle_re >> c >> r.oracle_im)) {
      throw InvalidInput("malformed summary row '" + line + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

void write_master_csv(std::ostream& out, const std::vector<double>& times,
                      const std::vector<DensityMatrix>& states) {
  out << "# " << kMasterSchema << "\n";
  out << "t,rho00_re,rho00_im,rho01_re,rho01_im,rho10_re,rho10_im,rho11_re,rho11_im\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    const CMatrix& m = states[k].matrix();
    out << format_double(times[k]);
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        out << ',' << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
      }
    }
    out << '\n';
  }
}

void write_limit_csv(std::ostream& out, const LimitReport& report, std::uint64_t seed,
                     std::size_t n_traj) {
  out << "# " << kLimitSchema << "\n";
  out << "# seed=" << seed << ",n_traj=" << n_traj << "\n";
  out << "epsilon,dt,checkpoint,metric,value,std_error\n";
  for (const auto& r : report.rows) {
    double dt = 0.0;
    for (std::size_t k = 0; k < report.epsilon.size(); ++k) {
      if (report.epsilon[k] == r.epsilon) dt = report.dt[k];
    }
    out << format_double(r.epsilon) << ',' << format_double(dt) << ','
        << format_double(r.checkpoint) << ',' << r.metric << ',' << format_double(r.value) << ','
        << format_double(r.std_error) << '\n';
  }
  for (std::size_t k = 0; k < report.epsilon.size(); ++k) {
    out << format_double(report.epsilon[k]) << ',' << format_double(report.dt[k]) << ",,distance,"
        << format_double(report.distance[k]) << ',' << format_double(report.distance_stderr[k])
        << '\n';
  }
  out << "# decreasing=" << (report.decreasing ? "true" : "false")
      << ",terminal_within_3se=" << (report.terminal_within_3se ? "true" : "false") << "\n";
}

}  // namespace qfilter::cli
