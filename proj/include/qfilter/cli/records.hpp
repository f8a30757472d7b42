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

#pragma once

// File formats. Every file starts with its schema string; readers reject
// other versions with SchemaError. Floats are written with %.17g.
//
// Trajectories (JSON Lines):
//   {"schema":"qfilter.trajectories/1","rng":...,"seed":S,"n_traj":N,"scheme":...,"config":{...}}
//   {"traj":i,"t":t,"rho":[re00,im00,re01,im01,re10,im10,re11,im11],"obs":N_or_W,"mart":M}
// one line per (trajectory, recorded time), ordered by (traj, t).
//
// Summaries, master tables, limit and check reports (CSV) start with a
// "# <schema>" line followed by "# key=value" metadata and a header row.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qfilter/davies.hpp"
#include "qfilter/homodyne.hpp"
#include "qfilter/stats.hpp"

namespace qfilter::cli {

inline constexpr const char* kTrajectorySchema = "qfilter.trajectories/1";
inline constexpr const char* kSummarySchema = "qfilter.summary/1";
inline constexpr const char* kMasterSchema = "qfilter.master/1";
inline constexpr const char* kLimitSchema = "qfilter.limit/1";
inline constexpr const char* kCheckSchema = "qfilter.check/1";

std::string format_double(double x);

struct TrajectoryHeader {
  std::string rng;
  std::uint64_t seed = 0;
  std::size_t n_traj = 0;
  std::string scheme;
  /// The run configuration as a JSON object.
  std::string config_json;
};

void write_trajectory_header(std::ostream& out, const TrajectoryHeader& h);
void write_trajectory_lines(std::ostream& out, std::size_t id, const FilteredPath& path);

struct TrajectoryFile {
  TrajectoryHeader header;
  std::vector<FilteredPath> paths;
};

/// Throws SchemaError on a missing or unknown schema and InvalidInput on
/// malformed or out-of-order lines.
TrajectoryFile read_trajectories(std::istream& in);

void write_summary_csv(std::ostream& out, const EnsembleSummary& summary,
                       const std::vector<DensityMatrix>& oracle, const std::string& scheme);

struct SummaryRow {
  double t;
  int i;
  int j;
  double mean_re, mean_im, se_re, se_im, oracle_re, oracle_im;
};

/// Throws SchemaError unless the first line is "# qfilter.summary/1".
std::vector<SummaryRow> read_summary_csv(std::istream& in);

void write_master_csv(std::ostream& out, const std::vector<double>& times,
                      const std::vector<DensityMatrix>& states);

void write_limit_csv(std::ostream& out, const LimitReport& report, std::uint64_t seed,
                     std::size_t n_traj);

/// Reads the schema line of a CSV report and throws SchemaError unless it
/// equals `schema`.
void expect_csv_schema(std::istream& in, const std::string& schema);

}  // namespace qfilter::cli
