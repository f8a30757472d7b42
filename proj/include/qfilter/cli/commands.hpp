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

// Subcommands. Each writes to the given streams and returns the process
// exit status; outputs depend only on the configuration and seed.

#include <iosfwd>
#include <string>
#include <vector>

#include "qfilter/cli/config.hpp"
#include "qfilter/cli/records.hpp"

namespace qfilter::cli {

/// Record times of a run: 0, the checkpoints and the horizon.
std::vector<double> record_times(const RunConfig& c);

/// Master-equation oracle table at the record times.
int cmd_master(const RunConfig& c, std::ostream& out);

/// Samples n_traj paths of the configured scheme and writes the record
/// stream; `summary` (optional) receives the ensemble summary CSV.
int cmd_trajectories(const RunConfig& c, std::ostream& records, std::ostream* summary);

/// Prints the derived Belavkin equation for "count" or "homodyne".
int cmd_derive(const std::string& scheme, bool unit_observable, std::ostream& out);

int cmd_limit(const RunConfig& c, std::ostream& out);

/// Ensemble-vs-oracle and martingale checks on a trajectory file. Returns 0
/// when every check passes, 1 otherwise.
int cmd_check(std::istream& trajectories, std::ostream& report);

}  // namespace qfilter::cli
