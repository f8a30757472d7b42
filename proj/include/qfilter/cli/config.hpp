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

// Run configuration: a JSON object (schema "qfilter.config/1") whose fields
// may be overridden by command-line flags.

#include <cstdint>
#include <string>
#include <vector>

#include "qfilter/algebra.hpp"
#include "qfilter/homodyne.hpp"
#include "qfilter/lindblad.hpp"

namespace qfilter::cli {

inline constexpr const char* kConfigSchema = "qfilter.config/1";

enum class Scheme { Count, ScaledCount, Homodyne };

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

struct RunConfig {
  std::string preset = "resonance-fluorescence";
  TwoLevelParams params{.omega0 = 0.0, .rabi = 1.0, .laser_freq = 0.0};
  /// "ground" or "excited".
  std::string initial_state = "ground";

  Scheme scheme = Scheme::Count;
  double epsilon = 0.1;
  double phi0 = 0.0;
  double omega_lo = 0.0;

  double horizon = 2.0;
  double dt = 1e-3;
  std::size_t n_traj = 100;
  std::uint64_t seed = 0;
  std::vector<double> checkpoints{0.5, 1.0, 2.0};
  unsigned workers = 1;

  /// limit subcommand
  std::vector<double> eps_schedule{1.0, 0.25, 0.0625};

  std::string out;
  std::string summary_out;

  /// Throws InvalidInput on non-finite fields, n_traj < 1, horizon <= 0,
  /// dt <= 0 or checkpoints outside [0, horizon].
  void validate() const;

  LindbladModel model() const;
  DensityMatrix initial() const;
  HomodyneSpec homodyne() const;
};

/// Parses a config document. Unknown keys are rejected.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& c);

}  // namespace qfilter::cli
