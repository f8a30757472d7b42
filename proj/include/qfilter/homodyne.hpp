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

// Homodyne detection: the eps-scaled counting filter after mixing the side
// channel with a local oscillator, and its diffusive limit.

#include <cstdint>
#include <string>
#include <vector>

#include "qfilter/davies.hpp"
#include "qfilter/lindblad.hpp"
#include "qfilter/rng.hpp"

namespace qfilter {

/// Local-oscillator settings. epsilon is the inverse oscillator amplitude,
/// with 0 meaning the diffusive limit; w_t = exp(i (phi0 + omega_lo t)).
struct HomodyneSpec {
  double epsilon = 0.0;
  double phi0 = 0.0;
  double omega_lo = 0.0;
  std::string channel = "s";

  Complex phase(double t) const;
  /// The mixed counting scheme; requires epsilon > 0.
  HomodyneMixed mixed() const;
};

struct DiffusiveTrajectory : FilteredPath {
  double epsilon = 0.0;
  /// Photon counts on the grid (scaled scheme only).
  std::vector<std::int64_t> counts;
  /// Sum of squared observation increments over [0, T].
  double quadratic_variation = 0.0;
  /// Scaled scheme: largest relative error of
  /// (dW)^2 = eps dW + dt + (dt^2/eps^2 - 2 dN dt) over all steps.
  double max_identity_error = 0.0;
  /// Scaled scheme: largest |dt^2/eps^2 - 2 dN dt| over all steps.
  double max_dropped_term = 0.0;
  std::int64_t max_step_increment = 0;
  std::int64_t min_step_increment = 0;
};

/// Default dt rule for scaled counting: dt = c eps^2.
inline constexpr double kDefaultDtRule = 0.1;

/// Upper bound on the expected jumps in one step, dt (|V_s| + 1/eps)^2.
double scaled_step_load(const LindbladModel& model, const HomodyneSpec& spec, double dt);

/// Counting along the mixed channel with J_a(rho) = (V + w/eps) rho (V + w/eps)^*.
/// Emits W^eps = eps N - t/eps and the martingale eps (N - int Tr J_a).
/// Jump times are sampled exactly, so one step may hold several jumps.
/// Throws StepSizeError when scaled_step_load exceeds 0.5.
DiffusiveTrajectory integrate_scaled_counting_sse(const LindbladModel& model,
                                                  const HomodyneSpec& spec,
                                                  const DensityMatrix& rho0, double horizon,
                                                  RngStream& rng, const PathOptions& options = {});

/// Diffusive filter
///   d rho = L(rho) dt + (c rho + rho c^* - Tr(c rho + rho c^*) rho) dM,
///   c = conj(w_t) V_s,  dM = dW - Tr(c rho + rho c^*) dt.
///
/// Each step maps rho to (I + c dW) rho (I + c dW)^*, then applies
/// exp(h (L - C)) with C(rho) = c rho c^*, then renormalizes. Expanding to
/// first order with dW^2 = dt reproduces the equation above.
DiffusiveTrajectory integrate_homodyne_sse(const LindbladModel& model, const HomodyneSpec& spec,
                                           const DensityMatrix& rho0, double horizon,
                                           RngStream& rng, const PathOptions& options = {});

/// Filter replay: `increments` holds dW for every step of
/// step_schedule(horizon, dt, record_times).
DiffusiveTrajectory integrate_homodyne_sse(const LindbladModel& model, const HomodyneSpec& spec,
                                           const DensityMatrix& rho0, double horizon,
                                           const std::vector<double>& increments,
                                           const PathOptions& options = {});

/// w kappa-bar rho V^* + conj(w) kappa V rho - Tr(.) rho, written with the
/// resolved side operator vs = kappa V: vs_w rho + rho vs_w^* - Tr(.) rho,
/// vs_w = conj(w) vs.
CMatrix homodyne_gain(const CMatrix& rho, const CMatrix& vs, Complex w);

/// (1/eps)(J_a(rho)/Tr J_a(rho) - rho) with J_a built from vs + w/eps.
CMatrix scaled_gain(const CMatrix& rho, const CMatrix& vs, Complex w, double epsilon);

// ---------------------------------------------------------------------------
// Diffusive limit

struct LimitOptions {
  std::vector<double> eps_schedule;
  std::size_t n_traj = 10000;
  /// dt = min(dt_rule * eps^2, dt_cap); the horizon is the last checkpoint.
  double dt_rule = kDefaultDtRule;
  double dt_cap = 1e-3;
  std::vector<double> checkpoints{0.5, 1.0, 2.0};
  std::uint64_t seed = 0;
  /// Maximum total number of integrator steps over all runs.
  std::uint64_t step_budget = 2'000'000'000ULL;
  unsigned workers = 1;
};

struct LimitRow {
  double epsilon;
  double checkpoint;
  std::string metric;
  /// Scaled-ensemble estimate minus diffusive-ensemble estimate.
  double value;
  double std_error;
};

struct LimitReport {
  std::vector<LimitRow> rows;
  std::vector<double> epsilon;
  /// d(eps) = max |value| over checkpoints and metrics.
  std::vector<double> distance;
  /// Standard error of the entry attaining the maximum.
  std::vector<double> distance_stderr;
  std::vector<double> dt;
  bool decreasing = false;
  bool terminal_within_3se = false;
};

/// Compares ensemble moments of the scaled scheme at each eps with the
/// diffusive scheme. Metrics per checkpoint: Re rho_00, Re rho_01,
/// Im rho_01, E[W], E[W^2]. Throws BudgetError before running when the step
/// count would exceed the budget.
LimitReport diffusive_limit_report(const LindbladModel& model, const HomodyneSpec& spec,
                                   const DensityMatrix& rho0, const LimitOptions& options);

/// dt used for one eps under the options' rule.
double limit_step(double epsilon, const LimitOptions& options);

}  // namespace qfilter
