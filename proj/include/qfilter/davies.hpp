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

// Photon counting: outcome records, Davies weights, and the counting filter.

#include <cstdint>
#include <optional>
#include <vector>

#include "qfilter/algebra.hpp"
#include "qfilter/lindblad.hpp"
#include "qfilter/rng.hpp"

namespace qfilter {

/// A finite set of detection times 0 <= t_1 < ... < t_k < horizon.
class OutcomeSet {
 public:
  OutcomeSet() = default;
  OutcomeSet(double horizon, std::vector<double> times);

  double horizon() const noexcept { return horizon_; }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }

 private:
  double horizon_ = 0.0;
  std::vector<double> times_;
};

struct DaviesWeight {
  /// W_t(omega)(rho0), the unnormalized conditioned state.
  CMatrix unnormalized;
  /// Tr W_t(omega)(rho0), the density of omega with respect to the
  /// Guichardet measure.
  double density;
};

/// exp((t - t_k) L) J ... J exp(t_1 L) rho0 for a time-independent split.
DaviesWeight davies_weight(const UnravelingSplit& split, const OutcomeSet& omega,
                           const DensityMatrix& rho0);

/// Same product for a possibly time-dependent unraveling; the smooth pieces
/// use midpoint product integration with step <= dt.
DaviesWeight davies_weight(const Unraveling& unraveling, const OutcomeSet& omega,
                           const DensityMatrix& rho0, double dt = kDefaultMasterStep);

// ---------------------------------------------------------------------------
// Guichardet quadrature

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendre gauss_legendre(int order);

struct GuichardetOptions {
  int max_sector = 6;
  int order = 16;
  /// Only records with every jump in [window_start, horizon) are counted.
  double window_start = 0.0;
};

struct GuichardetMass {
  /// mass[n] = integral of Tr W_t over n-jump records.
  std::vector<double> sector;
  double total = 0.0;
};

/// Nested Gauss-Legendre quadrature of the Davies density over the ordered
/// simplices of each photon sector.
GuichardetMass guichardet_mass(const UnravelingSplit& split, const DensityMatrix& rho0,
                               double horizon, const GuichardetOptions& options = {});

// ---------------------------------------------------------------------------
// Trajectories

/// Filtered path shared by the counting and diffusive integrators.
struct FilteredPath {
  std::vector<double> grid;
  std::vector<DensityMatrix> states;
  /// N_t for counting, W_t or W^eps_t for the diffusive schemes.
  std::vector<double> observation;
  /// Innovation martingale on the grid.
  std::vector<double> martingale;
  /// rho_t(X) - rho_0(X) - int rho_s(L^dual(X)) ds, when an observable is set.
  std::vector<double> filter_martingale;
  /// Number of integrator micro-steps.
  std::uint64_t micro_steps = 0;
};

struct CountingTrajectory : FilteredPath {
  OutcomeSet jumps;
  std::vector<std::int64_t> counts;
  /// Largest and smallest count increment over a single micro-step.
  std::int64_t max_step_increment = 0;
  std::int64_t min_step_increment = 0;
};

struct PathOptions {
  double dt = 1e-3;
  /// Times at which the state is stored; empty stores every step (and every
  /// jump time for the exact sampler).
  std::vector<double> record_times;
  /// Observable X for the filter martingale (Hermitian, model dimension).
  std::optional<CMatrix> observable;
};

/// Exact jump-time sampling by norm tracking: the unnormalized state follows
/// exp(s L_smooth), a jump fires when its trace falls below a fresh uniform
/// draw, and the crossing time is refined by safeguarded Newton iteration
/// to 1e-10.
CountingTrajectory sample_counting_trajectory(const Unraveling& unraveling,
                                              const DensityMatrix& rho0, double horizon,
                                              RngStream& rng, const PathOptions& options = {});

/// Step integrator for the counting filter
///   d rho = L(rho) dt + (J(rho)/Tr J(rho) - rho)(dN - Tr J(rho) dt).
///
/// Each step applies the exact smooth flow P = exp(h L_smooth), renormalizes,
/// and with probability 1 - Tr(P rho) applies J at the end of the step. The
/// compensator increment is -log Tr(P rho), the exact integral of Tr J along
/// the smooth flow. A jump detected in the final step is stamped at the
/// horizon, so the record horizon is the next double above it.
CountingTrajectory integrate_counting_sse(const Unraveling& unraveling, const DensityMatrix& rho0,
                                          double horizon, RngStream& rng,
                                          const PathOptions& options = {});

/// Filter replay along a fixed record. Throws ImpossibleOutcome when the
/// jump rate vanishes at a recorded jump.
CountingTrajectory integrate_counting_sse(const Unraveling& unraveling, const DensityMatrix& rho0,
                                          double horizon, const OutcomeSet& record,
                                          const PathOptions& options = {});

/// Step endpoints for [0, horizon]: multiples of dt merged with `extra`
/// (points closer than 1e-9 dt are merged, keeping the extra value).
std::vector<double> step_schedule(double horizon, double dt, const std::vector<double>& extra);

}  // namespace qfilter
