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

// Ensemble statistics and the statistical checks run on emitted paths.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qfilter/algebra.hpp"
#include "qfilter/davies.hpp"
#include "qfilter/homodyne.hpp"

namespace qfilter {

/// Mean filtered state and componentwise standard errors at checkpoints.
struct EnsembleSummary {
  std::vector<double> checkpoints;
  std::vector<CMatrix> mean;
  /// Standard errors of the real and imaginary parts of each entry.
  std::vector<Eigen::MatrixXd> stderr_real;
  std::vector<Eigen::MatrixXd> stderr_imag;
  std::size_t trajectories = 0;
  std::uint64_t seed = 0;
};

/// Index of `t` in `grid` (exact match up to 1e-12); throws GridMismatch.
std::size_t grid_index(const std::vector<double>& grid, double t);

EnsembleSummary ensemble_mean(const std::vector<const FilteredPath*>& paths,
                              const std::vector<double>& checkpoints, std::uint64_t seed = 0);

template <class Path>
EnsembleSummary ensemble_mean(const std::vector<Path>& paths,
                              const std::vector<double>& checkpoints, std::uint64_t seed = 0) {
  std::vector<const FilteredPath*> ptrs;
  ptrs.reserve(paths.size());
  for (const auto& p : paths) ptrs.push_back(&p);
  return ensemble_mean(ptrs, checkpoints, seed);
}

struct OracleComparison {
  /// max over checkpoints and entries of |mean - oracle| / stderr; entries
  /// within `floor` of the oracle count as 0.
  double max_z = 0.0;
  double max_abs_error = 0.0;
  double max_stderr = 0.0;
  /// Every entry satisfies |mean - oracle| <= 3 stderr + floor.
  bool within_3se = false;
  std::string worst;
};

/// Componentwise comparison with an oracle state per checkpoint. Entries
/// whose standard error is 0 must match to `floor`.
OracleComparison compare_to_oracle(const EnsembleSummary& summary,
                                   const std::vector<DensityMatrix>& oracle, double floor = 1e-12);

// ---------------------------------------------------------------------------
// Martingale tests

/// Which path the test reads.
enum class ProcessKind { Innovation, FilterMartingale, Observation };

/// g(path, index of s in the grid), measurable at time s.
struct PathFunctional {
  std::string name;
  std::function<double(const FilteredPath&, std::size_t)> g;
};

PathFunctional constant_functional();
/// The process value at s.
PathFunctional value_at_s(ProcessKind kind, std::string name);
/// The filtered population rho_s(k, k).
PathFunctional population_at_s(Index k);
/// 1{observation_s == 0}, e.g. no photon counted by s.
PathFunctional no_count_by_s();
/// 1{observation_s > 0}.
PathFunctional positive_observation_at_s();

struct MartingaleCell {
  double s;
  double t;
  std::string functional;
  double mean;
  double std_error;
  double z;
};

struct MartingaleReport {
  std::string process;
  std::vector<MartingaleCell> cells;
  std::vector<std::string> functionals;
  double max_abs_z = 0.0;
  std::size_t tests = 0;
  /// Two-sided 0.27% family-wise level split over all tests.
  double bonferroni_z = 3.0;
  bool within_3 = false;
  bool within_bonferroni = false;
  /// max |z| <= max(3, bonferroni_z).
  bool pass = false;
};

/// For every checkpoint pair s < t and every functional g:
/// z = mean[(P_t - P_s) g] / stderr. Throws InvalidInput on an empty
/// conditioning set.
MartingaleReport martingale_test(const std::vector<const FilteredPath*>& paths,
                                 const std::string& process, ProcessKind kind,
                                 const std::vector<PathFunctional>& conditioning,
                                 const std::vector<double>& checkpoints);

template <class Path>
MartingaleReport martingale_test(const std::vector<Path>& paths, const std::string& process,
                                 ProcessKind kind, const std::vector<PathFunctional>& conditioning,
                                 const std::vector<double>& checkpoints) {
  std::vector<const FilteredPath*> ptrs;
  ptrs.reserve(paths.size());
  for (const auto& p : paths) ptrs.push_back(&p);
  return martingale_test(ptrs, process, kind, conditioning, checkpoints);
}

/// Upper standard normal quantile: Phi(z) = 1 - p.
double normal_upper_quantile(double p);
/// Bonferroni threshold for m two-sided tests at family level alpha.
double bonferroni_z(std::size_t m, double alpha = 0.0027);

// ---------------------------------------------------------------------------
// Counting statistics

/// max_x |F_n(x) - F(x)| for the empirical CDF of `samples`.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

struct Histogram {
  std::vector<double> edges;
  std::vector<double> density;   // empirical, per unit time
  std::vector<double> expected;  // oracle density averaged over the bin
  bool empty = true;
};

struct CountingStatistics {
  std::vector<double> first_jumps;
  std::size_t censored = 0;
  Histogram waiting;
  double waiting_ks = 0.0;
  /// Rate (N_t1 - N_t0)/(t1 - t0) over the window, with its stderr.
  double rate = 0.0;
  double rate_stderr = 0.0;
  /// Time average of Tr J(rho_bar_t) over the window, from the master flow.
  double oracle_rate = 0.0;
};

struct CountingStatisticsOptions {
  std::vector<double> bin_edges;
  double rate_window_start = 0.0;
  double rate_window_end = 0.0;
  /// Midpoint-rule points for the oracle rate average.
  int oracle_points = 200;
};

/// First-waiting-time histogram and KS distance against the density
/// -d/dt Tr exp(t L_smooth) rho0, plus the empirical count rate against the
/// master-equation oracle. Paths must record both window endpoints.
CountingStatistics counting_statistics(const std::vector<CountingTrajectory>& paths,
                                       const Unraveling& unraveling, const DensityMatrix& rho0,
                                       const CountingStatisticsOptions& options);

// ---------------------------------------------------------------------------
// Ito laws

struct QuadraticVariationReport {
  std::size_t paths = 0;
  std::size_t failures = 0;
  double bound = 0.0;
  double max_deviation = 0.0;
  bool pass = false;
};

/// Per path: |sum (dW)^2 - T| <= 4 sqrt(2 T dt).
QuadraticVariationReport quadratic_variation_test(const std::vector<DiffusiveTrajectory>& paths,
                                                  double horizon, double dt);

/// (dN)^2 = dN on a fully recorded counting path: every grid increment is
/// 0 or 1.
bool counting_increments_are_binary(const std::vector<std::int64_t>& counts);

}  // namespace qfilter
