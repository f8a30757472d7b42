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

#include <cstdint>

#include "qfilter/davies.hpp"

namespace qfilter::detail {

/// Per-step accumulators for W^eps = eps N - t/eps.
struct ScaledIncrementStats {
  double epsilon = 1.0;
  double quadratic_variation = 0.0;
  /// max |(dW)^2 - eps dW - dt - (dt^2/eps^2 - 2 dN dt)| relative to the terms.
  double max_identity_error = 0.0;
  /// Largest |dt^2/eps^2 - 2 dN dt| seen.
  double max_dropped = 0.0;

  void add(std::int64_t dn, double h);
};

/// Exact sampler behind sample_counting_trajectory; `scaled`, when set,
/// receives the jump count of every schedule step.
CountingTrajectory sample_counting_exact(const Unraveling& unraveling, const DensityMatrix& rho0,
                                         double horizon, RngStream& rng,
                                         const PathOptions& options, ScaledIncrementStats* scaled);

/// Step integrator behind integrate_counting_sse; exactly one of rng and
/// record is non-null.
CountingTrajectory run_counting_steps(const Unraveling& unraveling, const DensityMatrix& rho0,
                                      double horizon, RngStream* rng, const OutcomeSet* record,
                                      const PathOptions& options, ScaledIncrementStats* scaled);

}  // namespace qfilter::detail
