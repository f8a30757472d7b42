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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "qfilter/errors.hpp"
#include "qfilter/homodyne.hpp"
#include "qfilter/stats.hpp"
#include "support/oracles.hpp"

namespace qfilter {
namespace {

LindbladModel fluorescence() {
  TwoLevelParams p;
  p.rabi = 1.0;
  return resonance_fluorescence(p);
}

TEST(HomodyneGain, MatchesQuadratureOracle) {
  std::mt19937_64 gen(31);
  for (int k = 0; k < 20; ++k) {
    const CMatrix rho = testing::random_density(gen, 2);
    const CMatrix vs = testing::random_matrix(gen, 2);
    const CMatrix x = testing::random_hermitian(gen, 2);
    const Complex w = std::polar(1.0, 0.4 * k);
    const CMatrix g = homodyne_gain(rho, vs, w);
    EXPECT_LE(std::abs((g * x).trace() - testing::quadrature_gain_value(rho, vs, x, w)), 1e-12);
    EXPECT_LE(std::abs(g.trace()), 1e-13);
    EXPECT_LE((g - g.adjoint()).norm(), 1e-13);
  }
}

TEST(ScaledGain, ConvergesLinearlyInEpsilon) {
  std::mt19937_64 gen(32);
  const CMatrix rho = testing::random_density(gen, 2);
  const CMatrix vs = 0.7 * testing::lowering();
  const Complex w = std::polar(1.0, 0.3);
  const CMatrix limit = homodyne_gain(rho, vs, w);
  std::vector<double> err;
  for (double eps : {1e-1, 1e-2, 1e-3}) err.push_back((scaled_gain(rho, vs, w, eps) - limit).norm());
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    const double ratio = err[k] / err[k + 1];
    EXPECT_GE(ratio, 8.0);
    EXPECT_LE(ratio, 12.0);
  }
  EXPECT_THROW(scaled_gain(rho, vs, w, 0.0), InvalidInput);
}

TEST(ScaledCounting, StepSizeGuard) {
  HomodyneSpec spec;
  spec.epsilon = 0.01;
  PathOptions opt;
  opt.dt = 1e-3;
  RngStream r(1, 0);
  EXPECT_GT(scaled_step_load(fluorescence(), spec, opt.dt), 0.5);
  EXPECT_THROW(integrate_scaled_counting_sse(fluorescence(), spec, DensityMatrix::basis(2, 1), 1.0,
                                             r, opt),
               StepSizeError);
}

TEST(ScaledCounting, ItoIdentityHoldsPerStep) {
  HomodyneSpec spec;
  spec.epsilon = 0.2;
  PathOptions opt;
  opt.dt = limit_step(0.2, LimitOptions{});
  RngStream r(2, 0);
  const auto p =
      integrate_scaled_counting_sse(fluorescence(), spec, DensityMatrix::basis(2, 1), 2.0, r, opt);
  EXPECT_LE(p.max_identity_error, 1e-12);
  EXPECT_GE(p.min_step_increment, 0);
  // Every jump time is recorded, so recorded increments stay binary.
  EXPECT_TRUE(counting_increments_are_binary(p.counts));
  for (std::size_t k = 0; k < p.grid.size(); ++k) {
    EXPECT_NEAR(p.observation[k],
                spec.epsilon * static_cast<double>(p.counts[k]) - p.grid[k] / spec.epsilon, 1e-9);
  }
}

TEST(Homodyne, ReplayRequiresMatchingStream) {
  HomodyneSpec spec;
  PathOptions opt;
  opt.dt = 0.1;
  const auto rho0 = DensityMatrix::basis(2, 1);
  EXPECT_THROW(integrate_homodyne_sse(fluorescence(), spec, rho0, 1.0, std::vector<double>(5, 0.0), opt),
               GridMismatch);
  std::vector<double> inc(10, 0.0);
  inc[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(integrate_homodyne_sse(fluorescence(), spec, rho0, 1.0, inc, opt), InvalidInput);
}

TEST(Homodyne, ReplayIsDeterministicAndMatchesSampledPath) {
  HomodyneSpec spec;
  spec.phi0 = 0.4;
  PathOptions opt;
  opt.dt = 1e-2;
  const auto rho0 = DensityMatrix::basis(2, 1);
  RngStream r(5, 0);
  const auto sampled = integrate_homodyne_sse(fluorescence(), spec, rho0, 1.0, r, opt);
  std::vector<double> inc;
  for (std::size_t k = 0; k + 1 < sampled.observation.size(); ++k) {
    inc.push_back(sampled.observation[k + 1] - sampled.observation[k]);
  }
  const auto replay = integrate_homodyne_sse(fluorescence(), spec, rho0, 1.0, inc, opt);
  EXPECT_LE((replay.states.back().matrix() - sampled.states.back().matrix()).norm(), 1e-10);
}

TEST(Homodyne, UnobservedChannelReproducesMaster) {
  TwoLevelParams p;
  p.rabi = 1.0;
  p.kappa_f = 1.0;
  p.kappa_s = 0.0;
  const auto model = resonance_fluorescence(p);
  HomodyneSpec spec;
  PathOptions opt;
  opt.record_times = {0.0, 0.5, 2.0};
  RngStream r(6, 0);
  const auto rho0 = DensityMatrix::basis(2, 1);
  const auto path = integrate_homodyne_sse(model, spec, rho0, 2.0, r, opt);
  const auto master = master_trajectory(model, rho0, {0.0, 0.5, 2.0});
  ASSERT_EQ(path.states.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_LE((path.states[k].matrix() - master[k].matrix()).norm(), 1e-10);
    EXPECT_NEAR(path.martingale[k], path.observation[k], 1e-12);
  }
}

TEST(Homodyne, QuadraticVariationMatchesHorizon) {
  HomodyneSpec spec;
  PathOptions opt;
  opt.dt = 1e-3;
  opt.record_times = {2.0};
  std::vector<DiffusiveTrajectory> paths;
  for (std::uint64_t i = 0; i < 64; ++i) {
    RngStream r(7, i);
    paths.push_back(integrate_homodyne_sse(fluorescence(), spec, DensityMatrix::basis(2, 1), 2.0, r, opt));
  }
  const auto q = quadratic_variation_test(paths, 2.0, 1e-3);
  EXPECT_TRUE(q.pass);
  EXPECT_EQ(q.failures, 0u);
  EXPECT_NEAR(q.bound, 4.0 * std::sqrt(2.0 * 2.0 * 1e-3), 1e-15);
}

TEST(Homodyne, StatesStayPhysical) {
  HomodyneSpec spec;
  PathOptions opt;
  RngStream r(8, 0);
  const auto p = integrate_homodyne_sse(fluorescence(), spec, DensityMatrix::basis(2, 1), 5.0, r, opt);
  for (const auto& s : p.states) {
    EXPECT_NEAR(s.matrix().trace().real(), 1.0, 1e-12);
    EXPECT_LE(s.purity(), 1.0 + 1e-12);
  }
}

TEST(DiffusiveLimit, BudgetIsCheckedBeforeRunning) {
  LimitOptions opt;
  opt.eps_schedule = {0.1, 0.01};
  opt.n_traj = 1000;
  opt.step_budget = 1000;
  EXPECT_THROW(diffusive_limit_report(fluorescence(), HomodyneSpec{}, DensityMatrix::basis(2, 1), opt),
               BudgetError);
  opt.eps_schedule = {0.1, 0.2};
  EXPECT_THROW(diffusive_limit_report(fluorescence(), HomodyneSpec{}, DensityMatrix::basis(2, 1), opt),
               InvalidInput);
}

TEST(DiffusiveLimit, StepRule) {
  LimitOptions opt;
  EXPECT_DOUBLE_EQ(limit_step(1.0, opt), 1e-3);
  EXPECT_DOUBLE_EQ(limit_step(0.0625, opt), 0.1 * 0.0625 * 0.0625);
}

}  // namespace
}  // namespace qfilter
