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

#include "qfilter/davies.hpp"
#include "qfilter/errors.hpp"
#include "qfilter/stats.hpp"
#include "support/oracles.hpp"

namespace qfilter {
namespace {

TwoLevelParams side_only() {
  TwoLevelParams p;
  p.kappa_f = 0.0;
  p.kappa_s = 1.0;
  return p;
}

Unraveling driven_unraveling() {
  TwoLevelParams p;
  p.rabi = 1.0;
  return Unraveling(resonance_fluorescence(p), SideCounting{});
}

TEST(OutcomeSet, ValidatesTimes) {
  EXPECT_NO_THROW(OutcomeSet(1.0, {0.1, 0.5}));
  EXPECT_THROW(OutcomeSet(1.0, {0.5, 0.1}), InvalidInput);
  EXPECT_THROW(OutcomeSet(1.0, {0.5, 0.5}), InvalidInput);
  EXPECT_THROW(OutcomeSet(1.0, {1.0}), InvalidInput);
  EXPECT_THROW(OutcomeSet(-1.0, {}), InvalidInput);
}

TEST(DaviesWeight, EmptyRecordIsSmoothSurvival) {
  const Unraveling u(spontaneous_decay(side_only()), SideCounting{});
  const auto w = davies_weight(u.at(0.0), OutcomeSet(1.5, {}), DensityMatrix::basis(2, 0));
  EXPECT_NEAR(w.density, std::exp(-1.5), 1e-12);
}

TEST(DaviesWeight, SingleJumpMatchesDirectProduct) {
  const auto u = driven_unraveling();
  const auto split = u.at(0.0);
  const auto rho0 = DensityMatrix::basis(2, 1);
  const auto w = davies_weight(split, OutcomeSet(2.0, {0.7}), rho0);
  const CMatrix s = split.smooth.matrix();
  const CMatrix ref = testing::expm_taylor(1.3 * s) * split.jump.matrix() *
                      testing::expm_taylor(0.7 * s) * vec(rho0.matrix());
  EXPECT_LE((vec(w.unnormalized) - ref).norm(), 1e-12);
  EXPECT_NEAR(w.density, unvec(ref, 2).trace().real(), 1e-12);
}

TEST(Guichardet, GaussLegendreIntegratesPolynomials) {
  const auto gl = gauss_legendre(8);
  double s = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 14);
  EXPECT_NEAR(s, 2.0 / 15.0, 1e-14);
}

TEST(Guichardet, MassIsNormalized) {
  const auto u = driven_unraveling();
  GuichardetOptions opt;
  opt.order = 8;
  const auto m = guichardet_mass(u.at(0.0), DensityMatrix::basis(2, 1), 1.0, opt);
  EXPECT_NEAR(m.total, 1.0, 1e-6);
  const Unraveling d(spontaneous_decay(side_only()), SideCounting{});
  opt.max_sector = 2;
  const auto md = guichardet_mass(d.at(0.0), DensityMatrix::basis(2, 0), 2.0, opt);
  EXPECT_NEAR(md.sector[0], std::exp(-2.0), 1e-12);
  EXPECT_NEAR(md.sector[1], 1.0 - std::exp(-2.0), 1e-10);
  EXPECT_NEAR(md.sector[2], 0.0, 1e-14);
}

TEST(CountingFilter, ReplayMatchesNormalizedDaviesWeight) {
  const auto u = driven_unraveling();
  const auto rho0 = DensityMatrix::basis(2, 1);
  const std::vector<std::vector<double>> records{{}, {0.8}, {0.4, 1.3}};
  for (const auto& times : records) {
    const OutcomeSet omega(2.0, times);
    const auto path = integrate_counting_sse(u, rho0, 2.0, omega);
    const auto w = davies_weight(u.at(0.0), omega, rho0);
    EXPECT_LE((path.states.back().matrix() - w.unnormalized / w.density).norm(), 1e-9);
    EXPECT_EQ(path.counts.back(), static_cast<std::int64_t>(times.size()));
  }
}

TEST(CountingFilter, ImpossibleRecordIsReported) {
  const Unraveling u(spontaneous_decay(side_only()), SideCounting{});
  const auto rho0 = DensityMatrix::basis(2, 0);
  EXPECT_THROW(integrate_counting_sse(u, rho0, 2.0, OutcomeSet(2.0, {0.5, 1.0})), ImpossibleOutcome);
  EXPECT_THROW(integrate_counting_sse(u, rho0, 2.0, OutcomeSet(2.0, {0.0})), ImpossibleOutcome);
}

TEST(CountingFilter, IncrementsAreBinaryAndRunsReproducible) {
  const auto u = driven_unraveling();
  const auto rho0 = DensityMatrix::basis(2, 1);
  RngStream a(9, 0), b(9, 0);
  const auto pa = integrate_counting_sse(u, rho0, 5.0, a);
  const auto pb = integrate_counting_sse(u, rho0, 5.0, b);
  EXPECT_TRUE(counting_increments_are_binary(pa.counts));
  EXPECT_LE(pa.max_step_increment, 1);
  EXPECT_GE(pa.min_step_increment, 0);
  EXPECT_EQ(pa.jumps.times(), pb.jumps.times());
  ASSERT_EQ(pa.states.size(), pb.states.size());
  for (std::size_t k = 0; k < pa.states.size(); ++k) {
    EXPECT_EQ(pa.states[k].matrix(), pb.states[k].matrix());
  }
  for (const auto& s : pa.states) EXPECT_NEAR(s.matrix().trace().real(), 1.0, 1e-12);
}

TEST(CountingFilter, PureStatesStayPureWhenEveryChannelIsCounted) {
  CMatrix h = 0.6 * testing::sx();
  const LindbladModel m(h, {{"s", testing::lowering()}});
  const Unraveling u(m, SideCounting{});
  const CVector psi = (CVector(2) << Complex(0.6, 0.0), Complex(0.0, 0.8)).finished();
  const auto rho0 = DensityMatrix::pure(psi);
  RngStream r(3, 0);
  const auto step = integrate_counting_sse(u, rho0, 4.0, r);
  for (const auto& s : step.states) EXPECT_NEAR(s.purity(), 1.0, 1e-9);
  RngStream r2(3, 1);
  const auto exact = sample_counting_trajectory(u, rho0, 4.0, r2);
  for (const auto& s : exact.states) EXPECT_NEAR(s.purity(), 1.0, 1e-9);
}

TEST(CountingFilter, ExactSamplerFirstJumpMean) {
  const Unraveling u(spontaneous_decay(side_only()), SideCounting{});
  const auto rho0 = DensityMatrix::basis(2, 0);
  PathOptions opt;
  opt.dt = 0.05;
  opt.record_times = {0.0, 30.0};
  const int n = 4000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream r(17, static_cast<std::uint64_t>(i));
    const auto p = sample_counting_trajectory(u, rho0, 30.0, r, opt);
    ASSERT_EQ(p.jumps.size(), 1u);
    sum += p.jumps.times().front();
  }
  EXPECT_NEAR(sum / n, 1.0, 5.0 / std::sqrt(n));
}

TEST(CountingFilter, GroundStartWithoutDriveNeverJumps) {
  const Unraveling u(spontaneous_decay(side_only()), SideCounting{});
  RngStream r(1, 0);
  const auto p = integrate_counting_sse(u, DensityMatrix::basis(2, 1), 3.0, r);
  EXPECT_TRUE(p.jumps.empty());
  for (double m : p.martingale) EXPECT_EQ(m, 0.0);
}

TEST(StepSchedule, MergesExtraPoints) {
  const auto s = step_schedule(1.0, 0.25, {0.5, 0.6, 1.0});
  EXPECT_EQ(s, (std::vector<double>{0.0, 0.25, 0.5, 0.6, 0.75, 1.0}));
  const auto t = step_schedule(0.3, 0.25, {});
  EXPECT_EQ(t, (std::vector<double>{0.0, 0.25, 0.3}));
  EXPECT_THROW(step_schedule(1.0, 0.1, {1.5}), InvalidInput);
  EXPECT_THROW(step_schedule(1.0, 0.0, {}), InvalidInput);
}

}  // namespace
}  // namespace qfilter
