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

#include <random>

#include <gtest/gtest.h>

#include "qfilter/algebra.hpp"
#include "qfilter/errors.hpp"
#include "qfilter/lindblad.hpp"
#include "support/oracles.hpp"

namespace qfilter {
namespace {

using testing::matrix_of;

Superoperator random_generator(std::mt19937_64& gen, Index n, double max_norm) {
  CMatrix a = testing::random_matrix(gen, n * n);
  const double norm = operator_norm(a);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  a *= max_norm * u(gen) / norm;
  return Superoperator(n, a);
}

TEST(Expm, ZeroTimeIsIdentity) {
  std::mt19937_64 gen(1);
  const auto s = random_generator(gen, 2, 5.0);
  EXPECT_LE((expm(s, 0.0).matrix() - CMatrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(Expm, NilpotentSeriesTruncates) {
  CMatrix n = CMatrix::Zero(4, 4);
  n(0, 2) = 1.5;
  n(1, 3) = Complex(0.0, -2.0);
  const Superoperator s(2, n);
  const double t = 0.7;
  EXPECT_LE((expm(s, t).matrix() - (CMatrix::Identity(4, 4) + t * n)).norm(), 1e-14);
}

TEST(Expm, MatchesTaylorOracle) {
  std::mt19937_64 gen(2);
  for (int k = 0; k < 10; ++k) {
    const auto s = random_generator(gen, 2, 10.0);
    const double t = 0.37 * (k + 1) / 10.0;
    const CMatrix ref = testing::expm_taylor(t * s.matrix());
    EXPECT_LE(operator_norm(expm(s, t).matrix() - ref), 1e-10 * std::max(1.0, operator_norm(ref)));
  }
}

TEST(Expm, SemigroupPropertyOnRandomGenerators) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const auto s = random_generator(gen, 2, 10.0);
    const double a = u(gen), b = u(gen);
    const CMatrix lhs = expm(s, a + b).matrix();
    const CMatrix rhs = (expm(s, a) * expm(s, b)).matrix();
    EXPECT_LE(operator_norm(lhs - rhs), 1e-9 * std::max(1.0, operator_norm(lhs)));
  }
}

TEST(Expm, RejectsNonFinite) {
  CMatrix m = CMatrix::Zero(4, 4);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(expm(Superoperator(2, m), 1.0), InvalidInput);
}

TEST(Expm, PreservesTraceForLindbladGenerator) {
  std::mt19937_64 gen(4);
  TwoLevelParams p;
  p.rabi = 1.3;
  p.omega0 = 0.4;
  const auto l = build_liouvillian(resonance_fluorescence(p));
  for (double t : {0.1, 1.0, 7.5}) {
    const CMatrix rho = testing::random_density(gen, 2);
    EXPECT_NEAR(expm(l, t).apply(rho).trace().real(), 1.0, 1e-12);
  }
}

TEST(SemigroupPropagator, AgreesWithExpm) {
  TwoLevelParams p;
  p.rabi = 2.0;
  const auto l = build_liouvillian(resonance_fluorescence(p));
  const SemigroupPropagator prop(l);
  EXPECT_TRUE(prop.diagonalized());
  for (double t : {0.0, 0.01, 0.5, 3.0}) {
    EXPECT_LE((prop.at(t).matrix() - expm(l, t).matrix()).norm(), 1e-11);
  }
}

TEST(SemigroupPropagator, FallsBackOnDefectiveGenerator) {
  CMatrix j = CMatrix::Zero(4, 4);
  j(0, 1) = 1.0;  // Jordan block
  const Superoperator s(2, j);
  const SemigroupPropagator prop(s);
  EXPECT_FALSE(prop.diagonalized());
  EXPECT_LE((prop.at(2.0).matrix() - expm(s, 2.0).matrix()).norm(), 1e-13);
}

TEST(Superoperator, ApplyIdentityAndLinearity) {
  std::mt19937_64 gen(5);
  const CMatrix a = testing::random_matrix(gen, 3);
  const CMatrix b = testing::random_matrix(gen, 3);
  EXPECT_LE((apply_super(Superoperator::identity(3), a) - a).norm(), 0.0);
  const Superoperator s(3, testing::random_matrix(gen, 9));
  EXPECT_LE((s.apply(a + b) - s.apply(a) - s.apply(b)).norm(), 1e-13);
  EXPECT_LE((unvec(vec(a), 3) - a).norm(), 0.0);
  EXPECT_THROW(s.apply(CMatrix::Zero(2, 2)), DimensionMismatch);
}

TEST(Superoperator, CompositionAndSandwichMatchDirectProducts) {
  std::mt19937_64 gen(6);
  const CMatrix a = testing::random_matrix(gen, 2);
  const CMatrix b = testing::random_matrix(gen, 2);
  const CMatrix m = testing::random_matrix(gen, 2);
  EXPECT_LE((Superoperator::sandwich(a, b).apply(m) - a * m * b).norm(), 1e-14);
  EXPECT_LE((Superoperator::conjugation(a).apply(m) - a * m * a.adjoint()).norm(), 1e-14);
  const auto s1 = Superoperator::left(a);
  const auto s2 = Superoperator::right(b);
  EXPECT_LE(((s1 * s2).apply(m) - s1.apply(s2.apply(m))).norm(), 1e-14);
}

TEST(Superoperator, DualSatisfiesTraceDuality) {
  std::mt19937_64 gen(7);
  const Superoperator s(2, testing::random_matrix(gen, 4));
  const CMatrix x = testing::random_matrix(gen, 2);
  const CMatrix rho = testing::random_matrix(gen, 2);
  EXPECT_LE(std::abs((x * s.apply(rho)).trace() - (s.dual().apply(x) * rho).trace()), 1e-13);
}

TEST(Superoperator, LindbladGeneratorMatchesDirectFormula) {
  std::mt19937_64 gen(8);
  const CMatrix h = testing::random_hermitian(gen, 3);
  const std::vector<CMatrix> ops{testing::random_matrix(gen, 3), testing::random_matrix(gen, 3)};
  const auto l = lindblad_generator(h, ops);
  const CMatrix ref = matrix_of([&](const CMatrix& r) { return testing::lindblad_rhs(h, ops, r); }, 3);
  EXPECT_LE((l.matrix() - ref).norm(), 1e-12);
}

TEST(Superoperator, LindbladFormIsTraceless) {
  std::mt19937_64 gen(9);
  TwoLevelParams p;
  p.rabi = 0.8;
  p.omega0 = 1.1;
  const auto l = build_liouvillian(resonance_fluorescence(p));
  for (int k = 0; k < 100; ++k) {
    const CMatrix m = testing::random_hermitian(gen, 2, 3.0);
    EXPECT_LE(std::abs(l.apply(m).trace()), 1e-10);
  }
}

TEST(DensityMatrix, ValidatesInvariants) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.5;
  EXPECT_THROW(DensityMatrix{m}, InvalidState);
  m(1, 1) = 0.5;
  m(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix{m}, InvalidState);
  m(1, 0) = 0.1;
  EXPECT_NO_THROW(DensityMatrix{m});
  CMatrix neg = CMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(DensityMatrix{neg}, InvalidState);
  EXPECT_NEAR(DensityMatrix::basis(2, 1).purity(), 1.0, 1e-15);
}

TEST(DensityMatrix, AdjointIsInvolution) {
  std::mt19937_64 gen(10);
  const CMatrix m = testing::random_matrix(gen, 4);
  EXPECT_EQ(adjoint(adjoint(m)), m);
}

TEST(SteadyState, SpontaneousDecayRelaxesToGround) {
  TwoLevelParams p;
  p.omega0 = 0.7;
  const auto l = build_liouvillian(spontaneous_decay(p));
  const auto ss = steady_state(l);
  EXPECT_NEAR(ss(1, 1).real(), 1.0, 1e-12);
  EXPECT_LE(l.apply(ss.matrix()).norm(), 1e-10);
}

TEST(SteadyState, TrivialDimensionOne) {
  const auto ss = steady_state(Superoperator::zero(1));
  EXPECT_NEAR(ss(0, 0).real(), 1.0, 1e-15);
}

TEST(SteadyState, DegenerateNullSpaceIsAmbiguous) {
  EXPECT_THROW(steady_state(Superoperator::zero(2)), AmbiguityError);
}

TEST(SteadyState, ResonanceFluorescenceMatchesLongTimeFlowAndClosedForm) {
  TwoLevelParams p;
  p.rabi = 1.0;
  const auto l = build_liouvillian(resonance_fluorescence(p));
  const auto ss = steady_state(l);
  std::mt19937_64 gen(11);
  const CMatrix rho0 = testing::random_density(gen, 2);
  const CMatrix late = testing::expm_taylor(50.0 * l.matrix()) *
                       Eigen::Map<const Eigen::VectorXcd>(rho0.data(), 4);
  EXPECT_LE((unvec(late, 2) - ss.matrix()).norm(), 1e-8);
  EXPECT_NEAR(ss(0, 0).real(), testing::rf_steady_excited(1.0, 1.0), 1e-10);
  for (double t : {1.0, 10.0}) {
    EXPECT_LE((expm(l, t).apply(ss.matrix()) - ss.matrix()).norm(), 1e-8);
  }
}

}  // namespace
}  // namespace qfilter
