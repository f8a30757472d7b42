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

// Dense complex small-matrix kernel.
//
// Vectorization convention: column stacking. For an n x n matrix M,
// vec(M)[i + n*j] = M(i, j), which is Eigen's native column-major storage.
// With this convention vec(A M B) = (B^T kron A) vec(M), and every
// superoperator constructor below is written in that form.

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace qfilter {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

CMatrix adjoint(const CMatrix& m);
CMatrix commutator(const CMatrix& a, const CMatrix& b);
CMatrix anticommutator(const CMatrix& a, const CMatrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);

bool is_finite(const CMatrix& m);
bool is_hermitian(const CMatrix& m, double tol);

CVector vec(const CMatrix& m);
CMatrix unvec(const CVector& v, Index dim);

/// Largest singular value.
double operator_norm(const CMatrix& m);

/// Smallest eigenvalue of the Hermitian part (m + m^*)/2.
double min_hermitian_eigenvalue(const CMatrix& m);

/// Positive semidefinite, Hermitian, unit-trace matrix.
///
/// Construction validates the invariants with the tolerances below and throws
/// InvalidState otherwise. Positivity is checked against a small negative
/// floor since integrators commit rounding-level violations.
class DensityMatrix {
 public:
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kPositivityFloor = -1e-8;

  explicit DensityMatrix(CMatrix m);

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix pure(const CVector& psi);
  /// Projector onto basis vector k.
  static DensityMatrix basis(Index dim, Index k);
  /// Hermitian-symmetrize and rescale to unit trace, then validate.
  static DensityMatrix normalized(const CMatrix& m);

  const CMatrix& matrix() const noexcept { return mat_; }
  Index dim() const noexcept { return mat_.rows(); }
  Complex operator()(Index i, Index j) const { return mat_(i, j); }

  /// Tr(rho X).
  Complex expectation(const CMatrix& x) const;
  double purity() const;
  double min_eigenvalue() const;

 private:
  CMatrix mat_;
};

/// Linear map on n x n matrices stored as an n^2 x n^2 matrix acting on
/// column-stacked vectors.
class Superoperator {
 public:
  Superoperator(Index dim, CMatrix action);

  static Superoperator identity(Index dim);
  static Superoperator zero(Index dim);
  /// rho -> a rho: I kron a.
  static Superoperator left(const CMatrix& a);
  /// rho -> rho b: b^T kron I.
  static Superoperator right(const CMatrix& b);
  /// rho -> a rho b: b^T kron a.
  static Superoperator sandwich(const CMatrix& a, const CMatrix& b);
  /// rho -> a rho a^*: conj(a) kron a.
  static Superoperator conjugation(const CMatrix& a);

  Index dim() const noexcept { return dim_; }
  const CMatrix& matrix() const noexcept { return action_; }

  CMatrix apply(const CMatrix& m) const;

  /// Heisenberg-picture dual: Tr(X S(rho)) = Tr(S^dual(X) rho).
  Superoperator dual() const;

  Superoperator operator+(const Superoperator& o) const;
  Superoperator operator-(const Superoperator& o) const;
  Superoperator operator*(Complex s) const;
  /// Composition: (a * b)(M) = a(b(M)).
  Superoperator operator*(const Superoperator& o) const;

 private:
  Index dim_;
  CMatrix action_;
};

CMatrix apply_super(const Superoperator& s, const CMatrix& m);

/// exp(t S) by scaling and squaring with a Pade approximant.
Superoperator expm(const Superoperator& s, double t);

/// exp(t G) for one fixed generator G and many times t.
///
/// When G is diagonalizable with a well-conditioned eigenbasis the flow is
/// evaluated as W diag(exp(t lambda)) W^-1; otherwise every call falls back
/// to expm.
class SemigroupPropagator {
 public:
  static constexpr double kDefaultConditionLimit = 1e6;

  explicit SemigroupPropagator(Superoperator generator,
                               double condition_limit = kDefaultConditionLimit);

  const Superoperator& generator() const noexcept { return gen_; }
  bool diagonalized() const noexcept { return diagonal_; }

  /// exp(t G) v for a column-stacked matrix v.
  CVector apply(double t, const CVector& v) const;
  CMatrix apply(double t, const CMatrix& m) const;
  Superoperator at(double t) const;

  /// Eigen-coordinates, valid only when diagonalized(): exp(tG) = W e^{t Lambda} W^-1.
  const CVector& eigenvalues() const noexcept { return lambda_; }
  const CMatrix& eigenvectors() const noexcept { return w_; }
  const CMatrix& inverse_eigenvectors() const noexcept { return w_inv_; }

 private:
  Superoperator gen_;
  bool diagonal_ = false;
  CVector lambda_;
  CMatrix w_;
  CMatrix w_inv_;
};

/// Unique fixed point of the semigroup generated by l, normalized to unit
/// trace. Throws AmbiguityError when the null space is not one-dimensional.
DensityMatrix steady_state(const Superoperator& l);

}  // namespace qfilter
