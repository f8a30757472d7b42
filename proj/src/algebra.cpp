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

#include "qfilter/algebra.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include <unsupported/Eigen/MatrixFunctions>

#include "qfilter/errors.hpp"

namespace qfilter {

CMatrix adjoint(const CMatrix& m) { return m.adjoint(); }

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

CMatrix anticommutator(const CMatrix& a, const CMatrix& b) { return a * b + b * a; }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

bool is_finite(const CMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    }
  }
  return true;
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

CVector vec(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

CMatrix unvec(const CVector& v, Index dim) {
  if (v.size() != dim * dim) {
    throw DimensionMismatch("unvec: vector of length " + std::to_string(v.size()) +
                            " does not hold a " + std::to_string(dim) + "x" +
                            std::to_string(dim) + " matrix");
  }
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

double operator_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

double min_hermitian_eigenvalue(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(CMatrix m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() == 0) {
    throw InvalidState("density matrix must be square and non-empty");
  }
  if (!is_finite(mat_)) throw InvalidState("density matrix has non-finite entries");
  const Complex tr = mat_.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    std::ostringstream os;
    os.precision(17);
    os << "density matrix trace " << tr.real() << (tr.imag() < 0 ? "" : "+") << tr.imag()
       << "i differs from 1";
    throw InvalidState(os.str());
  }
  if (!is_hermitian(mat_, kHermitianTol)) throw InvalidState("density matrix is not Hermitian");
  const double lmin = min_hermitian_eigenvalue(mat_);
  if (lmin < kPositivityFloor) {
    std::ostringstream os;
    os.precision(17);
    os << "density matrix has negative eigenvalue " << lmin;
    throw InvalidState(os.str());
  }
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
  const double n2 = psi.squaredNorm();
  if (!(n2 > 0.0)) throw InvalidState("pure state from zero vector");
  return DensityMatrix((psi * psi.adjoint()) / n2);
}

DensityMatrix DensityMatrix::basis(Index dim, Index k) {
  if (k < 0 || k >= dim) throw InvalidInput("basis index out of range");
  CMatrix m = CMatrix::Zero(dim, dim);
  m(k, k) = 1.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::normalized(const CMatrix& m) {
  CMatrix h = 0.5 * (m + m.adjoint());
  const double tr = h.trace().real();
  if (!(std::abs(tr) > 0.0) || !std::isfinite(tr)) {
    throw InvalidState("cannot normalize a matrix with zero or non-finite trace");
  }
  h /= tr;
  return DensityMatrix(std::move(h));
}

Complex DensityMatrix::expectation(const CMatrix& x) const {
  if (x.rows() != dim() || x.cols() != dim()) throw DimensionMismatch("expectation: dims differ");
  return (mat_ * x).trace();
}

double DensityMatrix::purity() const { return (mat_ * mat_).trace().real(); }

double DensityMatrix::min_eigenvalue() const { return min_hermitian_eigenvalue(mat_); }

// ---------------------------------------------------------------------------
// Superoperator

Superoperator::Superoperator(Index dim, CMatrix action) : dim_(dim), action_(std::move(action)) {
  if (dim <= 0) throw InvalidInput("superoperator dimension must be positive");
  if (action_.rows() != dim * dim || action_.cols() != dim * dim) {
    throw DimensionMismatch("superoperator action must be n^2 x n^2");
  }
  if (!is_finite(action_)) throw InvalidInput("superoperator has non-finite entries");
}

Superoperator Superoperator::identity(Index dim) {
  return Superoperator(dim, CMatrix::Identity(dim * dim, dim * dim));
}

Superoperator Superoperator::zero(Index dim) {
  return Superoperator(dim, CMatrix::Zero(dim * dim, dim * dim));
}

Superoperator Superoperator::left(const CMatrix& a) {
  const Index n = a.rows();
  return Superoperator(n, kron(CMatrix::Identity(n, n), a));
}

Superoperator Superoperator::right(const CMatrix& b) {
  const Index n = b.rows();
  return Superoperator(n, kron(b.transpose(), CMatrix::Identity(n, n)));
}

Superoperator Superoperator::sandwich(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionMismatch("sandwich: dims differ");
  return Superoperator(a.rows(), kron(b.transpose(), a));
}

Superoperator Superoperator::conjugation(const CMatrix& a) {
  return Superoperator(a.rows(), kron(a.conjugate(), a));
}

CMatrix Superoperator::apply(const CMatrix& m) const {
  if (m.rows() != dim_ || m.cols() != dim_) {
    throw DimensionMismatch("apply: superoperator of dim " + std::to_string(dim_) +
                            " applied to " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + " matrix");
  }
  const CVector out = action_ * vec(m);
  return unvec(out, dim_);
}

Superoperator Superoperator::dual() const {
  // Tr(X S(rho)) = vec(X^T)^T S vec(rho), so vec(dual(X)^T) = S^T vec(X^T).
  // With P the transpose permutation, dual = P S^T P.
  const Index n2 = dim_ * dim_;
  CMatrix out(n2, n2);
  for (Index a = 0; a < n2; ++a) {
    const Index pa = (a % dim_) * dim_ + a / dim_;
    for (Index b = 0; b < n2; ++b) {
      const Index pb = (b % dim_) * dim_ + b / dim_;
      out(a, b) = action_(pb, pa);
    }
  }
  return Superoperator(dim_, std::move(out));
}

Superoperator Superoperator::operator+(const Superoperator& o) const {
  if (o.dim_ != dim_) throw DimensionMismatch("superoperator sum: dims differ");
  return Superoperator(dim_, action_ + o.action_);
}

Superoperator Superoperator::operator-(const Superoperator& o) const {
  if (o.dim_ != dim_) throw DimensionMismatch("superoperator difference: dims differ");
  return Superoperator(dim_, action_ - o.action_);
}

Superoperator Superoperator::operator*(Complex s) const { return Superoperator(dim_, action_ * s); }

Superoperator Superoperator::operator*(const Superoperator& o) const {
  if (o.dim_ != dim_) throw DimensionMismatch("superoperator composition: dims differ");
  return Superoperator(dim_, action_ * o.action_);
}

CMatrix apply_super(const Superoperator& s, const CMatrix& m) { return s.apply(m); }

Superoperator expm(const Superoperator& s, double t) {
  if (!std::isfinite(t)) throw InvalidInput("expm: non-finite time");
  if (t == 0.0) return Superoperator::identity(s.dim());
  const CMatrix scaled = s.matrix() * t;
  CMatrix out = scaled.exp();
  if (!is_finite(out)) throw InvalidInput("expm: result overflowed");
  return Superoperator(s.dim(), std::move(out));
}

SemigroupPropagator::SemigroupPropagator(Superoperator generator, double condition_limit)
    : gen_(std::move(generator)) {
  Eigen::ComplexEigenSolver<CMatrix> es(gen_.matrix());
  if (es.info() != Eigen::Success) return;
  const CMatrix& w = es.eigenvectors();
  Eigen::JacobiSVD<CMatrix> svd(w);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || sv(0) / smin > condition_limit) return;
  lambda_ = es.eigenvalues();
  w_ = w;
  w_inv_ = w.inverse();
  diagonal_ = is_finite(w_inv_);
}

CVector SemigroupPropagator::apply(double t, const CVector& v) const {
  if (!diagonal_) return expm(gen_, t).matrix() * v;
  CVector y = w_inv_ * v;
  for (Index k = 0; k < y.size(); ++k) y(k) *= std::exp(lambda_(k) * t);
  return w_ * y;
}

CMatrix SemigroupPropagator::apply(double t, const CMatrix& m) const {
  return unvec(apply(t, vec(m)), gen_.dim());
}

Superoperator SemigroupPropagator::at(double t) const {
  if (!diagonal_) return expm(gen_, t);
  CVector e(lambda_.size());
  for (Index k = 0; k < e.size(); ++k) e(k) = std::exp(lambda_(k) * t);
  return Superoperator(gen_.dim(), w_ * e.asDiagonal() * w_inv_);
}

DensityMatrix steady_state(const Superoperator& l) {
  const Index n = l.dim();
  const CMatrix& a = l.matrix();
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double scale = std::max(1.0, sv(0));
  const double tol = 1e-10 * scale;
  Index nullity = 0;
  for (Index k = 0; k < sv.size(); ++k) {
    if (sv(k) <= tol) ++nullity;
  }
  if (nullity != 1) {
    throw AmbiguityError("steady_state: null space has dimension " + std::to_string(nullity));
  }
  const CVector kernel = svd.matrixV().col(sv.size() - 1);
  CMatrix rho = unvec(kernel, n);
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-14) {
    throw AmbiguityError("steady_state: null vector is traceless");
  }
  rho /= tr;
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(std::move(rho));
}

}  // namespace qfilter
