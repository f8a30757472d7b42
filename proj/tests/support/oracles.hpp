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

// Reference computations used by tests. They share no code path with the
// library beyond the matrix types.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qfilter/algebra.hpp"
#include "qfilter/belavkin.hpp"

namespace qfilter::testing {

inline const Complex kI{0.0, 1.0};

inline CMatrix lowering() {
  CMatrix v = CMatrix::Zero(2, 2);
  v(1, 0) = 1.0;
  return v;
}

inline CMatrix sz() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = -1.0;
  return s;
}

inline CMatrix sx() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(0, 1) = 1.0;
  s(1, 0) = 1.0;
  return s;
}

inline CMatrix sy() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(0, 1) = Complex(0.0, -1.0);
  s(1, 0) = Complex(0.0, 1.0);
  return s;
}

/// -i[H, rho] + sum V rho V^* - 1/2 {V^*V, rho}, by direct matrix products.
inline CMatrix lindblad_rhs(const CMatrix& h, const std::vector<CMatrix>& ops, const CMatrix& rho) {
  CMatrix out = -kI * (h * rho - rho * h);
  for (const auto& v : ops) {
    const CMatrix vv = v.adjoint() * v;
    out += v * rho * v.adjoint() - 0.5 * (vv * rho + rho * vv);
  }
  return out;
}

/// Heisenberg form i[H, X] + sum V^* X V - 1/2 {V^*V, X}.
inline CMatrix lindblad_heisenberg_rhs(const CMatrix& h, const std::vector<CMatrix>& ops,
                                       const CMatrix& x) {
  CMatrix out = kI * (h * x - x * h);
  for (const auto& v : ops) {
    const CMatrix vv = v.adjoint() * v;
    out += v.adjoint() * x * v - 0.5 * (vv * x + x * vv);
  }
  return out;
}

/// The driven two-level Liouvillian as printed:
/// -i[H, rho] + i(Omega/2)[e^{-iwt}V + e^{iwt}V^*, rho] + gamma(V rho V^* - 1/2{V^*V, rho}).
inline CMatrix rf_rhs(double omega0, double rabi, double w, double gamma, double t,
                      const CMatrix& rho) {
  const CMatrix v = lowering();
  const CMatrix h = 0.5 * omega0 * sz();
  const CMatrix drive = std::exp(-kI * w * t) * v + std::exp(kI * w * t) * v.adjoint();
  const CMatrix vv = v.adjoint() * v;
  return -kI * (h * rho - rho * h) + kI * (rabi / 2.0) * (drive * rho - rho * drive) +
         gamma * (v * rho * v.adjoint() - 0.5 * (vv * rho + rho * vv));
}

/// Matrix of a linear map on n x n matrices in column-stacking order, built
/// by applying it to matrix units.
inline CMatrix matrix_of(const std::function<CMatrix(const CMatrix&)>& f, Index n) {
  CMatrix out(n * n, n * n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      CMatrix e = CMatrix::Zero(n, n);
      e(i, j) = 1.0;
      const CMatrix img = f(e);
      out.col(j * n + i) = Eigen::Map<const Eigen::VectorXcd>(img.data(), n * n);
    }
  }
  return out;
}

/// exp(A) by Taylor series with scaling and squaring.
inline CMatrix expm_taylor(const CMatrix& a) {
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm > 0.25) {
    norm /= 2.0;
    ++squarings;
  }
  const CMatrix b = a / std::pow(2.0, squarings);
  CMatrix term = CMatrix::Identity(a.rows(), a.cols());
  CMatrix sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Classical RK4 on rho' = f(t, rho).
inline CMatrix rk4(const std::function<CMatrix(double, const CMatrix&)>& f, CMatrix rho, double t0,
                   double t1, int steps) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  for (int k = 0; k < steps; ++k) {
    const CMatrix k1 = f(t, rho);
    const CMatrix k2 = f(t + h / 2, rho + h / 2 * k1);
    const CMatrix k3 = f(t + h / 2, rho + h / 2 * k2);
    const CMatrix k4 = f(t + h, rho + h * k3);
    rho += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return rho;
}

/// Steady excited population of the resonantly driven atom,
/// (Omega^2/4) / (gamma^2/4 + Omega^2/2).
inline double rf_steady_excited(double rabi, double gamma) {
  return (rabi * rabi / 4.0) / (gamma * gamma / 4.0 + rabi * rabi / 2.0);
}

inline CMatrix random_matrix(std::mt19937_64& gen, Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  CMatrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = Complex(nd(gen), nd(gen));
  }
  return m;
}

inline CMatrix random_hermitian(std::mt19937_64& gen, Index n, double scale = 1.0) {
  const CMatrix m = random_matrix(gen, n, scale);
  return 0.5 * (m + m.adjoint());
}

inline CMatrix random_density(std::mt19937_64& gen, Index n) {
  const CMatrix g = random_matrix(gen, n);
  CMatrix r = g * g.adjoint();
  return r / r.trace().real();
}

/// Counting gain tested against X: Tr(V rho V^* X)/Tr(V rho V^*) - Tr(rho X).
inline Complex counting_gain_value(const CMatrix& rho, const CMatrix& v, const CMatrix& x) {
  const CMatrix j = v * rho * v.adjoint();
  return (j * x).trace() / j.trace() - (rho * x).trace();
}

/// Quadrature gain tested against X with e^{i phi} = w:
/// w Tr(rho V^* X) + conj(w) Tr(rho X V) - (w Tr(rho V^*) + conj(w) Tr(rho V)) Tr(rho X).
inline Complex quadrature_gain_value(const CMatrix& rho, const CMatrix& v, const CMatrix& x,
                                     Complex w) {
  const Complex a = w * (rho * v.adjoint() * x).trace() + std::conj(w) * (rho * x * v).trace();
  const Complex m = w * (rho * v.adjoint()).trace() + std::conj(w) * (rho * v).trace();
  return a - m * (rho * x).trace();
}

// ---------------------------------------------------------------------------
// Closed-form symbolic targets, assembled from the constructors only.

/// E[V_s^* X V_s] inv(E[V_s^* V_s]) - E[X]
inline ito::Expr expected_counting_gain() {
  using namespace ito;
  const Expr v = sys("V_s");
  const Expr x = sys("X", true);
  return cond_exp(v.dagger() * x * v) * inverse(cond_exp(v.dagger() * v)) - cond_exp(x);
}

/// E[e^{i phi} V_s^* X + e^{-i phi} X V_s] - E[e^{i phi} V_s^* + e^{-i phi} V_s] E[X]
inline ito::Expr expected_quadrature_gain() {
  using namespace ito;
  const Expr v = sys("V_s");
  const Expr x = sys("X", true);
  const Expr w = phase("phi");
  return cond_exp(w * v.dagger() * x + w.dagger() * x * v) -
         cond_exp(w * v.dagger() + w.dagger() * v) * cond_exp(x);
}

/// dLambda_ss - E[V_s^* V_s] dt
inline ito::Expr expected_counting_innovation() {
  using namespace ito;
  const Expr v = sys("V_s");
  return Expr::increment(Increment::lambda("s", "s")) -
         cond_exp(v.dagger() * v) * Expr::increment(Increment::dt());
}

/// e^{i phi} dA^*_s + e^{-i phi} dA_s - E[e^{i phi} V_s^* + e^{-i phi} V_s] dt
inline ito::Expr expected_quadrature_innovation() {
  using namespace ito;
  const Expr v = sys("V_s");
  const Expr w = phase("phi");
  return w * Expr::increment(Increment::adag("s")) + w.dagger() * Expr::increment(Increment::a("s")) -
         cond_exp(w * v.dagger() + w.dagger() * v) * Expr::increment(Increment::dt());
}

}  // namespace qfilter::testing
