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

// Propagator cache shared by the trajectory integrators.

#include <cmath>
#include <optional>

#include "qfilter/algebra.hpp"
#include "qfilter/lindblad.hpp"

namespace qfilter::detail {

/// Supplies exp(h L_smooth) over [t, t + h], the jump operator at t, and the
/// Heisenberg drift L^dual(X). Everything is computed once when the
/// unraveling is time independent; otherwise the smooth flow over a step uses
/// the generator at the step midpoint.
class StepPropagator {
 public:
  StepPropagator(const Unraveling& unraveling, double dt, const std::optional<CMatrix>& observable)
      : u_(unraveling), dt_(dt), observable_(observable) {
    if (!u_.is_time_dependent()) {
      const UnravelingSplit s = u_.at(0.0);
      semigroup_.emplace(s.smooth);
      step_ = semigroup_->at(dt).matrix();
      jump_ = s.jump_operator;
      if (observable_) drift_ = heisenberg_generator(u_.model(), 0.0).apply(*observable_);
    }
  }

  bool time_dependent() const noexcept { return u_.is_time_dependent(); }

  const CMatrix& smooth(double t, double h) {
    if (semigroup_) {
      if (std::abs(h - dt_) <= 1e-12 * dt_) return step_;
      scratch_ = semigroup_->at(h).matrix();
      return scratch_;
    }
    const UnravelingSplit s = u_.at(t + 0.5 * h);
    scratch_ = expm(s.smooth, h).matrix();
    return scratch_;
  }

  /// Operator A with J(rho) = A rho A^* at time t.
  const CMatrix& jump_operator(double t) {
    if (semigroup_) return jump_;
    scratch_jump_ = u_.at(t).jump_operator;
    return scratch_jump_;
  }

  /// L^dual(X) at time t; requires an observable.
  const CMatrix& drift(double t) {
    if (semigroup_) return drift_;
    scratch_drift_ = heisenberg_generator(u_.model(), t).apply(*observable_);
    return scratch_drift_;
  }

  const std::optional<CMatrix>& observable() const noexcept { return observable_; }

 private:
  const Unraveling& u_;
  double dt_;
  std::optional<CMatrix> observable_;
  std::optional<SemigroupPropagator> semigroup_;
  CMatrix step_;
  CMatrix jump_;
  CMatrix drift_;
  CMatrix scratch_;
  CMatrix scratch_jump_;
  CMatrix scratch_drift_;
};

/// Real part of the trace of a column-stacked n x n matrix.
inline double vec_trace(const CVector& x, Index n) {
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += x(i * (n + 1)).real();
  return s;
}

/// Re Tr(rho X) for column-stacked rho.
inline double vec_expectation(const CVector& x, const CMatrix& obs) {
  const Index n = obs.rows();
  Complex s{0.0, 0.0};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) s += x(i + n * j) * obs(j, i);
  }
  return s.real();
}

/// Hermitian part of a column-stacked matrix, in place.
inline void hermitize(CVector& x, Index n) {
  for (Index j = 0; j < n; ++j) {
    x(j * (n + 1)) = Complex{x(j * (n + 1)).real(), 0.0};
    for (Index i = j + 1; i < n; ++i) {
      const Complex a = 0.5 * (x(i + n * j) + std::conj(x(j + n * i)));
      x(i + n * j) = a;
      x(j + n * i) = std::conj(a);
    }
  }
}

}  // namespace qfilter::detail
