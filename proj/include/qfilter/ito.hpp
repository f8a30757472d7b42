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

// Noncommutative symbolic expressions over quantum stochastic increments.
//
// An Expr is a formal sum of terms coefficient * word * increment, where a
// word is an ordered product of atoms and the increment is one of dA_j,
// dA^*_j, dLambda_ij, dt or absent. Every public operation returns the
// canonical form:
//   - scalar atoms move to the front of the word;
//   - observed atoms and conditional expectations move to the front of the
//     segment between process atoms (they commute with system operators but
//     not with the cocycle);
//   - commuting atoms are sorted by (name, adjoint, inner); system and
//     process atoms keep their written order;
//   - s s^* for a unimodular scalar and inv(x) x cancel;
//   - like terms are merged and terms are sorted by (increment, word).

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qfilter/algebra.hpp"

namespace qfilter::ito {

enum class AtomKind {
  Scalar,    // commutes with everything
  Observed,  // commutes with system atoms, not with process atoms
  CondExp,   // E[word], observed
  Inverse,   // inv(E[word]), observed
  System,    // noncommuting operator on the atom
  Process,   // U or U^*
};

struct Word;

struct Atom {
  AtomKind kind = AtomKind::System;
  std::string name;
  bool adjoint = false;
  /// System/Observed/Scalar: the adjoint is the atom itself.
  bool self_adjoint = false;
  /// Scalar: |s| = 1, so s s^* = 1. Rendered as e^{i name}.
  bool unimodular = false;
  /// CondExp and Inverse: the wrapped word.
  std::shared_ptr<const Word> inner;

  bool commutes_with_system() const noexcept {
    return kind != AtomKind::System && kind != AtomKind::Process;
  }
  Atom dagger() const;
  std::string render() const;
};

bool operator==(const Atom& a, const Atom& b);
/// Order used for commuting atoms: (name, adjoint, inner).
bool atom_less(const Atom& a, const Atom& b);

struct Word {
  std::vector<Atom> atoms;
  std::string render() const;
};

bool operator==(const Word& a, const Word& b);

enum class IncKind { None, dA, dAdag, dLambda, dt };

struct Increment {
  IncKind kind = IncKind::None;
  std::string i;  // channel of dA, dA^*, first index of dLambda
  std::string j;  // second index of dLambda

  static Increment none() { return {}; }
  static Increment a(std::string ch) { return {IncKind::dA, std::move(ch), {}}; }
  static Increment adag(std::string ch) { return {IncKind::dAdag, std::move(ch), {}}; }
  static Increment lambda(std::string i, std::string j) {
    return {IncKind::dLambda, std::move(i), std::move(j)};
  }
  static Increment dt() { return {IncKind::dt, {}, {}}; }

  Increment dagger() const;
  std::string render() const;
  bool operator==(const Increment&) const = default;
};

bool increment_less(const Increment& a, const Increment& b);

struct Term {
  std::complex<double> coeff{1.0, 0.0};
  Word word;
  Increment inc;
};

class Expr {
 public:
  Expr() = default;
  static Expr zero() { return {}; }
  static Expr scalar(std::complex<double> c);
  static Expr from_term(Term t);
  static Expr atom(Atom a);
  static Expr increment(Increment inc);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  Expr operator+(const Expr& o) const;
  Expr operator-(const Expr& o) const;
  Expr operator-() const;
  /// Noncommutative product with increments reduced by the Ito table.
  Expr operator*(const Expr& o) const;
  Expr operator*(std::complex<double> c) const;

  Expr dagger() const;

  /// Terms whose increment equals `inc`, with the increment removed.
  Expr coefficient_of(const Increment& inc) const;
  /// Terms carrying `inc`, increment kept.
  Expr filter(const Increment& inc) const;

  std::string render() const;
  bool operator==(const Expr& o) const;

  friend Expr canonical(std::vector<Term> terms);

 private:
  std::vector<Term> terms_;
};

Expr operator*(std::complex<double> c, const Expr& e);

/// Canonical form of an arbitrary sum of terms (see the file comment).
Expr canonical(std::vector<Term> terms);

// ---------------------------------------------------------------------------
// Constructors

/// Noncommuting operator; self-adjoint ones (H, X) are their own adjoint.
Expr sys(const std::string& name, bool self_adjoint = false);
/// Observed process value (b, c, eta, B).
Expr observed(const std::string& name, bool self_adjoint = false);
/// Unimodular scalar e^{i phi}.
Expr phase(const std::string& name);
/// Generic complex scalar, adjoint rendered conj(name).
Expr complex_scalar(const std::string& name);
/// Cocycle U; use .dagger() for U^*.
Expr process(const std::string& name);

/// Conditional expectation with linearity, E[1] = 1 and the module
/// property: commuting atoms are pulled out, nested E's collapse. Terms
/// must carry no increment and no process atom.
Expr cond_exp(const Expr& e);

/// inv(e) for an expression that is a single commuting term c * w; the
/// result is (1/c) inv(a_1) ... inv(a_k) over the atoms of w.
Expr inverse(const Expr& e);

// ---------------------------------------------------------------------------
// Ito calculus

/// The Hudson-Parthasarathy table: dA_k dA^*_i = delta_ki dt,
/// dA_k dLambda_ij = delta_ki dA_j, dLambda_kl dA^*_i = delta_li dA^*_k,
/// dLambda_kl dLambda_ij = delta_li dLambda_kj, all other products 0.
/// None acts as the identity.
Expr ito_product(const Increment& m1, const Increment& m2);

/// A factor of a product with its value and differential.
struct Factor {
  Expr value;
  Expr differential;
};

struct SubsetTerm {
  /// Differentiated factor indices, 1-based and increasing.
  std::vector<int> subset;
  Expr contribution;
};

/// d(Z_1 ... Z_p) split by non-empty subset: for each subset nu, the
/// product with dZ_i for i in nu and Z_i otherwise, factor order kept.
/// Returns 2^p - 1 entries ordered by subset bitmask.
std::vector<SubsetTerm> expand_product_differential(const std::vector<Factor>& factors);

/// Sum of the contributions of the listed subsets.
Expr sum_subsets(const std::vector<SubsetTerm>& terms, const std::vector<std::vector<int>>& which);

/// Removes the outer U^* ... U of every term. Throws DerivationFailure when
/// a term is not of that shape.
Expr strip_cocycle(const Expr& e, const std::string& process_name = "U");

// ---------------------------------------------------------------------------
// Numeric evaluation

struct Assignment {
  std::map<std::string, CMatrix> system;
  std::map<std::string, std::complex<double>> scalar;  // Scalar and Observed atoms by name
  /// State used for E[w] = Tr(rho w).
  CMatrix rho;
  Index dim = 2;
};

/// Evaluates an increment-free, process-free expression to a matrix.
CMatrix evaluate(const Expr& e, const Assignment& a);

}  // namespace qfilter::ito
