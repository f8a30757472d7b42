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

// Derivation of the Belavkin filter by the quantum Ito product rule.

#include <string>
#include <utility>
#include <vector>

#include "qfilter/ito.hpp"

namespace qfilter::ito {

using ChannelList = std::vector<std::pair<std::string, Expr>>;

/// dU = sum_j (L_j dA^*_j + M_j dA_j) U + K U dt.
struct Cocycle {
  std::string process = "U";
  std::vector<std::string> channels;
  std::vector<Expr> L;
  std::vector<Expr> M;
  Expr K;

  Expr differential() const;
  Expr adjoint_differential() const { return differential().dagger(); }
};

/// The unitary cocycle with M_j = -L_j^* and K = -(i H + 1/2 sum L_j^* L_j).
Cocycle hudson_parthasarathy(const Expr& hamiltonian, const ChannelList& channels);

/// Throws DerivationFailure("non-cocycle: ...") unless M_j = -L_j^* and
/// K + K^* = -sum L_j^* L_j.
void check_cocycle(const Cocycle& cocycle);

/// dt coefficient of d(U^* X U) with U^* ... U removed: the Heisenberg
/// generator applied to X.
Expr vacuum_dt_generator(const Cocycle& cocycle, const Expr& x);
Expr vacuum_dt_generator(const Expr& hamiltonian, const ChannelList& channels, const Expr& x);

/// i[H, X] + sum_j (L_j^* X L_j - 1/2 {L_j^* L_j, X}), written out directly.
Expr lindblad_heisenberg(const Expr& hamiltonian, const ChannelList& channels, const Expr& x);

/// dY = sum_j (alpha_j dA^*_j + alpha_j^* dA_j) + sum_ij beta_ij dLambda_ij.
struct Measurement {
  std::string name;
  /// Classical record read in the state form: dN for counting, dW for
  /// the quadrature.
  std::string record_symbol;
  std::vector<std::pair<std::string, Expr>> alpha;
  struct Beta {
    std::string i;
    std::string j;
    Expr value;
  };
  std::vector<Beta> beta;
};

/// Photon counting on `channel`: dY = dLambda_cc.
Measurement counting_measurement(const std::string& channel = "s");
/// Quadrature: dY = e^{i phi} dA^*_c + e^{-i phi} dA_c.
Measurement quadrature_measurement(const std::string& channel = "s",
                                   const std::string& phase_name = "phi");

Expr measurement_differential(const Measurement& m);

/// dY - E[sum_j (V_j^* alpha_j + alpha_j^* V_j) + sum_ij V_i^* beta_ij V_j] dt.
Expr innovation(const Measurement& m, const ChannelList& channels);

struct FilterModel {
  Expr hamiltonian;
  ChannelList channels;
  Expr observable;
  std::string observable_name;
  bool unit_observable = false;
};

/// H, channels f and s with operators V_f and V_s, and X (or X = 1).
FilterModel two_channel_model(bool unit_observable = false);

struct GainDerivation {
  Expr innovation;
  /// All 2^4 - 1 subset contributions of d(U^* B (E[X] - X) U).
  std::vector<SubsetTerm> expansion;
  /// The kept subsets after vacuum dt extraction and E[...], zero ones
  /// included.
  std::vector<SubsetTerm> surviving;
  /// Sum of the kept contributions with b factored out: A + eta C.
  Expr residual;
  Expr a;
  Expr c;
  Expr eta;
  std::vector<std::string> side_conditions;
};

/// Subsets of {U^*, B, E[X] - X, U} kept by the derivation: B must be
/// differentiated together with at least one other factor.
const std::vector<std::vector<int>>& kept_subsets();

/// Solves sum over kept subsets of rho(U^* ... U dt) = 0 for all b under the
/// ansatz dE[X] = eta dYtilde + E[L(X)] dt. Throws DerivationFailure when
/// the residual is not linear in eta with a single-term coefficient.
GainDerivation derive_filter_gain(const FilterModel& model, const Measurement& m);

struct BelavkinEquation {
  std::string lhs;
  Expr drift;
  Expr gain;
  Expr innovation;
  /// dY, replaced by `record_symbol` in the state form.
  Expr measurement;
  std::string record_symbol;
  std::vector<std::string> side_conditions;

  /// dE[X] = E[L(X)] dt + (eta) (dYtilde)
  std::string render() const;
  /// The same with E[.] written as rho(.) and dY as the classical record.
  std::string render_state_form() const;
};

BelavkinEquation assemble_belavkin_equation(const FilterModel& model, const Measurement& m,
                                            const GainDerivation& d);

/// E[...] replaced by rho(...), brackets matched.
std::string to_state_form(const std::string& rendered);

}  // namespace qfilter::ito
