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

#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qfilter/algebra.hpp"

namespace qfilter {

/// Coherent drive amplitude h(t) = amplitude * exp(i * frequency * t).
struct LaserAmplitude {
  Complex amplitude{0.0, 0.0};
  double frequency = 0.0;

  Complex at(double t) const;
  bool is_zero() const noexcept { return amplitude == Complex{0.0, 0.0}; }
  bool is_time_dependent() const noexcept { return !is_zero() && frequency != 0.0; }

  friend LaserAmplitude operator+(const LaserAmplitude& a, const LaserAmplitude& b);
  bool operator==(const LaserAmplitude&) const = default;
};

/// One field channel and its coupling operator.
struct Channel {
  std::string name;
  CMatrix op;
};

/// Weyl displacement of one channel by h(t).
struct Displacement {
  std::size_t channel;
  LaserAmplitude h;
};

/// Parameters of the laser-driven two-level atom.
///
/// Basis order is (excited, ground); V = [[0, 0], [1, 0]] lowers excited to
/// ground and H = (omega0 / 2) sigma_z. The atom decays into a forward
/// channel (coupling kappa_f) and a side channel (kappa_s); gamma is the
/// total decay rate, applied as sqrt(gamma) on V.
struct TwoLevelParams {
  double omega0 = 0.0;
  double rabi = 0.0;
  double laser_freq = 0.0;
  Complex kappa_f{1.0 / std::numbers::sqrt2, 0.0};
  Complex kappa_s{1.0 / std::numbers::sqrt2, 0.0};
  double gamma = 1.0;
};

/// H(t) and the collapse operators after all displacements are resolved.
struct ResolvedGenerator {
  CMatrix hamiltonian;
  std::vector<Channel> channels;
};

/// Hamiltonian, named collapse channels and an ordered list of laser
/// displacements. Immutable once built.
class LindbladModel {
 public:
  LindbladModel(CMatrix hamiltonian, std::vector<Channel> channels);

  Index dim() const noexcept { return hamiltonian_.rows(); }
  const CMatrix& hamiltonian() const noexcept { return hamiltonian_; }
  const std::vector<Channel>& channels() const noexcept { return channels_; }
  const std::vector<Displacement>& displacements() const noexcept { return displacements_; }
  const std::optional<TwoLevelParams>& params() const noexcept { return params_; }

  std::size_t channel_index(std::string_view name) const;
  bool is_time_dependent() const noexcept;

  /// Apply displacements in order: for each, V~ = V + h(t) and
  /// H~ = H + (i/2)(conj(h) V - h V^*), with V the operator before the shift.
  ResolvedGenerator resolve(double t) const;

  LindbladModel with_displacement(Displacement d) const;
  LindbladModel with_params(TwoLevelParams p) const;

 private:
  CMatrix hamiltonian_;
  std::vector<Channel> channels_;
  std::vector<Displacement> displacements_;
  std::optional<TwoLevelParams> params_;
};

CMatrix lowering_operator();
CMatrix sigma_z();

/// Laser off: H = (omega0/2) sigma_z, channels "f" and "s".
LindbladModel spontaneous_decay(const TwoLevelParams& p);

/// Drive amplitude on the forward channel that reproduces the resonance
/// fluorescence Liouvillian with drive term i(Omega/2)[e^{-i w t} V + e^{i w t} V^*, rho]:
/// h(t) = -i Omega e^{i w t} / (2 sqrt(gamma) conj(kappa_f)).
LaserAmplitude resonance_drive(const TwoLevelParams& p);

/// spontaneous_decay displaced by resonance_drive. Requires kappa_f != 0
/// whenever rabi != 0.
LindbladModel resonance_fluorescence(const TwoLevelParams& p);

/// "spontaneous-decay" or "resonance-fluorescence".
LindbladModel preset_model(std::string_view name, const TwoLevelParams& p);

/// The resonance fluorescence Liouvillian written out directly (no
/// displacement):
/// -i[H, rho] + i(Omega/2)[e^{-i w t} V + e^{i w t} V^*, rho]
///   + gamma (V rho V^* - 1/2{V^*V, rho}).
Superoperator resonance_fluorescence_liouvillian(const TwoLevelParams& p, double t = 0.0);

/// Schroedinger-picture Lindblad generator
/// rho -> -i[H, rho] + sum_j V_j rho V_j^* - 1/2 {V_j^* V_j, rho}.
Superoperator lindblad_generator(const CMatrix& h, const std::vector<CMatrix>& ops);

Superoperator build_liouvillian(const LindbladModel& model, double t = 0.0);

/// Heisenberg-picture generator, the dual of build_liouvillian.
Superoperator heisenberg_generator(const LindbladModel& model, double t = 0.0);

/// Returns the model with one more displacement of `channel`. h == 0 returns
/// the model unchanged.
LindbladModel apply_laser_displacement(const LindbladModel& model, const LaserAmplitude& h,
                                       std::string_view channel = "f");

// ---------------------------------------------------------------------------
// Unravelings

/// Photon counting on one channel: J(rho) = V~ rho V~^*.
struct SideCounting {
  std::string channel = "s";
};

/// Counting after mixing the channel with a local oscillator of amplitude
/// w_t / epsilon, w_t = exp(i (phi0 + omega_lo t)):
/// J_a(rho) = (V + w_t/eps) rho (V + w_t/eps)^*.
struct HomodyneMixed {
  std::string channel = "s";
  double epsilon = 1.0;
  double phi0 = 0.0;
  double omega_lo = 0.0;

  Complex phase(double t) const;
};

using DetectionScheme = std::variant<SideCounting, HomodyneMixed>;

/// L = smooth + jump.
struct UnravelingSplit {
  Superoperator smooth;
  Superoperator jump;
  /// Operator A with jump(rho) = A rho A^*.
  CMatrix jump_operator;
};

UnravelingSplit split_unraveling(const LindbladModel& model, const DetectionScheme& scheme,
                                 double t = 0.0);

/// A model paired with a detection scheme, with the split cached when
/// neither depends on time.
class Unraveling {
 public:
  Unraveling(LindbladModel model, DetectionScheme scheme);

  const LindbladModel& model() const noexcept { return model_; }
  const DetectionScheme& scheme() const noexcept { return scheme_; }
  bool is_time_dependent() const noexcept { return time_dependent_; }

  UnravelingSplit at(double t) const;

 private:
  LindbladModel model_;
  DetectionScheme scheme_;
  bool time_dependent_;
  std::optional<UnravelingSplit> cached_;
};

// ---------------------------------------------------------------------------
// Master equation

inline constexpr double kDefaultMasterStep = 1e-3;

/// rho(t) from rho0. Exact exp(t L) when the model is time independent,
/// otherwise midpoint product integration with step <= dt.
DensityMatrix propagate_master(const LindbladModel& model, const DensityMatrix& rho0, double t,
                               double dt = kDefaultMasterStep);

/// rho at each of the increasing `times` (first may be 0).
std::vector<DensityMatrix> master_trajectory(const LindbladModel& model, const DensityMatrix& rho0,
                                             const std::vector<double>& times,
                                             double dt = kDefaultMasterStep);

}  // namespace qfilter
