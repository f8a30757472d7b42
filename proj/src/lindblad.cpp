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

#include "qfilter/lindblad.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "qfilter/errors.hpp"

namespace qfilter {

namespace {

constexpr double kHermitianModelTol = 1e-12;
constexpr double kNormalizationTol = 1e-9;

void validate_params(const TwoLevelParams& p) {
  const double values[] = {p.omega0, p.rabi, p.laser_freq, p.kappa_f.real(), p.kappa_f.imag(),
                           p.kappa_s.real(), p.kappa_s.imag(), p.gamma};
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidModel("two-level parameters must be finite");
  }
  if (!(p.gamma > 0.0)) throw InvalidModel("gamma must be positive");
  if (p.rabi < 0.0) throw InvalidModel("Rabi frequency must be nonnegative");
  const double total = std::norm(p.kappa_f) + std::norm(p.kappa_s);
  if (std::abs(total - 1.0) > kNormalizationTol) {
    std::ostringstream os;
    os.precision(17);
    os << "|kappa_f|^2 + |kappa_s|^2 = " << total << ", expected 1";
    throw InvalidModel(os.str());
  }
}

}  // namespace

Complex LaserAmplitude::at(double t) const {
  if (frequency == 0.0) return amplitude;
  return amplitude * std::exp(kI * (frequency * t));
}

LaserAmplitude operator+(const LaserAmplitude& a, const LaserAmplitude& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.frequency != b.frequency) {
    throw InvalidInput("cannot add laser amplitudes with different frequencies");
  }
  return {a.amplitude + b.amplitude, a.frequency};
}

// ---------------------------------------------------------------------------
// LindbladModel

LindbladModel::LindbladModel(CMatrix hamiltonian, std::vector<Channel> channels)
    : hamiltonian_(std::move(hamiltonian)), channels_(std::move(channels)) {
  if (hamiltonian_.rows() == 0 || hamiltonian_.rows() != hamiltonian_.cols()) {
    throw InvalidModel("Hamiltonian must be square and non-empty");
  }
  if (!is_finite(hamiltonian_)) throw InvalidModel("Hamiltonian has non-finite entries");
  if (!is_hermitian(hamiltonian_, kHermitianModelTol)) {
    throw InvalidModel("Hamiltonian is not Hermitian");
  }
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    const auto& c = channels_[i];
    if (c.op.rows() != dim() || c.op.cols() != dim()) {
      throw DimensionMismatch("collapse operator '" + c.name + "' has wrong shape");
    }
    if (!is_finite(c.op)) throw InvalidModel("collapse operator '" + c.name + "' is not finite");
    for (std::size_t j = 0; j < i; ++j) {
      if (channels_[j].name == c.name) throw InvalidModel("duplicate channel name '" + c.name + "'");
    }
  }
}

std::size_t LindbladModel::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].name == name) return i;
  }
  throw InvalidInput("unknown channel '" + std::string(name) + "'");
}

bool LindbladModel::is_time_dependent() const noexcept {
  for (const auto& d : displacements_) {
    if (d.h.is_time_dependent()) return true;
  }
  return false;
}

ResolvedGenerator LindbladModel::resolve(double t) const {
  ResolvedGenerator out{hamiltonian_, channels_};
  for (const auto& d : displacements_) {
    const Complex h = d.h.at(t);
    CMatrix& v = out.channels[d.channel].op;
    out.hamiltonian += (0.5 * kI) * (std::conj(h) * v - h * v.adjoint());
    v += h * CMatrix::Identity(dim(), dim());
  }
  return out;
}

LindbladModel LindbladModel::with_displacement(Displacement d) const {
  if (d.channel >= channels_.size()) throw InvalidInput("displacement channel out of range");
  if (!std::isfinite(d.h.amplitude.real()) || !std::isfinite(d.h.amplitude.imag()) ||
      !std::isfinite(d.h.frequency)) {
    throw InvalidInput("laser amplitude must be finite");
  }
  LindbladModel out = *this;
  out.displacements_.push_back(d);
  return out;
}

LindbladModel LindbladModel::with_params(TwoLevelParams p) const {
  LindbladModel out = *this;
  out.params_ = p;
  return out;
}

// ---------------------------------------------------------------------------
// Presets

CMatrix lowering_operator() {
  CMatrix v = CMatrix::Zero(2, 2);
  v(1, 0) = 1.0;
  return v;
}

CMatrix sigma_z() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = -1.0;
  return s;
}

LindbladModel spontaneous_decay(const TwoLevelParams& p) {
  validate_params(p);
  const CMatrix v = std::sqrt(p.gamma) * lowering_operator();
  std::vector<Channel> channels{{"f", p.kappa_f * v}, {"s", p.kappa_s * v}};
  return LindbladModel(0.5 * p.omega0 * sigma_z(), std::move(channels)).with_params(p);
}

LaserAmplitude resonance_drive(const TwoLevelParams& p) {
  validate_params(p);
  if (p.rabi == 0.0) return {};
  if (p.kappa_f == Complex{0.0, 0.0}) {
    throw InvalidModel("a laser drive needs a nonzero forward coupling kappa_f");
  }
  const Complex a = -kI * p.rabi / (2.0 * std::sqrt(p.gamma) * std::conj(p.kappa_f));
  return {a, p.laser_freq};
}

LindbladModel resonance_fluorescence(const TwoLevelParams& p) {
  return apply_laser_displacement(spontaneous_decay(p), resonance_drive(p), "f");
}

LindbladModel preset_model(std::string_view name, const TwoLevelParams& p) {
  if (name == "spontaneous-decay") {
    TwoLevelParams q = p;
    q.rabi = 0.0;
    return spontaneous_decay(q);
  }
  if (name == "resonance-fluorescence") return resonance_fluorescence(p);
  throw InvalidInput("unknown model preset '" + std::string(name) + "'");
}

Superoperator lindblad_generator(const CMatrix& h, const std::vector<CMatrix>& ops) {
  const Index n = h.rows();
  Superoperator out = (Superoperator::left(h) - Superoperator::right(h)) * (-kI);
  for (const auto& v : ops) {
    if (v.rows() != n || v.cols() != n) throw DimensionMismatch("collapse operator shape");
    const CMatrix vv = v.adjoint() * v;
    out = out + Superoperator::conjugation(v) -
          (Superoperator::left(vv) + Superoperator::right(vv)) * Complex{0.5, 0.0};
  }
  return out;
}

Superoperator resonance_fluorescence_liouvillian(const TwoLevelParams& p, double t) {
  validate_params(p);
  const CMatrix v = lowering_operator();
  const CMatrix h = 0.5 * p.omega0 * sigma_z();
  const Complex phase = std::exp(-kI * (p.laser_freq * t));
  const CMatrix drive = phase * v + std::conj(phase) * v.adjoint();
  const CMatrix vv = v.adjoint() * v;
  return (Superoperator::left(h) - Superoperator::right(h)) * (-kI) +
         (Superoperator::left(drive) - Superoperator::right(drive)) * (0.5 * kI * p.rabi) +
         (Superoperator::conjugation(v) -
          (Superoperator::left(vv) + Superoperator::right(vv)) * Complex{0.5, 0.0}) *
             Complex{p.gamma, 0.0};
}

Superoperator build_liouvillian(const LindbladModel& model, double t) {
  const ResolvedGenerator g = model.resolve(t);
  std::vector<CMatrix> ops;
  ops.reserve(g.channels.size());
  for (const auto& c : g.channels) ops.push_back(c.op);
  return lindblad_generator(g.hamiltonian, ops);
}

Superoperator heisenberg_generator(const LindbladModel& model, double t) {
  return build_liouvillian(model, t).dual();
}

LindbladModel apply_laser_displacement(const LindbladModel& model, const LaserAmplitude& h,
                                       std::string_view channel) {
  if (h.is_zero()) return model;
  return model.with_displacement({model.channel_index(channel), h});
}

// ---------------------------------------------------------------------------
// Unravelings

Complex HomodyneMixed::phase(double t) const { return std::exp(kI * (phi0 + omega_lo * t)); }

UnravelingSplit split_unraveling(const LindbladModel& model, const DetectionScheme& scheme,
                                 double t) {
  const ResolvedGenerator g = model.resolve(t);
  std::vector<CMatrix> ops;
  ops.reserve(g.channels.size());
  for (const auto& c : g.channels) ops.push_back(c.op);
  Superoperator full = lindblad_generator(g.hamiltonian, ops);

  CMatrix a;
  if (const auto* sc = std::get_if<SideCounting>(&scheme)) {
    a = g.channels[model.channel_index(sc->channel)].op;
  } else {
    const auto& hm = std::get<HomodyneMixed>(scheme);
    if (!(hm.epsilon > 0.0) || !std::isfinite(hm.epsilon)) {
      throw InvalidInput("homodyne-mixed split needs epsilon > 0");
    }
    a = g.channels[model.channel_index(hm.channel)].op;
    a.diagonal().array() += hm.phase(t) / hm.epsilon;
  }
  Superoperator jump = Superoperator::conjugation(a);
  Superoperator smooth = full - jump;
  return {std::move(smooth), std::move(jump), std::move(a)};
}

Unraveling::Unraveling(LindbladModel model, DetectionScheme scheme)
    : model_(std::move(model)), scheme_(std::move(scheme)) {
  bool td = model_.is_time_dependent();
  if (const auto* hm = std::get_if<HomodyneMixed>(&scheme_)) {
    if (hm->omega_lo != 0.0) td = true;
  }
  time_dependent_ = td;
  // Validates the scheme eagerly.
  UnravelingSplit s = split_unraveling(model_, scheme_, 0.0);
  if (!time_dependent_) cached_ = std::move(s);
}

UnravelingSplit Unraveling::at(double t) const {
  if (cached_) return *cached_;
  return split_unraveling(model_, scheme_, t);
}

// ---------------------------------------------------------------------------
// Master equation

namespace {

void check_step(double t, double dt) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidInput("propagation time must be finite and >= 0");
  if (!std::isfinite(dt) || !(dt > 0.0)) throw InvalidInput("step must be finite and > 0");
}

// Midpoint product integration over [t0, t1].
CMatrix midpoint_flow(const LindbladModel& model, CMatrix rho, double t0, double t1, double dt) {
  const double span = t1 - t0;
  if (span <= 0.0) return rho;
  const auto steps = static_cast<long>(std::ceil(span / dt - 1e-9));
  const double h = span / static_cast<double>(steps);
  const Index n = model.dim();
  for (long k = 0; k < steps; ++k) {
    const double mid = t0 + (static_cast<double>(k) + 0.5) * h;
    const Superoperator p = expm(build_liouvillian(model, mid), h);
    rho = unvec(p.matrix() * vec(rho), n);
  }
  return rho;
}

}  // namespace

DensityMatrix propagate_master(const LindbladModel& model, const DensityMatrix& rho0, double t,
                               double dt) {
  check_step(t, dt);
  if (rho0.dim() != model.dim()) throw DimensionMismatch("initial state dimension");
  if (t == 0.0) return rho0;
  CMatrix rho;
  if (!model.is_time_dependent()) {
    rho = expm(build_liouvillian(model, 0.0), t).apply(rho0.matrix());
  } else {
    rho = midpoint_flow(model, rho0.matrix(), 0.0, t, dt);
  }
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

std::vector<DensityMatrix> master_trajectory(const LindbladModel& model, const DensityMatrix& rho0,
                                             const std::vector<double>& times, double dt) {
  std::vector<DensityMatrix> out;
  out.reserve(times.size());
  double prev = 0.0;
  CMatrix rho = rho0.matrix();
  std::optional<Superoperator> l;
  if (!model.is_time_dependent()) l = build_liouvillian(model, 0.0);
  for (double t : times) {
    check_step(t, dt);
    if (t < prev) throw InvalidInput("master_trajectory times must be increasing");
    if (l) {
      rho = expm(*l, t - prev).apply(rho);
    } else {
      rho = midpoint_flow(model, rho, prev, t, dt);
    }
    out.emplace_back(0.5 * (rho + rho.adjoint()));
    prev = t;
  }
  return out;
}

}  // namespace qfilter
