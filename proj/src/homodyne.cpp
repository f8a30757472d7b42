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

#include "qfilter/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "counting_engine.hpp"
#include "qfilter/ensemble.hpp"
#include "qfilter/errors.hpp"
#include "stepper.hpp"

namespace qfilter {

Complex HomodyneSpec::phase(double t) const { return std::exp(kI * (phi0 + omega_lo * t)); }

HomodyneMixed HomodyneSpec::mixed() const {
  if (!(epsilon > 0.0)) throw InvalidInput("the mixed counting scheme needs epsilon > 0");
  return HomodyneMixed{channel, epsilon, phi0, omega_lo};
}

namespace {

void check_spec(const HomodyneSpec& spec) {
  if (!std::isfinite(spec.epsilon) || spec.epsilon < 0.0) {
    throw InvalidInput("epsilon must be finite and >= 0");
  }
  if (!std::isfinite(spec.phi0) || !std::isfinite(spec.omega_lo)) {
    throw InvalidInput("oscillator phase parameters must be finite");
  }
}

}  // namespace

double scaled_step_load(const LindbladModel& model, const HomodyneSpec& spec, double dt) {
  check_spec(spec);
  if (!(spec.epsilon > 0.0)) throw InvalidInput("scaled counting needs epsilon > 0");
  const double v = operator_norm(model.resolve(0.0).channels[model.channel_index(spec.channel)].op);
  const double a = v + 1.0 / spec.epsilon;
  return dt * a * a;
}

DiffusiveTrajectory integrate_scaled_counting_sse(const LindbladModel& model,
                                                  const HomodyneSpec& spec,
                                                  const DensityMatrix& rho0, double horizon,
                                                  RngStream& rng, const PathOptions& options) {
  const double load = scaled_step_load(model, spec, options.dt);
  if (load > 0.5) {
    std::ostringstream os;
    os.precision(6);
    os << "dt = " << options.dt << " is too coarse for epsilon = " << spec.epsilon
       << " (expected jumps per step up to " << load << " per step; use dt <= "
       << kDefaultDtRule << " eps^2)";
    throw StepSizeError(os.str());
  }
  const Unraveling u(model, spec.mixed());
  detail::ScaledIncrementStats stats;
  stats.epsilon = spec.epsilon;
  CountingTrajectory c =
      detail::sample_counting_exact(u, rho0, horizon, rng, options, &stats);

  DiffusiveTrajectory out;
  out.epsilon = spec.epsilon;
  out.grid = std::move(c.grid);
  out.states = std::move(c.states);
  out.filter_martingale = std::move(c.filter_martingale);
  out.micro_steps = c.micro_steps;
  out.counts = std::move(c.counts);
  out.observation.reserve(out.grid.size());
  out.martingale.reserve(out.grid.size());
  for (std::size_t k = 0; k < out.grid.size(); ++k) {
    const double n = static_cast<double>(out.counts[k]);
    out.observation.push_back(spec.epsilon * n - out.grid[k] / spec.epsilon);
    out.martingale.push_back(spec.epsilon * c.martingale[k]);
  }
  out.quadratic_variation = stats.quadratic_variation;
  out.max_identity_error = stats.max_identity_error;
  out.max_dropped_term = stats.max_dropped;
  out.max_step_increment = c.max_step_increment;
  out.min_step_increment = c.min_step_increment;
  return out;
}

namespace {

DiffusiveTrajectory run_homodyne(const LindbladModel& model, const HomodyneSpec& spec,
                                 const DensityMatrix& rho0, double horizon, RngStream* rng,
                                 const std::vector<double>* increments,
                                 const PathOptions& options) {
  check_spec(spec);
  if (rho0.dim() != model.dim()) throw DimensionMismatch("initial state dimension");
  if (!std::isfinite(options.dt) || !(options.dt > 0.0)) throw InvalidInput("dt must be positive");
  const auto sched = step_schedule(horizon, options.dt, options.record_times);
  if (increments && increments->size() != sched.size() - 1) {
    throw GridMismatch("replay stream has " + std::to_string(increments->size()) +
                       " increments for " + std::to_string(sched.size() - 1) + " steps");
  }
  const std::size_t ch = model.channel_index(spec.channel);

  // L - C equals the smooth part of counting on the same channel.
  const Unraveling counting(model, SideCounting{spec.channel});
  detail::StepPropagator prop(counting, options.dt, options.observable);
  const Index n = model.dim();

  std::vector<double> rec = options.record_times;
  std::sort(rec.begin(), rec.end());
  rec.erase(std::unique(rec.begin(), rec.end()), rec.end());
  std::size_t next_rec = 0;
  auto wants = [&](double t) {
    if (rec.empty()) return true;
    if (next_rec < rec.size() && rec[next_rec] == t) {
      ++next_rec;
      return true;
    }
    return false;
  };

  if (options.observable) {
    const CMatrix& obs = *options.observable;
    if (obs.rows() != n || obs.cols() != n) throw DimensionMismatch("observable dimension");
    if (!is_hermitian(obs, 1e-12)) throw InvalidInput("observable must be Hermitian");
  }

  DiffusiveTrajectory out;
  out.epsilon = 0.0;
  CMatrix rho = rho0.matrix();
  double w_obs = 0.0, mart = 0.0, fm = 0.0;
  auto record = [&](double t) {
    out.grid.push_back(t);
    out.states.emplace_back(0.5 * (rho + rho.adjoint()));
    out.observation.push_back(w_obs);
    out.martingale.push_back(mart);
    if (options.observable) out.filter_martingale.push_back(fm);
  };
  if (wants(0.0)) record(0.0);

  CMatrix vs = model.resolve(0.0).channels[ch].op;
  const bool vs_moves = model.is_time_dependent();
  CMatrix c(n, n), k(n, n), tmp(n, n), rt(n, n);
  CVector x(n * n), y(n * n);
  for (std::size_t step = 0; step + 1 < sched.size(); ++step) {
    const double t0 = sched[step];
    const double t1 = sched[step + 1];
    const double h = t1 - t0;
    if (vs_moves) vs = model.resolve(t0).channels[ch].op;
    c = std::conj(spec.phase(t0)) * vs;
    const double m = 2.0 * (c * rho).trace().real();
    double dw;
    if (increments) {
      dw = (*increments)[step];
      if (!std::isfinite(dw)) {
        throw InvalidInput("non-finite increment at step " + std::to_string(step));
      }
    } else {
      dw = m * h + std::sqrt(h) * rng->normal();
    }
    const double x0_obs = options.observable ? (rho * *options.observable).trace().real() : 0.0;
    const double d0 =
        options.observable ? (rho * prop.drift(t0)).trace().real() : 0.0;

    k = c * dw;
    k.diagonal().array() += 1.0;
    tmp.noalias() = k * rho;
    rt.noalias() = tmp * k.adjoint();
    x = vec(rt);
    y.noalias() = prop.smooth(t0, h) * x;
    const double s = detail::vec_trace(y, n);
    if (!(s > 0.0) || !std::isfinite(s)) {
      std::ostringstream os;
      os.precision(17);
      os << "homodyne step at t = " << t0 << " produced trace " << s;
      throw InvalidState(os.str());
    }
    y /= s;
    detail::hermitize(y, n);
    rho = unvec(y, n);

    w_obs += dw;
    mart += dw - m * h;
    out.quadratic_variation += dw * dw;
    if (options.observable) {
      const double x1_obs = (rho * *options.observable).trace().real();
      const double d1 = (rho * prop.drift(t1)).trace().real();
      fm += x1_obs - x0_obs - 0.5 * h * (d0 + d1);
    }
    ++out.micro_steps;
    if (wants(t1)) record(t1);
  }
  return out;
}

}  // namespace

DiffusiveTrajectory integrate_homodyne_sse(const LindbladModel& model, const HomodyneSpec& spec,
                                           const DensityMatrix& rho0, double horizon,
                                           RngStream& rng, const PathOptions& options) {
  return run_homodyne(model, spec, rho0, horizon, &rng, nullptr, options);
}

DiffusiveTrajectory integrate_homodyne_sse(const LindbladModel& model, const HomodyneSpec& spec,
                                           const DensityMatrix& rho0, double horizon,
                                           const std::vector<double>& increments,
                                           const PathOptions& options) {
  return run_homodyne(model, spec, rho0, horizon, nullptr, &increments, options);
}

CMatrix homodyne_gain(const CMatrix& rho, const CMatrix& vs, Complex w) {
  const CMatrix c = std::conj(w) * vs;
  const CMatrix g = c * rho + rho * c.adjoint();
  return g - g.trace() * rho;
}

CMatrix scaled_gain(const CMatrix& rho, const CMatrix& vs, Complex w, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidInput("scaled_gain needs epsilon > 0");
  CMatrix a = vs;
  a.diagonal().array() += w / epsilon;
  const CMatrix j = a * rho * a.adjoint();
  return (j / j.trace() - rho) / epsilon;
}

// ---------------------------------------------------------------------------
// Diffusive limit

double limit_step(double epsilon, const LimitOptions& options) {
  if (!(epsilon > 0.0)) throw InvalidInput("limit_step needs epsilon > 0");
  return std::min(options.dt_rule * epsilon * epsilon, options.dt_cap);
}

namespace {

struct Moments {
  // [checkpoint][metric]
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> var;
};

constexpr const char* kLimitMetrics[] = {"re_rho00", "re_rho01", "im_rho01", "mean_W", "mean_W2"};
constexpr std::size_t kNumLimitMetrics = 5;

Moments moments_of(const std::vector<DiffusiveTrajectory>& paths, std::size_t n_cp) {
  Moments m;
  m.mean.assign(n_cp, std::vector<double>(kNumLimitMetrics, 0.0));
  m.var.assign(n_cp, std::vector<double>(kNumLimitMetrics, 0.0));
  const double n = static_cast<double>(paths.size());
  for (std::size_t c = 0; c < n_cp; ++c) {
    std::vector<double> sum(kNumLimitMetrics, 0.0), sum2(kNumLimitMetrics, 0.0);
    for (const auto& p : paths) {
      const auto& rho = p.states[c].matrix();
      const double w = p.observation[c];
      const double v[kNumLimitMetrics] = {rho(0, 0).real(), rho(0, 1).real(), rho(0, 1).imag(), w,
                                          w * w};
      for (std::size_t q = 0; q < kNumLimitMetrics; ++q) {
        sum[q] += v[q];
        sum2[q] += v[q] * v[q];
      }
    }
    for (std::size_t q = 0; q < kNumLimitMetrics; ++q) {
      const double mean = sum[q] / n;
      m.mean[c][q] = mean;
      m.var[c][q] = std::max(0.0, (sum2[q] - n * mean * mean) / (n - 1.0)) / n;
    }
  }
  return m;
}

std::uint64_t steps_for(double horizon, double dt, std::size_t n_traj) {
  return static_cast<std::uint64_t>(std::ceil(horizon / dt)) * n_traj;
}

}  // namespace

LimitReport diffusive_limit_report(const LindbladModel& model, const HomodyneSpec& spec,
                                   const DensityMatrix& rho0, const LimitOptions& options) {
  if (options.eps_schedule.empty()) throw InvalidInput("empty epsilon schedule");
  for (std::size_t i = 0; i < options.eps_schedule.size(); ++i) {
    const double e = options.eps_schedule[i];
    if (!(e > 0.0) || !std::isfinite(e)) throw InvalidInput("epsilon values must be positive");
    if (i > 0 && !(e < options.eps_schedule[i - 1])) {
      throw InvalidInput("epsilon schedule must be strictly decreasing");
    }
  }
  if (options.n_traj < 2) throw InvalidInput("diffusive limit needs at least 2 trajectories");
  if (options.checkpoints.empty()) throw InvalidInput("no checkpoints");
  if (rho0.dim() != 2) throw DimensionMismatch("diffusive limit metrics are defined for 2x2 states");
  std::vector<double> cps = options.checkpoints;
  std::sort(cps.begin(), cps.end());
  const double horizon = cps.back();

  std::uint64_t total = steps_for(horizon, options.dt_cap, options.n_traj);
  for (double e : options.eps_schedule) total += steps_for(horizon, limit_step(e, options), options.n_traj);
  if (total > options.step_budget) {
    throw BudgetError("diffusive limit needs " + std::to_string(total) +
                      " integrator steps, budget is " + std::to_string(options.step_budget));
  }

  LimitReport report;
  HomodyneSpec diff = spec;
  diff.epsilon = 0.0;
  PathOptions base;
  base.record_times = cps;

  // Reference ensemble on streams [0, n); scaled runs use disjoint stream blocks.
  PathOptions ref_opt = base;
  ref_opt.dt = options.dt_cap;
  const auto ref = run_ensemble(options.n_traj, options.seed, options.workers,
                                [&](RngStream& rng, std::size_t) {
                                  return integrate_homodyne_sse(model, diff, rho0, horizon, rng,
                                                                ref_opt);
                                });
  const Moments mref = moments_of(ref, cps.size());

  for (std::size_t i = 0; i < options.eps_schedule.size(); ++i) {
    const double eps = options.eps_schedule[i];
    HomodyneSpec sc = spec;
    sc.epsilon = eps;
    PathOptions opt = base;
    opt.dt = limit_step(eps, options);
    const std::uint64_t stream_seed = options.seed + 0x9E3779B97F4A7C15ULL * (i + 1);
    const auto paths = run_ensemble(options.n_traj, stream_seed, options.workers,
                                    [&](RngStream& rng, std::size_t) {
                                      return integrate_scaled_counting_sse(model, sc, rho0,
                                                                           horizon, rng, opt);
                                    });
    const Moments ms = moments_of(paths, cps.size());
    double dmax = -1.0, dse = 0.0;
    for (std::size_t c = 0; c < cps.size(); ++c) {
      for (std::size_t q = 0; q < kNumLimitMetrics; ++q) {
        const double value = ms.mean[c][q] - mref.mean[c][q];
        const double se = std::sqrt(ms.var[c][q] + mref.var[c][q]);
        report.rows.push_back({eps, cps[c], kLimitMetrics[q], value, se});
        if (std::abs(value) > dmax) {
          dmax = std::abs(value);
          dse = se;
        }
      }
    }
    report.epsilon.push_back(eps);
    report.distance.push_back(dmax);
    report.distance_stderr.push_back(dse);
    report.dt.push_back(opt.dt);
  }
  report.decreasing = true;
  for (std::size_t i = 1; i < report.distance.size(); ++i) {
    if (!(report.distance[i] < report.distance[i - 1])) report.decreasing = false;
  }
  report.terminal_within_3se = report.distance.back() <= 3.0 * report.distance_stderr.back();
  return report;
}

}  // namespace qfilter
