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

#include "qfilter/davies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qfilter/errors.hpp"
#include "counting_engine.hpp"
#include "stepper.hpp"

namespace qfilter {

OutcomeSet::OutcomeSet(double horizon, std::vector<double> times)
    : horizon_(horizon), times_(std::move(times)) {
  if (!std::isfinite(horizon_) || horizon_ < 0.0) {
    throw InvalidInput("outcome horizon must be finite and nonnegative");
  }
  for (std::size_t k = 0; k < times_.size(); ++k) {
    const double t = times_[k];
    if (!std::isfinite(t) || t < 0.0 || t >= horizon_) {
      throw InvalidInput("jump times must lie in [0, horizon)");
    }
    if (k > 0 && !(t > times_[k - 1])) throw InvalidInput("jump times must be strictly increasing");
  }
}

namespace {

CMatrix conjugate_by(const CMatrix& a, const CMatrix& m) { return a * m * a.adjoint(); }

double real_trace(const CMatrix& m) { return m.trace().real(); }

}  // namespace

DaviesWeight davies_weight(const UnravelingSplit& split, const OutcomeSet& omega,
                           const DensityMatrix& rho0) {
  if (rho0.dim() != split.smooth.dim()) throw DimensionMismatch("davies_weight: state dimension");
  const SemigroupPropagator flow(split.smooth);
  CMatrix sigma = rho0.matrix();
  double last = 0.0;
  for (double t : omega.times()) {
    sigma = conjugate_by(split.jump_operator, flow.apply(t - last, sigma));
    last = t;
  }
  sigma = flow.apply(omega.horizon() - last, sigma);
  return {sigma, std::max(0.0, real_trace(sigma))};
}

DaviesWeight davies_weight(const Unraveling& unraveling, const OutcomeSet& omega,
                           const DensityMatrix& rho0, double dt) {
  if (!unraveling.is_time_dependent()) return davies_weight(unraveling.at(0.0), omega, rho0);
  if (!(dt > 0.0)) throw InvalidInput("davies_weight: dt must be positive");
  const Index n = unraveling.model().dim();
  if (rho0.dim() != n) throw DimensionMismatch("davies_weight: state dimension");
  auto flow = [&](CMatrix m, double t0, double t1) {
    const double span = t1 - t0;
    if (span <= 0.0) return m;
    const auto steps = static_cast<long>(std::ceil(span / dt - 1e-9));
    const double h = span / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) {
      const double mid = t0 + (static_cast<double>(k) + 0.5) * h;
      m = expm(unraveling.at(mid).smooth, h).apply(m);
    }
    return m;
  };
  CMatrix sigma = rho0.matrix();
  double last = 0.0;
  for (double t : omega.times()) {
    sigma = conjugate_by(unraveling.at(t).jump_operator, flow(sigma, last, t));
    last = t;
  }
  sigma = flow(sigma, last, omega.horizon());
  return {sigma, std::max(0.0, real_trace(sigma))};
}

// ---------------------------------------------------------------------------
// Schedules

std::vector<double> step_schedule(double horizon, double dt, const std::vector<double>& extra) {
  if (!std::isfinite(horizon) || !(horizon > 0.0)) {
    throw InvalidInput("horizon must be finite and positive");
  }
  if (!std::isfinite(dt) || !(dt > 0.0)) throw InvalidInput("dt must be finite and positive");
  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps) + 1);
  for (long k = 0; k < steps; ++k) grid.push_back(static_cast<double>(k) * dt);
  grid.push_back(horizon);

  std::vector<double> ex = extra;
  for (double e : ex) {
    if (!std::isfinite(e) || e < 0.0 || e > horizon) {
      throw InvalidInput("schedule point outside [0, horizon]");
    }
  }
  std::sort(ex.begin(), ex.end());
  ex.erase(std::unique(ex.begin(), ex.end()), ex.end());

  const double tol = 1e-9 * dt;
  std::vector<double> out;
  out.reserve(grid.size() + ex.size());
  std::size_t i = 0, j = 0;
  while (i < grid.size() || j < ex.size()) {
    if (j < ex.size() && i < grid.size() && std::abs(grid[i] - ex[j]) <= tol) {
      out.push_back(ex[j]);
      ++i;
      ++j;
    } else if (j == ex.size() || (i < grid.size() && grid[i] < ex[j])) {
      out.push_back(grid[i++]);
    } else {
      out.push_back(ex[j++]);
    }
  }
  // The horizon is always the last point; an extra equal to it was merged above.
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories

namespace {

constexpr double kBisectionTol = 1e-10;
constexpr double kImpossibleRate = 1e-14;

struct Recorder {
  std::vector<double> times;  // empty: record everything
  std::size_t next = 0;

  explicit Recorder(const std::vector<double>& record, double horizon) : times(record) {
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    for (double t : times) {
      if (!std::isfinite(t) || t < 0.0 || t > horizon) {
        throw InvalidInput("record time outside [0, horizon]");
      }
    }
  }

  bool all() const { return times.empty(); }

  bool wants(double t) {
    if (all()) return true;
    if (next < times.size() && times[next] == t) {
      ++next;
      return true;
    }
    return false;
  }
};

/// Running state of one counting path.
struct CountingRun {
  Index n;
  CountingTrajectory out;
  Recorder rec;
  CVector x;  // normalized state, column-stacked
  std::int64_t count = 0;
  double compensator = 0.0;
  double fm_value = 0.0;  // filter martingale
  double x0_obs = 0.0;
  std::int64_t step_count = 0;  // jumps inside the current micro-step

  CountingRun(const DensityMatrix& rho0, const PathOptions& opt, double horizon)
      : n(rho0.dim()), rec(opt.record_times, horizon), x(vec(rho0.matrix())) {
    if (opt.observable) {
      const CMatrix& obs = *opt.observable;
      if (obs.rows() != n || obs.cols() != n) throw DimensionMismatch("observable dimension");
      if (!is_hermitian(obs, 1e-12)) throw InvalidInput("observable must be Hermitian");
      x0_obs = detail::vec_expectation(x, obs);
    }
    out.min_step_increment = 0;
    out.max_step_increment = 0;
  }

  void record(double t, const std::optional<CMatrix>& obs) {
    out.grid.push_back(t);
    CMatrix m = unvec(x, n);
    out.states.emplace_back(0.5 * (m + m.adjoint()));
    out.observation.push_back(static_cast<double>(count));
    out.counts.push_back(count);
    out.martingale.push_back(static_cast<double>(count) - compensator);
    if (obs) out.filter_martingale.push_back(fm_value);
  }

  void end_micro_step() {
    out.max_step_increment = std::max(out.max_step_increment, step_count);
    out.min_step_increment = std::min(out.min_step_increment, step_count);
    step_count = 0;
    ++out.micro_steps;
  }
};

// rho(X) at the end of a smooth piece minus the trapezoid drift integral.
void advance_filter_martingale(CountingRun& run, detail::StepPropagator& prop, const CVector& x0,
                               const CVector& x1_pre, double t0, double t1) {
  if (!prop.observable()) return;
  const CMatrix& obs = *prop.observable();
  const double d0 = detail::vec_expectation(x0, prop.drift(t0));
  const double d1 = detail::vec_expectation(x1_pre, prop.drift(t1));
  run.fm_value += detail::vec_expectation(x1_pre, obs) - detail::vec_expectation(x0, obs) -
                  0.5 * (t1 - t0) * (d0 + d1);
}

void apply_jump_obs(CountingRun& run, detail::StepPropagator& prop, const CVector& pre,
                    const CVector& post) {
  if (!prop.observable()) return;
  const CMatrix& obs = *prop.observable();
  run.fm_value += detail::vec_expectation(post, obs) - detail::vec_expectation(pre, obs);
}

// J(sigma)/Tr J(sigma) for column-stacked sigma; returns Tr J(sigma).
double jump_state(const CMatrix& a, const CVector& sigma, Index n, CVector& post) {
  const CMatrix m = unvec(sigma, n);
  const CMatrix j = a * m * a.adjoint();
  const double tr = j.trace().real();
  if (tr > 0.0) post = vec(j) / tr;
  return tr;
}

OutcomeSet finish_outcomes(double horizon, std::vector<double> jumps) {
  double h = horizon;
  if (!jumps.empty() && jumps.back() >= horizon) {
    h = std::nextafter(jumps.back(), std::numeric_limits<double>::infinity());
  }
  return OutcomeSet(h, std::move(jumps));
}

void check_run_inputs(const Unraveling& u, const DensityMatrix& rho0, double horizon,
                      const PathOptions& opt) {
  if (rho0.dim() != u.model().dim()) throw DimensionMismatch("initial state dimension");
  if (!std::isfinite(horizon) || !(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  if (!std::isfinite(opt.dt) || !(opt.dt > 0.0)) throw InvalidInput("dt must be positive");
}

// Survival crossing of u inside (t0, t1]: safeguarded Newton on
// s(tau) = Tr exp((tau - t0) L_smooth) x, using s'(tau) = -Tr J(y(tau)).
// Returns tau and leaves the unnormalized state at tau in y.
double refine_jump_time(detail::StepPropagator& prop, const CVector& x, Index n, double t0,
                        double t1, double s1, double u, CVector& y) {
  double lo = t0, hi = t1;
  double tau = t0 + (t1 - t0) * std::log(u) / std::log(s1);
  if (!(tau > lo && tau < hi)) tau = 0.5 * (lo + hi);
  CVector post(n * n);
  for (int iter = 1;; ++iter) {
    y.noalias() = prop.smooth(t0, tau - t0) * x;
    const double s = detail::vec_trace(y, n);
    if (!(s > 0.0)) throw RefinementFailure("survival vanished at the refined jump time");
    if (s >= u) {
      lo = tau;
    } else {
      hi = tau;
    }
    const double rate = jump_state(prop.jump_operator(tau), y, n, post);
    double next = rate > 0.0 ? tau + (s - u) / rate : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - tau) <= kBisectionTol || hi - lo <= kBisectionTol) return tau;
    if (iter > 200) {
      std::ostringstream os;
      os.precision(17);
      os << "jump-time refinement stalled in [" << lo << ", " << hi << "] after " << iter
         << " iterations (threshold " << u << ", step start " << t0 << ")";
      throw RefinementFailure(os.str());
    }
    tau = next;
  }
}

}  // namespace

namespace detail {

CountingTrajectory sample_counting_exact(const Unraveling& unraveling, const DensityMatrix& rho0,
                                         double horizon, RngStream& rng,
                                         const PathOptions& options, ScaledIncrementStats* scaled) {
  check_run_inputs(unraveling, rho0, horizon, options);
  const auto sched = step_schedule(horizon, options.dt, options.record_times);
  detail::StepPropagator prop(unraveling, options.dt, options.observable);
  CountingRun run(rho0, options, horizon);
  const Index n = run.n;
  std::vector<double> jumps;

  if (run.rec.wants(0.0)) run.record(0.0, options.observable);
  // Jump when the conditional survival since the last event drops below u.
  double u = rng.uniform();
  CVector y(n * n), post(n * n);
  for (std::size_t k = 0; k + 1 < sched.size(); ++k) {
    double t0 = sched[k];
    const double t1 = sched[k + 1];
    for (;;) {
      y.noalias() = prop.smooth(t0, t1 - t0) * run.x;
      const double s1 = detail::vec_trace(y, n);
      if (!(s1 > 0.0)) throw InvalidState("smooth flow lost all norm");
      if (s1 >= u) {
        advance_filter_martingale(run, prop, run.x, y / s1, t0, t1);
        run.compensator -= std::log(s1);
        u /= s1;
        run.x = y / s1;
        detail::hermitize(run.x, n);
        break;
      }
      const double tau = refine_jump_time(prop, run.x, n, t0, t1, s1, u, y);
      const double s = detail::vec_trace(y, n);
      const CVector pre = y / s;
      advance_filter_martingale(run, prop, run.x, pre, t0, tau);
      run.compensator -= std::log(s);
      const double rate = jump_state(prop.jump_operator(tau), pre, n, post);
      if (!(rate > 0.0)) {
        std::ostringstream os;
        os.precision(17);
        os << "survival crossed the threshold at t = " << tau << " but the jump rate is zero";
        throw RefinementFailure(os.str());
      }
      apply_jump_obs(run, prop, pre, post);
      run.x = post;
      detail::hermitize(run.x, n);
      ++run.count;
      ++run.step_count;
      jumps.push_back(tau);
      u = rng.uniform();
      if (run.rec.all() && tau < t1) run.record(tau, options.observable);
      t0 = tau;
    }
    if (scaled) scaled->add(run.step_count, t1 - sched[k]);
    run.end_micro_step();
    if (run.rec.wants(t1)) run.record(t1, options.observable);
  }
  run.out.jumps = finish_outcomes(horizon, std::move(jumps));
  return std::move(run.out);
}



CountingTrajectory run_counting_steps(const Unraveling& unraveling, const DensityMatrix& rho0,
                                      double horizon, RngStream* rng, const OutcomeSet* record,
                                      const PathOptions& options, ScaledIncrementStats* scaled) {
  check_run_inputs(unraveling, rho0, horizon, options);
  std::vector<double> extra = options.record_times;
  if (record) {
    for (double t : record->times()) {
      if (t >= horizon) throw InvalidInput("replayed jump at or beyond the horizon");
    }
    extra.insert(extra.end(), record->times().begin(), record->times().end());
  }
  const auto sched = step_schedule(horizon, options.dt, extra);

  // Schedule indices at which a replayed jump fires.
  std::vector<char> fires(sched.size(), 0);
  if (record) {
    const double tol = 1e-9 * options.dt;
    for (double t : record->times()) {
      auto it = std::lower_bound(sched.begin(), sched.end(), t - tol);
      if (it == sched.end() || std::abs(*it - t) > tol) {
        throw GridMismatch("replayed jump time missing from the step schedule");
      }
      const auto idx = static_cast<std::size_t>(it - sched.begin());
      if (idx == 0) throw ImpossibleOutcome("replayed jump at t = 0 has no smooth interval");
      if (fires[idx]) throw InvalidInput("replayed jumps closer than the schedule resolution");
      fires[idx] = 1;
    }
  }

  detail::StepPropagator prop(unraveling, options.dt, options.observable);
  CountingRun run(rho0, options, horizon);
  const Index n = run.n;
  std::vector<double> jumps;
  if (run.rec.wants(0.0)) run.record(0.0, options.observable);

  CVector y(n * n), pre(n * n), post(n * n);
  for (std::size_t k = 0; k + 1 < sched.size(); ++k) {
    const double t0 = sched[k];
    const double t1 = sched[k + 1];
    y.noalias() = prop.smooth(t0, t1 - t0) * run.x;
    const double s = detail::vec_trace(y, n);
    if (!(s > 0.0)) throw InvalidState("smooth flow lost all norm");
    run.compensator -= std::log(s);
    pre = y / s;
    advance_filter_martingale(run, prop, run.x, pre, t0, t1);

    bool jump = false;
    if (record) {
      jump = fires[k + 1] != 0;
    } else {
      jump = rng->uniform() < 1.0 - s;
    }
    if (jump) {
      const double rate = jump_state(prop.jump_operator(t1), pre, n, post);
      if (!(rate > kImpossibleRate)) {
        std::ostringstream os;
        os.precision(17);
        os << "jump at t = " << t1 << " has rate Tr J(rho) = " << rate
           << "; the record has probability zero";
        throw ImpossibleOutcome(os.str());
      }
      apply_jump_obs(run, prop, pre, post);
      run.x = post;
      ++run.count;
      ++run.step_count;
      jumps.push_back(t1);
    } else {
      run.x = pre;
    }
    detail::hermitize(run.x, n);
    if (scaled) scaled->add(run.step_count, t1 - t0);
    run.end_micro_step();
    if (run.rec.wants(t1)) run.record(t1, options.observable);
  }
  run.out.jumps = finish_outcomes(horizon, std::move(jumps));
  return std::move(run.out);
}

void ScaledIncrementStats::add(std::int64_t dn, double h) {
  const double dnf = static_cast<double>(dn);
  const double dw = epsilon * dnf - h / epsilon;
  const double lhs = dw * dw;
  const double rhs = epsilon * dw + h;
  // Terms of (dW)^2 that the Ito table discards: dt^2/eps^2 - 2 dN dt and,
  // for several jumps in one step, eps^2 (dN^2 - dN).
  const double dropped =
      h * h / (epsilon * epsilon) - 2.0 * dnf * h + epsilon * epsilon * (dnf * dnf - dnf);
  const double scale = std::max({std::abs(lhs), std::abs(rhs), std::abs(dropped), h});
  max_identity_error = std::max(max_identity_error, std::abs(lhs - rhs - dropped) / scale);
  max_dropped = std::max(max_dropped, std::abs(dropped));
  quadratic_variation += lhs;
}

}  // namespace detail

CountingTrajectory sample_counting_trajectory(const Unraveling& unraveling,
                                              const DensityMatrix& rho0, double horizon,
                                              RngStream& rng, const PathOptions& options) {
  return detail::sample_counting_exact(unraveling, rho0, horizon, rng, options, nullptr);
}

CountingTrajectory integrate_counting_sse(const Unraveling& unraveling, const DensityMatrix& rho0,
                                          double horizon, RngStream& rng,
                                          const PathOptions& options) {
  return detail::run_counting_steps(unraveling, rho0, horizon, &rng, nullptr, options, nullptr);
}

CountingTrajectory integrate_counting_sse(const Unraveling& unraveling, const DensityMatrix& rho0,
                                          double horizon, const OutcomeSet& record,
                                          const PathOptions& options) {
  return detail::run_counting_steps(unraveling, rho0, horizon, nullptr, &record, options,
                                    nullptr);
}

}  // namespace qfilter
