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

#include "qfilter/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qfilter/errors.hpp"

namespace qfilter {

std::size_t grid_index(const std::vector<double>& grid, double t) {
  auto it = std::lower_bound(grid.begin(), grid.end(), t - 1e-12);
  if (it == grid.end() || std::abs(*it - t) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "time " << t << " is not on the path grid";
    throw GridMismatch(os.str());
  }
  return static_cast<std::size_t>(it - grid.begin());
}

EnsembleSummary ensemble_mean(const std::vector<const FilteredPath*>& paths,
                              const std::vector<double>& checkpoints, std::uint64_t seed) {
  if (paths.size() < 2) throw InvalidInput("ensemble_mean needs at least 2 paths");
  const Index n = paths.front()->states.empty() ? 0 : paths.front()->states.front().dim();
  if (n == 0) throw InvalidInput("paths carry no states");
  EnsembleSummary out;
  out.checkpoints = checkpoints;
  out.trajectories = paths.size();
  out.seed = seed;
  const double m = static_cast<double>(paths.size());
  for (double t : checkpoints) {
    CMatrix sum = CMatrix::Zero(n, n);
    Eigen::MatrixXd sr = Eigen::MatrixXd::Zero(n, n), si = Eigen::MatrixXd::Zero(n, n);
    for (const FilteredPath* p : paths) {
      const CMatrix& rho = p->states[grid_index(p->grid, t)].matrix();
      if (rho.rows() != n) throw GridMismatch("paths have different state dimensions");
      sum += rho;
    }
    const CMatrix mean = sum / m;
    // Second pass for a numerically stable variance.
    for (const FilteredPath* p : paths) {
      const CMatrix d = p->states[grid_index(p->grid, t)].matrix() - mean;
      sr += d.real().cwiseAbs2();
      si += d.imag().cwiseAbs2();
    }
    out.mean.push_back(mean);
    out.stderr_real.push_back((sr / (m - 1.0) / m).cwiseSqrt());
    out.stderr_imag.push_back((si / (m - 1.0) / m).cwiseSqrt());
  }
  return out;
}

OracleComparison compare_to_oracle(const EnsembleSummary& summary,
                                   const std::vector<DensityMatrix>& oracle, double floor) {
  if (oracle.size() != summary.checkpoints.size()) {
    throw GridMismatch("oracle has a different number of checkpoints");
  }
  OracleComparison out;
  out.within_3se = true;
  for (std::size_t c = 0; c < oracle.size(); ++c) {
    const CMatrix diff = summary.mean[c] - oracle[c].matrix();
    for (Index j = 0; j < diff.cols(); ++j) {
      for (Index i = 0; i < diff.rows(); ++i) {
        const double parts[2] = {diff(i, j).real(), diff(i, j).imag()};
        const double ses[2] = {summary.stderr_real[c](i, j), summary.stderr_imag[c](i, j)};
        for (int q = 0; q < 2; ++q) {
          const double err = std::abs(parts[q]);
          const double se = ses[q];
          out.max_abs_error = std::max(out.max_abs_error, err);
          out.max_stderr = std::max(out.max_stderr, se);
          double z = 0.0;
          if (err > floor) z = se > 0.0 ? err / se : err / floor;
          if (err > 3.0 * se + floor) out.within_3se = false;
          if (z > out.max_z) {
            out.max_z = z;
            std::ostringstream os;
            os.precision(6);
            os << "t=" << summary.checkpoints[c] << " " << (q == 0 ? "Re" : "Im") << " rho(" << i
               << "," << j << ") err=" << err << " se=" << se;
            out.worst = os.str();
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Martingale tests

namespace {

const std::vector<double>& process_path(const FilteredPath& p, ProcessKind kind) {
  switch (kind) {
    case ProcessKind::Innovation:
      return p.martingale;
    case ProcessKind::FilterMartingale:
      return p.filter_martingale;
    case ProcessKind::Observation:
      return p.observation;
  }
  return p.martingale;
}

}  // namespace

PathFunctional constant_functional() {
  return {"1", [](const FilteredPath&, std::size_t) { return 1.0; }};
}

PathFunctional value_at_s(ProcessKind kind, std::string name) {
  return {std::move(name),
          [kind](const FilteredPath& p, std::size_t s) { return process_path(p, kind)[s]; }};
}

PathFunctional population_at_s(Index k) {
  return {"rho_s(" + std::to_string(k) + "," + std::to_string(k) + ")",
          [k](const FilteredPath& p, std::size_t s) { return p.states[s](k, k).real(); }};
}

PathFunctional no_count_by_s() {
  return {"1{N_s=0}",
          [](const FilteredPath& p, std::size_t s) { return p.observation[s] == 0.0 ? 1.0 : 0.0; }};
}

PathFunctional positive_observation_at_s() {
  return {"1{W_s>0}",
          [](const FilteredPath& p, std::size_t s) { return p.observation[s] > 0.0 ? 1.0 : 0.0; }};
}

double normal_upper_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("quantile probability must lie in (0, 1)");
  // Bisection on the upper tail 0.5 erfc(z / sqrt 2).
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double tail = 0.5 * std::erfc(mid / std::sqrt(2.0));
    if (tail > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double bonferroni_z(std::size_t m, double alpha) {
  if (m == 0) return 0.0;
  return normal_upper_quantile(alpha / (2.0 * static_cast<double>(m)));
}

MartingaleReport martingale_test(const std::vector<const FilteredPath*>& paths,
                                 const std::string& process, ProcessKind kind,
                                 const std::vector<PathFunctional>& conditioning,
                                 const std::vector<double>& checkpoints) {
  if (conditioning.empty()) throw InvalidInput("martingale_test: empty conditioning set");
  if (paths.size() < 2) throw InvalidInput("martingale_test needs at least 2 paths");
  MartingaleReport r;
  r.process = process;
  for (const auto& g : conditioning) r.functionals.push_back(g.name);
  std::vector<double> cps = checkpoints;
  std::sort(cps.begin(), cps.end());

  const double n = static_cast<double>(paths.size());
  for (std::size_t a = 0; a < cps.size(); ++a) {
    for (std::size_t b = a + 1; b < cps.size(); ++b) {
      for (const auto& g : conditioning) {
        double sum = 0.0;
        std::vector<double> v;
        v.reserve(paths.size());
        for (const FilteredPath* p : paths) {
          const auto& proc = process_path(*p, kind);
          if (proc.size() != p->grid.size()) {
            throw GridMismatch("process '" + process + "' is not recorded on the path grid");
          }
          const std::size_t is = grid_index(p->grid, cps[a]);
          const std::size_t it = grid_index(p->grid, cps[b]);
          const double x = (proc[it] - proc[is]) * g.g(*p, is);
          v.push_back(x);
          sum += x;
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double se = std::sqrt(ss / (n - 1.0) / n);
        double z = 0.0;
        if (se > 0.0) {
          z = mean / se;
        } else if (mean != 0.0) {
          z = std::copysign(std::numeric_limits<double>::max(), mean);
        }
        r.cells.push_back({cps[a], cps[b], g.name, mean, se, z});
        r.max_abs_z = std::max(r.max_abs_z, std::abs(z));
      }
    }
  }
  r.tests = r.cells.size();
  r.bonferroni_z = bonferroni_z(r.tests);
  r.within_3 = r.max_abs_z <= 3.0;
  r.within_bonferroni = r.max_abs_z <= r.bonferroni_z;
  r.pass = r.max_abs_z <= std::max(3.0, r.bonferroni_z);
  return r;
}

// ---------------------------------------------------------------------------
// Counting statistics

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidInput("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

CountingStatistics counting_statistics(const std::vector<CountingTrajectory>& paths,
                                       const Unraveling& unraveling, const DensityMatrix& rho0,
                                       const CountingStatisticsOptions& options) {
  CountingStatistics out;
  for (const auto& p : paths) {
    if (p.jumps.empty()) {
      ++out.censored;
    } else {
      out.first_jumps.push_back(p.jumps.times().front());
    }
  }

  // Survival Tr exp(t L_smooth) rho0 of the first jump.
  std::function<double(double)> survival;
  std::optional<SemigroupPropagator> flow;
  if (!unraveling.is_time_dependent()) {
    flow.emplace(unraveling.at(0.0).smooth);
    survival = [&](double t) { return flow->apply(t, rho0.matrix()).trace().real(); };
  } else {
    survival = [&](double t) {
      if (t <= 0.0) return 1.0;
      return davies_weight(unraveling, OutcomeSet(t, {}), rho0).density;
    };
  }
  const auto cdf = [&](double t) { return 1.0 - survival(t); };

  const double n_all = static_cast<double>(paths.size());
  if (!out.first_jumps.empty()) {
    // Censored paths sit above every observed time, so the CDF over the
    // observed range uses the full sample size.
    std::vector<double> s = out.first_jumps;
    std::sort(s.begin(), s.end());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double f = cdf(s[i]);
      d = std::max(d, std::max(static_cast<double>(i + 1) / n_all - f,
                               f - static_cast<double>(i) / n_all));
    }
    out.waiting_ks = d;
  }

  const auto& edges = options.bin_edges;
  if (edges.size() >= 2) {
    out.waiting.edges = edges;
    out.waiting.empty = out.first_jumps.empty();
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      const double lo = edges[b], hi = edges[b + 1];
      const double width = hi - lo;
      const auto cnt = std::count_if(out.first_jumps.begin(), out.first_jumps.end(),
                                     [&](double t) { return t >= lo && t < hi; });
      out.waiting.density.push_back(static_cast<double>(cnt) / n_all / width);
      out.waiting.expected.push_back((cdf(hi) - cdf(lo)) / width);
    }
  }

  const double t0 = options.rate_window_start, t1 = options.rate_window_end;
  if (t1 > t0 && !paths.empty()) {
    std::vector<double> r;
    r.reserve(paths.size());
    for (const auto& p : paths) {
      const auto a = grid_index(p.grid, t0), b = grid_index(p.grid, t1);
      r.push_back(static_cast<double>(p.counts[b] - p.counts[a]) / (t1 - t0));
    }
    double mean = 0.0;
    for (double x : r) mean += x;
    mean /= n_all;
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    out.rate = mean;
    out.rate_stderr = paths.size() > 1 ? std::sqrt(ss / (n_all - 1.0) / n_all) : 0.0;

    // Oracle: time average of Tr J(rho_bar_t) over the window.
    const int m = std::max(1, options.oracle_points);
    const double h = (t1 - t0) / m;
    std::vector<double> times;
    for (int k = 0; k < m; ++k) times.push_back(t0 + (k + 0.5) * h);
    const auto states = master_trajectory(unraveling.model(), rho0, times);
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      const UnravelingSplit split = unraveling.at(times[static_cast<std::size_t>(k)]);
      acc += split.jump.apply(states[static_cast<std::size_t>(k)].matrix()).trace().real();
    }
    out.oracle_rate = acc / m;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ito laws

QuadraticVariationReport quadratic_variation_test(const std::vector<DiffusiveTrajectory>& paths,
                                                  double horizon, double dt) {
  QuadraticVariationReport r;
  r.paths = paths.size();
  r.bound = 4.0 * std::sqrt(2.0 * horizon * dt);
  for (const auto& p : paths) {
    const double dev = std::abs(p.quadratic_variation - horizon);
    r.max_deviation = std::max(r.max_deviation, dev);
    if (dev > r.bound) ++r.failures;
  }
  r.pass = r.failures == 0 && !paths.empty();
  return r;
}

bool counting_increments_are_binary(const std::vector<std::int64_t>& counts) {
  for (std::size_t k = 1; k < counts.size(); ++k) {
    const std::int64_t d = counts[k] - counts[k - 1];
    if (d * d != d) return false;
  }
  return true;
}

}  // namespace qfilter
