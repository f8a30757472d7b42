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

#include "qfilter/cli/commands.hpp"

#include <algorithm>
#include <ostream>

#include "qfilter/belavkin.hpp"
#include "qfilter/ensemble.hpp"
#include "qfilter/errors.hpp"
#include "qfilter/rng.hpp"

namespace qfilter::cli {

std::vector<double> record_times(const RunConfig& c) {
  std::vector<double> t = c.checkpoints;
  t.push_back(0.0);
  t.push_back(c.horizon);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

int cmd_master(const RunConfig& c, std::ostream& out) {
  c.validate();
  const auto times = record_times(c);
  const auto states = master_trajectory(c.model(), c.initial(), times, c.dt);
  write_master_csv(out, times, states);
  return 0;
}

namespace {

std::vector<FilteredPath> sample_paths(const RunConfig& c) {
  const LindbladModel model = c.model();
  const DensityMatrix rho0 = c.initial();
  PathOptions opts;
  opts.dt = c.dt;
  opts.record_times = record_times(c);
  switch (c.scheme) {
    case Scheme::Count: {
      const Unraveling unr(model, SideCounting{});
      return run_ensemble(c.n_traj, c.seed, c.workers, [&](RngStream& rng, std::size_t) {
        return FilteredPath(integrate_counting_sse(unr, rho0, c.horizon, rng, opts));
      });
    }
    case Scheme::ScaledCount: {
      const HomodyneSpec spec = c.homodyne();
      return run_ensemble(c.n_traj, c.seed, c.workers, [&](RngStream& rng, std::size_t) {
        return FilteredPath(integrate_scaled_counting_sse(model, spec, rho0, c.horizon, rng, opts));
      });
    }
    case Scheme::Homodyne: {
      const HomodyneSpec spec = c.homodyne();
      return run_ensemble(c.n_traj, c.seed, c.workers, [&](RngStream& rng, std::size_t) {
        return FilteredPath(integrate_homodyne_sse(model, spec, rho0, c.horizon, rng, opts));
      });
    }
  }
  return {};
}

}  // namespace

int cmd_trajectories(const RunConfig& c, std::ostream& records, std::ostream* summary) {
  c.validate();
  const auto paths = sample_paths(c);

  TrajectoryHeader h;
  h.rng = std::string(kRngAlgorithm);
  h.seed = c.seed;
  h.n_traj = c.n_traj;
  h.scheme = scheme_name(c.scheme);
  h.config_json = config_to_json(c);
  write_trajectory_header(records, h);
  for (std::size_t i = 0; i < paths.size(); ++i) write_trajectory_lines(records, i, paths[i]);

  if (summary) {
    const auto times = record_times(c);
    const auto s = ensemble_mean(paths, times, c.seed);
    const auto oracle = master_trajectory(c.model(), c.initial(), times, c.dt);
    write_summary_csv(*summary, s, oracle, h.scheme);
  }
  return 0;
}

int cmd_derive(const std::string& scheme, bool unit_observable, std::ostream& out) {
  using namespace ito;
  Measurement m;
  if (scheme == "count") {
    m = counting_measurement("s");
  } else if (scheme == "homodyne") {
    m = quadrature_measurement("s", "phi");
  } else {
    throw InvalidInput("derive supports 'count' and 'homodyne', got '" + scheme + "'");
  }
  const FilterModel model = two_channel_model(unit_observable);
  const GainDerivation d = derive_filter_gain(model, m);
  const BelavkinEquation eq = assemble_belavkin_equation(model, m, d);
  out << "scheme: " << scheme << "\n";
  out << "innovation: dYtilde = " << d.innovation.render() << "\n";
  out << "gain: eta = " << d.eta.render() << "\n";
  out << "equation: " << eq.render() << "\n";
  out << "state form: " << eq.render_state_form() << "\n";
  if (eq.side_conditions.empty()) {
    out << "conditions: none\n";
  } else {
    out << "conditions:";
    for (std::size_t k = 0; k < eq.side_conditions.size(); ++k) {
      out << (k ? ", " : " ") << eq.side_conditions[k];
    }
    out << "\n";
  }
  return 0;
}

int cmd_limit(const RunConfig& c, std::ostream& out) {
  c.validate();
  LimitOptions opt;
  opt.eps_schedule = c.eps_schedule;
  opt.n_traj = c.n_traj;
  opt.dt_cap = c.dt;
  opt.checkpoints = c.checkpoints;
  opt.seed = c.seed;
  opt.workers = c.workers;
  HomodyneSpec spec;
  spec.phi0 = c.phi0;
  spec.omega_lo = c.omega_lo;
  const LimitReport r = diffusive_limit_report(c.model(), spec, c.initial(), opt);
  write_limit_csv(out, r, c.seed, c.n_traj);
  return 0;
}

int cmd_check(std::istream& trajectories, std::ostream& report) {
  const TrajectoryFile file = read_trajectories(trajectories);
  const RunConfig c = parse_config(file.header.config_json);
  const auto times = record_times(c);

  const auto summary = ensemble_mean(file.paths, times, c.seed);
  const auto oracle = master_trajectory(c.model(), c.initial(), times, c.dt);
  const OracleComparison cmp = compare_to_oracle(summary, oracle);

  // M_s is rare-event dominated under counting; the filtered population is not.
  std::vector<PathFunctional> g{constant_functional()};
  if (c.scheme == Scheme::Count) {
    g.push_back(population_at_s(0));
    g.push_back(no_count_by_s());
  } else {
    g.push_back(value_at_s(ProcessKind::Innovation, "M_s"));
    g.push_back(positive_observation_at_s());
  }
  const MartingaleReport mr =
      martingale_test(file.paths, "innovation", ProcessKind::Innovation, g, times);

  report << "# " << kCheckSchema << "\n";
  report << "# scheme=" << file.header.scheme << ",seed=" << file.header.seed
         << ",n_traj=" << file.header.n_traj << "\n";
  report << "check,statistic,threshold,pass\n";
  report << "oracle_max_z," << format_double(cmp.max_z) << ",3,"
         << (cmp.within_3se ? "true" : "false") << "\n";
  report << "martingale_max_abs_z," << format_double(mr.max_abs_z) << ','
         << format_double(std::max(3.0, mr.bonferroni_z)) << ',' << (mr.pass ? "true" : "false")
         << "\n";
  return cmp.within_3se && mr.pass ? 0 : 1;
}

}  // namespace qfilter::cli
