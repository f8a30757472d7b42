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

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "qfilter/cli/commands.hpp"
#include "qfilter/errors.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scheme;
  std::optional<double> eps;
  std::optional<std::size_t> traj;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<unsigned> workers;
  std::string out;
  std::string summary;
  bool check = false;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--scheme", o.scheme, "count, scaled-count or homodyne");
  cmd->add_option("--eps", o.eps, "local-oscillator scale epsilon");
  cmd->add_option("--traj", o.traj, "number of trajectories");
  cmd->add_option("--dt", o.dt, "time step");
  cmd->add_option("--horizon", o.horizon, "final time");
  cmd->add_option("--workers", o.workers, "worker threads (output does not depend on it)");
  cmd->add_option("--out", o.out, "output path (default stdout)");
}

qfilter::cli::RunConfig resolve(const Overrides& o) {
  qfilter::cli::RunConfig c;
  if (!o.config.empty()) c = qfilter::cli::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.scheme) c.scheme = qfilter::cli::parse_scheme(*o.scheme);
  if (o.eps) c.epsilon = *o.eps;
  if (o.traj) c.n_traj = *o.traj;
  if (o.dt) c.dt = *o.dt;
  if (o.horizon) {
    c.horizon = *o.horizon;
    std::erase_if(c.checkpoints, [&](double t) { return t > c.horizon; });
  }
  if (o.workers) c.workers = *o.workers;
  if (!o.out.empty()) c.out = o.out;
  if (!o.summary.empty()) c.summary_out = o.summary;
  c.validate();
  return c;
}

/// Opens `path` for writing, or returns stdout for an empty path.
std::ostream& open_out(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty()) return std::cout;
  holder = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*holder) throw qfilter::InvalidInput("cannot write '" + path + "'");
  return *holder;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum filtering toolkit for a laser-driven two-level atom"};
  app.require_subcommand(1);

  Overrides master_o, traj_o, limit_o;
  auto* master = app.add_subcommand("master", "master-equation oracle table");
  add_run_flags(master, master_o);

  auto* traj = app.add_subcommand("trajectories", "sample filtered trajectories");
  add_run_flags(traj, traj_o);
  traj->add_option("--summary", traj_o.summary, "ensemble summary CSV path");
  traj->add_flag("--check", traj_o.check, "run the statistical checks on the output");

  std::string derive_scheme;
  bool unit = false;
  auto* derive = app.add_subcommand("derive", "derive the Belavkin equation");
  derive->add_option("scheme", derive_scheme, "count or homodyne")->required();
  derive->add_flag("--unit-observable", unit, "derive with X = 1");

  auto* limit = app.add_subcommand("limit", "diffusive-limit report");
  add_run_flags(limit, limit_o);

  std::string check_in, check_out;
  auto* check = app.add_subcommand("check", "statistical checks on a trajectory file");
  check->add_option("input", check_in, "trajectory file")->required()->check(CLI::ExistingFile);
  check->add_option("--out", check_out, "report path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    std::unique_ptr<std::ofstream> holder;
    if (master->parsed()) {
      const auto c = resolve(master_o);
      return qfilter::cli::cmd_master(c, open_out(c.out, holder));
    }
    if (traj->parsed()) {
      const auto c = resolve(traj_o);
      if (traj_o.check && c.out.empty()) {
        throw qfilter::InvalidInput("--check needs --out");
      }
      std::unique_ptr<std::ofstream> summary_holder;
      std::ostream* summary = nullptr;
      if (!c.summary_out.empty()) summary = &open_out(c.summary_out, summary_holder);
      int rc = qfilter::cli::cmd_trajectories(c, open_out(c.out, holder), summary);
      if (rc == 0 && traj_o.check) {
        holder.reset();
        std::ifstream in(c.out, std::ios::binary);
        rc = qfilter::cli::cmd_check(in, std::cerr);
      }
      return rc;
    }
    if (derive->parsed()) return qfilter::cli::cmd_derive(derive_scheme, unit, std::cout);
    if (limit->parsed()) {
      const auto c = resolve(limit_o);
      return qfilter::cli::cmd_limit(c, open_out(c.out, holder));
    }
    if (check->parsed()) {
      std::ifstream in(check_in, std::ios::binary);
      return qfilter::cli::cmd_check(in, open_out(check_out, holder));
    }
  } catch (const std::exception& e) {
    std::cerr << "qfilter: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
