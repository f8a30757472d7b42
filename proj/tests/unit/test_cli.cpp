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
#include <sstream>

#include <gtest/gtest.h>

#include "qfilter/cli/commands.hpp"
#include "qfilter/ensemble.hpp"
#include "qfilter/errors.hpp"
#include "support/oracles.hpp"

namespace qfilter::cli {
namespace {

std::string read_file(const std::string& name) {
  std::ifstream in(std::string(QFILTER_GOLDEN_DIR) + "/" + name);
  EXPECT_TRUE(in.good()) << name;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> parse_master(const std::string& text) {
  std::istringstream in(text);
  expect_csv_schema(in, kMasterSchema);
  std::string line;
  std::getline(in, line);  // header row
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

RunConfig small_run(Scheme s) {
  RunConfig c;
  c.scheme = s;
  c.n_traj = 8;
  c.horizon = 1.0;
  c.checkpoints = {0.5, 1.0};
  c.dt = 1e-2;
  c.seed = 123;
  return c;
}

TEST(Config, ParsesAndRejects) {
  const RunConfig c = parse_config(
      R"({"schema":"qfilter.config/1","model":{"preset":"resonance-fluorescence","rabi":2,"kappa_s":0.6},"scheme":"homodyne","n_traj":5})");
  EXPECT_EQ(c.params.rabi, 2.0);
  EXPECT_NEAR(c.params.kappa_f.real(), 0.8, 1e-15);
  EXPECT_EQ(c.scheme, Scheme::Homodyne);
  EXPECT_EQ(c.n_traj, 5u);
  EXPECT_THROW(parse_config(R"({"bogus":1})"), InvalidInput);
  EXPECT_THROW(parse_config(R"({"model":{"rabbi":1}})"), InvalidInput);
  EXPECT_THROW(parse_config(R"({"schema":"qfilter.config/9"})"), SchemaError);
  EXPECT_THROW(parse_config(R"({"n_traj":0})"), InvalidInput);
  EXPECT_THROW(parse_config("{"), InvalidInput);
  EXPECT_THROW(parse_scheme("photon"), InvalidInput);
  RunConfig bad;
  bad.dt = -1.0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = RunConfig{};
  bad.checkpoints = {3.0};
  EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(Config, RoundTripsThroughJson) {
  RunConfig c = small_run(Scheme::ScaledCount);
  c.params.kappa_s = Complex(0.0, std::sqrt(0.5));
  c.epsilon = 0.25;
  const RunConfig d = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
  EXPECT_EQ(d.params.kappa_s, c.params.kappa_s);
}

TEST(Master, InitialRowAndDecayColumn) {
  RunConfig c;
  c.preset = "spontaneous-decay";
  c.initial_state = "excited";
  c.horizon = 3.0;
  c.checkpoints = {0.5, 1.0, 2.0};
  std::ostringstream out;
  ASSERT_EQ(cmd_master(c, out), 0);
  const auto rows = parse_master(out.str());
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], (std::vector<double>{0, 1, 0, 0, 0, 0, 0, 0, 0}));
  for (const auto& r : rows) EXPECT_NEAR(r[1], std::exp(-r[0]), 1e-12);
}

TEST(Master, DefaultRunMatchesGoldenAndIndependentIntegration) {
  std::ostringstream out;
  ASSERT_EQ(cmd_master(RunConfig{}, out), 0);
  const auto got = parse_master(out.str());
  const auto golden = parse_master(read_file("master_default.csv"));
  ASSERT_EQ(got.size(), golden.size());
  const RunConfig c;
  for (std::size_t k = 0; k < got.size(); ++k) {
    for (std::size_t j = 0; j < got[k].size(); ++j) EXPECT_NEAR(got[k][j], golden[k][j], 1e-12);
    const CMatrix ref = testing::rk4(
        [&](double t, const CMatrix& r) {
          return testing::rf_rhs(c.params.omega0, c.params.rabi, c.params.laser_freq,
                                 c.params.gamma, t, r);
        },
        DensityMatrix::basis(2, 1).matrix(), 0.0, golden[k][0], 4000);
    EXPECT_NEAR(golden[k][1], ref(0, 0).real(), 1e-9);
    EXPECT_NEAR(golden[k][3], ref(0, 1).real(), 1e-9);
    EXPECT_NEAR(golden[k][4], ref(0, 1).imag(), 1e-9);
  }
}

TEST(Derive, GoldenText) {
  for (const auto& [scheme, unit, file] :
       std::vector<std::tuple<std::string, bool, std::string>>{
           {"count", false, "derive_count.txt"},
           {"homodyne", false, "derive_homodyne.txt"},
           {"count", true, "derive_count_unit.txt"},
           {"homodyne", true, "derive_homodyne_unit.txt"}}) {
    std::ostringstream out;
    ASSERT_EQ(cmd_derive(scheme, unit, out), 0);
    EXPECT_EQ(out.str(), read_file(file)) << file;
  }
  std::ostringstream out;
  EXPECT_THROW(cmd_derive("heterodyne", false, out), InvalidInput);
}

TEST(Trajectories, SameSeedSameBytesAnyWorkerCount) {
  for (Scheme s : {Scheme::Count, Scheme::ScaledCount, Scheme::Homodyne}) {
    RunConfig c = small_run(s);
    c.epsilon = 0.5;
    std::ostringstream a, b, d;
    cmd_trajectories(c, a, nullptr);
    cmd_trajectories(c, b, nullptr);
    c.workers = 4;
    cmd_trajectories(c, d, nullptr);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str(), d.str());
    c.seed = 124;
    std::ostringstream e;
    cmd_trajectories(c, e, nullptr);
    EXPECT_NE(a.str(), e.str());
  }
}

TEST(Trajectories, UnobservedChannelGivesMasterPath) {
  for (Scheme s : {Scheme::Count, Scheme::Homodyne}) {
    RunConfig c = small_run(s);
    c.n_traj = 1;
    c.params.kappa_f = 1.0;
    c.params.kappa_s = 0.0;
    std::ostringstream out;
    cmd_trajectories(c, out, nullptr);
    std::istringstream in(out.str());
    const auto file = read_trajectories(in);
    ASSERT_EQ(file.paths.size(), 1u);
    const auto master = master_trajectory(c.model(), c.initial(), record_times(c));
    for (std::size_t k = 0; k < master.size(); ++k) {
      EXPECT_LE((file.paths[0].states[k].matrix() - master[k].matrix()).norm(), 1e-10);
    }
  }
}

TEST(Trajectories, RecordsRoundTripAndSummaryParses) {
  RunConfig c = small_run(Scheme::Count);
  std::ostringstream out, summary;
  cmd_trajectories(c, out, &summary);
  std::istringstream in(out.str());
  const auto file = read_trajectories(in);
  EXPECT_EQ(file.header.seed, 123u);
  EXPECT_EQ(file.header.scheme, "count");
  EXPECT_EQ(file.paths.size(), 8u);
  EXPECT_EQ(file.paths[0].grid, (std::vector<double>{0.0, 0.5, 1.0}));
  std::ostringstream again;
  for (std::size_t i = 0; i < file.paths.size(); ++i) write_trajectory_lines(again, i, file.paths[i]);
  EXPECT_NE(out.str().find(again.str()), std::string::npos);
  std::istringstream sin(summary.str());
  const auto rows = read_summary_csv(sin);
  EXPECT_EQ(rows.size(), 12u);
}

TEST(Trajectories, ReaderRejectsUnknownSchema) {
  std::istringstream a(R"({"schema":"qfilter.trajectories/2","rng":"x","seed":0,"n_traj":0,"scheme":"count","config":{}})");
  EXPECT_THROW(read_trajectories(a), SchemaError);
  std::istringstream b("not json\n");
  EXPECT_THROW(read_trajectories(b), SchemaError);
  std::istringstream c("# qfilter.summary/7\n");
  EXPECT_THROW(read_summary_csv(c), SchemaError);
}

TEST(Trajectories, FailuresCarryTrajectoryId) {
  try {
    run_ensemble(10, 1, 3, [](RngStream&, std::size_t i) -> int {
      if (i == 7 || i == 9) throw StepSizeError("boom");
      return 0;
    });
    FAIL() << "expected TrajectoryError";
  } catch (const TrajectoryError& e) {
    EXPECT_EQ(e.trajectory_id(), 7u);
  }
  RunConfig c = small_run(Scheme::ScaledCount);
  c.epsilon = 0.01;
  std::ostringstream out;
  try {
    cmd_trajectories(c, out, nullptr);
    FAIL() << "expected TrajectoryError";
  } catch (const TrajectoryError& e) {
    EXPECT_EQ(e.trajectory_id(), 0u);
  }
}

TEST(Check, PassesOnConsistentRunAndFailsOnCorruptedStates) {
  RunConfig c = small_run(Scheme::Count);
  c.n_traj = 400;
  std::ostringstream out;
  cmd_trajectories(c, out, nullptr);
  std::istringstream in(out.str());
  std::ostringstream report;
  EXPECT_EQ(cmd_check(in, report), 0) << report.str();
  EXPECT_EQ(report.str().rfind("# qfilter.check/1\n", 0), 0u);

  c.params.rabi = 3.0;  // states no longer follow the header's model
  std::ostringstream other;
  cmd_trajectories(c, other, nullptr);
  std::string text = other.str();
  const std::string header = out.str().substr(0, out.str().find('\n'));
  text = header + text.substr(text.find('\n'));
  std::istringstream bad(text);
  std::ostringstream report2;
  EXPECT_EQ(cmd_check(bad, report2), 1) << report2.str();
}

}  // namespace
}  // namespace qfilter::cli
