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

#include "qfilter/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qfilter/errors.hpp"

namespace qfilter::cli {

using nlohmann::json;

namespace {

Complex parse_complex(const json& v, const char* key) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw InvalidInput(std::string("'") + key + "' must be a number or [re, im]");
}

json complex_json(Complex c) {
  if (c.imag() == 0.0) return c.real();
  return json::array({c.real(), c.imag()});
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidInput(std::string(name) + " must be finite");
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "count") return Scheme::Count;
  if (name == "scaled-count") return Scheme::ScaledCount;
  if (name == "homodyne") return Scheme::Homodyne;
  throw InvalidInput("unknown scheme '" + name + "' (count, scaled-count, homodyne)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Count: return "count";
    case Scheme::ScaledCount: return "scaled-count";
    case Scheme::Homodyne: return "homodyne";
  }
  return "count";
}

void RunConfig::validate() const {
  require_finite(params.omega0, "omega0");
  require_finite(params.rabi, "rabi");
  require_finite(params.laser_freq, "laser_freq");
  require_finite(params.gamma, "gamma");
  require_finite(std::abs(params.kappa_f), "kappa_f");
  require_finite(std::abs(params.kappa_s), "kappa_s");
  require_finite(epsilon, "epsilon");
  require_finite(phi0, "phi0");
  require_finite(omega_lo, "omega_lo");
  require_finite(horizon, "horizon");
  require_finite(dt, "dt");
  if (n_traj < 1) throw InvalidInput("n_traj must be at least 1");
  if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  if (scheme == Scheme::ScaledCount && !(epsilon > 0.0)) {
    throw InvalidInput("scaled-count needs epsilon > 0");
  }
  for (double c : checkpoints) {
    require_finite(c, "checkpoint");
    if (c < 0.0 || c > horizon) throw InvalidInput("checkpoint outside [0, horizon]");
  }
  for (double e : eps_schedule) {
    require_finite(e, "eps_schedule entry");
    if (!(e > 0.0)) throw InvalidInput("eps_schedule entries must be positive");
  }
  if (initial_state != "ground" && initial_state != "excited") {
    throw InvalidInput("initial_state must be 'ground' or 'excited'");
  }
  if (workers < 1) throw InvalidInput("workers must be at least 1");
}

LindbladModel RunConfig::model() const { return preset_model(preset, params); }

DensityMatrix RunConfig::initial() const {
  return DensityMatrix::basis(2, initial_state == "excited" ? 0 : 1);
}

HomodyneSpec RunConfig::homodyne() const {
  HomodyneSpec s;
  s.epsilon = scheme == Scheme::Homodyne ? 0.0 : epsilon;
  s.phi0 = phi0;
  s.omega_lo = omega_lo;
  return s;
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("config must be a JSON object");
  const std::string schema = doc.value("schema", std::string(kConfigSchema));
  if (schema != kConfigSchema) throw SchemaError("unsupported config schema '" + schema + "'");

  static const std::set<std::string> known{
      "schema", "model",   "initial_state", "scheme",       "epsilon", "phi0",
      "omega_lo", "horizon", "dt",          "n_traj",       "seed",    "checkpoints",
      "workers", "eps_schedule", "out",     "summary_out"};
  for (const auto& [k, v] : doc.items()) {
    if (!known.count(k)) throw InvalidInput("unknown config key '" + k + "'");
  }

  RunConfig c;
  try {
    if (doc.contains("model")) {
      const json& m = doc.at("model");
      static const std::set<std::string> model_keys{"preset", "rabi",    "omega0", "laser_freq",
                                                    "kappa_f", "kappa_s", "gamma"};
      for (const auto& [k, v] : m.items()) {
        if (!model_keys.count(k)) throw InvalidInput("unknown model key '" + k + "'");
      }
      c.preset = m.value("preset", c.preset);
      c.params.rabi = m.value("rabi", c.params.rabi);
      c.params.omega0 = m.value("omega0", c.params.omega0);
      c.params.laser_freq = m.value("laser_freq", c.params.laser_freq);
      c.params.gamma = m.value("gamma", c.params.gamma);
      const bool has_f = m.contains("kappa_f");
      const bool has_s = m.contains("kappa_s");
      if (has_s) c.params.kappa_s = parse_complex(m.at("kappa_s"), "kappa_s");
      if (has_f) c.params.kappa_f = parse_complex(m.at("kappa_f"), "kappa_f");
      // One splitting coefficient fixes the other's modulus.
      if (has_s && !has_f) {
        c.params.kappa_f = std::sqrt(std::max(0.0, 1.0 - std::norm(c.params.kappa_s)));
      } else if (has_f && !has_s) {
        c.params.kappa_s = std::sqrt(std::max(0.0, 1.0 - std::norm(c.params.kappa_f)));
      }
    }
    c.initial_state = doc.value("initial_state", c.initial_state);
    if (doc.contains("scheme")) c.scheme = parse_scheme(doc.at("scheme").get<std::string>());
    c.epsilon = doc.value("epsilon", c.epsilon);
    c.phi0 = doc.value("phi0", c.phi0);
    c.omega_lo = doc.value("omega_lo", c.omega_lo);
    c.horizon = doc.value("horizon", c.horizon);
    c.dt = doc.value("dt", c.dt);
    if (doc.contains("n_traj")) {
      const auto n = doc.at("n_traj").get<long long>();
      if (n < 1) throw InvalidInput("n_traj must be at least 1");
      c.n_traj = static_cast<std::size_t>(n);
    }
    c.seed = doc.value("seed", c.seed);
    c.checkpoints = doc.value("checkpoints", c.checkpoints);
    c.workers = doc.value("workers", c.workers);
    c.eps_schedule = doc.value("eps_schedule", c.eps_schedule);
    c.out = doc.value("out", c.out);
    c.summary_out = doc.value("summary_out", c.summary_out);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  json m{{"preset", c.preset},
         {"rabi", c.params.rabi},
         {"omega0", c.params.omega0},
         {"laser_freq", c.params.laser_freq},
         {"kappa_f", complex_json(c.params.kappa_f)},
         {"kappa_s", complex_json(c.params.kappa_s)},
         {"gamma", c.params.gamma}};
  json doc{{"schema", kConfigSchema},
           {"model", m},
           {"initial_state", c.initial_state},
           {"scheme", scheme_name(c.scheme)},
           {"epsilon", c.epsilon},
           {"phi0", c.phi0},
           {"omega_lo", c.omega_lo},
           {"horizon", c.horizon},
           {"dt", c.dt},
           {"n_traj", c.n_traj},
           {"seed", c.seed},
           {"checkpoints", c.checkpoints},
           {"eps_schedule", c.eps_schedule}};
  return doc.dump();
}

}  // namespace qfilter::cli
