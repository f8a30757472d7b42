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

#include "qfilter/belavkin.hpp"

#include <cctype>

#include "qfilter/errors.hpp"

namespace qfilter::ito {

namespace {

const Complex kI{0.0, 1.0};

/// Removes the single observed atom `name` from every term.
Expr factor_out(const Expr& e, const std::string& name, bool require) {
  std::vector<Term> out;
  for (const auto& t : e.terms()) {
    Term r = t;
    r.word.atoms.clear();
    int found = 0;
    for (const auto& a : t.word.atoms) {
      if (a.kind == AtomKind::Observed && a.name == name) {
        ++found;
      } else {
        r.word.atoms.push_back(a);
      }
    }
    if (found > 1 || (require && found == 0)) {
      throw DerivationFailure("term '" + Expr::from_term(t).render() + "' is not linear in " +
                              name);
    }
    if (found == 1) out.push_back(std::move(r));
  }
  return canonical(std::move(out));
}

Expr without_atom(const Expr& e, const std::string& name) {
  std::vector<Term> out;
  for (const auto& t : e.terms()) {
    bool has = false;
    for (const auto& a : t.word.atoms) {
      if (a.kind == AtomKind::Observed && a.name == name) has = true;
    }
    if (!has) out.push_back(t);
  }
  return canonical(std::move(out));
}

std::vector<std::string> nonzero_conditions(const Expr& c) {
  std::vector<std::string> conds;
  for (const auto& a : c.terms().front().word.atoms) {
    if (a.kind == AtomKind::Scalar && a.unimodular) continue;
    conds.push_back(a.render() + " != 0");
  }
  return conds;
}

}  // namespace

Expr Cocycle::differential() const {
  const Expr u = ito::process(process);
  Expr d = K * Expr::increment(Increment::dt()) * u;
  for (std::size_t j = 0; j < channels.size(); ++j) {
    d = d + L[j] * Expr::increment(Increment::adag(channels[j])) * u;
    d = d + M[j] * Expr::increment(Increment::a(channels[j])) * u;
  }
  return d;
}

Cocycle hudson_parthasarathy(const Expr& hamiltonian, const ChannelList& channels) {
  Cocycle c;
  Expr sum_ll;
  for (const auto& [name, op] : channels) {
    c.channels.push_back(name);
    c.L.push_back(op);
    c.M.push_back(-op.dagger());
    sum_ll = sum_ll + op.dagger() * op;
  }
  c.K = -(kI * hamiltonian + 0.5 * sum_ll);
  return c;
}

void check_cocycle(const Cocycle& cocycle) {
  if (cocycle.L.size() != cocycle.channels.size() || cocycle.M.size() != cocycle.channels.size()) {
    throw DerivationFailure("non-cocycle: coefficient lists do not match the channels");
  }
  Expr sum_ll;
  for (std::size_t j = 0; j < cocycle.channels.size(); ++j) {
    if (!(cocycle.M[j] == -cocycle.L[j].dagger())) {
      throw DerivationFailure("non-cocycle: M_" + cocycle.channels[j] + " = " +
                              cocycle.M[j].render() + " differs from -L^*");
    }
    sum_ll = sum_ll + cocycle.L[j].dagger() * cocycle.L[j];
  }
  if (!(cocycle.K + cocycle.K.dagger() == -sum_ll)) {
    throw DerivationFailure("non-cocycle: K + K^* = " + (cocycle.K + cocycle.K.dagger()).render() +
                            " differs from " + (-sum_ll).render());
  }
}

Expr vacuum_dt_generator(const Cocycle& cocycle, const Expr& x) {
  check_cocycle(cocycle);
  const Expr u = process(cocycle.process);
  const Expr d = cocycle.differential();
  const std::vector<Factor> factors{{u.dagger(), d.dagger()}, {x, Expr::zero()}, {u, d}};
  Expr total;
  for (const auto& st : expand_product_differential(factors)) total = total + st.contribution;
  return strip_cocycle(total.coefficient_of(Increment::dt()), cocycle.process);
}

Expr vacuum_dt_generator(const Expr& hamiltonian, const ChannelList& channels, const Expr& x) {
  return vacuum_dt_generator(hudson_parthasarathy(hamiltonian, channels), x);
}

Expr lindblad_heisenberg(const Expr& hamiltonian, const ChannelList& channels, const Expr& x) {
  Expr out = kI * (hamiltonian * x - x * hamiltonian);
  for (const auto& [name, op] : channels) {
    const Expr ll = op.dagger() * op;
    out = out + op.dagger() * x * op - 0.5 * (ll * x + x * ll);
  }
  return out;
}

Measurement counting_measurement(const std::string& channel) {
  Measurement m;
  m.name = "count";
  m.record_symbol = "dN";
  m.beta.push_back({channel, channel, Expr::scalar(1.0)});
  return m;
}

Measurement quadrature_measurement(const std::string& channel, const std::string& phase_name) {
  Measurement m;
  m.name = "homodyne";
  m.record_symbol = "dW";
  m.alpha.emplace_back(channel, phase(phase_name));
  return m;
}

Expr measurement_differential(const Measurement& m) {
  Expr d;
  for (const auto& [ch, a] : m.alpha) {
    d = d + a * Expr::increment(Increment::adag(ch)) + a.dagger() * Expr::increment(Increment::a(ch));
  }
  for (const auto& b : m.beta) d = d + b.value * Expr::increment(Increment::lambda(b.i, b.j));
  return d;
}

Expr innovation(const Measurement& m, const ChannelList& channels) {
  auto op = [&](const std::string& name) -> const Expr& {
    for (const auto& [n, v] : channels) {
      if (n == name) return v;
    }
    throw DerivationFailure("measurement refers to unknown channel '" + name + "'");
  };
  Expr mean;
  for (const auto& [ch, a] : m.alpha) {
    mean = mean + op(ch).dagger() * a + a.dagger() * op(ch);
  }
  for (const auto& b : m.beta) mean = mean + op(b.i).dagger() * b.value * op(b.j);
  return measurement_differential(m) - cond_exp(mean) * Expr::increment(Increment::dt());
}

FilterModel two_channel_model(bool unit_observable) {
  FilterModel fm;
  fm.hamiltonian = sys("H", true);
  fm.channels = {{"f", sys("V_f")}, {"s", sys("V_s")}};
  fm.unit_observable = unit_observable;
  fm.observable = unit_observable ? Expr::scalar(1.0) : sys("X", true);
  fm.observable_name = unit_observable ? "1" : "X";
  return fm;
}

const std::vector<std::vector<int>>& kept_subsets() {
  static const std::vector<std::vector<int>> kept{{1, 2},    {2, 3},    {2, 4},      {1, 2, 3},
                                                  {1, 2, 4}, {2, 3, 4}, {1, 2, 3, 4}};
  return kept;
}

GainDerivation derive_filter_gain(const FilterModel& model, const Measurement& m) {
  GainDerivation out;
  const Cocycle cocycle = hudson_parthasarathy(model.hamiltonian, model.channels);
  check_cocycle(cocycle);
  const Expr u = process(cocycle.process);
  const Expr du = cocycle.differential();
  const Expr dt = Expr::increment(Increment::dt());

  out.innovation = innovation(m, model.channels);
  const Expr ex = cond_exp(model.observable);
  const Expr lx = model.unit_observable ? Expr::zero() : cond_exp(sys("L(" + model.observable_name + ")"));

  const std::vector<Factor> factors{
      {u.dagger(), du.dagger()},
      {observed("B"), observed("b") * out.innovation + observed("c") * dt},
      {ex - model.observable, observed("eta") * out.innovation + lx * dt},
      {u, du},
  };
  out.expansion = expand_product_differential(factors);

  Expr total;
  for (const auto& subset : kept_subsets()) {
    const Expr raw = sum_subsets(out.expansion, {subset});
    const Expr kept = cond_exp(strip_cocycle(raw.coefficient_of(Increment::dt()), cocycle.process));
    out.surviving.push_back({subset, kept});
    total = total + kept;
  }
  for (const char* name : {"B", "c"}) {
    if (!factor_out(total, name, false).is_zero()) {
      throw DerivationFailure(std::string(name) + " survived the Ito product: " + total.render());
    }
  }

  out.residual = factor_out(total, "b", true);
  out.c = factor_out(out.residual, "eta", false);
  out.a = without_atom(out.residual, "eta");
  if (out.c.is_zero()) {
    throw DerivationFailure("residual does not involve eta: " + out.residual.render());
  }
  out.eta = -(out.a * inverse(out.c));
  out.side_conditions = nonzero_conditions(out.c);

  const Expr check = out.a + out.eta * out.c;
  if (!check.is_zero()) {
    throw DerivationFailure("substituting eta leaves " + check.render());
  }
  return out;
}

std::string BelavkinEquation::render() const {
  return lhs + " = " + drift.render() + " + (" + gain.render() + ") (" + innovation.render() + ")";
}

std::string BelavkinEquation::render_state_form() const {
  const std::string rest = (innovation - measurement).render();
  std::string innov = record_symbol;
  if (rest != "0") innov += rest.front() == '-' ? " - " + rest.substr(1) : " + " + rest;
  return to_state_form(lhs + " = " + drift.render() + " + (" + gain.render() + ") (" + innov + ")");
}

BelavkinEquation assemble_belavkin_equation(const FilterModel& model, const Measurement& m,
                                            const GainDerivation& d) {
  BelavkinEquation eq;
  eq.lhs = "dE[" + model.observable_name + "]";
  eq.drift = cond_exp(sys("L(" + model.observable_name + ")")) * Expr::increment(Increment::dt());
  eq.gain = d.eta;
  eq.innovation = d.innovation;
  eq.measurement = measurement_differential(m);
  eq.record_symbol = m.record_symbol;
  eq.side_conditions = d.side_conditions;
  return eq;
}

std::string to_state_form(const std::string& rendered) {
  std::string out;
  out.reserve(rendered.size() + 16);
  int depth = 0;
  std::vector<int> open;
  for (std::size_t k = 0; k < rendered.size(); ++k) {
    const char ch = rendered[k];
    const bool word_start = k == 0 || !std::isalnum(static_cast<unsigned char>(rendered[k - 1]));
    const bool differential = k == 1 && rendered[0] == 'd';
    if (ch == 'E' && k + 1 < rendered.size() && rendered[k + 1] == '[' &&
        (word_start || differential)) {
      if (differential) out += ' ';
      out += "rho(";
      open.push_back(depth++);
      ++k;
      continue;
    }
    if (ch == '[') {
      ++depth;
      out += ch;
      continue;
    }
    if (ch == ']') {
      --depth;
      if (!open.empty() && open.back() == depth) {
        open.pop_back();
        out += ')';
      } else {
        out += ch;
      }
      continue;
    }
    out += ch;
  }
  return out;
}

}  // namespace qfilter::ito
