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

#include "qfilter/ito.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <tuple>

#include "qfilter/errors.hpp"

namespace qfilter::ito {

namespace {

constexpr double kDropTolerance = 1e-13;

std::string format_real(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

int increment_rank(IncKind k) {
  switch (k) {
    case IncKind::None: return 0;
    case IncKind::dAdag: return 1;
    case IncKind::dLambda: return 2;
    case IncKind::dA: return 3;
    case IncKind::dt: return 4;
  }
  return 5;
}

bool is_scalar(const Atom& a) { return a.kind == AtomKind::Scalar; }

Word dagger_word(const Word& w) {
  Word out;
  out.atoms.reserve(w.atoms.size());
  for (auto it = w.atoms.rbegin(); it != w.atoms.rend(); ++it) out.atoms.push_back(it->dagger());
  return out;
}

/// Identity key: kind, name, adjoint and inner word.
std::string atom_key(const Atom& a) {
  return std::to_string(static_cast<int>(a.kind)) + ':' + a.render();
}

std::string word_key(const Word& w) {
  std::string non_scalar;
  std::string scalars;
  for (const auto& a : w.atoms) {
    auto& dst = is_scalar(a) ? scalars : non_scalar;
    if (!dst.empty()) dst += ' ';
    dst += atom_key(a);
  }
  return non_scalar + '\x01' + scalars;
}

/// Removes cancelling pairs from a run of commuting atoms.
void cancel_pairs(std::vector<Atom>& group) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < group.size() && !changed; ++i) {
      const Atom& a = group[i];
      for (std::size_t j = 0; j < group.size() && !changed; ++j) {
        if (i == j) continue;
        const Atom& b = group[j];
        bool cancel = false;
        if (a.kind == AtomKind::Scalar && a.unimodular && b.kind == AtomKind::Scalar &&
            b.unimodular && a.name == b.name && a.adjoint != b.adjoint) {
          cancel = true;
        }
        if (a.kind == AtomKind::Inverse && a.inner && a.inner->atoms.size() == 1 &&
            a.inner->atoms.front() == b) {
          cancel = true;
        }
        if (cancel) {
          const auto hi = std::max(i, j);
          const auto lo = std::min(i, j);
          group.erase(group.begin() + static_cast<std::ptrdiff_t>(hi));
          group.erase(group.begin() + static_cast<std::ptrdiff_t>(lo));
          changed = true;
        }
      }
    }
  }
}

Word canonical_word(const Word& w) {
  std::vector<Atom> scalars;
  std::vector<Atom> out;
  std::vector<Atom> commuting;
  std::vector<Atom> system;
  auto flush = [&]() {
    cancel_pairs(commuting);
    std::stable_sort(commuting.begin(), commuting.end(), atom_less);
    out.insert(out.end(), commuting.begin(), commuting.end());
    out.insert(out.end(), system.begin(), system.end());
    commuting.clear();
    system.clear();
  };
  for (const auto& a : w.atoms) {
    if (a.kind == AtomKind::Scalar) {
      scalars.push_back(a);
    } else if (a.kind == AtomKind::Process) {
      flush();
      out.push_back(a);
    } else if (a.commutes_with_system()) {
      commuting.push_back(a);
    } else {
      system.push_back(a);
    }
  }
  flush();
  cancel_pairs(scalars);
  std::stable_sort(scalars.begin(), scalars.end(), atom_less);
  Word result;
  result.atoms = std::move(scalars);
  result.atoms.insert(result.atoms.end(), out.begin(), out.end());
  return result;
}

void multiply_terms(const Term& a, const Term& b, std::vector<Term>& sink) {
  Expr inc = ito_product(a.inc, b.inc);
  for (const auto& it : inc.terms()) {
    Term t;
    t.coeff = a.coeff * b.coeff * it.coeff;
    t.word.atoms = a.word.atoms;
    t.word.atoms.insert(t.word.atoms.end(), b.word.atoms.begin(), b.word.atoms.end());
    t.inc = it.inc;
    sink.push_back(std::move(t));
  }
}

std::string render_term_body(const Term& t, bool& negative) {
  const double re = t.coeff.real();
  const double im = t.coeff.imag();
  std::string coeff;
  negative = false;
  if (im == 0.0) {
    negative = re < 0.0;
    const double r = std::abs(re);
    if (r != 1.0) coeff = format_real(r);
  } else if (re == 0.0) {
    negative = im < 0.0;
    const double y = std::abs(im);
    coeff = y == 1.0 ? "i" : format_real(y) + "i";
  } else {
    coeff = "(" + format_real(re) + (im < 0 ? "-" : "+") + format_real(std::abs(im)) + "i)";
  }
  std::vector<std::string> parts;
  if (!coeff.empty()) parts.push_back(coeff);
  if (!t.word.atoms.empty()) parts.push_back(t.word.render());
  if (t.inc.kind != IncKind::None) parts.push_back(t.inc.render());
  if (parts.empty()) return "1";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += ' ' + parts[i];
  return out;
}

Complex scalar_value(const Atom& a, const Assignment& asg) {
  auto it = asg.scalar.find(a.name);
  if (it == asg.scalar.end()) throw InvalidInput("no value bound for '" + a.name + "'");
  return a.adjoint ? std::conj(it->second) : it->second;
}

CMatrix evaluate_word(const Word& w, const Assignment& asg);

Complex evaluate_commuting(const Atom& a, const Assignment& asg) {
  switch (a.kind) {
    case AtomKind::Scalar:
    case AtomKind::Observed:
      return scalar_value(a, asg);
    case AtomKind::CondExp: {
      const CMatrix m = evaluate_word(*a.inner, asg);
      if (asg.rho.rows() != m.rows() || asg.rho.cols() != m.cols()) {
        throw DimensionMismatch("state and operator dimensions differ in E[...]");
      }
      return (asg.rho * m).trace();
    }
    case AtomKind::Inverse: {
      const Complex v = evaluate_commuting(a.inner->atoms.front(), asg);
      if (std::abs(v) == 0.0) throw InvalidInput("inverse of zero in " + a.render());
      return 1.0 / v;
    }
    default:
      throw InvalidInput("atom " + a.render() + " is not a scalar");
  }
}

CMatrix evaluate_word(const Word& w, const Assignment& asg) {
  CMatrix m = CMatrix::Identity(asg.dim, asg.dim);
  for (const auto& a : w.atoms) {
    if (a.kind == AtomKind::Process) {
      throw InvalidInput("cannot evaluate process atom " + a.render());
    }
    if (a.kind == AtomKind::System) {
      auto it = asg.system.find(a.name);
      if (it == asg.system.end()) throw InvalidInput("no matrix bound for '" + a.name + "'");
      if (it->second.rows() != asg.dim || it->second.cols() != asg.dim) {
        throw DimensionMismatch("matrix for '" + a.name + "' has the wrong shape");
      }
      if (a.adjoint && !a.self_adjoint) {
        m = m * it->second.adjoint();
      } else {
        m = m * it->second;
      }
    } else {
      m *= evaluate_commuting(a, asg);
    }
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Atoms, words, increments

Atom Atom::dagger() const {
  Atom out = *this;
  switch (kind) {
    case AtomKind::CondExp:
    case AtomKind::Inverse:
      out.inner = std::make_shared<const Word>(
          kind == AtomKind::CondExp ? canonical_word(dagger_word(*inner)) : dagger_word(*inner));
      break;
    default:
      if (!self_adjoint) out.adjoint = !adjoint;
      break;
  }
  return out;
}

std::string Atom::render() const {
  switch (kind) {
    case AtomKind::Scalar:
      if (unimodular) return adjoint ? "e^{-i " + name + "}" : "e^{i " + name + "}";
      return adjoint ? "conj(" + name + ")" : name;
    case AtomKind::CondExp:
      return "E[" + inner->render() + "]";
    case AtomKind::Inverse:
      return "inv(" + inner->render() + ")";
    default:
      return adjoint ? name + "^*" : name;
  }
}

bool operator==(const Atom& a, const Atom& b) {
  return a.kind == b.kind && atom_key(a) == atom_key(b);
}

bool atom_less(const Atom& a, const Atom& b) {
  const std::string ia = a.inner ? a.inner->render() : std::string();
  const std::string ib = b.inner ? b.inner->render() : std::string();
  return std::tie(a.name, a.adjoint, ia) < std::tie(b.name, b.adjoint, ib);
}

std::string Word::render() const {
  if (atoms.empty()) return "1";
  std::string out;
  for (const auto& a : atoms) {
    if (!out.empty()) out += ' ';
    out += a.render();
  }
  return out;
}

bool operator==(const Word& a, const Word& b) {
  if (a.atoms.size() != b.atoms.size()) return false;
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    if (!(a.atoms[i] == b.atoms[i])) return false;
  }
  return true;
}

Increment Increment::dagger() const {
  switch (kind) {
    case IncKind::dA: return adag(i);
    case IncKind::dAdag: return a(i);
    case IncKind::dLambda: return lambda(j, i);
    default: return *this;
  }
}

std::string Increment::render() const {
  switch (kind) {
    case IncKind::None: return "";
    case IncKind::dA: return "dA_" + i;
    case IncKind::dAdag: return "dA^*_" + i;
    case IncKind::dLambda:
      if (i.size() == 1 && j.size() == 1) return "dLambda_" + i + j;
      return "dLambda_{" + i + "," + j + "}";
    case IncKind::dt: return "dt";
  }
  return "";
}

bool increment_less(const Increment& a, const Increment& b) {
  return std::make_tuple(increment_rank(a.kind), a.i, a.j) <
         std::make_tuple(increment_rank(b.kind), b.i, b.j);
}

// ---------------------------------------------------------------------------
// Canonical form

Expr canonical(std::vector<Term> terms) {
  struct Entry {
    Term term;
    std::string key;
  };
  std::vector<Entry> merged;
  std::map<std::string, std::size_t> index;
  for (auto& t : terms) {
    if (std::abs(t.coeff) <= kDropTolerance) continue;
    t.word = canonical_word(t.word);
    const std::string key = t.inc.render() + '\x02' + word_key(t.word);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, merged.size());
      std::string wk = word_key(t.word);
      merged.push_back({std::move(t), std::move(wk)});
    } else {
      merged[it->second].term.coeff += t.coeff;
    }
  }
  std::stable_sort(merged.begin(), merged.end(), [](const Entry& a, const Entry& b) {
    if (increment_less(a.term.inc, b.term.inc)) return true;
    if (increment_less(b.term.inc, a.term.inc)) return false;
    return a.key < b.key;
  });
  Expr out;
  for (auto& e : merged) {
    if (std::abs(e.term.coeff) <= kDropTolerance) continue;
    out.terms_.push_back(std::move(e.term));
  }
  return out;
}

Expr Expr::scalar(Complex c) {
  Term t;
  t.coeff = c;
  return canonical({t});
}

Expr Expr::from_term(Term t) { return canonical({std::move(t)}); }

Expr Expr::atom(Atom a) {
  Term t;
  t.word.atoms.push_back(std::move(a));
  return canonical({t});
}

Expr Expr::increment(Increment inc) {
  Term t;
  t.inc = std::move(inc);
  return canonical({t});
}

Expr Expr::operator+(const Expr& o) const {
  std::vector<Term> all = terms_;
  all.insert(all.end(), o.terms_.begin(), o.terms_.end());
  return canonical(std::move(all));
}

Expr Expr::operator-(const Expr& o) const { return *this + (-o); }

Expr Expr::operator-() const { return *this * Complex(-1.0, 0.0); }

Expr Expr::operator*(const Expr& o) const {
  std::vector<Term> all;
  all.reserve(terms_.size() * o.terms_.size());
  for (const auto& a : terms_) {
    for (const auto& b : o.terms_) multiply_terms(a, b, all);
  }
  return canonical(std::move(all));
}

Expr Expr::operator*(Complex c) const {
  std::vector<Term> all = terms_;
  for (auto& t : all) t.coeff *= c;
  return canonical(std::move(all));
}

Expr operator*(Complex c, const Expr& e) { return e * c; }

Expr Expr::dagger() const {
  std::vector<Term> all;
  all.reserve(terms_.size());
  for (const auto& t : terms_) {
    Term d;
    d.coeff = std::conj(t.coeff);
    d.word = dagger_word(t.word);
    d.inc = t.inc.dagger();
    all.push_back(std::move(d));
  }
  return canonical(std::move(all));
}

Expr Expr::coefficient_of(const Increment& inc) const {
  std::vector<Term> all;
  for (const auto& t : terms_) {
    if (t.inc == inc) {
      Term c = t;
      c.inc = Increment::none();
      all.push_back(std::move(c));
    }
  }
  return canonical(std::move(all));
}

Expr Expr::filter(const Increment& inc) const {
  std::vector<Term> all;
  for (const auto& t : terms_) {
    if (t.inc == inc) all.push_back(t);
  }
  return canonical(std::move(all));
}

std::string Expr::render() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    bool negative = false;
    const std::string body = render_term_body(terms_[k], negative);
    if (k == 0) {
      out += negative ? "-" + body : body;
    } else {
      out += negative ? " - " : " + ";
      out += body;
    }
  }
  return out;
}

bool Expr::operator==(const Expr& o) const { return (*this - o).is_zero(); }

// ---------------------------------------------------------------------------
// Constructors

Expr sys(const std::string& name, bool self_adjoint) {
  Atom a;
  a.kind = AtomKind::System;
  a.name = name;
  a.self_adjoint = self_adjoint;
  return Expr::atom(std::move(a));
}

Expr observed(const std::string& name, bool self_adjoint) {
  Atom a;
  a.kind = AtomKind::Observed;
  a.name = name;
  a.self_adjoint = self_adjoint;
  return Expr::atom(std::move(a));
}

Expr phase(const std::string& name) {
  Atom a;
  a.kind = AtomKind::Scalar;
  a.name = name;
  a.unimodular = true;
  return Expr::atom(std::move(a));
}

Expr complex_scalar(const std::string& name) {
  Atom a;
  a.kind = AtomKind::Scalar;
  a.name = name;
  return Expr::atom(std::move(a));
}

Expr process(const std::string& name) {
  Atom a;
  a.kind = AtomKind::Process;
  a.name = name;
  return Expr::atom(std::move(a));
}

Expr cond_exp(const Expr& e) {
  std::vector<Term> all;
  all.reserve(e.terms().size());
  for (const auto& t : e.terms()) {
    if (t.inc.kind != IncKind::None) {
      throw InvalidInput("E[...] of a term carrying " + t.inc.render());
    }
    Term out;
    out.coeff = t.coeff;
    Word inner;
    for (const auto& a : t.word.atoms) {
      if (a.kind == AtomKind::Process) {
        throw InvalidInput("E[...] of a term containing " + a.render());
      }
      if (a.kind == AtomKind::System) {
        inner.atoms.push_back(a);
      } else {
        out.word.atoms.push_back(a);
      }
    }
    if (!inner.atoms.empty()) {
      Atom ce;
      ce.kind = AtomKind::CondExp;
      ce.name = "E";
      ce.inner = std::make_shared<const Word>(std::move(inner));
      out.word.atoms.push_back(std::move(ce));
    }
    all.push_back(std::move(out));
  }
  return canonical(std::move(all));
}

Expr inverse(const Expr& e) {
  if (e.terms().size() != 1) {
    throw DerivationFailure("inv(...) needs a single term, got '" + e.render() + "'");
  }
  const Term& t = e.terms().front();
  if (t.inc.kind != IncKind::None) throw DerivationFailure("inv(...) of an increment");
  Term out;
  out.coeff = 1.0 / t.coeff;
  for (const auto& a : t.word.atoms) {
    if (!a.commutes_with_system()) {
      throw DerivationFailure("inv(...) of a noncommuting factor " + a.render());
    }
    if (a.kind == AtomKind::Scalar) {
      if (!a.unimodular) throw DerivationFailure("inv(...) of scalar " + a.render());
      out.word.atoms.push_back(a.dagger());
    } else if (a.kind == AtomKind::Inverse) {
      out.word.atoms.push_back(a.inner->atoms.front());
    } else {
      Atom inv;
      inv.kind = AtomKind::Inverse;
      inv.name = "inv";
      inv.inner = std::make_shared<const Word>(Word{{a}});
      out.word.atoms.push_back(std::move(inv));
    }
  }
  return canonical({out});
}

// ---------------------------------------------------------------------------
// Ito calculus

Expr ito_product(const Increment& m1, const Increment& m2) {
  if (m1.kind == IncKind::None) return Expr::increment(m2);
  if (m2.kind == IncKind::None) return Expr::increment(m1);
  if (m1.kind == IncKind::dA && m2.kind == IncKind::dAdag && m1.i == m2.i) {
    return Expr::increment(Increment::dt());
  }
  if (m1.kind == IncKind::dA && m2.kind == IncKind::dLambda && m1.i == m2.i) {
    return Expr::increment(Increment::a(m2.j));
  }
  if (m1.kind == IncKind::dLambda && m2.kind == IncKind::dAdag && m1.j == m2.i) {
    return Expr::increment(Increment::adag(m1.i));
  }
  if (m1.kind == IncKind::dLambda && m2.kind == IncKind::dLambda && m1.j == m2.i) {
    return Expr::increment(Increment::lambda(m1.i, m2.j));
  }
  return Expr::zero();
}

std::vector<SubsetTerm> expand_product_differential(const std::vector<Factor>& factors) {
  const std::size_t p = factors.size();
  if (p == 0 || p > 16) throw InvalidInput("product differential needs 1..16 factors");
  std::vector<SubsetTerm> out;
  out.reserve((std::size_t{1} << p) - 1);
  for (std::size_t mask = 1; mask < (std::size_t{1} << p); ++mask) {
    SubsetTerm st;
    Expr prod = Expr::scalar(1.0);
    for (std::size_t i = 0; i < p; ++i) {
      const bool d = (mask >> i) & 1U;
      if (d) st.subset.push_back(static_cast<int>(i + 1));
      prod = prod * (d ? factors[i].differential : factors[i].value);
    }
    st.contribution = std::move(prod);
    out.push_back(std::move(st));
  }
  return out;
}

Expr sum_subsets(const std::vector<SubsetTerm>& terms, const std::vector<std::vector<int>>& which) {
  Expr out;
  for (const auto& w : which) {
    auto it = std::find_if(terms.begin(), terms.end(),
                           [&](const SubsetTerm& st) { return st.subset == w; });
    if (it == terms.end()) throw InvalidInput("subset not present in the expansion");
    out = out + it->contribution;
  }
  return out;
}

Expr strip_cocycle(const Expr& e, const std::string& process_name) {
  std::vector<Term> all;
  for (const auto& t : e.terms()) {
    std::vector<Atom> scalars;
    std::vector<Atom> rest;
    for (const auto& a : t.word.atoms) {
      (a.kind == AtomKind::Scalar ? scalars : rest).push_back(a);
    }
    const bool shape = rest.size() >= 2 && rest.front().kind == AtomKind::Process &&
                       rest.front().name == process_name && rest.front().adjoint &&
                       rest.back().kind == AtomKind::Process && rest.back().name == process_name &&
                       !rest.back().adjoint;
    if (!shape) {
      throw DerivationFailure("term is not of the form " + process_name + "^* ... " +
                              process_name + ": " + Expr::from_term(t).render());
    }
    Term out = t;
    out.word.atoms = scalars;
    for (std::size_t k = 1; k + 1 < rest.size(); ++k) {
      if (rest[k].kind == AtomKind::Process) {
        throw DerivationFailure("nested process atom in " + Expr::from_term(t).render());
      }
      out.word.atoms.push_back(rest[k]);
    }
    all.push_back(std::move(out));
  }
  return canonical(std::move(all));
}

// ---------------------------------------------------------------------------
// Numeric evaluation

CMatrix evaluate(const Expr& e, const Assignment& a) {
  CMatrix out = CMatrix::Zero(a.dim, a.dim);
  for (const auto& t : e.terms()) {
    if (t.inc.kind != IncKind::None) {
      throw InvalidInput("cannot evaluate a term carrying " + t.inc.render());
    }
    out += t.coeff * evaluate_word(t.word, a);
  }
  return out;
}

}  // namespace qfilter::ito
