#include "poip/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace poip {

void Polynomial::canonicalize() {
  std::vector<PolyTerm> merged;
  merged.reserve(terms.size());
  for (auto& t : terms) {
    // Merge repeated ids inside one term by exponent addition, then sort.
    std::map<int, int> acc;
    for (auto& [v, e] : t.powers) acc[v] += e;
    PolyTerm nt;
    nt.coef = t.coef;
    nt.powers.assign(acc.begin(), acc.end());
    if (nt.powers.empty()) {
      constant += nt.coef;
    } else {
      merged.push_back(std::move(nt));
    }
  }
  std::sort(merged.begin(), merged.end(),
            [](const PolyTerm& a, const PolyTerm& b) { return a.powers < b.powers; });
  terms.clear();
  for (auto& t : merged) {
    if (!terms.empty() && terms.back().powers == t.powers) {
      terms.back().coef += t.coef;
    } else {
      terms.push_back(std::move(t));
    }
  }
  std::erase_if(terms, [](const PolyTerm& t) { return t.coef == 0.0; });
}

void Instance::canonicalize() {
  objective.canonicalize();
  for (auto& c : constraints) {
    c.lhs.canonicalize();
    if (c.lhs.constant != 0.0) {
      c.rhs -= c.lhs.constant;
      c.lhs.constant = 0.0;
    }
  }
}

static void validate_poly(const Polynomial& p, int n, const std::string& where) {
  for (std::size_t ti = 0; ti < p.terms.size(); ++ti) {
    const auto& t = p.terms[ti];
    const std::string at = where + ".terms[" + std::to_string(ti) + "]";
    if (t.powers.empty()) throw ValidationError(at + ": empty powers after canonicalization");
    int prev = -1;
    for (auto& [v, e] : t.powers) {
      if (v < 0 || v >= n) throw ValidationError(at + ": variable id " + std::to_string(v) + " out of range");
      if (v <= prev) throw ValidationError(at + ": powers not sorted/distinct");
      if (e < 1) throw ValidationError(at + ": exponent " + std::to_string(e) + " < 1");
      prev = v;
    }
    if (!std::isfinite(t.coef)) throw ValidationError(at + ": non-finite coefficient");
  }
}

void Instance::validate() const {
  const int n = n_vars();
  for (int i = 0; i < n; ++i) {
    const auto& v = variables[static_cast<std::size_t>(i)];
    const std::string at = "variables[" + std::to_string(i) + "]";
    if (v.id != i) throw ValidationError(at + ": ids must be dense 0..n-1 in order");
    if (std::isnan(v.lb) || std::isnan(v.ub)) throw ValidationError(at + ": NaN bound");
    if (v.lb > v.ub) throw ValidationError(at + ": lb > ub");
    if (v.type == VarType::Binary && (v.lb != 0.0 || v.ub != 1.0))
      throw ValidationError(at + ": binary bounds must be [0,1]");
    if (v.type == VarType::Integer &&
        ((std::isfinite(v.lb) && v.lb != std::floor(v.lb)) ||
         (std::isfinite(v.ub) && v.ub != std::floor(v.ub))))
      throw ValidationError(at + ": integer bounds must be integral");
  }
  validate_poly(objective, n, "objective");
  for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
    const auto& c = constraints[ci];
    const std::string at = "constraints[" + std::to_string(ci) + "]";
    if (c.id != static_cast<int>(ci)) throw ValidationError(at + ": ids must be dense 0..m-1 in order");
    if (!std::isfinite(c.rhs)) throw ValidationError(at + ": non-finite rhs");
    if (c.lhs.constant != 0.0) throw ValidationError(at + ": lhs constant not folded into rhs");
    validate_poly(c.lhs, n, at);
  }
}

double powi(double x, int e) {
  if (e <= 0) return 1.0;
  double r = x;
  for (int k = 1; k < e; ++k) r *= x;
  return r;
}

double evaluate_polynomial(const Polynomial& p, std::span<const double> x) {
  double acc = p.constant;
  for (const auto& t : p.terms) {
    double v = t.coef;
    for (auto& [var, e] : t.powers) v *= powi(x[static_cast<std::size_t>(var)], e);
    acc += v;
  }
  return acc;
}

double objective_value(const Instance& inst, std::span<const double> x) {
  return evaluate_polynomial(inst.objective, x);
}

double original_objective_value(const Instance& inst, std::span<const double> x) {
  double v = objective_value(inst, x);
  return inst.minimize ? -v : v;
}

FeasReport check_feasible(const Instance& inst, std::span<const double> x, double tol) {
  FeasReport rep;
  rep.constraints.resize(inst.constraints.size());
  rep.bounds.resize(inst.variables.size());
  for (std::size_t ci = 0; ci < inst.constraints.size(); ++ci) {
    const auto& c = inst.constraints[ci];
    const double lhs = evaluate_polynomial(c.lhs, x);
    double viol = 0.0;
    switch (c.sense) {
      case Sense::LE: viol = std::max(0.0, lhs - c.rhs); break;
      case Sense::GE: viol = std::max(0.0, c.rhs - lhs); break;
      case Sense::EQ: viol = std::abs(lhs - c.rhs); break;
    }
    rep.constraints[ci] = {viol <= tol, viol};
    if (viol > rep.max_violation) rep.max_violation = viol;
    rep.feasible = rep.feasible && viol <= tol;
  }
  for (std::size_t vi = 0; vi < inst.variables.size(); ++vi) {
    const auto& v = inst.variables[vi];
    const double val = x[vi];
    double viol = 0.0;
    if (val < v.lb) viol = v.lb - val;
    if (val > v.ub) viol = std::max(viol, val - v.ub);
    rep.bounds[vi] = {viol <= tol, viol};
    if (viol > rep.max_violation) rep.max_violation = viol;
    rep.feasible = rep.feasible && viol <= tol;
  }
  return rep;
}

static Interval interval_mul(const Interval& a, const Interval& b) {
  const double c0 = a.lo * b.lo, c1 = a.lo * b.hi, c2 = a.hi * b.lo, c3 = a.hi * b.hi;
  return {std::min(std::min(c0, c1), std::min(c2, c3)),
          std::max(std::max(c0, c1), std::max(c2, c3))};
}

static Interval pow_interval(const Interval& b, int e) {
  if (e % 2 == 1) return {powi(b.lo, e), powi(b.hi, e)};
  const double pl = powi(b.lo, e), ph = powi(b.hi, e);
  if (b.lo <= 0.0 && 0.0 <= b.hi) return {0.0, std::max(pl, ph)};
  return {std::min(pl, ph), std::max(pl, ph)};
}

Interval term_interval(const PolyTerm& t, const PartialAssignment& fixed,
                       std::span<const Interval> bounds) {
  Interval iv{t.coef, t.coef};
  for (auto& [v, e] : t.powers) {
    const auto vi = static_cast<std::size_t>(v);
    if (fixed.is_fixed[vi]) {
      const double p = powi(fixed.value[vi], e);
      iv = interval_mul(iv, {p, p});
    } else {
      const Interval& b = bounds[vi];
      if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
        throw UnboundedError("term interval over infinite bound of variable " + std::to_string(v));
      iv = interval_mul(iv, pow_interval(b, e));
    }
  }
  return iv;
}

Interval polynomial_interval(const Polynomial& p, const PartialAssignment& fixed,
                             std::span<const Interval> bounds) {
  Interval acc{p.constant, p.constant};
  for (const auto& t : p.terms) {
    const Interval iv = term_interval(t, fixed, bounds);
    acc.lo += iv.lo;
    acc.hi += iv.hi;
  }
  return acc;
}

bool constraint_provably_unsat(const Constraint& c, const PartialAssignment& fixed,
                               std::span<const Interval> bounds, double tol) {
  const Interval iv = polynomial_interval(c.lhs, fixed, bounds);
  switch (c.sense) {
    case Sense::LE: return iv.lo > c.rhs + tol;
    case Sense::GE: return iv.hi < c.rhs - tol;
    case Sense::EQ: return iv.lo > c.rhs + tol || iv.hi < c.rhs - tol;
  }
  return false;
}

std::vector<Interval> variable_bounds(const Instance& inst) {
  std::vector<Interval> b(inst.variables.size());
  for (std::size_t i = 0; i < inst.variables.size(); ++i)
    b[i] = {inst.variables[i].lb, inst.variables[i].ub};
  return b;
}

namespace {

// Monomial over the binarized variable space; bit-variable exponents are
// capped at one (b^2 = b), passthrough exponents add normally.
using Powers = std::vector<std::pair<int, int>>;

Powers mul_powers(const Powers& a, const Powers& b, const std::vector<char>& is_bit) {
  Powers out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      int e = a[i].second + b[j].second;
      if (is_bit[static_cast<std::size_t>(a[i].first)]) e = 1;
      out.emplace_back(a[i].first, e);
      ++i;
      ++j;
    }
  }
  return out;
}

struct MiniPoly {
  std::map<Powers, double> terms;  // empty key = constant

  void add(const Powers& p, double c) { terms[p] += c; }
};

MiniPoly mini_mul(const MiniPoly& a, const MiniPoly& b, const std::vector<char>& is_bit) {
  MiniPoly out;
  for (const auto& [pa, ca] : a.terms)
    for (const auto& [pb, cb] : b.terms) out.add(mul_powers(pa, pb, is_bit), ca * cb);
  return out;
}

int bits_for_span(double span) {
  int nb = 0;
  double cap = 1.0;  // encodes values 0..cap-1
  while (cap - 1.0 < span) {
    cap *= 2.0;
    ++nb;
  }
  return std::max(nb, 1);
}

}  // namespace

Assignment Binarization::decode(std::span<const double> bin) const {
  Assignment x(map.size(), 0.0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const VarMap& m = map[i];
    switch (m.kind) {
      case VarMap::Kind::Passthrough:
        x[i] = bin[static_cast<std::size_t>(m.bin_id)];
        break;
      case VarMap::Kind::Constant:
        x[i] = m.constant;
        break;
      case VarMap::Kind::Bits: {
        double v = m.offset;
        for (const auto& b : m.bits) v += b.weight * bin[static_cast<std::size_t>(b.bin_id)];
        x[i] = v;
        break;
      }
    }
  }
  return x;
}

Binarization binarize(const Instance& inst) {
  Binarization out;
  out.map.resize(inst.variables.size());
  Instance& bi = out.instance;
  bi.name = inst.name;
  bi.minimize = inst.minimize;
  bi.bks = inst.bks;

  std::vector<char> is_bit;
  struct RangeCon {
    std::vector<BitRef> bits;
    double rhs;
  };
  std::vector<RangeCon> range_cons;

  for (const auto& v : inst.variables) {
    VarMap& m = out.map[static_cast<std::size_t>(v.id)];
    if (v.type == VarType::Integer) {
      if (!std::isfinite(v.lb) || !std::isfinite(v.ub))
        throw UnsupportedError("binarize: integer variable " + v.name + " has infinite bounds");
      if (v.lb == v.ub) {
        m.kind = VarMap::Kind::Constant;
        m.constant = v.lb;
        continue;
      }
      const double span = v.ub - v.lb;
      const int nb = bits_for_span(span);
      m.kind = VarMap::Kind::Bits;
      m.offset = v.lb;
      double weight = 1.0;
      for (int k = 0; k < nb; ++k, weight *= 2.0) {
        const int id = bi.n_vars();
        bi.variables.push_back({id, v.name + "#b" + std::to_string(k), VarType::Binary, 0.0, 1.0});
        is_bit.push_back(1);
        m.bits.push_back({id, weight});
      }
      if (weight - 1.0 > span) range_cons.push_back({m.bits, span});
    } else {
      const int id = bi.n_vars();
      m.kind = VarMap::Kind::Passthrough;
      m.bin_id = id;
      bi.variables.push_back({id, v.name, v.type, v.lb, v.ub});
      is_bit.push_back(0);
    }
  }

  auto substitute = [&](const Polynomial& p) {
    MiniPoly acc;
    acc.add({}, p.constant);
    for (const auto& t : p.terms) {
      MiniPoly prod;
      prod.add({}, t.coef);
      for (auto& [v, e] : t.powers) {
        const VarMap& m = out.map[static_cast<std::size_t>(v)];
        switch (m.kind) {
          case VarMap::Kind::Passthrough: {
            MiniPoly f;
            f.add({{m.bin_id, e}}, 1.0);
            prod = mini_mul(prod, f, is_bit);
            break;
          }
          case VarMap::Kind::Constant: {
            MiniPoly f;
            f.add({}, powi(m.constant, e));
            prod = mini_mul(prod, f, is_bit);
            break;
          }
          case VarMap::Kind::Bits: {
            MiniPoly base;
            base.add({}, m.offset);
            for (const auto& b : m.bits) base.add({{b.bin_id, 1}}, b.weight);
            for (int k = 0; k < e; ++k) prod = mini_mul(prod, base, is_bit);
            break;
          }
        }
      }
      for (const auto& [pw, c] : prod.terms) acc.add(pw, c);
    }
    Polynomial q;
    for (const auto& [pw, c] : acc.terms) {
      if (pw.empty()) {
        q.constant += c;
      } else {
        q.terms.push_back({c, pw});
      }
    }
    q.canonicalize();
    return q;
  };

  bi.objective = substitute(inst.objective);
  for (const auto& c : inst.constraints) {
    Constraint nc;
    nc.id = static_cast<int>(bi.constraints.size());
    nc.sense = c.sense;
    nc.lhs = substitute(c.lhs);
    nc.rhs = c.rhs;
    if (nc.lhs.constant != 0.0) {
      nc.rhs -= nc.lhs.constant;
      nc.lhs.constant = 0.0;
    }
    bi.constraints.push_back(std::move(nc));
  }
  for (const auto& rc : range_cons) {
    Constraint nc;
    nc.id = static_cast<int>(bi.constraints.size());
    nc.sense = Sense::LE;
    for (const auto& b : rc.bits) nc.lhs.terms.push_back({b.weight, {{b.bin_id, 1}}});
    nc.rhs = rc.rhs;
    nc.lhs.canonicalize();
    bi.constraints.push_back(std::move(nc));
  }
  bi.canonicalize();
  return out;
}

}  // namespace poip
