#include "poip/generators.hpp"

#include <cmath>
#include <map>
#include <string>

#include "poip/rng.hpp"

namespace poip {

Instance gen_qmkp(const QmkpParams& p) {
  if (p.n_items < 1 || p.n_dims < 1) throw ConfigError("gen_qmkp: n_items and n_dims must be >= 1");
  if (p.density < 0.0 || p.density > 1.0) throw ConfigError("gen_qmkp: density must be in [0,1]");
  Rng rng(p.seed);
  Rng rc = rng.fork("c");
  Rng rq = rng.fork("q");
  Rng ra = rng.fork("a");
  Rng re = rng.fork("edges");

  Instance inst;
  inst.name = "qmkp_" + std::to_string(p.n_items) + "x" + std::to_string(p.n_dims) + "_s" +
              std::to_string(p.seed);
  for (int i = 0; i < p.n_items; ++i)
    inst.variables.push_back({i, "x" + std::to_string(i), VarType::Binary, 0.0, 1.0});

  for (int i = 0; i < p.n_items; ++i)
    inst.objective.terms.push_back(
        {static_cast<double>(rc.next_int(p.c_min, p.c_max)), {{i, 1}}});
  for (int i = 0; i < p.n_items; ++i)
    for (int j = i + 1; j < p.n_items; ++j)
      if (re.next_double() < p.density)
        inst.objective.terms.push_back(
            {static_cast<double>(rq.next_int(p.q_min, p.q_max)), {{i, 1}, {j, 1}}});

  for (int k = 0; k < p.n_dims; ++k) {
    Constraint c;
    c.id = k;
    c.sense = Sense::LE;
    double wsum = 0.0;
    for (int i = 0; i < p.n_items; ++i) {
      const auto a = static_cast<double>(ra.next_int(p.a_min, p.a_max));
      wsum += a;
      c.lhs.terms.push_back({a, {{i, 1}}});
    }
    c.rhs = static_cast<double>(std::llround(0.5 * wsum));
    inst.constraints.push_back(std::move(c));
  }
  inst.canonicalize();
  inst.validate();
  return inst;
}

Instance gen_randqcp(const RandqcpParams& p) {
  if (p.n_vars < 2 || p.n_hyperedges < 0)
    throw ConfigError("gen_randqcp: need n_vars >= 2 and n_hyperedges >= 0");
  if (p.edge_min < 2 || p.edge_max < p.edge_min || p.edge_max > p.n_vars)
    throw ConfigError("gen_randqcp: need 2 <= edge_min <= edge_max <= n_vars");
  Rng rng(p.seed);
  Rng rc = rng.fork("c");
  Rng ra = rng.fork("a");
  Rng rq = rng.fork("q");
  Rng re = rng.fork("edges");

  Instance inst;
  inst.name = "randqcp_" + std::to_string(p.n_vars) + "x" + std::to_string(p.n_hyperedges) +
              "_s" + std::to_string(p.seed);
  for (int i = 0; i < p.n_vars; ++i)
    inst.variables.push_back({i, "x" + std::to_string(i), VarType::Binary, 0.0, 1.0});
  for (int i = 0; i < p.n_vars; ++i)
    inst.objective.terms.push_back(
        {static_cast<double>(rc.next_int(p.c_min, p.c_max)), {{i, 1}}});

  for (int h = 0; h < p.n_hyperedges; ++h) {
    const auto k = static_cast<int>(re.next_int(p.edge_min, p.edge_max));
    std::vector<int> members;
    while (static_cast<int>(members.size()) < k) {
      const auto v = static_cast<int>(re.next_int(0, p.n_vars - 1));
      bool dup = false;
      for (int m : members) dup = dup || m == v;
      if (!dup) members.push_back(v);
    }
    std::sort(members.begin(), members.end());
    Constraint c;
    c.id = h;
    c.sense = Sense::LE;
    for (int m : members)
      c.lhs.terms.push_back({static_cast<double>(ra.next_int(p.a_min, p.a_max)), {{m, 1}}});
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j)
        c.lhs.terms.push_back({static_cast<double>(rq.next_int(p.q_min, p.q_max)),
                               {{members[i], 1}, {members[j], 1}}});
    c.rhs = static_cast<double>(k);
    inst.constraints.push_back(std::move(c));
  }
  inst.canonicalize();
  inst.validate();
  return inst;
}

namespace {

// Dense-exponent monomial product over binary x_ij variables; exponents add
// (no b^2=b here, the multinomial structure is kept as produced).
using Powers = std::vector<std::pair<int, int>>;

struct PolyMap {
  std::map<Powers, double> terms;
  void add(const Powers& pw, double c) { terms[pw] += c; }
};

Powers powers_mul(const Powers& a, const Powers& b) {
  Powers out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

PolyMap poly_mul(const PolyMap& a, const PolyMap& b) {
  PolyMap out;
  for (const auto& [pa, ca] : a.terms)
    for (const auto& [pb, cb] : b.terms) out.add(powers_mul(pa, pb), ca * cb);
  return out;
}

double binom_terms_estimate(int m, int beta) {
  // C(m + beta, beta): monomial count of an (m+1)-ary multinomial power.
  double r = 1.0;
  for (int k = 1; k <= beta; ++k) r = r * (m + k) / k;
  return r;
}

}  // namespace

Instance gen_cflptc(const CflptcParams& p) {
  if (p.n_customers < 1 || p.n_facilities < 1)
    throw ConfigError("gen_cflptc: need n_customers >= 1 and n_facilities >= 1");
  if (p.beta < 1) throw ConfigError("gen_cflptc: beta must be >= 1");
  if (!p.explicit_e && binom_terms_estimate(p.n_customers, p.beta) > 5e6)
    throw CapacityError(
        "gen_cflptc: substituted expansion would be too large at this scale; use explicit_e");

  const int m = p.n_customers;
  const int n = p.n_facilities;
  Rng rng(p.seed);
  Rng rcc = rng.fork("coord_customers");
  Rng rcf = rng.fork("coord_facilities");
  Rng rd = rng.fork("demand");
  Rng ro = rng.fork("opencost");
  Rng rcap = rng.fork("capacity");
  Rng rt = rng.fork("traffic");
  Rng rb = rng.fork("background");

  std::vector<double> cx(m), cy(m), fx(n), fy(n);
  for (int j = 0; j < m; ++j) {
    cx[j] = rcc.next_real(p.coord_min, p.coord_max);
    cy[j] = rcc.next_real(p.coord_min, p.coord_max);
  }
  for (int i = 0; i < n; ++i) {
    fx[i] = rcf.next_real(p.coord_min, p.coord_max);
    fy[i] = rcf.next_real(p.coord_min, p.coord_max);
  }
  std::vector<double> D(m), o(n), C(n), T(n), b(n);
  for (int j = 0; j < m; ++j) D[j] = static_cast<double>(rd.next_int(p.demand_min, p.demand_max));
  for (int i = 0; i < n; ++i) o[i] = static_cast<double>(ro.next_int(p.opencost_min, p.opencost_max));
  for (int i = 0; i < n; ++i) C[i] = static_cast<double>(rcap.next_int(p.capacity_min, p.capacity_max));
  for (int i = 0; i < n; ++i) T[i] = rt.next_real(1.0, 4.0) * C[i];
  for (int i = 0; i < n; ++i) b[i] = rb.next_real(0.1, 1.0) * T[i];

  auto dist = [&](int i, int j) {
    const double dx = fx[i] - cx[j], dy = fy[i] - cy[j];
    return std::sqrt(dx * dx + dy * dy);
  };

  Instance inst;
  inst.name = "cflptc_" + std::to_string(m) + "x" + std::to_string(n) + "_s" +
              std::to_string(p.seed) + (p.explicit_e ? "_e" : "");
  for (int i = 0; i < n; ++i)
    inst.variables.push_back({i, "y" + std::to_string(i), VarType::Binary, 0.0, 1.0});
  auto xid = [&](int i, int j) { return n + i * m + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      inst.variables.push_back(
          {xid(i, j), "x" + std::to_string(i) + "_" + std::to_string(j), VarType::Binary, 0.0, 1.0});
  double dsum = 0.0;
  for (int j = 0; j < m; ++j) dsum += D[j];
  auto eid = [&](int i) { return n + n * m + i; };
  if (p.explicit_e) {
    for (int i = 0; i < n; ++i)
      inst.variables.push_back({eid(i), "e" + std::to_string(i), VarType::Continuous, b[i] / T[i],
                                (dsum + b[i]) / T[i]});
  }

  for (int i = 0; i < n; ++i) inst.objective.terms.push_back({-o[i], {{i, 1}}});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      inst.objective.terms.push_back({-p.alpha * dist(i, j), {{xid(i, j), 1}}});

  if (p.explicit_e) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        inst.objective.terms.push_back(
            {-0.15 * p.alpha * dist(i, j), {{xid(i, j), 1}, {eid(i), p.beta}}});
  } else {
    for (int i = 0; i < n; ++i) {
      // (sum_j D_j x_ij + b_i)^beta, expanded once per facility.
      PolyMap base;
      base.add({}, b[i]);
      for (int j = 0; j < m; ++j) base.add({{xid(i, j), 1}}, D[j]);
      PolyMap power;
      power.add({}, 1.0);
      for (int k = 0; k < p.beta; ++k) power = poly_mul(power, base);
      const double tscale = powi(T[i], p.beta);
      for (int j = 0; j < m; ++j) {
        const double scale = -0.15 * p.alpha * dist(i, j) / tscale;
        const Powers xj{{xid(i, j), 1}};
        for (const auto& [pw, c] : power.terms)
          inst.objective.terms.push_back({scale * c, powers_mul(pw, xj)});
      }
    }
  }

  int cid = 0;
  for (int j = 0; j < m; ++j) {
    Constraint c;
    c.id = cid++;
    c.sense = Sense::EQ;
    for (int i = 0; i < n; ++i) c.lhs.terms.push_back({1.0, {{xid(i, j), 1}}});
    c.rhs = 1.0;
    inst.constraints.push_back(std::move(c));
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      Constraint c;
      c.id = cid++;
      c.sense = Sense::LE;
      c.lhs.terms.push_back({1.0, {{xid(i, j), 1}}});
      c.lhs.terms.push_back({-1.0, {{i, 1}}});
      c.rhs = 0.0;
      inst.constraints.push_back(std::move(c));
    }
  if (p.explicit_e) {
    for (int i = 0; i < n; ++i) {
      Constraint c;
      c.id = cid++;
      c.sense = Sense::LE;
      c.lhs.terms.push_back({T[i], {{eid(i), 1}}});
      c.lhs.terms.push_back({-C[i], {{i, 1}}});
      c.rhs = b[i];
      inst.constraints.push_back(std::move(c));
    }
    for (int i = 0; i < n; ++i) {
      Constraint c;
      c.id = cid++;
      c.sense = Sense::EQ;
      c.lhs.terms.push_back({T[i], {{eid(i), 1}}});
      for (int j = 0; j < m; ++j) c.lhs.terms.push_back({-D[j], {{xid(i, j), 1}}});
      c.rhs = b[i];
      inst.constraints.push_back(std::move(c));
    }
  } else {
    for (int i = 0; i < n; ++i) {
      Constraint c;
      c.id = cid++;
      c.sense = Sense::LE;
      for (int j = 0; j < m; ++j) c.lhs.terms.push_back({D[j], {{xid(i, j), 1}}});
      c.lhs.terms.push_back({-C[i], {{i, 1}}});
      c.rhs = 0.0;
      inst.constraints.push_back(std::move(c));
    }
  }
  inst.canonicalize();
  inst.validate();
  return inst;
}

Instance cflptc_quadratic_reformulation(const Instance& inst) {
  constexpr int kBeta = 4;
  std::vector<int> evars;
  for (const auto& t : inst.objective.terms)
    for (auto& [v, e] : t.powers)
      if (e == kBeta && inst.variables[static_cast<std::size_t>(v)].type == VarType::Continuous) {
        bool seen = false;
        for (int w : evars) seen = seen || w == v;
        if (!seen) evars.push_back(v);
      }
  std::sort(evars.begin(), evars.end());
  if (evars.empty())
    throw ValidationError(
        "cflptc_quadratic_reformulation: no continuous variable with a degree-4 objective "
        "occurrence (explicit-e form required)");

  Instance out = inst;
  out.name = inst.name + "_quad";
  std::vector<int> e2_of(inst.variables.size(), -1);
  for (int v : evars) {
    const auto& ev = inst.variables[static_cast<std::size_t>(v)];
    const double lo = ev.lb, hi = ev.ub;
    const double l2 = (lo <= 0.0 && 0.0 <= hi) ? 0.0 : std::min(lo * lo, hi * hi);
    const double h2 = std::max(lo * lo, hi * hi);
    const int id1 = out.n_vars();
    out.variables.push_back({id1, ev.name + "_1", VarType::Continuous, l2, h2});
    const double l4 = l2 * l2, h4 = h2 * h2;
    const int id2 = out.n_vars();
    out.variables.push_back({id2, ev.name + "_2", VarType::Continuous, l4, h4});
    e2_of[static_cast<std::size_t>(v)] = id2;

    Constraint c1;
    c1.id = static_cast<int>(out.constraints.size());
    c1.sense = Sense::EQ;
    c1.lhs.terms.push_back({1.0, {{id1, 1}}});
    c1.lhs.terms.push_back({-1.0, {{v, 2}}});
    c1.rhs = 0.0;
    out.constraints.push_back(std::move(c1));
    Constraint c2;
    c2.id = static_cast<int>(out.constraints.size());
    c2.sense = Sense::EQ;
    c2.lhs.terms.push_back({1.0, {{id2, 1}}});
    c2.lhs.terms.push_back({-1.0, {{id1, 2}}});
    c2.rhs = 0.0;
    out.constraints.push_back(std::move(c2));
  }

  for (auto& t : out.objective.terms)
    for (auto& pv : t.powers) {
      const int sub = e2_of[static_cast<std::size_t>(pv.first)];
      if (pv.second == kBeta && sub >= 0) {
        pv.first = sub;
        pv.second = 1;
      }
    }
  out.canonicalize();
  out.validate();
  return out;
}

}  // namespace poip
