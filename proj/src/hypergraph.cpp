#include "poip/hypergraph.hpp"

#include <cmath>
#include <map>

namespace poip {

namespace {

double sorted_mean(std::vector<double>& buf) {
  if (buf.empty()) return 0.0;
  const auto n = static_cast<double>(buf.size());
  return sorted_sum(buf) / n;
}

}  // namespace

Hypergraph encode(const Instance& inst) {
  Hypergraph hg;
  hg.n_vars = inst.n_vars();
  hg.n_cons = static_cast<int>(inst.constraints.size());

  // Per-variable objective statistics, accumulated order-canonically.
  std::vector<std::vector<double>> obj_coe(hg.n_vars), obj_deg(hg.n_vars);
  for (const auto& t : inst.objective.terms)
    for (auto& [v, e] : t.powers) {
      obj_coe[static_cast<std::size_t>(v)].push_back(t.coef);
      obj_deg[static_cast<std::size_t>(v)].push_back(static_cast<double>(e));
    }

  hg.var_features.resize(static_cast<std::size_t>(hg.n_vars));
  for (int i = 0; i < hg.n_vars; ++i) {
    const auto& v = inst.variables[static_cast<std::size_t>(i)];
    auto& f = hg.var_features[static_cast<std::size_t>(i)];
    f.fill(0.0);
    f[static_cast<std::size_t>(v.type)] = 1.0;  // continuous, binary, integer
    const bool inf_lb = !std::isfinite(v.lb);
    const bool inf_ub = !std::isfinite(v.ub);
    f[3] = inf_lb ? 0.0 : v.lb;
    f[4] = inf_ub ? 0.0 : v.ub;
    f[5] = inf_lb ? 1.0 : 0.0;
    f[6] = inf_ub ? 1.0 : 0.0;
    f[7] = sorted_mean(obj_coe[static_cast<std::size_t>(i)]);
    f[8] = sorted_mean(obj_deg[static_cast<std::size_t>(i)]);
  }

  hg.cons_features.resize(static_cast<std::size_t>(hg.n_cons));
  for (int c = 0; c < hg.n_cons; ++c) {
    auto& f = hg.cons_features[static_cast<std::size_t>(c)];
    f.fill(0.0);
    f[static_cast<std::size_t>(inst.constraints[static_cast<std::size_t>(c)].sense)] = 1.0;
    f[3] = inst.constraints[static_cast<std::size_t>(c)].rhs;
  }

  hg.var_member_idx.resize(static_cast<std::size_t>(hg.n_vars));
  auto add_term_hyperedge = [&](const PolyTerm& t, int source_constraint) {
    const int deg = t.degree();
    if (deg < 2) return;
    Hyperedge he;
    he.first_member = static_cast<int>(hg.members.size());
    he.source_constraint = source_constraint;
    he.term_degree = deg;
    const int hid = static_cast<int>(hg.hyperedges.size());
    for (auto& [v, e] : t.powers) {
      hg.var_member_idx[static_cast<std::size_t>(v)].push_back(
          static_cast<int>(hg.members.size()));
      hg.members.push_back({v, false, static_cast<double>(e), t.coef});
      hg.member_hyperedge.push_back(hid);
    }
    if (source_constraint >= 0) {
      hg.members.push_back({source_constraint, true, 0.0, t.coef});
      hg.member_hyperedge.push_back(hid);
    }
    he.n_members = static_cast<int>(hg.members.size()) - he.first_member;
    hg.hyperedges.push_back(he);
  };
  for (const auto& t : inst.objective.terms) add_term_hyperedge(t, -1);
  for (const auto& c : inst.constraints)
    for (const auto& t : c.lhs.terms) add_term_hyperedge(t, c.id);

  hg.var_edge_idx.resize(static_cast<std::size_t>(hg.n_vars));
  hg.cons_edge_idx.resize(static_cast<std::size_t>(hg.n_cons));
  for (const auto& c : inst.constraints) {
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> per_var;
    for (const auto& t : c.lhs.terms)
      for (auto& [v, e] : t.powers) {
        per_var[v].first.push_back(t.coef);
        per_var[v].second.push_back(static_cast<double>(e));
      }
    for (auto& [v, stats] : per_var) {
      const int eidx = static_cast<int>(hg.edges.size());
      hg.edges.push_back({v, c.id, sorted_mean(stats.first), sorted_mean(stats.second)});
      hg.var_edge_idx[static_cast<std::size_t>(v)].push_back(eidx);
      hg.cons_edge_idx[static_cast<std::size_t>(c.id)].push_back(eidx);
    }
  }
  return hg;
}

std::int64_t memory_estimate(std::int64_t n, std::int64_t m, std::int64_t s, std::int64_t n_e) {
  return 76 * n + 36 * m + 20 * s + 24 * n_e;
}

GraphStats graph_stats(const Hypergraph& hg) {
  GraphStats st;
  st.n = hg.n_vars;
  st.m = hg.n_cons;
  st.n_h = static_cast<std::int64_t>(hg.hyperedges.size());
  st.s = static_cast<std::int64_t>(hg.members.size());
  st.n_e = static_cast<std::int64_t>(hg.edges.size());
  for (const auto& he : hg.hyperedges) st.max_degree = std::max(st.max_degree, he.term_degree);
  st.estimated_bytes = memory_estimate(st.n, st.m, st.s, st.n_e);
  return st;
}

}  // namespace poip
