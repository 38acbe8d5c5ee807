#pragma once

#include <array>
#include <cstdint>

#include "poip/model.hpp"

namespace poip {

/// Raw feature layouts (one row per vertex / membership / edge):
///   variable (9): [is_continuous, is_binary, is_integer, lb, ub, inf_lb,
///                  inf_ub, avg_obj_coe, avg_obj_deg]; infinite bounds are
///                  encoded as value 0 with the matching indicator set.
///   constraint (4): [is_le, is_ge, is_eq, rhs]
///   hyperedge member (2): [deg, coe]
///   variable-constraint edge (2): [avg_coe, avg_deg]
constexpr int kVarFeatures = 9;
constexpr int kConsFeatures = 4;
constexpr int kMemberFeatures = 2;
constexpr int kEdgeFeatures = 2;

/// One membership of a vertex in a hyperedge. Hyperedges come from terms of
/// degree >= 2: each variable of the term joins with (deg=exponent,
/// coe=term coefficient); for constraint terms the owning constraint vertex
/// joins as an extra member with (deg=0, coe=term coefficient).
struct MemberRef {
  int vertex = 0;
  bool is_constraint = false;
  double deg = 0.0;
  double coe = 0.0;
};

struct Hyperedge {
  int first_member = 0;  // CSR offset into members
  int n_members = 0;
  int source_constraint = -1;  // -1 for objective terms
  int term_degree = 0;
};

struct VcEdge {
  int var = 0;
  int cons = 0;
  double avg_coe = 0.0;
  double avg_deg = 0.0;
};

struct Hypergraph {
  int n_vars = 0;
  int n_cons = 0;
  std::vector<std::array<double, kVarFeatures>> var_features;
  std::vector<std::array<double, kConsFeatures>> cons_features;
  std::vector<Hyperedge> hyperedges;
  std::vector<MemberRef> members;      // grouped by hyperedge
  std::vector<int> member_hyperedge;   // owning hyperedge per membership
  std::vector<VcEdge> edges;           // sorted by (cons, var)
  std::vector<std::vector<int>> var_member_idx;  // variable memberships per var
  std::vector<std::vector<int>> var_edge_idx;
  std::vector<std::vector<int>> cons_edge_idx;
};

/// Degree-aware encoding: every term of total degree >= 2 (objective and
/// constraint alike) becomes one hyperedge; every (variable, constraint)
/// incidence becomes one edge carrying averaged coefficient/degree features.
/// All feature averages accumulate in canonical (value-sorted) order so the
/// encoding is exactly equivariant under variable permutations.
Hypergraph encode(const Instance& inst);

/// Closed-form working-set estimate in bytes for a graph with n variable
/// vertices, m constraint vertices, s memberships and n_e edges.
std::int64_t memory_estimate(std::int64_t n, std::int64_t m, std::int64_t s, std::int64_t n_e);

struct GraphStats {
  std::int64_t n = 0;
  std::int64_t m = 0;
  std::int64_t n_h = 0;
  std::int64_t s = 0;
  std::int64_t n_e = 0;
  int max_degree = 0;
  std::int64_t estimated_bytes = 0;
};

GraphStats graph_stats(const Hypergraph& hg);

}  // namespace poip
