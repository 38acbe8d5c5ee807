#pragma once

#include <cstdint>

#include "poip/model.hpp"

namespace poip {

/// Quadratic multiple knapsack: maximize sum c_i x_i + sum_{(i,j) in E} q_ij x_i x_j
/// subject to sum_i a_i^k x_i <= b^k for each dimension k, with
/// b^k = round(0.5 * sum_i a_i^k). E holds each unordered pair independently
/// with the given density. Integer data drawn inclusively from the ranges.
struct QmkpParams {
  int n_items = 20;
  int n_dims = 3;
  double density = 0.3;
  std::uint64_t seed = 0;
  int c_min = 1, c_max = 100;
  int q_min = 1, q_max = 50;
  int a_min = 1, a_max = 100;
};
Instance gen_qmkp(const QmkpParams& p);

/// Random quadratically constrained program: maximize sum c_i x_i; each of
/// n_hyperedges constraints picks a vertex set e and requires
/// sum_{i in e} a_i x_i + sum_{i<j in e} q_ij x_i x_j <= |e|.
/// The all-zeros point is always feasible. Coefficients are drawn fresh per
/// constraint occurrence.
struct RandqcpParams {
  int n_vars = 20;
  int n_hyperedges = 10;
  int edge_min = 2;
  int edge_max = 4;
  std::uint64_t seed = 0;
  int c_min = 1, c_max = 100;
  int a_min = 1, a_max = 2;
  int q_min = 1, q_max = 5;
};
Instance gen_randqcp(const RandqcpParams& p);

/// Capacitated facility location with traffic congestion. Facilities i carry
/// open cost o_i, capacity C_i, congestion threshold T_i = U(1,4)*C_i and
/// background load b_i = U(0.1,1)*T_i; customers j carry demand D_j; d_ij is
/// the Euclidean distance between uniform points in the coordinate square.
/// Cost: sum_i o_i y_i + sum_ij alpha*(1 + 0.15*e_i^beta)*d_ij*x_ij with
/// e_i = (sum_j D_j x_ij + b_i)/T_i; the instance maximizes the negated cost.
/// Constraints: assignment (sum_i x_ij = 1), linking (x_ij <= y_i), capacity.
///
/// Default output substitutes e_i and expands, producing pure-binary terms of
/// degree beta+1. With explicit_e the congestion levels stay as continuous
/// variables: the objective keeps e_i^beta * x_ij terms, capacity is stated
/// through e_i (T_i e_i - C_i y_i <= b_i) and a defining equality
/// T_i e_i - sum_j D_j x_ij = b_i is added per facility.
struct CflptcParams {
  int n_customers = 5;
  int n_facilities = 2;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  int beta = 4;
  double coord_min = 10.0, coord_max = 200.0;
  int demand_min = 10, demand_max = 50;
  int opencost_min = 300, opencost_max = 700;
  int capacity_min = 100, capacity_max = 500;
  bool explicit_e = false;
};
Instance gen_cflptc(const CflptcParams& p);

/// Rewrites an explicit-e instance to quadratic degree: adds continuous
/// e1 = e^2 and e2 = e1^2 (two variables and two quadratic equalities per e
/// variable) and replaces each e^4 objective occurrence by e2.
Instance cflptc_quadratic_reformulation(const Instance& inst);

}  // namespace poip
