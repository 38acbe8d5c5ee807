#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poip/model.hpp"

namespace poip {

enum class SolveStatus { Optimal, FeasibleTimeout, Infeasible, UnknownTimeout };

const char* to_string(SolveStatus s);

/// A restriction of an instance: some variables pinned to values, the rest
/// left to the solver (all free variables must be binary). The warm start
/// only steers branching value order and may be infeasible; the incumbent
/// must be a feasible assignment consistent with the fixing and seeds the
/// best-known solution.
struct SubProblem {
  const Instance* inst = nullptr;
  PartialAssignment fixed;
  std::optional<Assignment> warm;
  std::optional<Assignment> incumbent;
};

struct SolveLimits {
  double time_limit = kInf;     // seconds
  std::int64_t node_limit = 0;  // 0 = unlimited
};

struct SolveResult {
  SolveStatus status = SolveStatus::UnknownTimeout;
  std::optional<Assignment> best;
  double objective = -kInf;  // maximize-form value of best
  std::int64_t nodes = 0;
  double elapsed_s = 0.0;
};

/// Depth-first branch and bound. Nodes are pruned when the interval upper
/// bound of the objective under the current fixing cannot beat the best
/// known value, or when some constraint is provably unsatisfiable. Branching
/// order is static by descending total absolute objective coefficient.
SolveResult solve_bnb(const SubProblem& sp, const SolveLimits& lim);

/// Exhaustive enumeration over the free variables (at most 25, otherwise
/// CapacityError).
SolveResult solve_enumerate(const SubProblem& sp, const SolveLimits& lim);

using SubSolver = std::function<SolveResult(const SubProblem&, const SolveLimits&)>;

/// Registered names: "bnb", "enum".
SubSolver get_subsolver(const std::string& name);
std::vector<std::string> subsolver_names();

}  // namespace poip
