#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poip/nn.hpp"
#include "poip/rng.hpp"
#include "poip/subsolver.hpp"

namespace poip {

/// Shared resource pool for a whole solve (prediction repair plus
/// refinement). Unset fields mean unlimited.
struct Budget {
  double seconds = kInf;
  std::int64_t nodes = 0;  // 0 = unlimited
};

class BudgetTracker {
 public:
  explicit BudgetTracker(const Budget& b) : budget_(b) {}

  bool exhausted() const;
  double remaining_seconds() const;      // kInf when unlimited
  std::int64_t remaining_nodes() const;  // -1 when unlimited
  /// Intersects a per-call ceiling with what is left in the pool.
  SolveLimits clamp(const SolveLimits& per_solve) const;
  void consume(const SolveResult& r) { nodes_used_ += r.nodes; }
  std::int64_t used_nodes() const { return nodes_used_; }
  double elapsed_s() const { return timer_.seconds(); }

 private:
  Budget budget_;
  Timer timer_;
  std::int64_t nodes_used_ = 0;
};

struct QRepairOutcome {
  std::vector<int> neighborhood;  // freed variable ids, ascending
  SolveResult result;
};

/// Frees the ceil(alpha*n) most uncertain variables (ties to the lower id),
/// fixes the rest to their rounded predictions, then walks constraints in id
/// order and frees the variables (ascending) of any constraint that is
/// provably unsatisfiable under the current fixing, up to ceil(alpha_ub*n)
/// freed variables in total. The resulting subproblem goes to the subsolver
/// with the rounded prediction as warm start (and as incumbent when it
/// happens to be feasible).
QRepairOutcome q_repair(const Instance& inst, const Prediction& pred, double alpha,
                        double alpha_ub, const SubSolver& solver, const SolveLimits& lim);

struct RepairConfig {
  double alpha0 = 0.1;
  double alpha_step = 0.05;
  double alpha_ub = 1.0;
  SolveLimits per_solve;
};

struct RepairTrace {
  std::vector<double> alphas;  // clamped values actually attempted
  std::vector<std::size_t> neighborhood_sizes;
};

struct RepairResult {
  std::optional<Assignment> solution;  // feasible when present
  double objective = -kInf;            // maximize-form value
  RepairTrace trace;
  bool budget_exhausted = false;
};

/// Retries q_repair with growing alpha (next = alpha_step + freed/n) until a
/// feasible assignment appears, alpha exceeds 1, or the budget runs out.
RepairResult repair(const Instance& inst, const Prediction& pred, const SubSolver& solver,
                    const RepairConfig& cfg, BudgetTracker& tracker);

/// Partitions variables into neighborhoods of at most `limit` by walking the
/// constraints in shuffled order, collecting each constraint's variables in
/// ascending id order (skipping ones already in the neighborhood being
/// built) and cutting mid-constraint when the limit is reached; variables in
/// no constraint are dealt round-robin at the end.
std::vector<std::vector<int>> build_initial_neighborhoods(const Instance& inst, int limit, Rng& rng);

/// x1 on n1, x2 elsewhere.
Assignment crossover_merge(const Assignment& x1, const std::vector<int>& n1, const Assignment& x2);

struct RefineConfig {
  int neighborhood_limit = 0;  // 0 = ceil(n/2)
  SolveLimits per_solve;
  std::uint64_t seed = 0;
  int max_rounds = 0;  // 0 = until the budget runs out
};

struct RefineResult {
  Assignment best;
  double objective = -kInf;
  int rounds = 0;
  std::vector<double> objective_curve;  // value after each round
};

/// Large-neighborhood descent from a feasible start: each round solves every
/// neighborhood against the current best, crosses consecutive candidate
/// pairs through the constraint-repair walk, and keeps the strictly best
/// feasible candidate. The objective never decreases.
RefineResult refine(const Instance& inst, const Assignment& start, const SubSolver& solver,
                    const RefineConfig& cfg, BudgetTracker& tracker);

struct SolveWithModelConfig {
  RepairConfig repair;
  RefineConfig refine;
  Budget budget;
  std::string subsolver = "bnb";
  bool refine_enabled = true;
};

struct SolveReport {
  std::string instance_name;
  std::string status;  // "feasible" or "no_solution"
  std::optional<Assignment> solution;  // original variable space
  double objective = 0.0;              // original-sense value when feasible
  RepairTrace repair_trace;
  int refine_rounds = 0;
  std::vector<double> refine_curve;
  double elapsed_s = 0.0;
  std::int64_t nodes_used = 0;
};

/// End-to-end heuristic solve: binarize, predict (uniform 0.5 when model is
/// null), repair, then refine, all under one budget; the result is decoded
/// back to the original variable space.
SolveReport solve_with_model(const Instance& inst, const ModelState* model,
                             const SolveWithModelConfig& cfg);

}  // namespace poip
