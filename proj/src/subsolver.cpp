#include "poip/subsolver.hpp"

#include <algorithm>
#include <cmath>

#include "poip/common.hpp"

namespace poip {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::FeasibleTimeout: return "feasible_timeout";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::UnknownTimeout: return "unknown_timeout";
  }
  return "unknown";
}

namespace {

void validate_subproblem(const SubProblem& sp, std::vector<int>& free_vars) {
  if (sp.inst == nullptr) throw ValidationError("subproblem has no instance");
  const Instance& inst = *sp.inst;
  const int n = inst.n_vars();
  if (static_cast<int>(sp.fixed.is_fixed.size()) != n)
    throw ValidationError("fixing size does not match variable count");
  free_vars.clear();
  for (int v = 0; v < n; ++v) {
    if (sp.fixed.is_fixed[static_cast<std::size_t>(v)]) continue;
    if (inst.variables[static_cast<std::size_t>(v)].type != VarType::Binary)
      throw UnsupportedError("free variable " + inst.variables[static_cast<std::size_t>(v)].name +
                             " is not binary; only binary subproblems are solvable");
    free_vars.push_back(v);
  }
  if (sp.warm && static_cast<int>(sp.warm->size()) != n)
    throw ValidationError("warm start size mismatch");
  if (sp.incumbent) {
    if (static_cast<int>(sp.incumbent->size()) != n)
      throw ValidationError("incumbent size mismatch");
    for (int v = 0; v < n; ++v) {
      if (sp.fixed.is_fixed[static_cast<std::size_t>(v)] &&
          (*sp.incumbent)[static_cast<std::size_t>(v)] != sp.fixed.value[static_cast<std::size_t>(v)])
        throw ValidationError("incumbent contradicts the fixing");
    }
    if (!check_feasible(inst, *sp.incumbent, kFeasTol).feasible)
      throw ValidationError("incumbent is infeasible");
  }
}

struct BnbSearch {
  const Instance& inst;
  const SubProblem& sp;
  const SolveLimits& lim;
  Timer timer;
  PartialAssignment fixing;
  std::vector<Interval> bounds;
  std::vector<int> order;  // free variables, branching order
  std::optional<Assignment> best;
  double best_obj = -kInf;
  std::int64_t nodes = 0;
  bool stopped = false;

  BnbSearch(const Instance& i, const SubProblem& s, const SolveLimits& l)
      : inst(i), sp(s), lim(l), fixing(s.fixed), bounds(variable_bounds(i)) {}

  bool out_of_budget() {
    if (lim.node_limit > 0 && nodes >= lim.node_limit) return true;
    if ((nodes & 255) == 0 && timer.seconds() > lim.time_limit) return true;
    return false;
  }

  int first_value(int var) const {
    if (sp.warm) return (*sp.warm)[static_cast<std::size_t>(var)] >= 0.5 ? 1 : 0;
    return 1;
  }

  void record(const Assignment& x) {
    const double obj = objective_value(inst, x);
    if (!best || obj > best_obj) {
      best = x;
      best_obj = obj;
    }
  }

  void visit(std::size_t depth) {
    if (stopped) return;
    if (out_of_budget()) {
      stopped = true;
      return;
    }
    ++nodes;
    for (const Constraint& c : inst.constraints) {
      if (constraint_provably_unsat(c, fixing, bounds, kFeasTol)) return;
    }
    if (best) {
      const Interval bound = polynomial_interval(inst.objective, fixing, bounds);
      if (bound.hi <= best_obj) return;
    }
    if (depth == order.size()) {
      Assignment x(fixing.value);
      if (check_feasible(inst, x, kFeasTol).feasible) record(x);
      return;
    }
    const int var = order[depth];
    const int first = first_value(var);
    for (int k = 0; k < 2; ++k) {
      const double val = k == 0 ? first : 1 - first;
      fixing.is_fixed[static_cast<std::size_t>(var)] = true;
      fixing.value[static_cast<std::size_t>(var)] = val;
      visit(depth + 1);
      fixing.is_fixed[static_cast<std::size_t>(var)] = false;
      fixing.value[static_cast<std::size_t>(var)] = 0.0;
      if (stopped) return;
    }
  }
};

SolveResult finish(const std::optional<Assignment>& best, double best_obj, bool stopped,
                   std::int64_t nodes, double elapsed) {
  SolveResult res;
  res.nodes = nodes;
  res.elapsed_s = elapsed;
  if (best) {
    res.best = best;
    res.objective = best_obj;
    res.status = stopped ? SolveStatus::FeasibleTimeout : SolveStatus::Optimal;
  } else {
    res.status = stopped ? SolveStatus::UnknownTimeout : SolveStatus::Infeasible;
  }
  return res;
}

}  // namespace

SolveResult solve_bnb(const SubProblem& sp, const SolveLimits& lim) {
  std::vector<int> free_vars;
  validate_subproblem(sp, free_vars);
  const Instance& inst = *sp.inst;

  BnbSearch search(inst, sp, lim);
  if (sp.incumbent) {
    search.best = *sp.incumbent;
    search.best_obj = objective_value(inst, *sp.incumbent);
  }
  if (lim.time_limit <= 0.0) {
    return finish(search.best, search.best_obj, true, 0, 0.0);
  }

  std::vector<double> score(inst.variables.size(), 0.0);
  for (const PolyTerm& t : inst.objective.terms) {
    for (const auto& [var, exp] : t.powers) score[static_cast<std::size_t>(var)] += std::abs(t.coef);
  }
  search.order = free_vars;
  std::stable_sort(search.order.begin(), search.order.end(), [&](int a, int b) {
    const double sa = score[static_cast<std::size_t>(a)];
    const double sb = score[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });

  search.visit(0);
  return finish(search.best, search.best_obj, search.stopped, search.nodes, search.timer.seconds());
}

SolveResult solve_enumerate(const SubProblem& sp, const SolveLimits& lim) {
  std::vector<int> free_vars;
  validate_subproblem(sp, free_vars);
  const Instance& inst = *sp.inst;
  if (free_vars.size() > 25)
    throw CapacityError("enumeration limited to 25 free variables, got " +
                        std::to_string(free_vars.size()));

  Timer timer;
  std::optional<Assignment> best;
  double best_obj = -kInf;
  if (sp.incumbent) {
    best = *sp.incumbent;
    best_obj = objective_value(inst, *sp.incumbent);
  }
  if (lim.time_limit <= 0.0) return finish(best, best_obj, true, 0, 0.0);

  Assignment x(sp.fixed.value);
  const std::uint64_t total = std::uint64_t{1} << free_vars.size();
  std::int64_t nodes = 0;
  bool stopped = false;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (lim.node_limit > 0 && nodes >= lim.node_limit) {
      stopped = true;
      break;
    }
    if ((mask & 4095) == 0 && timer.seconds() > lim.time_limit) {
      stopped = true;
      break;
    }
    ++nodes;
    for (std::size_t j = 0; j < free_vars.size(); ++j)
      x[static_cast<std::size_t>(free_vars[j])] = (mask >> j) & 1 ? 1.0 : 0.0;
    if (!check_feasible(inst, x, kFeasTol).feasible) continue;
    const double obj = objective_value(inst, x);
    if (!best || obj > best_obj) {
      best = x;
      best_obj = obj;
    }
  }
  return finish(best, best_obj, stopped, nodes, timer.seconds());
}

SubSolver get_subsolver(const std::string& name) {
  if (name == "bnb") return [](const SubProblem& sp, const SolveLimits& lim) { return solve_bnb(sp, lim); };
  if (name == "enum") return [](const SubProblem& sp, const SolveLimits& lim) { return solve_enumerate(sp, lim); };
  throw ConfigError("unknown subsolver '" + name + "' (expected bnb or enum)");
}

std::vector<std::string> subsolver_names() { return {"bnb", "enum"}; }

}  // namespace poip
