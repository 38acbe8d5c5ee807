#include "poip/repair.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poip/common.hpp"

namespace poip {

bool BudgetTracker::exhausted() const {
  if (std::isfinite(budget_.seconds) && timer_.seconds() >= budget_.seconds) return true;
  if (budget_.nodes > 0 && nodes_used_ >= budget_.nodes) return true;
  return false;
}

double BudgetTracker::remaining_seconds() const {
  if (!std::isfinite(budget_.seconds)) return kInf;
  return budget_.seconds - timer_.seconds();
}

std::int64_t BudgetTracker::remaining_nodes() const {
  if (budget_.nodes == 0) return -1;
  return std::max<std::int64_t>(0, budget_.nodes - nodes_used_);
}

SolveLimits BudgetTracker::clamp(const SolveLimits& per_solve) const {
  SolveLimits out;
  out.time_limit = std::min(per_solve.time_limit, remaining_seconds());
  const std::int64_t rem = remaining_nodes();
  if (rem < 0) {
    out.node_limit = per_solve.node_limit;
  } else if (rem == 0) {
    out.node_limit = per_solve.node_limit;
    out.time_limit = 0.0;  // pool empty: force an immediate return
  } else {
    out.node_limit = per_solve.node_limit == 0 ? rem : std::min(per_solve.node_limit, rem);
  }
  return out;
}

namespace {

int ceil_fraction(double frac, int n) {
  const int k = static_cast<int>(std::ceil(std::max(0.0, frac) * n));
  return std::clamp(k, 0, n);
}

/// Walks constraints in id order; the variables (ascending) of every
/// provably unsatisfiable constraint get unfixed until the cap. Mutates
/// fixing/is_free in place.
void grow_by_unsat_constraints(const Instance& inst, const std::vector<Interval>& bounds,
                               PartialAssignment& fixing, std::vector<char>& is_free,
                               int& n_free, int cap) {
  for (const Constraint& c : inst.constraints) {
    if (n_free >= cap) break;
    if (!constraint_provably_unsat(c, fixing, bounds, kFeasTol)) continue;
    std::vector<int> vars;
    for (const PolyTerm& t : c.lhs.terms)
      for (const auto& [var, exp] : t.powers) vars.push_back(var);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    for (int v : vars) {
      if (is_free[static_cast<std::size_t>(v)]) continue;
      is_free[static_cast<std::size_t>(v)] = 1;
      fixing.is_fixed[static_cast<std::size_t>(v)] = 0;
      ++n_free;
      if (n_free >= cap) break;
    }
  }
}

std::vector<int> free_list(const std::vector<char>& is_free) {
  std::vector<int> out;
  for (std::size_t v = 0; v < is_free.size(); ++v)
    if (is_free[v]) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

QRepairOutcome q_repair(const Instance& inst, const Prediction& pred, double alpha,
                        double alpha_ub, const SubSolver& solver, const SolveLimits& lim) {
  const int n = inst.n_vars();
  if (static_cast<int>(pred.rounded.size()) != n)
    throw ValidationError("prediction size does not match instance");
  const std::vector<Interval> bounds = variable_bounds(inst);

  const int k = ceil_fraction(alpha, n);
  const int cap = std::max(ceil_fraction(alpha_ub, n), k);

  std::vector<int> by_uncertainty(static_cast<std::size_t>(n));
  std::iota(by_uncertainty.begin(), by_uncertainty.end(), 0);
  std::stable_sort(by_uncertainty.begin(), by_uncertainty.end(), [&](int a, int b) {
    const double ua = pred.uncertainty[static_cast<std::size_t>(a)];
    const double ub = pred.uncertainty[static_cast<std::size_t>(b)];
    if (ua != ub) return ua > ub;
    return a < b;
  });

  PartialAssignment fixing = PartialAssignment::none(n);
  std::vector<char> is_free(static_cast<std::size_t>(n), 0);
  Assignment rounded(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    rounded[static_cast<std::size_t>(v)] = pred.rounded[static_cast<std::size_t>(v)];
    fixing.is_fixed[static_cast<std::size_t>(v)] = 1;
    fixing.value[static_cast<std::size_t>(v)] = rounded[static_cast<std::size_t>(v)];
  }
  int n_free = 0;
  for (int i = 0; i < k; ++i) {
    const int v = by_uncertainty[static_cast<std::size_t>(i)];
    is_free[static_cast<std::size_t>(v)] = 1;
    fixing.is_fixed[static_cast<std::size_t>(v)] = 0;
    ++n_free;
  }

  grow_by_unsat_constraints(inst, bounds, fixing, is_free, n_free, cap);

  SubProblem sp;
  sp.inst = &inst;
  sp.fixed = fixing;
  sp.warm = rounded;
  if (check_feasible(inst, rounded, kFeasTol).feasible) sp.incumbent = rounded;

  QRepairOutcome out;
  out.neighborhood = free_list(is_free);
  out.result = solver(sp, lim);
  return out;
}

RepairResult repair(const Instance& inst, const Prediction& pred, const SubSolver& solver,
                    const RepairConfig& cfg, BudgetTracker& tracker) {
  const int n = inst.n_vars();
  RepairResult res;
  double alpha = cfg.alpha0;
  while (true) {
    if (tracker.exhausted()) {
      res.budget_exhausted = true;
      break;
    }
    const double a = std::min(alpha, 1.0);
    res.trace.alphas.push_back(a);
    QRepairOutcome out =
        q_repair(inst, pred, a, cfg.alpha_ub, solver, tracker.clamp(cfg.per_solve));
    tracker.consume(out.result);
    res.trace.neighborhood_sizes.push_back(out.neighborhood.size());
    if (out.result.best) {
      res.solution = out.result.best;
      res.objective = out.result.objective;
      break;
    }
    if (n == 0) break;
    alpha = cfg.alpha_step + static_cast<double>(out.neighborhood.size()) / n;
    if (alpha > 1.0) break;
  }
  return res;
}

std::vector<std::vector<int>> build_initial_neighborhoods(const Instance& inst, int limit, Rng& rng) {
  const int n = inst.n_vars();
  if (limit < 1) throw ConfigError("neighborhood limit must be positive");
  std::vector<int> cons_order(inst.constraints.size());
  std::iota(cons_order.begin(), cons_order.end(), 0);
  rng.shuffle(cons_order);

  std::vector<std::vector<int>> hoods;
  std::vector<char> in_current(static_cast<std::size_t>(n), 0);
  std::vector<char> in_any(static_cast<std::size_t>(n), 0);
  std::vector<int> current;
  auto close_current = [&]() {
    if (!current.empty()) {
      hoods.push_back(current);
      for (int v : current) in_current[static_cast<std::size_t>(v)] = 0;
      current.clear();
    }
  };
  for (int ci : cons_order) {
    const Constraint& c = inst.constraints[static_cast<std::size_t>(ci)];
    std::vector<int> vars;
    for (const PolyTerm& t : c.lhs.terms)
      for (const auto& [var, exp] : t.powers) vars.push_back(var);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    for (int v : vars) {
      if (in_current[static_cast<std::size_t>(v)]) continue;
      current.push_back(v);
      in_current[static_cast<std::size_t>(v)] = 1;
      in_any[static_cast<std::size_t>(v)] = 1;
      if (static_cast<int>(current.size()) >= limit) close_current();
    }
  }
  close_current();

  std::vector<int> leftovers;
  for (int v = 0; v < n; ++v)
    if (!in_any[static_cast<std::size_t>(v)]) leftovers.push_back(v);
  if (!leftovers.empty()) {
    if (hoods.empty()) hoods.emplace_back();
    std::size_t cursor = 0;
    for (int v : leftovers) {
      std::size_t tried = 0;
      while (tried < hoods.size() &&
             static_cast<int>(hoods[cursor % hoods.size()].size()) >= limit) {
        ++cursor;
        ++tried;
      }
      if (tried == hoods.size()) {
        hoods.emplace_back();
        cursor = hoods.size() - 1;
      }
      hoods[cursor % hoods.size()].push_back(v);
      ++cursor;
    }
  }
  return hoods;
}

Assignment crossover_merge(const Assignment& x1, const std::vector<int>& n1, const Assignment& x2) {
  Assignment out = x2;
  for (int v : n1) out[static_cast<std::size_t>(v)] = x1[static_cast<std::size_t>(v)];
  return out;
}

namespace {

struct Candidate {
  Assignment x;
  double obj = -kInf;
  const std::vector<int>* hood = nullptr;  // null for crossover candidates
};

void assert_feasible(const Instance& inst, const Assignment& x, const char* where) {
  if (!check_feasible(inst, x, kFeasTol).feasible)
    throw Error(std::string("internal: infeasible candidate from ") + where);
}

/// Fixes everything outside `hood` to `base` and solves; base is both warm
/// start and incumbent, so a best assignment always comes back.
SolveResult solve_neighborhood(const Instance& inst, const Assignment& base,
                               const std::vector<int>& hood, const SubSolver& solver,
                               const SolveLimits& lim) {
  const int n = inst.n_vars();
  SubProblem sp;
  sp.inst = &inst;
  sp.fixed.is_fixed.assign(static_cast<std::size_t>(n), 1);
  sp.fixed.value = base;
  for (int v : hood) sp.fixed.is_fixed[static_cast<std::size_t>(v)] = 0;
  sp.warm = base;
  sp.incumbent = base;
  return solver(sp, lim);
}

/// The crossover of a candidate pair: take the better one, overlay it on the
/// other, then run the constraint-repair walk from the fully fixed merge.
std::optional<Candidate> cross_pair(const Instance& inst, const std::vector<Interval>& bounds,
                                    const Candidate& a, const Candidate& b,
                                    const SubSolver& solver, const SolveLimits& lim,
                                    BudgetTracker& tracker) {
  const Candidate& x1 = b.obj > a.obj ? b : a;
  const Candidate& x2 = b.obj > a.obj ? a : b;
  Assignment merged = crossover_merge(x1.x, *x1.hood, x2.x);

  const int n = inst.n_vars();
  PartialAssignment fixing = PartialAssignment::none(n);
  for (int v = 0; v < n; ++v) {
    fixing.is_fixed[static_cast<std::size_t>(v)] = 1;
    fixing.value[static_cast<std::size_t>(v)] = merged[static_cast<std::size_t>(v)];
  }
  std::vector<char> is_free(static_cast<std::size_t>(n), 0);
  int n_free = 0;
  grow_by_unsat_constraints(inst, bounds, fixing, is_free, n_free, n);

  if (n_free == 0) {
    if (!check_feasible(inst, merged, kFeasTol).feasible) return std::nullopt;
    return Candidate{merged, objective_value(inst, merged), nullptr};
  }
  SubProblem sp;
  sp.inst = &inst;
  sp.fixed = fixing;
  sp.warm = merged;
  if (check_feasible(inst, merged, kFeasTol).feasible) sp.incumbent = merged;
  SolveResult r = solver(sp, lim);
  tracker.consume(r);
  if (!r.best) return std::nullopt;
  return Candidate{*r.best, r.objective, nullptr};
}

}  // namespace

RefineResult refine(const Instance& inst, const Assignment& start, const SubSolver& solver,
                    const RefineConfig& cfg, BudgetTracker& tracker) {
  const int n = inst.n_vars();
  if (static_cast<int>(start.size()) != n) throw ValidationError("start size mismatch");
  if (!check_feasible(inst, start, kFeasTol).feasible)
    throw ValidationError("refinement requires a feasible starting assignment");
  const std::vector<Interval> bounds = variable_bounds(inst);
  const int limit = cfg.neighborhood_limit > 0 ? cfg.neighborhood_limit : (n + 1) / 2;

  RefineResult res;
  res.best = start;
  res.objective = objective_value(inst, start);

  Rng root(cfg.seed);
  int round = 0;
  while (!tracker.exhausted() && (cfg.max_rounds == 0 || round < cfg.max_rounds)) {
    Rng rr = root.fork("round", static_cast<std::uint64_t>(round));
    const auto hoods = build_initial_neighborhoods(inst, std::max(1, limit), rr);

    std::vector<Candidate> cands;
    cands.reserve(hoods.size());
    for (const auto& hood : hoods) {
      if (tracker.exhausted()) break;
      SolveResult r = solve_neighborhood(inst, res.best, hood, solver, tracker.clamp(cfg.per_solve));
      tracker.consume(r);
      if (!r.best) continue;
      assert_feasible(inst, *r.best, "neighborhood solve");
      cands.push_back(Candidate{*r.best, r.objective, &hood});
    }
    std::vector<Candidate> crossed;
    for (std::size_t i = 0; i + 1 < cands.size(); i += 2) {
      if (tracker.exhausted()) break;
      auto c = cross_pair(inst, bounds, cands[i], cands[i + 1], solver,
                          tracker.clamp(cfg.per_solve), tracker);
      if (c) {
        assert_feasible(inst, c->x, "crossover");
        crossed.push_back(std::move(*c));
      }
    }
    for (auto& c : crossed) cands.push_back(std::move(c));

    for (const Candidate& c : cands) {
      if (c.obj > res.objective) {
        res.objective = c.obj;
        res.best = c.x;
      }
    }
    ++round;
    res.rounds = round;
    res.objective_curve.push_back(res.objective);
  }
  return res;
}

SolveReport solve_with_model(const Instance& inst, const ModelState* model,
                             const SolveWithModelConfig& cfg) {
  if (cfg.refine_enabled && cfg.refine.max_rounds == 0 && !std::isfinite(cfg.budget.seconds) &&
      cfg.budget.nodes == 0)
    throw ConfigError("refinement without a round limit needs a finite budget");
  Timer timer;
  const SubSolver solver = get_subsolver(cfg.subsolver);
  Binarization bin = binarize(inst);
  const int nb = bin.instance.n_vars();

  Prediction pred = model != nullptr ? predict(bin.instance, *model) : uniform_prediction(nb);

  BudgetTracker tracker(cfg.budget);
  SolveReport rep;
  rep.instance_name = inst.name;

  RepairResult rr = repair(bin.instance, pred, solver, cfg.repair, tracker);
  rep.repair_trace = rr.trace;
  if (!rr.solution) {
    rep.status = "no_solution";
    rep.elapsed_s = timer.seconds();
    rep.nodes_used = tracker.used_nodes();
    return rep;
  }

  Assignment best_bin = *rr.solution;
  if (cfg.refine_enabled && !tracker.exhausted()) {
    RefineResult ref = refine(bin.instance, best_bin, solver, cfg.refine, tracker);
    best_bin = ref.best;
    rep.refine_rounds = ref.rounds;
    rep.refine_curve = ref.objective_curve;
  }

  Assignment decoded = bin.decode(best_bin);
  const FeasReport feas = check_feasible(inst, decoded, kFeasTol);
  if (!feas.feasible) throw Error("internal: decoded solution infeasible");
  rep.status = "feasible";
  rep.solution = decoded;
  rep.objective = original_objective_value(inst, decoded);
  rep.elapsed_s = timer.seconds();
  rep.nodes_used = tracker.used_nodes();
  return rep;
}

}  // namespace poip
