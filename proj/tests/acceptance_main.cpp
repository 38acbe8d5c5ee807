// End-to-end verification harness: ten independent checks over the whole
// toolkit, one PASS/FAIL line each with the measured numbers. The exit code
// is 0 only when every check passes. Heavier checks carry an explicit wall
// budget; going over it fails the check even when the property held.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "poip/bench.hpp"
#include "poip/cli.hpp"
#include "poip/generators.hpp"
#include "poip/io.hpp"
#include "poip/repair.hpp"

using namespace poip;
namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[768];
  vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

/// Swallows everything the CLI prints so the harness output stays one line
/// per check.
struct Silencer {
  std::stringstream sink;
  std::streambuf* out;
  std::streambuf* err;
  Silencer() : out(std::cout.rdbuf(sink.rdbuf())), err(std::cerr.rdbuf(sink.rdbuf())) {}
  ~Silencer() {
    std::cout.rdbuf(out);
    std::cerr.rdbuf(err);
  }
};

struct CheckResult {
  bool pass = false;
  std::string detail;
};

void randomize_biases(ModelState& st, std::uint64_t seed) {
  Rng rng(seed);
  for_each_tensor(st.params, [&](const std::string& name, Mat& m) {
    if (name.ends_with(".b1") || name.ends_with(".b2")) {
      Rng r = rng.fork(name);
      for (double& v : m.a) v = r.next_real(-0.3, 0.3);
    }
  });
}

std::vector<Mat*> tensor_ptrs(ParamSet& ps) {
  std::vector<Mat*> v;
  for_each_tensor(ps, [&](const std::string&, Mat& m) { v.push_back(&m); });
  return v;
}

struct GradStats {
  long long checked = 0;
  long long failed = 0;
};

/// Central differences against the analytic gradient for every parameter;
/// a near-kink artifact is ruled out by retrying at a smaller step.
GradStats gradcheck(const Hypergraph& hg, ModelState& st, const std::vector<double>& labels) {
  Tape tape;
  forward(hg, st, tape);
  ParamSet grads = make_param_set(st.cfg);
  backward(hg, st, tape, labels, 1.0, grads);
  const auto pp = tensor_ptrs(st.params);
  const auto gp = tensor_ptrs(grads);
  Tape fd_tape;
  auto loss_at = [&](Mat* m, std::size_t k, double delta) {
    const double saved = m->a[k];
    m->a[k] = saved + delta;
    const double L = bce_loss(forward(hg, st, fd_tape), labels);
    m->a[k] = saved;
    return L;
  };
  GradStats out;
  for (std::size_t ti = 0; ti < pp.size(); ++ti) {
    for (std::size_t k = 0; k < pp[ti]->a.size(); ++k) {
      ++out.checked;
      const double g = gp[ti]->a[k];
      bool ok = false;
      for (double step : {1e-5, 1e-6}) {
        const double fd = (loss_at(pp[ti], k, step) - loss_at(pp[ti], k, -step)) / (2.0 * step);
        if (std::abs(g - fd) <= 1e-7 + 1e-4 * std::max(std::abs(g), std::abs(fd))) {
          ok = true;
          break;
        }
      }
      if (!ok) ++out.failed;
    }
  }
  return out;
}

/// The instance with variable v renamed to perm[v] everywhere.
Instance permute_variables(const Instance& inst, const std::vector<int>& perm) {
  const int n = inst.n_vars();
  Instance pi;
  pi.name = inst.name;
  pi.minimize = inst.minimize;
  pi.variables.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    VariableDef def = inst.variables[static_cast<std::size_t>(v)];
    def.id = perm[static_cast<std::size_t>(v)];
    pi.variables[static_cast<std::size_t>(def.id)] = def;
  }
  auto map_poly = [&](Polynomial p) {
    for (auto& t : p.terms)
      for (auto& pv : t.powers) pv.first = perm[static_cast<std::size_t>(pv.first)];
    return p;
  };
  pi.objective = map_poly(inst.objective);
  for (const auto& c : inst.constraints)
    pi.constraints.push_back({c.id, c.sense, map_poly(c.lhs), c.rhs});
  pi.canonicalize();
  pi.validate();
  return pi;
}

/// All-integer box instance on [0, ub] with an integer-coefficient
/// polynomial objective and two knapsack-style constraints, the second one
/// carrying a quadratic term. The zero point is always feasible.
Instance integer_box_instance(Rng& rng, int n, int ub) {
  Instance inst;
  inst.name = "intbox";
  for (int v = 0; v < n; ++v) {
    VariableDef def;
    def.id = v;
    def.name = "x" + std::to_string(v);
    def.type = VarType::Integer;
    def.lb = 0.0;
    def.ub = ub;
    inst.variables.push_back(def);
  }
  const int n_terms = static_cast<int>(rng.next_int(4, 8));
  for (int t = 0; t < n_terms; ++t) {
    PolyTerm term;
    term.coef = static_cast<double>(rng.next_int(1, 9) * (rng.next_int(0, 1) ? 1 : -1));
    const int deg = static_cast<int>(rng.next_int(1, 3));
    for (int d = 0; d < deg; ++d)
      term.powers.emplace_back(static_cast<int>(rng.next_int(0, n - 1)), 1);
    inst.objective.terms.push_back(term);
  }
  Constraint c0;
  c0.id = 0;
  c0.sense = Sense::LE;
  double wsum = 0.0;
  for (int v = 0; v < n; ++v) {
    const double a = static_cast<double>(rng.next_int(1, 5));
    wsum += a;
    c0.lhs.terms.push_back({a, {{v, 1}}});
  }
  c0.rhs = std::floor(0.55 * ub * wsum);
  inst.constraints.push_back(c0);
  Constraint c1;
  c1.id = 1;
  c1.sense = Sense::LE;
  const int p = static_cast<int>(rng.next_int(0, n - 1));
  const int q = static_cast<int>(rng.next_int(0, n - 1));
  const double b = static_cast<double>(rng.next_int(1, 3));
  c1.lhs.terms.push_back({b, {{p, 1}, {q, 1}}});
  double csum = 0.0;
  for (int v = 0; v < n; ++v) {
    const double cv = static_cast<double>(rng.next_int(1, 4));
    csum += cv;
    c1.lhs.terms.push_back({cv, {{v, 1}}});
  }
  c1.rhs = std::floor(0.5 * (b * ub * ub + csum * ub));
  inst.constraints.push_back(c1);
  inst.canonicalize();
  inst.validate();
  return inst;
}

/// Six binaries, linear objective, one constraint with a quadratic term so
/// the encoding still produces a hyperedge for the identity comparison.
Instance linear_objective_instance() {
  Instance inst;
  inst.name = "linear6";
  for (int v = 0; v < 6; ++v) {
    VariableDef def;
    def.id = v;
    def.name = "x" + std::to_string(v);
    inst.variables.push_back(def);
  }
  for (int v = 0; v < 6; ++v)
    inst.objective.terms.push_back({static_cast<double>(v + 1), {{v, 1}}});
  Constraint c0;
  c0.id = 0;
  c0.sense = Sense::LE;
  for (int v = 0; v < 6; ++v) c0.lhs.terms.push_back({1.0, {{v, 1}}});
  c0.rhs = 3.0;
  inst.constraints.push_back(c0);
  Constraint c1;
  c1.id = 1;
  c1.sense = Sense::LE;
  c1.lhs.terms.push_back({2.0, {{0, 1}, {1, 1}}});
  c1.lhs.terms.push_back({1.0, {{2, 1}}});
  c1.rhs = 2.0;
  inst.constraints.push_back(c1);
  inst.canonicalize();
  inst.validate();
  return inst;
}

// Shared state for the training-centred checks: one labeled pool of small
// knapsack instances, the train/held split, and the models fitted per seed.
struct MiniSet {
  fs::path dir;
  std::vector<Instance> instances;  // generation order, index = numeric stem
  LabeledSet all;
  std::size_t n_train = 0;  // prefix of all.samples
  std::vector<Instance> held_instances;
  std::vector<double> held_bks;
  std::vector<ModelState> trained;
  std::vector<double> held_bce;
  int best = -1;
  std::string error;
};

void build_mini_set(MiniSet& ctx) {
  ctx.dir = fs::temp_directory_path() / ("poip_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(ctx.dir);
  fs::create_directories(ctx.dir);
  const int total = 260;
  std::vector<std::string> paths;
  for (int i = 0; i < total; ++i) {
    QmkpParams p;
    p.n_items = 20;
    p.n_dims = 3;
    p.seed = 1000 + static_cast<std::uint64_t>(i);
    Instance inst = gen_qmkp(p);
    const std::string path = (ctx.dir / (fmt("mini_%03d", i) + kInstanceExtension)).string();
    write_instance(inst, path);
    paths.push_back(path);
    ctx.instances.push_back(std::move(inst));
  }
  LabelGenConfig lg;
  lg.limits.time_limit = 20.0;
  generate_labels(paths, ctx.dir.string(), lg);
  ctx.all = load_labeled_dataset(ctx.dir.string());
  const std::size_t labeled = ctx.all.samples.size();
  if (labeled < 220) {
    ctx.error = fmt("only %zu of %d instances got exact labels", labeled, total);
    return;
  }
  const std::size_t held = std::min<std::size_t>(40, labeled - 200);
  ctx.n_train = labeled - held;
  for (std::size_t k = ctx.n_train; k < labeled; ++k) {
    const std::string& stem = ctx.all.names[k];
    ctx.held_instances.push_back(ctx.instances[static_cast<std::size_t>(std::stoi(stem.substr(5)))]);
    std::ifstream f(ctx.dir / (stem + ".labels.json"), std::ios::binary);
    nlohmann::json j;
    f >> j;
    ctx.held_bks.push_back(j.at("objective").get<double>());
  }
}

CheckResult check_memory_estimate() {
  volatile std::int64_t warm = memory_estimate(1, 1, 1, 1);
  (void)warm;
  Timer t;
  const std::int64_t got = memory_estimate(50200, 50700, 100000, 200300);
  const double ms = t.seconds() * 1e3;
  CheckResult r;
  r.pass = got == 12447600 && ms < 1.0;
  r.detail = fmt("estimate(50200, 50700, 100000, 200300) = %lld bytes in %.4f ms",
                 static_cast<long long>(got), ms);
  return r;
}

CheckResult check_gradients() {
  std::vector<Instance> insts;
  for (int i = 0; i < 9; ++i) {
    QmkpParams p;
    p.n_items = 10;
    p.n_dims = 2;
    p.seed = 300 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_qmkp(p));
  }
  for (int i = 0; i < 8; ++i) {
    RandqcpParams p;
    p.n_vars = 10;
    p.n_hyperedges = 6;
    p.edge_max = 3;
    p.seed = 400 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_randqcp(p));
  }
  for (int i = 0; i < 8; ++i) {
    CflptcParams p;
    p.n_customers = 4;
    p.n_facilities = 2;
    p.beta = 3;
    p.seed = 500 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_cflptc(p));
  }
  Rng rng(202);
  long long checked = 0, failed = 0;
  int wrong_size = 0;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    if (insts[i].n_vars() != 10) ++wrong_size;
    ModelConfig mc;
    mc.embed_dim = 6;
    mc.hidden_dim = 8;
    mc.hyper_iters = 2;
    mc.vc_iters = 1;
    mc.seed = 600 + i;
    ModelState st = init_model(mc);
    randomize_biases(st, 700 + i);
    const Hypergraph hg = encode(insts[i]);
    Rng lr = rng.fork("labels", i);
    std::vector<double> labels(static_cast<std::size_t>(insts[i].n_vars()));
    for (double& l : labels) l = static_cast<double>(lr.next_int(0, 1));
    const GradStats g = gradcheck(hg, st, labels);
    checked += g.checked;
    failed += g.failed;
  }
  CheckResult r;
  r.pass = failed == 0 && wrong_size == 0 && insts.size() == 25;
  r.detail = fmt("%lld parameter gradients over 25 ten-variable instances, %lld outside 1e-4 rel / 1e-7 abs",
                 checked, failed);
  return r;
}

CheckResult check_equivariance() {
  ModelConfig mc;
  mc.embed_dim = 6;
  mc.hidden_dim = 8;
  mc.hyper_iters = 2;
  mc.vc_iters = 1;
  mc.seed = 13;
  ModelState st = init_model(mc);
  randomize_biases(st, 31);

  Rng rng(303);
  std::vector<Instance> insts;
  for (int i = 0; i < 20; ++i)
    insts.push_back(oracle::random_instance(rng, 6 + i % 5, 3 + i % 3, 6, 3));
  for (int i = 0; i < 10; ++i) {
    QmkpParams p;
    p.n_items = 8 + i % 5;
    p.n_dims = 2;
    p.seed = 810 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_qmkp(p));
  }
  for (int i = 0; i < 10; ++i) {
    RandqcpParams p;
    p.n_vars = 8 + i % 5;
    p.n_hyperedges = 5;
    p.seed = 820 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_randqcp(p));
  }
  for (int i = 0; i < 10; ++i) {
    CflptcParams p;
    p.n_customers = 3 + i % 3;
    p.n_facilities = 2;
    p.beta = 2 + i % 2;
    p.seed = 830 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_cflptc(p));
  }

  long long compared = 0, mismatched = 0;
  for (std::size_t idx = 0; idx < insts.size(); ++idx) {
    const Instance& inst = insts[idx];
    const int n = inst.n_vars();
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng prng = rng.fork("perm", idx);
    prng.shuffle(perm);
    const Instance pi = permute_variables(inst, perm);
    Tape t1, t2;
    const auto base = forward(encode(inst), st, t1);
    const auto mapped = forward(encode(pi), st, t2);
    for (int v = 0; v < n; ++v) {
      ++compared;
      if (mapped[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] !=
          base[static_cast<std::size_t>(v)])
        ++mismatched;
    }
  }
  CheckResult r;
  r.pass = mismatched == 0 && insts.size() == 50;
  r.detail = fmt("%lld logits over 50 permuted instances, %lld not bitwise equal", compared,
                 mismatched);
  return r;
}

CheckResult check_subsolver_agreement() {
  std::vector<Instance> insts;
  const int items[] = {8, 10, 12, 14, 16};
  for (int i = 0; i < 70; ++i) {
    QmkpParams p;
    p.n_items = items[i % 5];
    p.n_dims = 2 + i % 2;
    p.seed = 4100 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_qmkp(p));
  }
  for (int i = 0; i < 70; ++i) {
    RandqcpParams p;
    p.n_vars = items[i % 5];
    p.n_hyperedges = p.n_vars / 2 + 1;
    p.edge_max = 4;
    p.seed = 4200 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_randqcp(p));
  }
  const int fl[][2] = {{2, 4}, {2, 5}, {2, 6}, {3, 4}};
  for (int i = 0; i < 60; ++i) {
    CflptcParams p;
    p.n_facilities = fl[i % 4][0];
    p.n_customers = fl[i % 4][1];
    p.beta = 2;
    p.seed = 4300 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_cflptc(p));
  }

  int optimal = 0, infeasible = 0, over = 0;
  long long bad = 0;
  for (const Instance& inst : insts) {
    if (inst.n_vars() > 18) {
      ++over;
      continue;
    }
    SubProblem sp;
    sp.inst = &inst;
    sp.fixed = PartialAssignment::none(inst.n_vars());
    const SolveResult r1 = solve_bnb(sp, SolveLimits{});
    const SolveResult r2 = solve_enumerate(sp, SolveLimits{});
    if (r1.status != r2.status) {
      ++bad;
      continue;
    }
    if (r1.status == SolveStatus::Infeasible) {
      ++infeasible;
      continue;
    }
    if (r1.status != SolveStatus::Optimal || !r1.best || !r2.best) {
      ++bad;
      continue;
    }
    ++optimal;
    const bool objs_equal = r1.objective == r2.objective;
    const bool attained = objective_value(inst, *r1.best) == r1.objective &&
                          objective_value(inst, *r2.best) == r2.objective;
    const bool feas = check_feasible(inst, *r1.best).feasible && check_feasible(inst, *r2.best).feasible;
    if (!objs_equal || !attained || !feas) ++bad;
  }
  CheckResult r;
  r.pass = bad == 0 && over == 0 && optimal + infeasible == 200;
  r.detail = fmt("200 instances up to 18 binaries: %d optimal, %d infeasible, %lld disagreements",
                 optimal, infeasible, bad);
  return r;
}

CheckResult check_pipeline_soundness() {
  Rng rng(505);
  std::vector<Instance> insts;
  for (int i = 0; i < 30; ++i) {
    QmkpParams p;
    p.n_items = 6 + i % 5;
    p.n_dims = 2;
    p.seed = 5100 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_qmkp(p));
  }
  for (int i = 0; i < 30; ++i) {
    RandqcpParams p;
    p.n_vars = 6 + i % 5;
    p.n_hyperedges = 4;
    p.seed = 5200 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_randqcp(p));
  }
  for (int i = 0; i < 20; ++i) {
    CflptcParams p;
    p.n_facilities = 2;
    p.n_customers = 3 + i % 2;
    p.beta = 2;
    p.seed = 5300 + static_cast<std::uint64_t>(i);
    insts.push_back(gen_cflptc(p));
  }
  for (int i = 0; i < 20; ++i) insts.push_back(integer_box_instance(rng, 3 + i % 2, 3));

  int solved = 0, unsolved = 0, infeasible_solutions = 0, non_monotone = 0;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    SolveWithModelConfig cfg;
    cfg.refine.max_rounds = 2;
    cfg.refine.seed = 9000 + i;
    const SolveReport rep = solve_with_model(insts[i], nullptr, cfg);
    if (!rep.solution) {
      ++unsolved;
      continue;
    }
    ++solved;
    if (!check_feasible(insts[i], *rep.solution, 1e-6).feasible) ++infeasible_solutions;
    for (std::size_t k = 1; k < rep.refine_curve.size(); ++k)
      if (rep.refine_curve[k] < rep.refine_curve[k - 1]) ++non_monotone;
  }
  CheckResult r;
  r.pass = infeasible_solutions == 0 && non_monotone == 0 && insts.size() == 100 && solved > 0;
  r.detail = fmt("100 instances: %d solved, %d without a solution, %d infeasible at 1e-6, %d curve decreases",
                 solved, unsolved, infeasible_solutions, non_monotone);
  return r;
}

CheckResult check_binarization() {
  Rng rng(606);
  int feasible = 0, infeasible = 0;
  long long bad = 0;
  double max_diff = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Instance inst = integer_box_instance(rng, 4 + i % 2, 7);
    const oracle::BoxOptimum orig = oracle::enumerate_box(inst);
    const Binarization bin = binarize(inst);
    const oracle::BoxOptimum flat = oracle::enumerate_box(bin.instance);
    if (orig.feasible != flat.feasible) {
      ++bad;
      continue;
    }
    if (!orig.feasible) {
      ++infeasible;
      continue;
    }
    ++feasible;
    max_diff = std::max(max_diff, std::abs(orig.objective - flat.objective));
    if (orig.objective != flat.objective) {
      ++bad;
      continue;
    }
    const Assignment decoded = bin.decode(flat.x);
    if (objective_value(inst, decoded) != flat.objective ||
        !check_feasible(inst, decoded, 1e-6).feasible)
      ++bad;
  }
  CheckResult r;
  r.pass = bad == 0 && feasible + infeasible == 50;
  r.detail = fmt("50 integer boxes on [0,7]: %d feasible, %d infeasible, %lld disagreements, max optimum difference %.3g",
                 feasible, infeasible, bad, max_diff);
  return r;
}

CheckResult check_training(MiniSet& ctx) {
  try {
    build_mini_set(ctx);
  } catch (const std::exception& e) {
    ctx.error = e.what();
  }
  if (!ctx.error.empty()) return {false, "mini set unavailable: " + ctx.error};

  const double target = std::log(2.0) * 0.9;
  const std::span<const TrainSample> all(ctx.all.samples);
  const auto train_span = all.first(ctx.n_train);
  const auto held_span = all.subspan(ctx.n_train);
  int below = 0;
  std::string bces;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    ModelConfig mc;
    mc.embed_dim = 12;
    mc.hidden_dim = 24;
    mc.hyper_iters = 3;
    mc.vc_iters = 1;
    mc.seed = s;
    ModelState st = init_model(mc);
    TrainConfig tc;
    tc.epochs = 100;
    tc.batch_size = 4;
    tc.learning_rate = 3e-3;
    tc.shuffle_seed = s;
    train(st, train_span, tc);
    const QualityReport q = label_scores(&st, held_span);
    if (q.bce < target) ++below;
    ctx.held_bce.push_back(q.bce);
    ctx.trained.push_back(std::move(st));
    bces += fmt("%s%.4f", s == 1 ? "" : "/", q.bce);
  }
  ctx.best = static_cast<int>(std::min_element(ctx.held_bce.begin(), ctx.held_bce.end()) -
                              ctx.held_bce.begin());
  CheckResult r;
  r.pass = below >= 4;
  r.detail = fmt("%zu train / %zu held instances, held BCE %s, %d/5 seeds below %.4f",
                 ctx.n_train, held_span.size(), bces.c_str(), below, target);
  return r;
}

CheckResult check_repair_direction(MiniSet& ctx) {
  if (ctx.best < 0) return {false, "no trained model available"};
  SolveWithModelConfig cfg;
  cfg.repair.alpha0 = 0.6;
  cfg.repair.per_solve.node_limit = 200;
  cfg.budget.nodes = 600;
  const PredictionQuality t =
      prediction_quality(ctx.held_instances, ctx.held_bks, &ctx.trained[static_cast<std::size_t>(ctx.best)], cfg);
  const PredictionQuality u = prediction_quality(ctx.held_instances, ctx.held_bks, nullptr, cfg);
  CheckResult r;
  const bool comparable = !t.gaps.empty() && !u.gaps.empty();
  r.pass = comparable && t.mean_gap_pct <= u.mean_gap_pct;
  r.detail = fmt("equal node budgets on %d held instances: trained mean gap %.2f%% (%d failed) vs uniform %.2f%% (%d failed)",
                 t.n_instances, t.mean_gap_pct, t.n_failed, u.mean_gap_pct, u.n_failed);
  return r;
}

CheckResult check_metric_fixtures() {
  long long bad = 0;
  auto near = [&](double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol)) ++bad;
  };
  near(gap_pct(42.0, 42.0), 0.0, 0.0);
  near(gap_pct(50.0, 100.0), 50.0, 1e-9);
  near(gap_pct(105.0, 100.0), 5.0, 1e-9);
  near(gap_pct(-90.0, -100.0), 10.0, 1e-9);
  near(gap_pct(1.0, 0.0), 1e12, 1e-9 * 1e12);
  const std::vector<double> z3{0.0, 3.0};
  near(shifted_geometric_mean(z3, 1.0), 1.0, 1e-9);
  const std::vector<double> o3{1.0, 3.0};
  near(shifted_geometric_mean(o3, 1.0), 2.0 * std::sqrt(2.0) - 1.0, 1e-9);
  const std::vector<double> c7{7.0, 7.0, 7.0};
  near(shifted_geometric_mean(c7, 5.0), 7.0, 1e-9);
  const std::vector<double> single{5.0};
  near(shifted_geometric_mean(single, 1.0), 5.0, 1e-9);
  int throws = 0;
  try {
    shifted_geometric_mean({}, 1.0);
  } catch (const ValidationError&) {
    ++throws;
  }
  const std::vector<double> neg{-2.0};
  try {
    shifted_geometric_mean(neg, 1.0);
  } catch (const ValidationError&) {
    ++throws;
  }
  const std::vector<double> zero_zero{0.0};
  try {
    shifted_geometric_mean(zero_zero, 0.0);
  } catch (const ValidationError&) {
    ++throws;
  }
  CheckResult r;
  r.pass = bad == 0 && throws == 3;
  r.detail = fmt("9 closed-form values at 1e-9 (%lld off), %d/3 undefined inputs rejected", bad, throws);
  return r;
}

CheckResult check_ablation_plumbing(MiniSet& ctx) {
  if (ctx.dir.empty() || ctx.all.samples.empty())
    return {false, "mini set unavailable" + (ctx.error.empty() ? "" : ": " + ctx.error)};
  const std::string ck1 = (ctx.dir / "ablate_nohyper.ckpt.json").string();
  const std::string ck2 = (ctx.dir / "ablate_novc.ckpt.json").string();
  const std::string rep1 = (ctx.dir / "ablate_nohyper.report.json").string();
  const std::string rep2 = (ctx.dir / "ablate_novc.report.json").string();
  const std::string inst_file = (ctx.dir / (ctx.all.names.back() + kInstanceExtension)).string();
  int rc_t1 = -1, rc_t2 = -1, rc_s1 = -1, rc_s2 = -1;
  {
    Silencer quiet;
    const std::vector<std::string> common = {
        "--data-dir", ctx.dir.string(), "--epochs", "2",  "--batch-size", "16",
        "--lr",       "1e-3",           "--embed-dim", "8", "--hidden-dim", "12",
        "--hyper-iters", "2",           "--vc-iters", "1", "--seed", "7"};
    std::vector<std::string> a1 = {"train", "--ablation", "no-hyper", "--out", ck1};
    a1.insert(a1.end(), common.begin(), common.end());
    rc_t1 = run_cli(a1);
    std::vector<std::string> a2 = {"train", "--ablation", "no-vc", "--out", ck2};
    a2.insert(a2.end(), common.begin(), common.end());
    rc_t2 = run_cli(a2);
    rc_s1 = run_cli({"solve", "--instance", inst_file, "--model", ck1, "--max-rounds", "1",
                     "--per-solve-nodes", "4000", "--seed", "3", "--out", rep1});
    rc_s2 = run_cli({"solve", "--instance", inst_file, "--model", ck2, "--max-rounds", "1",
                     "--per-solve-nodes", "4000", "--seed", "3", "--out", rep2});
  }
  const bool artifacts = fs::exists(ck1) && fs::exists(ck2) && fs::exists(rep1) && fs::exists(rep2);

  // A zeroed hyperedge-update output layer makes each hyper iteration add
  // exactly nothing, so disabling the stage must not change a single bit.
  ModelConfig mc;
  mc.embed_dim = 6;
  mc.hidden_dim = 8;
  mc.hyper_iters = 2;
  mc.vc_iters = 1;
  mc.seed = 33;
  ModelState full = init_model(mc);
  randomize_biases(full, 55);
  full.params.phi_h.w2.zero();
  full.params.phi_h.b2.zero();
  ModelState ablated = full;
  ablated.cfg.enable_hyper_conv = false;
  const Instance lin = linear_objective_instance();
  const Hypergraph hg = encode(lin);
  Tape t1, t2;
  const auto lf = forward(hg, full, t1);
  const auto la = forward(hg, ablated, t2);
  int mism = 0;
  for (std::size_t i = 0; i < lf.size(); ++i)
    if (lf[i] != la[i]) ++mism;

  CheckResult r;
  r.pass = rc_t1 == 0 && rc_t2 == 0 && rc_s1 == 0 && rc_s2 == 0 && artifacts && mism == 0;
  r.detail = fmt("no-hyper/no-vc train exits %d/%d, solve exits %d/%d, %d identity logits differ",
                 rc_t1, rc_t2, rc_s1, rc_s2, mism);
  return r;
}

}  // namespace

int main() {
  std::printf("poip end-to-end verification\n");
  MiniSet ctx;
  struct Row {
    int id;
    const char* name;
    double limit_s;
    std::function<CheckResult()> fn;
  };
  const std::vector<Row> rows = {
      {1, "memory estimate closed form", 0.0, check_memory_estimate},
      {2, "parameter gradients match central differences", 120.0, check_gradients},
      {3, "logits are permutation equivariant", 60.0, check_equivariance},
      {4, "branch and bound agrees with enumeration", 300.0, check_subsolver_agreement},
      {5, "repair and refine stay feasible and monotone", 300.0, check_pipeline_soundness},
      {6, "binarization preserves box optima", 120.0, check_binarization},
      {7, "training lowers held-out cross-entropy", 1800.0, [&] { return check_training(ctx); }},
      {8, "trained repair gaps at most uniform", 900.0, [&] { return check_repair_direction(ctx); }},
      {9, "metric closed-form fixtures", 0.0, check_metric_fixtures},
      {10, "ablation modes run end to end", 0.0, [&] { return check_ablation_plumbing(ctx); }},
  };
  int failures = 0;
  for (const Row& row : rows) {
    Timer t;
    CheckResult res;
    try {
      res = row.fn();
    } catch (const std::exception& e) {
      res.pass = false;
      res.detail = fmt("unexpected exception: %s", e.what());
    }
    const double elapsed = t.seconds();
    const bool in_time = row.limit_s <= 0.0 || elapsed < row.limit_s;
    const bool pass = res.pass && in_time;
    if (!pass) ++failures;
    std::string timing = fmt("%.2f s", elapsed);
    if (row.limit_s > 0.0)
      timing += fmt(" of %.0f s%s", row.limit_s, in_time ? "" : " EXCEEDED");
    std::printf("[%2d] %s %s: %s (%s)\n", row.id, pass ? "PASS" : "FAIL", row.name,
                res.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  if (!ctx.dir.empty()) {
    std::error_code ec;
    fs::remove_all(ctx.dir, ec);
  }
  std::printf("%d of 10 checks passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
