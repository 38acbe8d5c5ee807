#include "poip/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "poip/bench.hpp"
#include "poip/common.hpp"
#include "poip/generators.hpp"
#include "poip/hypergraph.hpp"
#include "poip/io.hpp"
#include "poip/repair.hpp"

namespace fs = std::filesystem;

namespace poip {

namespace {

struct GenerateArgs {
  std::string family;
  int count = 1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  QmkpParams qmkp;
  RandqcpParams randqcp;
  CflptcParams cflptc;
  bool quad_reform = false;
};

void cmd_generate(const GenerateArgs& a) {
  fs::create_directories(a.out_dir);
  nlohmann::ordered_json manifest;
  manifest["family"] = a.family;
  manifest["count"] = a.count;
  manifest["seed"] = a.seed;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    Instance inst;
    if (a.family == "qmkp") {
      QmkpParams p = a.qmkp;
      p.seed = seed;
      inst = gen_qmkp(p);
    } else if (a.family == "randqcp") {
      RandqcpParams p = a.randqcp;
      p.seed = seed;
      inst = gen_randqcp(p);
    } else if (a.family == "cflptc") {
      CflptcParams p = a.cflptc;
      p.seed = seed;
      inst = gen_cflptc(p);
      if (a.quad_reform) inst = cflptc_quadratic_reformulation(inst);
    } else {
      throw ConfigError("unknown family '" + a.family + "' (qmkp, randqcp, cflptc)");
    }
    const fs::path path = fs::path(a.out_dir) / (inst.name + kInstanceExtension);
    write_instance(inst, path.string());
    files.push_back(path.filename().string());
  }
  manifest["files"] = files;
  std::ofstream mf(fs::path(a.out_dir) / "manifest.json", std::ios::binary);
  if (!mf) throw Error("cannot write manifest.json");
  mf << manifest.dump(2) << "\n";
  std::cout << "wrote " << a.count << " instance(s) to " << a.out_dir << "\n";
}

struct TrainArgs {
  std::string data_dir;
  std::string out_path;
  std::string resume_path;
  std::string eval_dir;
  std::string curve_path;
  ModelConfig model;
  TrainConfig train;
};

void cmd_train(const TrainArgs& a) {
  LabeledSet set = load_labeled_dataset(a.data_dir);
  if (set.samples.empty()) throw ValidationError("no labeled instances in " + a.data_dir);
  ModelState st = a.resume_path.empty() ? init_model(a.model) : load_checkpoint(a.resume_path);
  const TrainResult tr = train(st, set.samples, a.train);
  save_checkpoint(st, a.out_path);
  std::cout << "trained on " << set.samples.size() << " instance(s), " << a.train.epochs
            << " epoch(s)";
  if (!tr.loss_curve.empty()) std::cout << ", final loss " << tr.loss_curve.back();
  std::cout << "\ncheckpoint: " << a.out_path << "\n";
  if (!a.curve_path.empty()) {
    nlohmann::ordered_json j;
    j["loss_curve"] = tr.loss_curve;
    std::ofstream f(a.curve_path, std::ios::binary);
    if (!f) throw Error("cannot write " + a.curve_path);
    f << j.dump(2) << "\n";
  }
  if (!a.eval_dir.empty()) {
    LabeledSet eval = load_labeled_dataset(a.eval_dir);
    const QualityReport q = label_scores(&st, eval.samples);
    std::cout << "eval on " << eval.samples.size() << " instance(s): bce " << q.bce
              << ", accuracy " << q.accuracy << "\n";
  }
}

struct SolveArgs {
  std::string instance_path;
  std::string model_path;
  std::string out_path;
  SolveWithModelConfig cfg;
  bool exact = false;
  double budget_seconds = kInf;
  std::int64_t budget_nodes = 0;
  double per_solve_seconds = kInf;
  std::int64_t per_solve_nodes = 0;
  std::uint64_t seed = 0;
  bool no_refine = false;
};

nlohmann::ordered_json solution_json(const Instance& inst, const Assignment& x) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t v = 0; v < inst.variables.size(); ++v)
    j[inst.variables[v].name] = x[v];
  return j;
}

void cmd_solve(SolveArgs a) {
  const Instance inst = read_instance(a.instance_path);
  nlohmann::ordered_json out;
  out["instance"] = inst.name;
  out["sense"] = inst.minimize ? "min" : "max";

  if (a.exact) {
    Binarization bin = binarize(inst);
    SubProblem sp;
    sp.inst = &bin.instance;
    sp.fixed = PartialAssignment::none(bin.instance.n_vars());
    SolveLimits lim{a.budget_seconds, a.budget_nodes};
    const SolveResult r = get_subsolver(a.cfg.subsolver)(sp, lim);
    out["status"] = to_string(r.status);
    out["nodes"] = r.nodes;
    out["elapsed_s"] = r.elapsed_s;
    if (r.best) {
      const Assignment decoded = bin.decode(*r.best);
      out["objective"] = original_objective_value(inst, decoded);
      out["solution"] = solution_json(inst, decoded);
    }
  } else {
    a.cfg.budget = Budget{a.budget_seconds, a.budget_nodes};
    a.cfg.repair.per_solve = SolveLimits{a.per_solve_seconds, a.per_solve_nodes};
    a.cfg.refine.per_solve = a.cfg.repair.per_solve;
    a.cfg.refine.seed = a.seed;
    a.cfg.refine_enabled = !a.no_refine;
    std::optional<ModelState> model;
    if (!a.model_path.empty()) model = load_checkpoint(a.model_path);
    const SolveReport r = solve_with_model(inst, model ? &*model : nullptr, a.cfg);
    out["status"] = r.status;
    out["elapsed_s"] = r.elapsed_s;
    out["nodes"] = r.nodes_used;
    out["repair"] = {{"alphas", r.repair_trace.alphas},
                     {"neighborhood_sizes", r.repair_trace.neighborhood_sizes}};
    out["refine"] = {{"rounds", r.refine_rounds}, {"curve", r.refine_curve}};
    if (r.solution) {
      out["objective"] = r.objective;
      out["solution"] = solution_json(inst, *r.solution);
    }
  }

  if (!a.out_path.empty()) {
    std::ofstream f(a.out_path, std::ios::binary);
    if (!f) throw Error("cannot write " + a.out_path);
    f << out.dump(2) << "\n";
    std::cout << "report: " << a.out_path << "\n";
  } else {
    std::cout << out.dump(2) << "\n";
  }
}

struct InspectArgs {
  std::string instance_path;
  bool as_json = false;
};

void cmd_inspect(const InspectArgs& a) {
  const Instance inst = read_instance(a.instance_path);
  int nb = 0, ni = 0, nc = 0;
  for (const VariableDef& v : inst.variables) {
    if (v.type == VarType::Binary) ++nb;
    else if (v.type == VarType::Integer) ++ni;
    else ++nc;
  }
  int max_deg = 0;
  for (const PolyTerm& t : inst.objective.terms) max_deg = std::max(max_deg, t.degree());
  for (const Constraint& c : inst.constraints)
    for (const PolyTerm& t : c.lhs.terms) max_deg = std::max(max_deg, t.degree());
  const Hypergraph hg = encode(inst);
  const GraphStats st = graph_stats(hg);
  if (a.as_json) {
    nlohmann::ordered_json j;
    j["name"] = inst.name;
    j["sense"] = inst.minimize ? "min" : "max";
    j["variables"] = {{"total", inst.n_vars()}, {"binary", nb}, {"integer", ni}, {"continuous", nc}};
    j["constraints"] = inst.constraints.size();
    j["objective_terms"] = inst.objective.terms.size();
    j["max_term_degree"] = max_deg;
    j["graph"] = {{"n", st.n},   {"m", st.m},          {"n_h", st.n_h},
                  {"s", st.s},   {"n_e", st.n_e},      {"max_degree", st.max_degree},
                  {"estimated_bytes", st.estimated_bytes}};
    if (inst.bks) j["bks"] = *inst.bks;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << inst.name << " (" << (inst.minimize ? "min" : "max") << ")\n"
              << "  variables: " << inst.n_vars() << " (" << nb << " binary, " << ni
              << " integer, " << nc << " continuous)\n"
              << "  constraints: " << inst.constraints.size() << "\n"
              << "  objective terms: " << inst.objective.terms.size() << ", max degree "
              << max_deg << "\n"
              << "  graph: n=" << st.n << " m=" << st.m << " n_h=" << st.n_h << " s=" << st.s
              << " n_e=" << st.n_e << "\n"
              << "  estimated bytes: " << st.estimated_bytes << "\n";
    if (inst.bks) std::cout << "  bks: " << *inst.bks << "\n";
  }
}

struct LabelsArgs {
  std::string dir;
  std::string out_dir;
  double time_limit = kInf;
  std::int64_t node_limit = 0;
  std::string subsolver = "bnb";
};

void cmd_labels(const LabelsArgs& a) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(a.dir)) {
    if (entry.is_regular_file() && entry.path().string().ends_with(kInstanceExtension))
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw ValidationError("no instances in " + a.dir);
  LabelGenConfig cfg;
  cfg.limits = SolveLimits{a.time_limit, a.node_limit};
  cfg.subsolver = a.subsolver;
  const std::string out = a.out_dir.empty() ? a.dir : a.out_dir;
  const LabelGenResult r = generate_labels(paths, out, cfg);
  std::cout << "labeled " << r.labeled.size() << " instance(s), excluded " << r.excluded.size()
            << "\n";
  for (const auto& [path, reason] : r.excluded)
    std::cout << "  excluded " << path << ": " << reason << "\n";
}

struct BenchArgs {
  std::string plan_path;
  std::string out_dir;
};

void cmd_bench(const BenchArgs& a) {
  const ExperimentResult r = run_experiment(a.plan_path, a.out_dir);
  std::cout << r.runs << " run(s)\n"
            << "results: " << r.csv_path << "\n"
            << "summary: " << r.summary_path << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"polynomial-objective integer programming toolkit"};
  app.require_subcommand(1);

  GenerateArgs ga;
  CLI::App* gen = app.add_subcommand("generate", "write synthetic instances");
  gen->add_option("--family", ga.family, "qmkp, randqcp or cflptc")->required();
  gen->add_option("--count", ga.count, "number of instances")->check(CLI::PositiveNumber);
  gen->add_option("--seed", ga.seed, "base seed; instance i uses seed+i");
  gen->add_option("--out", ga.out_dir, "output directory")->required();
  gen->add_option("--n-items", ga.qmkp.n_items, "qmkp: items");
  gen->add_option("--n-dims", ga.qmkp.n_dims, "qmkp: knapsack dimensions");
  gen->add_option("--density", ga.qmkp.density, "qmkp: profit pair density");
  gen->add_option("--n-vars", ga.randqcp.n_vars, "randqcp: variables");
  gen->add_option("--n-hyperedges", ga.randqcp.n_hyperedges, "randqcp: objective hyperedges");
  gen->add_option("--edge-min", ga.randqcp.edge_min, "randqcp: smallest hyperedge");
  gen->add_option("--edge-max", ga.randqcp.edge_max, "randqcp: largest hyperedge");
  gen->add_option("--n-customers", ga.cflptc.n_customers, "cflptc: customers");
  gen->add_option("--n-facilities", ga.cflptc.n_facilities, "cflptc: facilities");
  gen->add_option("--alpha", ga.cflptc.alpha, "cflptc: congestion weight");
  gen->add_option("--beta", ga.cflptc.beta, "cflptc: congestion exponent");
  gen->add_flag("--explicit-e", ga.cflptc.explicit_e, "cflptc: keep traffic variables");
  gen->add_flag("--quad-reform", ga.quad_reform, "cflptc: quadratic reformulation of traffic powers");

  TrainArgs ta;
  std::string ablation = "none";
  CLI::App* tr = app.add_subcommand("train", "fit a model on labeled instances");
  tr->add_option("--data-dir,--data", ta.data_dir, "directory of instances + labels")->required();
  tr->add_option("--out", ta.out_path, "checkpoint path")->required();
  tr->add_option("--resume", ta.resume_path, "continue from a checkpoint");
  tr->add_option("--eval", ta.eval_dir, "held-out labeled directory to score after training");
  tr->add_option("--curve-out", ta.curve_path, "write the per-epoch loss curve as JSON");
  tr->add_option("--epochs", ta.train.epochs, "training epochs");
  tr->add_option("--batch-size", ta.train.batch_size, "instances per batch");
  tr->add_option("--lr", ta.train.learning_rate, "learning rate");
  tr->add_option("--weight-decay", ta.train.weight_decay, "decoupled weight decay");
  tr->add_option("--shuffle-seed", ta.train.shuffle_seed, "epoch shuffling seed");
  tr->add_option("--seed", ta.model.seed, "weight init seed");
  tr->add_option("--embed-dim", ta.model.embed_dim, "embedding width");
  tr->add_option("--hidden-dim", ta.model.hidden_dim, "perceptron hidden width");
  tr->add_option("--hyper-iters", ta.model.hyper_iters, "hyperedge conv iterations");
  tr->add_option("--vc-iters", ta.model.vc_iters, "variable-constraint conv iterations");
  tr->add_option("--ablation", ablation, "none, no-hyper or no-vc")
      ->check(CLI::IsMember({"none", "no-hyper", "no-vc"}));

  SolveArgs sa;
  CLI::App* so = app.add_subcommand("solve", "solve one instance");
  so->add_option("--instance", sa.instance_path, "instance file")->required();
  so->add_option("--model", sa.model_path, "checkpoint; omitted = uniform 0.5 predictions");
  so->add_option("--out", sa.out_path, "write the report JSON here instead of stdout");
  so->add_flag("--exact", sa.exact, "branch and bound to optimality, no prediction");
  so->add_option("--budget-seconds", sa.budget_seconds, "total time budget");
  so->add_option("--budget-nodes", sa.budget_nodes, "total node budget (0 = unlimited)");
  so->add_option("--per-solve-seconds", sa.per_solve_seconds, "per-subsolve time ceiling");
  so->add_option("--per-solve-nodes", sa.per_solve_nodes, "per-subsolve node ceiling");
  so->add_option("--subsolver", sa.cfg.subsolver, "bnb or enum");
  so->add_option("--alpha0", sa.cfg.repair.alpha0, "initial free fraction");
  so->add_option("--alpha-step", sa.cfg.repair.alpha_step, "free fraction increment");
  so->add_option("--alpha-ub", sa.cfg.repair.alpha_ub, "free fraction growth cap");
  so->add_option("--neighborhood-limit", sa.cfg.refine.neighborhood_limit,
                 "refinement neighborhood size (0 = half the variables)");
  sa.cfg.refine.max_rounds = 8;
  so->add_option("--max-rounds", sa.cfg.refine.max_rounds,
                 "refinement rounds (default 8; 0 = run until the budget is spent)");
  so->add_option("--seed", sa.seed, "refinement neighborhood seed");
  so->add_flag("--no-refine", sa.no_refine, "stop after prediction repair");

  InspectArgs ia;
  CLI::App* in = app.add_subcommand("inspect", "show instance and encoding statistics");
  in->add_option("--instance", ia.instance_path, "instance file")->required();
  in->add_flag("--json", ia.as_json, "machine-readable output");

  LabelsArgs la;
  CLI::App* lb = app.add_subcommand("labels", "solve instances exactly and store optima as labels");
  lb->add_option("--dir", la.dir, "instance directory")->required();
  lb->add_option("--out", la.out_dir, "label output directory (default: --dir)");
  lb->add_option("--time-limit", la.time_limit, "per-instance time limit");
  lb->add_option("--node-limit", la.node_limit, "per-instance node limit (0 = unlimited)");
  lb->add_option("--subsolver", la.subsolver, "bnb or enum");

  BenchArgs ba;
  CLI::App* be = app.add_subcommand("bench", "run an experiment plan");
  be->add_option("--plan", ba.plan_path, "experiment plan JSON")->required();
  be->add_option("--out", ba.out_dir, "output directory")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("poip");
  for (const std::string& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (ablation == "no-hyper") ta.model.enable_hyper_conv = false;
  else if (ablation == "no-vc") ta.model.enable_vc_conv = false;

  try {
    if (gen->parsed()) cmd_generate(ga);
    else if (tr->parsed()) cmd_train(ta);
    else if (so->parsed()) cmd_solve(sa);
    else if (in->parsed()) cmd_inspect(ia);
    else if (lb->parsed()) cmd_labels(la);
    else if (be->parsed()) cmd_bench(ba);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace poip
