#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poip/bench.hpp"
#include "poip/common.hpp"
#include "poip/generators.hpp"
#include "poip/hypergraph.hpp"
#include "poip/io.hpp"
#include "poip/repair.hpp"

namespace py = pybind11;
using namespace poip;

namespace {

py::dict stats_dict(const GraphStats& s) {
  py::dict d;
  d["n"] = s.n;
  d["m"] = s.m;
  d["n_h"] = s.n_h;
  d["s"] = s.s;
  d["n_e"] = s.n_e;
  d["max_degree"] = s.max_degree;
  d["estimated_bytes"] = s.estimated_bytes;
  return d;
}

py::dict result_dict(const Instance& inst, const Binarization& bin, const SolveResult& r) {
  py::dict d;
  d["status"] = to_string(r.status);
  d["nodes"] = r.nodes;
  d["elapsed_s"] = r.elapsed_s;
  if (r.best) {
    const Assignment decoded = bin.decode(*r.best);
    d["objective"] = original_objective_value(inst, decoded);
    d["solution"] = decoded;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "polynomial-objective integer programming toolkit";

  py::register_exception<Error>(m, "PoipError");

  py::class_<Instance>(m, "Instance")
      .def_property_readonly("name", [](const Instance& i) { return i.name; })
      .def_property_readonly("n_vars", &Instance::n_vars)
      .def_property_readonly("n_constraints",
                             [](const Instance& i) { return static_cast<int>(i.constraints.size()); })
      .def_property_readonly("sense",
                             [](const Instance& i) { return std::string(i.minimize ? "min" : "max"); })
      .def_property_readonly("bks", [](const Instance& i) { return i.bks; })
      .def("__repr__", [](const Instance& i) {
        return "<Instance " + i.name + ": " + std::to_string(i.n_vars()) + " vars, " +
               std::to_string(i.constraints.size()) + " constraints>";
      });

  m.def("read_instance", &read_instance, py::arg("path"));
  m.def("write_instance", &write_instance, py::arg("instance"), py::arg("path"));
  m.def("instance_to_json", &instance_to_json, py::arg("instance"));

  m.def(
      "gen_qmkp",
      [](int n_items, int n_dims, double density, std::uint64_t seed) {
        QmkpParams p;
        p.n_items = n_items;
        p.n_dims = n_dims;
        p.density = density;
        p.seed = seed;
        return gen_qmkp(p);
      },
      py::arg("n_items") = 20, py::arg("n_dims") = 3, py::arg("density") = 0.3,
      py::arg("seed") = 0);
  m.def(
      "gen_randqcp",
      [](int n_vars, int n_hyperedges, int edge_min, int edge_max, std::uint64_t seed) {
        RandqcpParams p;
        p.n_vars = n_vars;
        p.n_hyperedges = n_hyperedges;
        p.edge_min = edge_min;
        p.edge_max = edge_max;
        p.seed = seed;
        return gen_randqcp(p);
      },
      py::arg("n_vars") = 20, py::arg("n_hyperedges") = 10, py::arg("edge_min") = 2,
      py::arg("edge_max") = 4, py::arg("seed") = 0);
  m.def(
      "gen_cflptc",
      [](int n_customers, int n_facilities, double alpha, int beta, bool explicit_e,
         std::uint64_t seed) {
        CflptcParams p;
        p.n_customers = n_customers;
        p.n_facilities = n_facilities;
        p.alpha = alpha;
        p.beta = beta;
        p.explicit_e = explicit_e;
        p.seed = seed;
        return gen_cflptc(p);
      },
      py::arg("n_customers") = 5, py::arg("n_facilities") = 2, py::arg("alpha") = 1.0,
      py::arg("beta") = 4, py::arg("explicit_e") = false, py::arg("seed") = 0);
  m.def("cflptc_quadratic_reformulation", &cflptc_quadratic_reformulation, py::arg("instance"));

  m.def(
      "graph_stats", [](const Instance& inst) { return stats_dict(graph_stats(encode(inst))); },
      py::arg("instance"));
  m.def("memory_estimate", &memory_estimate, py::arg("n"), py::arg("m"), py::arg("s"),
        py::arg("n_e"));

  m.def(
      "objective_value",
      [](const Instance& inst, const std::vector<double>& x) {
        return original_objective_value(inst, x);
      },
      py::arg("instance"), py::arg("x"));
  m.def(
      "is_feasible",
      [](const Instance& inst, const std::vector<double>& x, double tol) {
        return check_feasible(inst, x, tol).feasible;
      },
      py::arg("instance"), py::arg("x"), py::arg("tol") = kFeasTol);

  m.def("gap_pct", &gap_pct, py::arg("objective"), py::arg("bks"));
  m.def(
      "shifted_geometric_mean",
      [](const std::vector<double>& xs, double shift) { return shifted_geometric_mean(xs, shift); },
      py::arg("xs"), py::arg("shift") = 1.0);

  py::class_<ModelState>(m, "Model")
      .def_static(
          "init",
          [](std::uint64_t seed, int embed_dim, int hidden_dim, int hyper_iters, int vc_iters) {
            ModelConfig cfg;
            cfg.seed = seed;
            cfg.embed_dim = embed_dim;
            cfg.hidden_dim = hidden_dim;
            cfg.hyper_iters = hyper_iters;
            cfg.vc_iters = vc_iters;
            return init_model(cfg);
          },
          py::arg("seed") = 0, py::arg("embed_dim") = 16, py::arg("hidden_dim") = 64,
          py::arg("hyper_iters") = 6, py::arg("vc_iters") = 1)
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def(
          "save", [](const ModelState& st, const std::string& path) { save_checkpoint(st, path); },
          py::arg("path"))
      .def_property_readonly("step", [](const ModelState& st) { return st.step; })
      .def(
          "predict",
          [](const ModelState& st, const Instance& inst) {
            const Binarization bin = binarize(inst);
            const Prediction p = predict(bin.instance, st);
            py::dict d;
            d["prob"] = p.prob;
            d["rounded"] = p.rounded;
            d["uncertainty"] = p.uncertainty;
            return d;
          },
          py::arg("instance"));

  m.def(
      "train_on_dir",
      [](ModelState& st, const std::string& dir, int epochs, int batch_size, double lr, double wd,
         std::uint64_t shuffle_seed) {
        const LabeledSet set = load_labeled_dataset(dir);
        if (set.samples.empty()) throw ValidationError("no labeled instances in " + dir);
        TrainConfig tc;
        tc.epochs = epochs;
        tc.batch_size = batch_size;
        tc.learning_rate = lr;
        tc.weight_decay = wd;
        tc.shuffle_seed = shuffle_seed;
        return train(st, set.samples, tc).loss_curve;
      },
      py::arg("model"), py::arg("dir"), py::arg("epochs") = 100, py::arg("batch_size") = 64,
      py::arg("lr") = 1e-4, py::arg("wd") = 1e-4, py::arg("shuffle_seed") = 0);

  m.def(
      "generate_labels",
      [](const std::vector<std::string>& paths, const std::string& out_dir, double time_limit,
         std::int64_t node_limit) {
        LabelGenConfig cfg;
        cfg.limits = SolveLimits{time_limit, node_limit};
        const LabelGenResult r = generate_labels(paths, out_dir, cfg);
        py::dict d;
        d["labeled"] = r.labeled;
        d["excluded"] = r.excluded;
        return d;
      },
      py::arg("paths"), py::arg("out_dir"), py::arg("time_limit") = kInf,
      py::arg("node_limit") = 0);

  m.def(
      "solve_exact",
      [](const Instance& inst, double time_limit, std::int64_t node_limit,
         const std::string& subsolver) {
        const Binarization bin = binarize(inst);
        SubProblem sp;
        sp.inst = &bin.instance;
        sp.fixed = PartialAssignment::none(bin.instance.n_vars());
        const SolveResult r = get_subsolver(subsolver)(sp, SolveLimits{time_limit, node_limit});
        return result_dict(inst, bin, r);
      },
      py::arg("instance"), py::arg("time_limit") = kInf, py::arg("node_limit") = 0,
      py::arg("subsolver") = "bnb");

  m.def(
      "solve",
      [](const Instance& inst, const ModelState* model, double budget_seconds,
         std::int64_t budget_nodes, bool refine, std::uint64_t seed, const std::string& subsolver,
         std::int64_t per_solve_nodes, int max_rounds) {
        SolveWithModelConfig cfg;
        cfg.budget = Budget{budget_seconds, budget_nodes};
        cfg.refine_enabled = refine;
        cfg.refine.seed = seed;
        cfg.refine.max_rounds = max_rounds;
        cfg.subsolver = subsolver;
        cfg.repair.per_solve.node_limit = per_solve_nodes;
        cfg.refine.per_solve.node_limit = per_solve_nodes;
        const SolveReport r = solve_with_model(inst, model, cfg);
        py::dict d;
        d["status"] = r.status;
        d["elapsed_s"] = r.elapsed_s;
        d["nodes"] = r.nodes_used;
        d["repair_alphas"] = r.repair_trace.alphas;
        d["refine_rounds"] = r.refine_rounds;
        if (r.solution) {
          d["objective"] = r.objective;
          d["solution"] = *r.solution;
        }
        return d;
      },
      py::arg("instance"), py::arg("model") = nullptr, py::arg("budget_seconds") = kInf,
      py::arg("budget_nodes") = 0, py::arg("refine") = true, py::arg("seed") = 0,
      py::arg("subsolver") = "bnb", py::arg("per_solve_nodes") = 0, py::arg("max_rounds") = 8);
}
