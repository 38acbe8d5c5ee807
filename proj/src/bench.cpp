#include "poip/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"

#include "poip/common.hpp"
#include "poip/io.hpp"

namespace fs = std::filesystem;

namespace poip {

double gap_pct(double objective, double bks) {
  return std::abs(objective - bks) / (std::abs(bks) + 1e-10) * 100.0;
}

double shifted_geometric_mean(std::span<const double> xs, double shift) {
  if (xs.empty()) throw ValidationError("shifted geometric mean of an empty sequence");
  double acc = 0.0;
  for (double x : xs) {
    const double s = x + shift;
    if (s <= 0.0) throw ValidationError("shifted geometric mean needs positive shifted values");
    acc += std::log(s);
  }
  return std::exp(acc / static_cast<double>(xs.size())) - shift;
}

namespace {

std::string stem_of(const std::string& path) {
  std::string base = fs::path(path).filename().string();
  const std::string ext = kInstanceExtension;
  if (base.size() > ext.size() && base.ends_with(ext))
    base.resize(base.size() - ext.size());
  return base;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

LabelGenResult generate_labels(const std::vector<std::string>& instance_paths,
                               const std::string& out_dir, const LabelGenConfig& cfg) {
  fs::create_directories(out_dir);
  const SubSolver solver = get_subsolver(cfg.subsolver);
  LabelGenResult res;
  for (const std::string& path : instance_paths) {
    try {
      const Instance inst = read_instance(path);
      Binarization bin = binarize(inst);
      SubProblem sp;
      sp.inst = &bin.instance;
      sp.fixed = PartialAssignment::none(bin.instance.n_vars());
      const SolveResult r = solver(sp, cfg.limits);
      if (r.status != SolveStatus::Optimal) {
        res.excluded.emplace_back(path, std::string("not solved to optimality: ") + to_string(r.status));
        continue;
      }
      nlohmann::ordered_json j;
      j["instance"] = inst.name;
      j["objective"] = r.objective;
      j["labels"] = *r.best;
      const fs::path label_path = fs::path(out_dir) / (stem_of(path) + ".labels.json");
      std::ofstream f(label_path, std::ios::binary);
      if (!f) throw Error("cannot open " + label_path.string() + " for writing");
      f << j.dump(2) << "\n";
      res.labeled.push_back(path);
    } catch (const Error& e) {
      res.excluded.emplace_back(path, e.what());
    }
  }
  nlohmann::ordered_json manifest;
  manifest["labeled"] = res.labeled;
  manifest["excluded"] = nlohmann::ordered_json::array();
  for (const auto& [path, reason] : res.excluded)
    manifest["excluded"].push_back({{"instance", path}, {"reason", reason}});
  std::ofstream mf(fs::path(out_dir) / "labels_manifest.json", std::ios::binary);
  mf << manifest.dump(2) << "\n";
  return res;
}

LabeledSet load_labeled_dataset(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().string().ends_with(kInstanceExtension))
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  LabeledSet set;
  for (const std::string& path : paths) {
    const fs::path label_path = fs::path(dir) / (stem_of(path) + ".labels.json");
    if (!fs::exists(label_path)) continue;
    const Instance inst = read_instance(path);
    Binarization bin = binarize(inst);
    std::ifstream f(label_path, std::ios::binary);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(label_path.string() + ": " + e.what());
    }
    TrainSample s;
    s.labels = j.at("labels").get<std::vector<double>>();
    if (static_cast<int>(s.labels.size()) != bin.instance.n_vars())
      throw ValidationError(label_path.string() + ": label count does not match binarized instance");
    s.hg = encode(bin.instance);
    set.samples.push_back(std::move(s));
    set.names.push_back(stem_of(path));
  }
  return set;
}

QualityReport label_scores(const ModelState* model, std::span<const TrainSample> data) {
  QualityReport rep;
  rep.n_instances = static_cast<int>(data.size());
  if (data.empty()) return rep;
  Tape tape;
  std::vector<double> zeros;
  for (const TrainSample& s : data) {
    std::span<const double> logits;
    if (model != nullptr) {
      logits = forward(s.hg, *model, tape);
    } else {
      zeros.assign(static_cast<std::size_t>(s.hg.n_vars), 0.0);
      logits = zeros;
    }
    rep.bce += bce_loss(logits, s.labels);
    if (!s.labels.empty()) {
      int correct = 0;
      for (std::size_t i = 0; i < s.labels.size(); ++i) {
        const int pred = logits[i] >= 0.0 ? 1 : 0;
        if (pred == static_cast<int>(s.labels[i])) ++correct;
      }
      rep.accuracy += static_cast<double>(correct) / static_cast<double>(s.labels.size());
    }
  }
  rep.bce /= static_cast<double>(data.size());
  rep.accuracy /= static_cast<double>(data.size());
  return rep;
}

PredictionQuality prediction_quality(const std::vector<Instance>& instances,
                                     const std::vector<double>& bks, const ModelState* model,
                                     const SolveWithModelConfig& base_cfg) {
  if (instances.size() != bks.size())
    throw ValidationError("prediction_quality needs one best-known value per instance");
  PredictionQuality q;
  q.n_instances = static_cast<int>(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    SolveWithModelConfig cfg = base_cfg;
    cfg.refine_enabled = false;
    const SolveReport r = solve_with_model(instances[i], model, cfg);
    if (!r.solution) {
      ++q.n_failed;
      continue;
    }
    q.gaps.push_back(gap_pct(r.objective, bks[i]));
  }
  if (!q.gaps.empty()) {
    double sum = 0.0;
    for (double g : q.gaps) sum += g;
    q.mean_gap_pct = sum / static_cast<double>(q.gaps.size());
  }
  return q;
}

namespace {

struct RunRow {
  std::string instance;
  std::string method;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::string status;
  std::optional<double> objective;  // original sense
  std::optional<double> bks;
  std::optional<double> gap;
  double elapsed_s = 0.0;
};

struct MethodSpec {
  std::string name;
  std::string model_path;  // empty = uniform predictor
  bool refine = true;
};

double json_num(const nlohmann::json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

ExperimentResult run_experiment(const std::string& plan_path, const std::string& out_dir) {
  std::ifstream pf(plan_path, std::ios::binary);
  if (!pf) throw Error("cannot open " + plan_path);
  nlohmann::json plan;
  try {
    pf >> plan;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(plan_path + ": " + e.what());
  }

  std::vector<std::string> paths;
  if (plan.contains("instances")) {
    paths = plan.at("instances").get<std::vector<std::string>>();
  } else if (plan.contains("instance_dir")) {
    for (const auto& entry : fs::directory_iterator(plan.at("instance_dir").get<std::string>())) {
      if (entry.is_regular_file() && entry.path().string().ends_with(kInstanceExtension))
        paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
  }
  if (paths.empty()) throw ValidationError("experiment plan lists no instances");

  std::vector<MethodSpec> methods;
  if (!plan.contains("methods")) throw ValidationError("experiment plan has no methods");
  for (const auto& mj : plan.at("methods")) {
    MethodSpec ms;
    ms.name = mj.at("name").get<std::string>();
    if (mj.contains("model") && !mj.at("model").is_null())
      ms.model_path = mj.at("model").get<std::string>();
    if (mj.contains("refine")) ms.refine = mj.at("refine").get<bool>();
    methods.push_back(ms);
  }
  const int reps = plan.contains("repetitions") ? plan.at("repetitions").get<int>() : 1;
  if (reps < 1) throw ValidationError("repetitions must be positive");
  const std::uint64_t base_seed = plan.contains("seed") ? plan.at("seed").get<std::uint64_t>() : 0;

  SolveWithModelConfig base_cfg;
  if (plan.contains("budget")) {
    base_cfg.budget.seconds = json_num(plan.at("budget"), "seconds", kInf);
    base_cfg.budget.nodes = plan.at("budget").contains("nodes")
                                ? plan.at("budget").at("nodes").get<std::int64_t>()
                                : 0;
  }
  if (plan.contains("per_solve")) {
    base_cfg.repair.per_solve.time_limit = json_num(plan.at("per_solve"), "seconds", kInf);
    base_cfg.repair.per_solve.node_limit = plan.at("per_solve").contains("nodes")
                                               ? plan.at("per_solve").at("nodes").get<std::int64_t>()
                                               : 0;
    base_cfg.refine.per_solve = base_cfg.repair.per_solve;
  }
  if (plan.contains("repair")) {
    base_cfg.repair.alpha0 = json_num(plan.at("repair"), "alpha0", base_cfg.repair.alpha0);
    base_cfg.repair.alpha_step = json_num(plan.at("repair"), "alpha_step", base_cfg.repair.alpha_step);
    base_cfg.repair.alpha_ub = json_num(plan.at("repair"), "alpha_ub", base_cfg.repair.alpha_ub);
  }
  if (plan.contains("neighborhood_limit"))
    base_cfg.refine.neighborhood_limit = plan.at("neighborhood_limit").get<int>();
  if (plan.contains("max_rounds")) base_cfg.refine.max_rounds = plan.at("max_rounds").get<int>();
  if (plan.contains("subsolver")) base_cfg.subsolver = plan.at("subsolver").get<std::string>();

  std::map<std::string, ModelState> model_cache;
  for (const MethodSpec& ms : methods) {
    if (!ms.model_path.empty() && !model_cache.count(ms.model_path))
      model_cache.emplace(ms.model_path, load_checkpoint(ms.model_path));
  }

  std::vector<RunRow> rows;
  std::map<std::string, std::optional<double>> best_seen;  // stem -> best original objective
  std::map<std::string, std::optional<double>> file_bks;
  std::map<std::string, bool> minimize_of;
  for (const std::string& path : paths) {
    const Instance inst = read_instance(path);
    const std::string name = stem_of(path);
    file_bks[name] = inst.bks;
    minimize_of[name] = inst.minimize;
    for (const MethodSpec& ms : methods) {
      for (int rep = 0; rep < reps; ++rep) {
        SolveWithModelConfig cfg = base_cfg;
        cfg.refine_enabled = ms.refine;
        cfg.refine.seed = base_seed + static_cast<std::uint64_t>(rep);
        const ModelState* model =
            ms.model_path.empty() ? nullptr : &model_cache.at(ms.model_path);
        const SolveReport r = solve_with_model(inst, model, cfg);
        RunRow row;
        row.instance = name;
        row.method = ms.name;
        row.repetition = rep;
        row.seed = cfg.refine.seed;
        row.status = r.status;
        row.elapsed_s = r.elapsed_s;
        if (r.status == "feasible") {
          row.objective = r.objective;
          auto& best = best_seen[name];
          const bool better =
              !best || (inst.minimize ? r.objective < *best : r.objective > *best);
          if (better) best = r.objective;
        }
        rows.push_back(std::move(row));
      }
    }
  }

  for (RunRow& row : rows) {
    std::optional<double> bks = file_bks[row.instance];
    const auto& seen = best_seen[row.instance];
    if (seen) {
      const bool minimize = minimize_of[row.instance];
      if (!bks || (minimize ? *seen < *bks : *seen > *bks)) bks = seen;
    }
    row.bks = bks;
    if (row.objective && bks) row.gap = gap_pct(*row.objective, *bks);
  }

  fs::create_directories(out_dir);
  const fs::path csv_path = fs::path(out_dir) / "results.csv";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw Error("cannot open " + csv_path.string() + " for writing");
    csv << "instance,method,repetition,seed,status,objective,bks,gap_pct,elapsed_s\n";
    for (const RunRow& row : rows) {
      csv << row.instance << ',' << row.method << ',' << row.repetition << ',' << row.seed << ','
          << row.status << ',' << (row.objective ? fmt_double(*row.objective) : "") << ','
          << (row.bks ? fmt_double(*row.bks) : "") << ','
          << (row.gap ? fmt_double(*row.gap) : "") << ',' << fmt_double(row.elapsed_s) << "\n";
    }
  }

  nlohmann::ordered_json summary;
  for (const MethodSpec& ms : methods) {
    std::vector<double> gaps, times;
    int feasible = 0, total = 0;
    for (const RunRow& row : rows) {
      if (row.method != ms.name) continue;
      ++total;
      times.push_back(row.elapsed_s);
      if (row.objective) ++feasible;
      if (row.gap) gaps.push_back(*row.gap);
    }
    nlohmann::ordered_json mj;
    mj["runs"] = total;
    mj["feasible_runs"] = feasible;
    if (!gaps.empty()) {
      double mean = 0.0;
      for (double g : gaps) mean += g;
      mj["mean_gap_pct"] = mean / static_cast<double>(gaps.size());
    } else {
      mj["mean_gap_pct"] = nullptr;
    }
    mj["sgm_elapsed_s"] = shifted_geometric_mean(times, 1.0);
    summary[ms.name] = mj;
  }
  const fs::path summary_path = fs::path(out_dir) / "summary.json";
  {
    std::ofstream f(summary_path, std::ios::binary);
    f << summary.dump(2) << "\n";
  }

  nlohmann::ordered_json manifest;
  manifest["plan"] = plan;
  manifest["n_instances"] = paths.size();
  manifest["repetitions"] = reps;
  nlohmann::ordered_json mnames = nlohmann::ordered_json::array();
  for (const MethodSpec& ms : methods) mnames.push_back(ms.name);
  manifest["methods"] = mnames;
  manifest["files"] = {{"csv", csv_path.string()}, {"summary", summary_path.string()}};
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  {
    std::ofstream f(manifest_path, std::ios::binary);
    f << manifest.dump(2) << "\n";
  }

  ExperimentResult res;
  res.csv_path = csv_path.string();
  res.summary_path = summary_path.string();
  res.manifest_path = manifest_path.string();
  res.runs = static_cast<int>(rows.size());
  return res;
}

}  // namespace poip
