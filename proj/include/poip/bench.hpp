#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poip/nn.hpp"
#include "poip/repair.hpp"

namespace poip {

/// Relative distance to the best known solution in percent:
/// |obj - bks| / (|bks| + 1e-10) * 100.
double gap_pct(double objective, double bks);

/// exp(mean(log(x_i + shift))) - shift; an empty list is an error.
double shifted_geometric_mean(std::span<const double> xs, double shift = 1.0);

struct LabelGenConfig {
  SolveLimits limits;
  std::string subsolver = "bnb";
};

struct LabelGenResult {
  std::vector<std::string> labeled;  // instance paths that got a label file
  std::vector<std::pair<std::string, std::string>> excluded;  // path, reason
};

/// Solves each instance to optimality in binarized form and writes a
/// .labels.json next to out_dir/<stem> holding one 0/1 label per binarized
/// variable. Instances that cannot be solved within the limits (or are
/// unsupported) are skipped and listed in out_dir/manifest.json.
LabelGenResult generate_labels(const std::vector<std::string>& instance_paths,
                               const std::string& out_dir, const LabelGenConfig& cfg);

/// One instance paired with its optimal-assignment labels, encoded for
/// training.
struct LabeledSet {
  std::vector<TrainSample> samples;
  std::vector<std::string> names;
};

/// Loads every *.poip.json in dir that has a matching *.labels.json.
LabeledSet load_labeled_dataset(const std::string& dir);

struct QualityReport {
  double bce = 0.0;       // mean over instances of per-instance mean BCE
  double accuracy = 0.0;  // mean over instances of per-instance accuracy
  int n_instances = 0;
};

/// Scores raw predictions against labels; a null model means the uniform-0.5
/// baseline (BCE exactly log 2).
QualityReport label_scores(const ModelState* model, std::span<const TrainSample> data);

struct PredictionQuality {
  double mean_gap_pct = 0.0;  // over instances where repair found a solution
  std::vector<double> gaps;   // one entry per repaired instance, input order
  int n_instances = 0;
  int n_failed = 0;  // repair produced no solution
};

/// The repaired-only protocol: predict, run prediction repair with no
/// refinement, and measure the gap of what comes back against the given
/// best-known values (original sense). Failures are counted, not averaged.
PredictionQuality prediction_quality(const std::vector<Instance>& instances,
                                     const std::vector<double>& bks, const ModelState* model,
                                     const SolveWithModelConfig& base_cfg);

struct ExperimentResult {
  std::string csv_path;
  std::string summary_path;
  std::string manifest_path;
  int runs = 0;
};

/// Runs the experiment described by a JSON plan (instances, methods,
/// repetitions, budget) and writes results.csv, summary.json and
/// manifest.json into out_dir. Best-known values are finalized per instance
/// as the best objective seen across all runs merged with any stored bks, so
/// every instance with at least one feasible run gets a zero minimum gap.
ExperimentResult run_experiment(const std::string& plan_path, const std::string& out_dir);

}  // namespace poip
