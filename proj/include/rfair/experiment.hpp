#pragma once

// Lambda sweeps over the trainers and fair K-means, with CSV/JSON outputs.
//
// Config files are JSON:
//
//   {
//     "dataset": "adult",             // spec name under <data root>/specs, a .spec
//                                     // path, "synth_yequalss", "xor_fixture" or "toy"
//     "synthetic": {"n": 2000, "seed": 0},
//     "model": {"architecture": "linear", "hidden": 12},
//     "train": {"mode": "dp_binary", "eta": 0.1, "iterations": 5000,
//               "batch_size": 0, "floor": 1e-6, "grad_tol": 0,
//               "eo_min_group": 30,
//               "hsic": {"score": "linear", "sensitive": "delta", "bandwidth": 0.5}},
//     "cluster": {"k": 14, "max_sweeps": 200, "w_update": "per_point",
//                 "init": "random_assignment", "empty_policy": "keep_nonempty"},
//     "lambdas": [0, 0.001, 0.01, 0.1, 1, 10, 100, 1000],
//     "seeds": [0]
//   }
//
// Every key is optional except "dataset".

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rfair/faircluster.hpp"
#include "rfair/fairtrain.hpp"
#include "rfair/metrics.hpp"
#include "rfair/model.hpp"

namespace rfair::experiment {

// {0} followed by 10^-3 .. 10^3.
std::vector<double> default_lambda_grid();

struct ExperimentConfig {
  std::string dataset;
  std::size_t synthetic_n = 2000;
  std::uint64_t synthetic_seed = 0;
  model::Architecture arch = model::Architecture::linear;
  std::size_t hidden = 12;
  fairtrain::TrainConfig train;
  faircluster::ClusterConfig cluster;
  std::vector<double> lambdas = default_lambda_grid();
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path base_dir;  // relative spec paths resolve against it

  static ExperimentConfig parse(const std::string& json_text,
                                const std::filesystem::path& base_dir = {});
  static ExperimentConfig from_file(const std::filesystem::path& path);

  // Canonical JSON of every effective setting; its hash keys the manifest.
  std::string canonical_json() const;
  void validate() const;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::filesystem::path data_root;
  std::size_t jobs = 1;         // concurrent grid points
  std::ostream* log = nullptr;  // progress and warnings
  bool write_run_files = true;  // traces, checkpoints, assignments
};

struct Splits {
  model::Batch train;
  model::Batch test;
  std::vector<std::string> warnings;
};

Splits load_splits(const ExperimentConfig& cfg, const std::filesystem::path& data_root);

struct TrainRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  double final_penalty = 0.0;
  double final_grad_norm = 0.0;
  double trace_sigma2 = 0.0;
  metrics::EvalReport train;
  metrics::EvalReport test;
};

struct SweepResult {
  std::vector<TrainRow> rows;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

// Trains every (lambda, seed) cell and writes sweep.csv, manifest.json and,
// when enabled, traces/ and checkpoints/ under out_dir.
SweepResult cmd_train(const ExperimentConfig& cfg, const RunOptions& opts);

struct ClusterRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  std::size_t sweeps = 0;
  bool converged = false;
  bool cycled = false;
  double kmeans_loss = 0.0;
  double objective = 0.0;
  metrics::WStats w;
};

struct ClusterSweep {
  std::vector<ClusterRow> rows;
  std::vector<faircluster::ClusterResult> results;  // same order as rows
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

// Fair K-means per (lambda, seed) on the dataset's clustering view (or the
// toy data); writes cluster_sweep.csv, manifest.json and per-run files.
ClusterSweep cmd_cluster(const ExperimentConfig& cfg, const RunOptions& opts);

// Test-split report for a saved checkpoint.
metrics::EvalReport cmd_eval(const std::filesystem::path& checkpoint, const ExperimentConfig& cfg,
                             const std::filesystem::path& data_root);

// Toy clustering for each lambda: per-cluster proportions and where the
// points of the two planted single-group centers ended up.
struct ToyRow {
  double lambda = 0.0;
  std::vector<double> proportions;
  std::vector<std::size_t> counts;
  int cluster_of_center1 = -1;  // majority cluster of the all-privileged center
  int cluster_of_center3 = -1;  // majority cluster of the all-unprivileged center
  double w_center1 = 0.0;
  double w_center3 = 0.0;
  metrics::WStats w;
};

std::vector<ToyRow> demo_toy(const ExperimentConfig& cfg, const RunOptions& opts);

std::string train_csv_header();
std::string train_csv_row(const TrainRow& row);
std::string cluster_csv_header();
std::string cluster_csv_row(const ClusterRow& row);

}  // namespace rfair::experiment
