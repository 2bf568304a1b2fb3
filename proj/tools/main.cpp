// rfair: lambda sweeps for fair classification and fair K-means.
//
//   rfair train     --config cfg.json --out runs/adult [--seeds 0,1] [--jobs 4]
//   rfair cluster   --config cfg.json --out runs/km
//   rfair eval      --config cfg.json --checkpoint runs/adult/checkpoints/x.ckpt
//   rfair demo-toy  [--config cfg.json] --out runs/toy
//
// The data root comes from --data-root, then RFAIR_DATA_ROOT, then ./data.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "rfair/data.hpp"
#include "rfair/experiment.hpp"

namespace ex = rfair::experiment;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string data_root;
  std::vector<std::uint64_t> seeds;
  std::vector<double> lambdas;
  std::size_t jobs = 1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", c.config, "JSON experiment config");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", c.out, "output directory");
  cmd->add_option("--data-root", c.data_root, "dataset root (overrides RFAIR_DATA_ROOT)");
  cmd->add_option("--seeds", c.seeds, "seed list, overrides the config")->delimiter(',');
  cmd->add_option("--lambdas", c.lambdas, "lambda grid, overrides the config")->delimiter(',');
  cmd->add_option("-j,--jobs", c.jobs, "grid points run concurrently")->check(CLI::PositiveNumber);
  cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

ex::ExperimentConfig load_config(const Common& c, const std::string& fallback_dataset) {
  ex::ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = ex::ExperimentConfig::from_file(c.config);
  } else {
    cfg.dataset = fallback_dataset;
  }
  if (!c.seeds.empty()) cfg.seeds = c.seeds;
  if (!c.lambdas.empty()) cfg.lambdas = c.lambdas;
  cfg.validate();
  return cfg;
}

ex::RunOptions run_options(const Common& c) {
  ex::RunOptions o;
  o.out_dir = c.out;
  o.data_root = c.data_root.empty() ? rfair::data::data_root("data") : std::filesystem::path(c.data_root);
  o.jobs = c.jobs;
  o.log = c.quiet ? nullptr : &std::cerr;
  return o;
}

int report_failures(const std::vector<std::string>& failures) {
  for (const auto& f : failures) std::cerr << "failed: " << f << '\n';
  return failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Renyi-correlation fair classification and clustering"};
  app.require_subcommand(1);

  Common train_opts, cluster_opts, eval_opts, toy_opts;
  std::string checkpoint;

  auto* train = app.add_subcommand("train", "train one model per (lambda, seed) and evaluate it");
  add_common(train, train_opts, true);
  auto* cluster = app.add_subcommand("cluster", "fair K-means per (lambda, seed)");
  add_common(cluster, cluster_opts, true);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval, eval_opts, true);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  auto* toy = app.add_subcommand("demo-toy", "fair K-means on the planted toy data");
  add_common(toy, toy_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = load_config(train_opts, "");
      const auto res = ex::cmd_train(cfg, run_options(train_opts));
      std::cout << ex::train_csv_header() << '\n';
      for (const auto& r : res.rows) std::cout << ex::train_csv_row(r) << '\n';
      return report_failures(res.failures);
    }
    if (*cluster) {
      const auto cfg = load_config(cluster_opts, "");
      const auto res = ex::cmd_cluster(cfg, run_options(cluster_opts));
      std::cout << ex::cluster_csv_header() << '\n';
      for (const auto& r : res.rows) std::cout << ex::cluster_csv_row(r) << '\n';
      return report_failures(res.failures);
    }
    if (*eval) {
      const auto cfg = load_config(eval_opts, "");
      const auto opts = run_options(eval_opts);
      const auto report = ex::cmd_eval(checkpoint, cfg, opts.data_root);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << rfair::metrics::to_json(report) << '\n';
      return 0;
    }
    if (*toy) {
      auto cfg = load_config(toy_opts, "toy");
      if (toy_opts.config.empty()) {
        cfg.cluster.k = 5;
        cfg.cluster.init = rfair::faircluster::InitMethod::kmeans_plus_plus;
      }
      const auto rows = ex::demo_toy(cfg, run_options(toy_opts));
      std::cout << "lambda,cluster_of_center1,w_center1,cluster_of_center3,w_center3,w_max_deviation\n";
      for (const auto& r : rows)
        std::cout << r.lambda << ',' << r.cluster_of_center1 << ',' << r.w_center1 << ','
                  << r.cluster_of_center3 << ',' << r.w_center3 << ',' << r.w.max_deviation << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
