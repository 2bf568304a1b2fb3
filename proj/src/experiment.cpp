#include "rfair/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rfair/data.hpp"

namespace rfair::experiment {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "rfair 0.1.0";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string tag(double lambda, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "lambda%g_seed%llu", lambda, static_cast<unsigned long long>(seed));
  return buf;
}

std::string hex_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

class Logger {
 public:
  explicit Logger(std::ostream* os) : os_(os) {}
  void operator()(const std::string& msg) {
    if (os_ == nullptr) return;
    std::lock_guard<std::mutex> lock(mu_);
    *os_ << msg << '\n';
  }

 private:
  std::ostream* os_;
  std::mutex mu_;
};

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
// handled exactly once; callers store results by index so the merge order
// never depends on scheduling.
void run_cells(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  for (auto& th : pool) th.join();
}

fs::path spec_path(const ExperimentConfig& cfg, const fs::path& root) {
  fs::path p(cfg.dataset);
  if (p.extension() == ".spec") return p.is_absolute() ? p : cfg.base_dir / p;
  return root / "specs" / (cfg.dataset + ".spec");
}

std::string manifest(const std::string& command, const ExperimentConfig& cfg,
                     const std::vector<std::string>& failures,
                     const std::vector<std::string>& warnings, std::size_t rows) {
  ordered_json m;
  m["command"] = command;
  m["version"] = kVersion;
  const std::string canonical = cfg.canonical_json();
  m["config_hash"] = hex_hash(canonical);
  m["config"] = ordered_json::parse(canonical);
  m["seeds"] = cfg.seeds;
  m["lambdas"] = cfg.lambdas;
  m["rows"] = rows;
  m["failures"] = failures;
  m["warnings"] = warnings;
  return m.dump(2) + "\n";
}

}  // namespace

std::vector<double> default_lambda_grid() {
  return {0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
}

ExperimentConfig ExperimentConfig::parse(const std::string& json_text, const fs::path& base_dir) {
  const json j = json::parse(json_text);
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.dataset = j.at("dataset").get<std::string>();
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    c.synthetic_n = value_or<std::size_t>(s, "n", c.synthetic_n);
    c.synthetic_seed = value_or<std::uint64_t>(s, "seed", c.synthetic_seed);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    c.arch = model::architecture_from_string(value_or<std::string>(m, "architecture", "linear"));
    c.hidden = value_or<std::size_t>(m, "hidden", c.hidden);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    c.train.mode = fairtrain::fairness_mode_from_string(value_or<std::string>(t, "mode", "none"));
    c.train.eta = value_or(t, "eta", c.train.eta);
    c.train.iterations = value_or<std::size_t>(t, "iterations", c.train.iterations);
    c.train.batch_size = value_or<std::size_t>(t, "batch_size", c.train.batch_size);
    c.train.floor = value_or(t, "floor", c.train.floor);
    c.train.grad_tol = value_or(t, "grad_tol", c.train.grad_tol);
    c.train.eo_min_group = value_or<std::size_t>(t, "eo_min_group", c.train.eo_min_group);
    if (t.contains("hsic")) {
      const json& h = t.at("hsic");
      const auto score = value_or<std::string>(h, "score", "linear");
      const auto sens = value_or<std::string>(h, "sensitive", "delta");
      if (score != "linear" && score != "gaussian")
        throw std::invalid_argument("hsic.score must be linear or gaussian");
      if (sens != "delta" && sens != "linear")
        throw std::invalid_argument("hsic.sensitive must be delta or linear");
      c.train.hsic.score = score == "linear" ? fairtrain::HsicConfig::ScoreKernel::linear
                                             : fairtrain::HsicConfig::ScoreKernel::gaussian;
      c.train.hsic.sensitive = sens == "delta" ? fairtrain::HsicConfig::SensitiveKernel::delta
                                               : fairtrain::HsicConfig::SensitiveKernel::linear;
      c.train.hsic.bandwidth = value_or(h, "bandwidth", c.train.hsic.bandwidth);
    }
  }
  if (j.contains("cluster")) {
    const json& k = j.at("cluster");
    c.cluster.k = value_or<std::size_t>(k, "k", c.cluster.k);
    c.cluster.max_sweeps = value_or<std::size_t>(k, "max_sweeps", c.cluster.max_sweeps);
    const auto mode = value_or<std::string>(k, "w_update", "per_point");
    if (mode != "per_point" && mode != "per_sweep")
      throw std::invalid_argument("cluster.w_update must be per_point or per_sweep");
    c.cluster.w_update = mode == "per_point" ? faircluster::WUpdateMode::per_point
                                             : faircluster::WUpdateMode::per_sweep;
    const auto init = value_or<std::string>(k, "init", "random_assignment");
    if (init != "random_assignment" && init != "kmeans++")
      throw std::invalid_argument("cluster.init must be random_assignment or kmeans++");
    c.cluster.init = init == "kmeans++" ? faircluster::InitMethod::kmeans_plus_plus
                                        : faircluster::InitMethod::random_assignment;
    const auto policy = value_or<std::string>(k, "empty_policy", "keep_nonempty");
    if (policy != "keep_nonempty" && policy != "keep_center")
      throw std::invalid_argument("cluster.empty_policy must be keep_nonempty or keep_center");
    c.cluster.empty_policy = policy == "keep_center" ? faircluster::EmptyClusterPolicy::keep_center
                                                     : faircluster::EmptyClusterPolicy::keep_nonempty;
  }
  if (j.contains("lambdas")) c.lambdas = j.at("lambdas").get<std::vector<double>>();
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return parse(os.str(), path.parent_path());
}

std::string ExperimentConfig::canonical_json() const {
  ordered_json j;
  j["dataset"] = dataset;
  j["synthetic"] = {{"n", synthetic_n}, {"seed", synthetic_seed}};
  j["model"] = {{"architecture", model::to_string(arch)}, {"hidden", hidden}};
  j["train"] = {
      {"mode", fairtrain::to_string(train.mode)},
      {"eta", train.eta},
      {"iterations", train.iterations},
      {"batch_size", train.batch_size},
      {"floor", train.floor},
      {"grad_tol", train.grad_tol},
      {"eo_min_group", train.eo_min_group},
      {"hsic",
       {{"score", train.hsic.score == fairtrain::HsicConfig::ScoreKernel::linear ? "linear" : "gaussian"},
        {"sensitive",
         train.hsic.sensitive == fairtrain::HsicConfig::SensitiveKernel::delta ? "delta" : "linear"},
        {"bandwidth", train.hsic.bandwidth}}}};
  j["cluster"] = {
      {"k", cluster.k},
      {"max_sweeps", cluster.max_sweeps},
      {"w_update", cluster.w_update == faircluster::WUpdateMode::per_point ? "per_point" : "per_sweep"},
      {"init", cluster.init == faircluster::InitMethod::kmeans_plus_plus ? "kmeans++" : "random_assignment"},
      {"empty_policy",
       cluster.empty_policy == faircluster::EmptyClusterPolicy::keep_center ? "keep_center" : "keep_nonempty"}};
  j["lambdas"] = lambdas;
  j["seeds"] = seeds;
  return j.dump();
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw std::invalid_argument("config: dataset is required");
  if (lambdas.empty()) throw std::invalid_argument("config: lambda grid is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i]))
      throw std::invalid_argument("config: lambdas must be finite and >= 0");
    if (i > 0 && lambdas[i] <= lambdas[i - 1])
      throw std::invalid_argument("config: lambdas must be sorted ascending without repeats");
  }
  if (seeds.empty()) throw std::invalid_argument("config: seed list is empty");
  train.validate();
  cluster.validate();
}

Splits load_splits(const ExperimentConfig& cfg, const fs::path& data_root) {
  Splits s;
  if (cfg.dataset == "synth_yequalss") {
    s.train = data::synth_yequalss(cfg.synthetic_n, cfg.synthetic_seed);
    s.test = data::synth_yequalss(cfg.synthetic_n, cfg.synthetic_seed + 1);
    return s;
  }
  if (cfg.dataset == "xor_fixture") {
    const std::size_t per_group = std::max<std::size_t>(1, cfg.synthetic_n / 4);
    s.train = data::xor_fixture(per_group, cfg.synthetic_seed).batch;
    s.test = data::xor_fixture(per_group, cfg.synthetic_seed + 1).batch;
    return s;
  }
  if (cfg.dataset == "toy") throw std::invalid_argument("the toy dataset has no classification splits");
  const auto spec = data::DatasetSpec::from_file(spec_path(cfg, data_root));
  data::EncodedDataset ds = data::load_dataset(spec, data_root);
  s.train = std::move(ds.train);
  s.test = std::move(ds.test);
  s.warnings = std::move(ds.warnings);
  return s;
}

std::string train_csv_header() {
  std::string h = "lambda,seed,iterations,final_loss,final_penalty,final_grad_norm,trace_sigma2";
  for (const char* split : {"train", "test"})
    for (const char* col :
         {"accuracy", "p_percent", "dp_violation", "eo_violation", "nmi", "sigma2", "sigma2_soft"})
      h += std::string(",") + split + "_" + col;
  return h;
}

std::string train_csv_row(const TrainRow& r) {
  std::string s = fmt(r.lambda) + "," + std::to_string(r.seed) + "," + std::to_string(r.iterations) +
                  "," + fmt(r.final_loss) + "," + fmt(r.final_penalty) + "," +
                  fmt(r.final_grad_norm) + "," + fmt(r.trace_sigma2);
  for (const metrics::EvalReport* e : {&r.train, &r.test})
    for (double v : {e->accuracy, e->p_percent, e->dp_violation, e->eo_violation, e->nmi, e->sigma2,
                     e->sigma2_soft})
      s += "," + fmt(v);
  return s;
}

std::string cluster_csv_header() {
  return "lambda,seed,sweeps,converged,cycled,kmeans_loss,objective,w_min,w_max,w_mean,w_std,"
         "w_max_deviation";
}

std::string cluster_csv_row(const ClusterRow& r) {
  return fmt(r.lambda) + "," + std::to_string(r.seed) + "," + std::to_string(r.sweeps) + "," +
         (r.converged ? "1" : "0") + "," + (r.cycled ? "1" : "0") + "," + fmt(r.kmeans_loss) + "," +
         fmt(r.objective) + "," + fmt(r.w.min) + "," + fmt(r.w.max) + "," + fmt(r.w.mean) + "," +
         fmt(r.w.std) + "," + fmt(r.w.max_deviation);
}

SweepResult cmd_train(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  Logger log(opts.log);
  const Splits splits = load_splits(cfg, opts.data_root);
  for (const auto& w : splits.warnings) log("warning: " + w);

  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    if (opts.write_run_files) {
      fs::create_directories(opts.out_dir / "traces");
      fs::create_directories(opts.out_dir / "checkpoints");
    }
  }
  const bool files = opts.write_run_files && !opts.out_dir.empty();

  const std::size_t cells = cfg.lambdas.size() * cfg.seeds.size();
  std::vector<TrainRow> rows(cells);
  std::vector<std::string> errors(cells);
  std::vector<std::vector<std::string>> warnings(cells);

  run_cells(cells, opts.jobs, [&](std::size_t i) {
    const double lambda = cfg.lambdas[i / cfg.seeds.size()];
    const std::uint64_t seed = cfg.seeds[i % cfg.seeds.size()];
    const std::string name = tag(lambda, seed);
    fairtrain::TrainConfig tc = cfg.train;
    tc.lambda = lambda;
    tc.seed = seed;
    try {
      const auto init = model::init_params(cfg.arch, splits.train.features.cols(),
                                           cfg.arch == model::Architecture::linear ? 0 : cfg.hidden,
                                           splits.train.classes, seed);
      fairtrain::TrainTrace trace = fairtrain::train(init, splits.train, tc);
      TrainRow& row = rows[i];
      row.lambda = lambda;
      row.seed = seed;
      row.iterations = trace.last().iter;
      row.final_loss = trace.last().loss;
      row.final_penalty = trace.last().penalty;
      row.final_grad_norm = trace.last().grad_norm;
      row.trace_sigma2 = trace.last().sigma2;
      row.train = metrics::evaluate(model::forward(trace.params, splits.train.features, tc.exec),
                                    splits.train, tc.floor);
      row.test = metrics::evaluate(model::forward(trace.params, splits.test.features, tc.exec),
                                   splits.test, tc.floor);
      warnings[i] = trace.warnings;
      if (files) {
        std::ofstream os(opts.out_dir / "traces" / (name + ".csv"));
        fairtrain::write_trace_csv(os, trace);
        model::save_checkpoint(opts.out_dir / "checkpoints" / (name + ".ckpt"), trace.params);
      }
      log("train " + name + ": test accuracy " + fmt(row.test.accuracy) + ", test dp " +
          fmt(row.test.dp_violation) + ", test eo " + fmt(row.test.eo_violation));
    } catch (const fairtrain::DivergenceError& e) {
      errors[i] = name + ": " + e.what();
      if (files) {
        std::ofstream os(opts.out_dir / "traces" / (name + ".diverged.csv"));
        fairtrain::write_trace_csv(os, e.trace());
      }
    } catch (const std::exception& e) {
      errors[i] = name + ": " + e.what();
    }
  });

  SweepResult result;
  std::vector<std::string> all_warnings = splits.warnings;
  std::string csv = train_csv_header() + "\n";
  for (std::size_t i = 0; i < cells; ++i) {
    for (const auto& w : warnings[i]) all_warnings.push_back(tag(rows[i].lambda, rows[i].seed) + ": " + w);
    if (!errors[i].empty()) {
      result.failures.push_back(errors[i]);
      log("error: " + errors[i]);
      continue;
    }
    csv += train_csv_row(rows[i]) + "\n";
    result.rows.push_back(rows[i]);
  }
  if (!opts.out_dir.empty()) {
    write_text(opts.out_dir / "sweep.csv", csv);
    write_text(opts.out_dir / "manifest.json",
               manifest("train", cfg, result.failures, all_warnings, result.rows.size()));
  }
  return result;
}

namespace {

struct ClusterData {
  Matrix points;
  std::vector<int> sensitive;
};

ClusterData cluster_data(const ExperimentConfig& cfg, const fs::path& root) {
  if (cfg.dataset == "toy") {
    auto toy = faircluster::toy_dataset(cfg.synthetic_seed);
    return {std::move(toy.points), std::move(toy.sensitive)};
  }
  const auto spec = data::DatasetSpec::from_file(spec_path(cfg, root));
  auto view = data::clustering_view(spec, root);
  return {std::move(view.points), std::move(view.sensitive)};
}

void write_cluster_files(const fs::path& dir, const std::string& name,
                         const faircluster::ClusterResult& res) {
  std::string sweeps = "sweep,objective,kmeans_loss,w_std,moves,assignment_hash\n";
  for (const auto& r : res.trace)
    sweeps += std::to_string(r.sweep) + "," + fmt(r.objective) + "," + fmt(r.kmeans_loss) + "," +
              fmt(r.w_std) + "," + std::to_string(r.moves) + "," + std::to_string(r.assignment_hash) +
              "\n";
  write_text(dir / (name + ".sweeps.csv"), sweeps);
  std::string assign = "point_id,cluster\n";
  for (std::size_t n = 0; n < res.state.assignments.size(); ++n)
    assign += std::to_string(n) + "," + std::to_string(res.state.assignments[n]) + "\n";
  write_text(dir / (name + ".assignments.csv"), assign);
  std::string centers = "cluster";
  for (std::size_t j = 0; j < res.state.centers.cols(); ++j) centers += ",x" + std::to_string(j);
  centers += ",count,proportion\n";
  for (std::size_t k = 0; k < res.state.k(); ++k) {
    centers += std::to_string(k);
    for (double v : res.state.centers.row(k)) centers += "," + fmt(v);
    centers += "," + std::to_string(res.state.counts[k]) + "," + fmt(res.state.proportions[k]) + "\n";
  }
  write_text(dir / (name + ".centers.csv"), centers);
}

}  // namespace

ClusterSweep cmd_cluster(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  Logger log(opts.log);
  const ClusterData d = cluster_data(cfg, opts.data_root);
  const bool files = opts.write_run_files && !opts.out_dir.empty();
  if (!opts.out_dir.empty()) fs::create_directories(opts.out_dir);
  if (files) fs::create_directories(opts.out_dir / "runs");

  const std::size_t cells = cfg.lambdas.size() * cfg.seeds.size();
  ClusterSweep out;
  std::vector<ClusterRow> rows(cells);
  std::vector<faircluster::ClusterResult> results(cells);
  std::vector<std::string> errors(cells);
  run_cells(cells, opts.jobs, [&](std::size_t i) {
    faircluster::ClusterConfig cc = cfg.cluster;
    cc.lambda = cfg.lambdas[i / cfg.seeds.size()];
    cc.seed = cfg.seeds[i % cfg.seeds.size()];
    const std::string name = tag(cc.lambda, cc.seed);
    try {
      results[i] = faircluster::fair_kmeans(d.points, d.sensitive, cc);
      const auto& res = results[i];
      ClusterRow& row = rows[i];
      row.lambda = cc.lambda;
      row.seed = cc.seed;
      row.sweeps = res.sweeps;
      row.converged = res.converged;
      row.cycled = res.cycled;
      row.kmeans_loss = faircluster::kmeans_loss(d.points, res.state);
      row.objective = faircluster::fair_objective(d.points, d.sensitive, res.state, cc.lambda);
      row.w = metrics::cluster_fairness(res.state);
      if (files) write_cluster_files(opts.out_dir / "runs", name, res);
      log("cluster " + name + ": std(w) " + fmt(row.w.std) + ", loss " + fmt(row.kmeans_loss) +
          ", sweeps " + std::to_string(row.sweeps));
    } catch (const std::exception& e) {
      errors[i] = name + ": " + e.what();
    }
  });
  std::string csv = cluster_csv_header() + "\n";
  for (std::size_t i = 0; i < cells; ++i) {
    if (!errors[i].empty()) {
      out.failures.push_back(errors[i]);
      log("error: " + errors[i]);
      continue;
    }
    csv += cluster_csv_row(rows[i]) + "\n";
    out.rows.push_back(rows[i]);
    out.results.push_back(std::move(results[i]));
  }
  if (!opts.out_dir.empty()) {
    write_text(opts.out_dir / "cluster_sweep.csv", csv);
    write_text(opts.out_dir / "manifest.json", manifest("cluster", cfg, out.failures, {}, out.rows.size()));
  }
  return out;
}

metrics::EvalReport cmd_eval(const fs::path& checkpoint, const ExperimentConfig& cfg,
                             const fs::path& data_root) {
  const model::ModelParams params = model::load_checkpoint(checkpoint);
  const Splits splits = load_splits(cfg, data_root);
  if (params.input_dim != splits.test.features.cols())
    throw std::invalid_argument("checkpoint expects " + std::to_string(params.input_dim) +
                                " features but the dataset has " +
                                std::to_string(splits.test.features.cols()));
  if (params.classes != splits.test.classes)
    throw std::invalid_argument("checkpoint class count does not match the dataset");
  metrics::EvalReport report =
      metrics::evaluate(model::forward(params, splits.test.features), splits.test, cfg.train.floor);
  report.warnings.insert(report.warnings.begin(), splits.warnings.begin(), splits.warnings.end());
  return report;
}

std::vector<ToyRow> demo_toy(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  Logger log(opts.log);
  const faircluster::ToyData toy = faircluster::toy_dataset(cfg.synthetic_seed);
  std::vector<ToyRow> rows(cfg.lambdas.size());
  std::vector<std::string> errors(cfg.lambdas.size());
  run_cells(cfg.lambdas.size(), opts.jobs, [&](std::size_t i) {
    faircluster::ClusterConfig cc = cfg.cluster;
    cc.lambda = cfg.lambdas[i];
    cc.seed = cfg.seeds.front();
    try {
      const auto res = faircluster::fair_kmeans(toy.points, toy.sensitive, cc);
      ToyRow& row = rows[i];
      row.lambda = cc.lambda;
      row.proportions = res.state.proportions;
      row.counts = res.state.counts;
      row.w = metrics::cluster_fairness(res.state);
      for (int center : {1, 3}) {
        std::vector<std::size_t> hits(cc.k, 0);
        for (std::size_t n = 0; n < toy.source.size(); ++n)
          if (toy.source[n] == center) ++hits[static_cast<std::size_t>(res.state.assignments[n])];
        const int k = static_cast<int>(std::max_element(hits.begin(), hits.end()) - hits.begin());
        (center == 1 ? row.cluster_of_center1 : row.cluster_of_center3) = k;
        (center == 1 ? row.w_center1 : row.w_center3) = res.state.proportions[static_cast<std::size_t>(k)];
      }
    } catch (const std::exception& e) {
      errors[i] = tag(cc.lambda, cc.seed) + ": " + e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  std::string csv = "lambda,cluster,count,proportion\n";
  std::string summary = "lambda,cluster_of_center1,w_center1,cluster_of_center3,w_center3,w_std,w_max_deviation\n";
  for (const ToyRow& r : rows) {
    for (std::size_t k = 0; k < r.proportions.size(); ++k)
      csv += fmt(r.lambda) + "," + std::to_string(k) + "," + std::to_string(r.counts[k]) + "," +
             fmt(r.proportions[k]) + "\n";
    summary += fmt(r.lambda) + "," + std::to_string(r.cluster_of_center1) + "," + fmt(r.w_center1) + "," +
               std::to_string(r.cluster_of_center3) + "," + fmt(r.w_center3) + "," + fmt(r.w.std) + "," +
               fmt(r.w.max_deviation) + "\n";
    std::string line = "lambda " + fmt(r.lambda) + ": w =";
    for (double w : r.proportions) line += " " + fmt(w);
    log(line);
  }
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    write_text(opts.out_dir / "toy_proportions.csv", csv);
    write_text(opts.out_dir / "toy_summary.csv", summary);
    write_text(opts.out_dir / "manifest.json", manifest("demo-toy", cfg, {}, {}, rows.size()));
  }
  return rows;
}

}  // namespace rfair::experiment
