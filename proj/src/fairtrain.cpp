#include "rfair/fairtrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "rfair/maxcorr.hpp"

namespace rfair::fairtrain {
namespace {

void check_probs(const Matrix& probs, std::size_t n, const char* who) {
  if (probs.rows() != n) throw std::invalid_argument(std::string(who) + ": size mismatch");
  if (probs.rows() == 0) throw std::invalid_argument(std::string(who) + ": empty input");
}

double sigma2_of(const Matrix& probs, std::span<const int> sensitive, std::size_t groups,
                 double floor, kernels::Exec exec) {
  return maxcorr::sigma2(maxcorr::empirical_q(probs, sensitive, groups, floor, exec));
}

void add_warning(std::vector<std::string>* warnings, std::string msg) {
  if (warnings == nullptr) return;
  if (std::find(warnings->begin(), warnings->end(), msg) == warnings->end())
    warnings->push_back(std::move(msg));
}

// Binary route for one slice: closed-form w, then the f_B penalty at w.
FairnessEval binary_slice(const Matrix& probs, std::span<const int> sensitive,
                          const TrainConfig& cfg) {
  FairnessEval out;
  const std::vector<double> st = signed_sensitive(sensitive);
  out.snapshot = inner_w_closed_form(probs, st, cfg.floor);
  out.penalty = binary_penalty(probs, st, out.snapshot);
  out.sigma2 = sigma2_of(probs, sensitive, 2, cfg.floor, cfg.exec);
  return out;
}

// SVD route for one slice: v = second right singular vector of Q.
FairnessEval discrete_slice(const Matrix& probs, std::span<const int> sensitive,
                            std::size_t groups, const TrainConfig& cfg) {
  FairnessEval out;
  const maxcorr::QMatrix q = maxcorr::empirical_q(probs, sensitive, groups, cfg.floor, cfg.exec);
  const maxcorr::SvdResult svd = maxcorr::svd_small(q.q);
  out.snapshot = svd.right_vector(1);
  out.sigma2 = svd.singular_values[1];
  out.penalty = discrete_penalty(probs, sensitive, groups, out.snapshot, cfg.floor, cfg.exec);
  return out;
}

FairnessEval equalized_odds(const Matrix& probs, const model::Batch& batch,
                            const TrainConfig& cfg, std::vector<std::string>* warnings) {
  FairnessEval out;
  out.penalty.seed = Matrix(probs.rows(), probs.cols());
  double sigma_sq = 0.0;
  for (std::size_t y = 0; y < batch.classes; ++y) {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> counts(batch.groups, 0);
    for (std::size_t n = 0; n < batch.size(); ++n) {
      if (batch.labels[n] != static_cast<int>(y)) continue;
      rows.push_back(n);
      ++counts[static_cast<std::size_t>(batch.sensitive[n])];
    }
    const std::size_t smallest = *std::min_element(counts.begin(), counts.end());
    if (smallest < cfg.eo_min_group) {
      add_warning(warnings, "label " + std::to_string(y) + " skipped: smallest sensitive group has " +
                                std::to_string(smallest) + " < " +
                                std::to_string(cfg.eo_min_group) + " samples");
      continue;
    }
    const Matrix sub = probs.select_rows(rows);
    std::vector<int> sub_s(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) sub_s[k] = batch.sensitive[rows[k]];
    const FairnessEval slice = batch.groups == 2 ? binary_slice(sub, sub_s, cfg)
                                                 : discrete_slice(sub, sub_s, batch.groups, cfg);
    out.penalty.value += slice.penalty.value;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto dst = out.penalty.seed.row(rows[k]);
      auto src = slice.penalty.seed.row(k);
      std::copy(src.begin(), src.end(), dst.begin());
    }
    out.snapshot.insert(out.snapshot.end(), slice.snapshot.begin(), slice.snapshot.end());
    sigma_sq += slice.sigma2 * slice.sigma2;
  }
  out.sigma2 = std::sqrt(sigma_sq);
  return out;
}

struct StepEval {
  double loss = 0.0;
  FairnessEval fair;
  std::vector<double> grad;
};

StepEval evaluate_step(const model::ModelParams& params, const model::Batch& batch,
                       const TrainConfig& cfg, std::vector<std::string>* warnings) {
  model::ForwardCache cache;
  model::forward(params, batch.features, cache, cfg.exec);
  StepEval out;
  const auto probs = cache.probs.data();
  if (!std::all_of(probs.begin(), probs.end(), [](double p) { return std::isfinite(p); })) {
    out.loss = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.loss = model::cross_entropy(cache.probs, batch.labels, cfg.floor);
  out.fair = evaluate_fairness(cache.probs, batch, cfg, warnings);
  Matrix dlogits = model::cross_entropy_logit_grad(cache.probs, batch.labels);
  // Skipping the penalty branch at lambda = 0 keeps the iterates bitwise
  // identical to plain gradient descent.
  if (cfg.lambda != 0.0) {
    Matrix seed = out.fair.penalty.seed;
    for (double& x : seed.data()) x *= cfg.lambda;
    Matrix extra;
    kernels::softmax_vjp_rows(cache.probs, seed, extra, cfg.exec);
    auto d = dlogits.data();
    auto e = extra.data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += e[k];
  }
  out.grad = model::backprop_logits(params, batch.features, cache, dlogits, cfg.exec);
  return out;
}

bool all_finite(const StepEval& e) {
  if (!std::isfinite(e.loss) || !std::isfinite(e.fair.penalty.value)) return false;
  return std::all_of(e.grad.begin(), e.grad.end(), [](double g) { return std::isfinite(g); });
}

TraceRecord make_record(std::size_t iter, const StepEval& e) {
  TraceRecord r;
  r.iter = iter;
  r.loss = e.loss;
  r.penalty = e.fair.penalty.value;
  r.grad_norm = norm2(e.grad);
  r.sigma2 = e.fair.sigma2;
  r.snapshot = e.fair.snapshot;
  return r;
}

TrainTrace run(const model::ModelParams& init, const model::Batch& batch, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  batch.validate();
  if (batch.size() == 0) throw std::invalid_argument("train: empty batch");
  if (init.classes != batch.classes)
    throw std::invalid_argument("train: model and batch disagree on the number of classes");

  TrainTrace trace;
  trace.params = init;
  const bool minibatch = cfg.batch_size > 0 && cfg.batch_size < batch.size();
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = batch.size();

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    StepEval e;
    if (minibatch) {
      if (cursor + cfg.batch_size > batch.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::span<const std::size_t> idx(order.data() + cursor, cfg.batch_size);
      cursor += cfg.batch_size;
      e = evaluate_step(trace.params, batch.subset(idx), cfg, &trace.warnings);
    } else {
      e = evaluate_step(trace.params, batch, cfg, &trace.warnings);
    }
    trace.records.push_back(make_record(t, e));
    if (!all_finite(e))
      throw DivergenceError("training diverged at iteration " + std::to_string(t), std::move(trace));
    if (trace.records.back().grad_norm <= cfg.grad_tol) {
      trace.stopped_on_grad_tol = true;
      return trace;
    }
    for (std::size_t k = 0; k < e.grad.size(); ++k) trace.params.theta[k] -= cfg.eta * e.grad[k];
  }
  const StepEval last = evaluate_step(trace.params, batch, cfg, &trace.warnings);
  trace.records.push_back(make_record(cfg.iterations, last));
  if (!all_finite(last))
    throw DivergenceError("training diverged after the final step", std::move(trace));
  return trace;
}

}  // namespace

std::string to_string(FairnessMode mode) {
  switch (mode) {
    case FairnessMode::none: return "none";
    case FairnessMode::dp_discrete: return "dp_discrete";
    case FairnessMode::dp_binary: return "dp_binary";
    case FairnessMode::eo: return "eo";
    case FairnessMode::pearson: return "pearson";
    case FairnessMode::hsic: return "hsic";
  }
  return "none";
}

FairnessMode fairness_mode_from_string(const std::string& name) {
  for (FairnessMode m : {FairnessMode::none, FairnessMode::dp_discrete, FairnessMode::dp_binary,
                         FairnessMode::eo, FairnessMode::pearson, FairnessMode::hsic})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown fairness mode '" + name + "'");
}

void TrainConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("TrainConfig: eta must be > 0");
  if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
  if (!(floor > 0.0)) throw std::invalid_argument("TrainConfig: floor must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("TrainConfig: lambda must be finite and >= 0");
  if (grad_tol < 0.0) throw std::invalid_argument("TrainConfig: grad_tol must be >= 0");
  if (hsic.score == HsicConfig::ScoreKernel::gaussian && !(hsic.bandwidth > 0.0))
    throw std::invalid_argument("TrainConfig: gaussian HSIC bandwidth must be > 0");
}

PenaltyEval discrete_penalty(const Matrix& probs, std::span<const int> sensitive,
                             std::size_t groups, std::span<const double> v, double floor,
                             kernels::Exec exec) {
  check_probs(probs, sensitive.size(), "discrete_penalty");
  if (v.size() != groups) throw std::invalid_argument("discrete_penalty: v has wrong length");
  const std::size_t n = probs.rows();
  const std::size_t c = probs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  // joint(i, j) = (1/N) sum_{n in X_j} F(n, i)
  Matrix joint = kernels::group_column_sums(probs, sensitive, groups, exec);
  std::vector<double> group_size(groups, 0.0);
  for (int s : sensitive) group_size[static_cast<std::size_t>(s)] += 1.0;
  std::vector<double> root_c(groups);
  for (std::size_t j = 0; j < groups; ++j) {
    if (group_size[j] == 0.0)
      throw std::invalid_argument("discrete_penalty: sensitive group " + std::to_string(j) +
                                  " is empty");
    root_c[j] = std::sqrt(std::max(group_size[j] * inv_n, floor));
  }

  // (Q v)_i = y_i / sqrt(r_i) with y_i = sum_j joint_ij v_j / sqrt(c_j).
  std::vector<double> y(c, 0.0), r(c, 0.0);
  std::vector<bool> floored(c, false);
  for (std::size_t i = 0; i < c; ++i) {
    double mass = 0.0;
    for (std::size_t j = 0; j < groups; ++j) {
      joint(i, j) *= inv_n;
      mass += joint(i, j);
      y[i] += joint(i, j) * v[j] / root_c[j];
    }
    floored[i] = mass < floor;
    r[i] = floored[i] ? floor : mass;
  }

  PenaltyEval out;
  for (std::size_t i = 0; i < c; ++i) out.value += y[i] * y[i] / r[i];

  out.seed = Matrix(n, c);
  for (std::size_t m = 0; m < n; ++m) {
    const auto j = static_cast<std::size_t>(sensitive[m]);
    auto row = out.seed.row(m);
    for (std::size_t i = 0; i < c; ++i) {
      double g = 2.0 * y[i] * v[j] / (r[i] * root_c[j]);
      if (!floored[i]) g -= y[i] * y[i] / (r[i] * r[i]);
      row[i] = g * inv_n;
    }
  }
  return out;
}

std::vector<double> signed_sensitive(std::span<const int> sensitive) {
  std::vector<double> out(sensitive.size());
  for (std::size_t n = 0; n < sensitive.size(); ++n) {
    if (sensitive[n] != 0 && sensitive[n] != 1)
      throw std::invalid_argument("signed_sensitive: binary sensitive attribute expected");
    out[n] = 2.0 * sensitive[n] - 1.0;
  }
  return out;
}

std::vector<double> inner_w_closed_form(const Matrix& probs, std::span<const double> s_tilde,
                                        double floor) {
  check_probs(probs, s_tilde.size(), "inner_w_closed_form");
  const std::size_t c = probs.cols();
  std::vector<double> num(c, 0.0), den(c, 0.0);
  for (std::size_t n = 0; n < probs.rows(); ++n) {
    auto row = probs.row(n);
    for (std::size_t i = 0; i < c; ++i) {
      num[i] += s_tilde[n] * row[i];
      den[i] += row[i];
    }
  }
  const double min_den = floor * static_cast<double>(probs.rows());
  std::vector<double> w(c);
  for (std::size_t i = 0; i < c; ++i) w[i] = num[i] / (2.0 * std::max(den[i], min_den));
  return w;
}

PenaltyEval binary_penalty(const Matrix& probs, std::span<const double> s_tilde,
                           std::span<const double> w) {
  check_probs(probs, s_tilde.size(), "binary_penalty");
  const std::size_t c = probs.cols();
  if (w.size() != c) throw std::invalid_argument("binary_penalty: w has wrong length");
  const double inv_n = 1.0 / static_cast<double>(probs.rows());
  PenaltyEval out;
  out.seed = Matrix(probs.rows(), c);
  for (std::size_t n = 0; n < probs.rows(); ++n) {
    auto row = probs.row(n);
    auto seed = out.seed.row(n);
    for (std::size_t i = 0; i < c; ++i) {
      const double coef = w[i] * s_tilde[n] - w[i] * w[i];
      out.value += coef * row[i];
      seed[i] = coef * inv_n;
    }
  }
  out.value *= inv_n;
  return out;
}

PenaltyEval pearson_penalty(const Matrix& probs, std::span<const int> sensitive, double floor) {
  check_probs(probs, sensitive.size(), "pearson_penalty");
  if (probs.cols() < 2) throw std::invalid_argument("pearson_penalty: need a class-1 column");
  const std::size_t n = probs.rows();
  const double nd = static_cast<double>(n);
  double t_mean = 0.0, s_mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    t_mean += probs(k, 1);
    s_mean += sensitive[k];
  }
  t_mean /= nd;
  s_mean /= nd;
  double cov = 0.0, var_t = 0.0, var_s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = probs(k, 1) - t_mean;
    const double ds = sensitive[k] - s_mean;
    cov += dt * ds;
    var_t += dt * dt;
    var_s += ds * ds;
  }
  cov /= nd;
  var_t /= nd;
  var_s /= nd;

  PenaltyEval out;
  out.seed = Matrix(n, probs.cols());
  if (var_t < floor || var_s < floor) return out;
  out.value = cov * cov / (var_t * var_s);
  const double a = 2.0 * cov / (nd * var_t * var_s);
  const double b = 2.0 * cov * cov / (nd * var_t * var_t * var_s);
  for (std::size_t k = 0; k < n; ++k)
    out.seed(k, 1) = a * (sensitive[k] - s_mean) - b * (probs(k, 1) - t_mean);
  return out;
}

PenaltyEval hsic_penalty(const Matrix& probs, std::span<const int> sensitive, std::size_t groups,
                         const HsicConfig& cfg) {
  check_probs(probs, sensitive.size(), "hsic_penalty");
  if (probs.cols() < 2) throw std::invalid_argument("hsic_penalty: need a class-1 column");
  const std::size_t n = probs.rows();
  const double nd = static_cast<double>(n);

  // Centered feature columns of the sensitive kernel, L = sum_j phi_j phi_j'.
  const std::size_t width = cfg.sensitive == HsicConfig::SensitiveKernel::delta ? groups : 1;
  Matrix m(n, width);
  for (std::size_t k = 0; k < n; ++k) {
    const int s = sensitive[k];
    if (s < 0 || static_cast<std::size_t>(s) >= groups)
      throw std::invalid_argument("hsic_penalty: sensitive label outside alphabet");
    if (width == 1)
      m(k, 0) = s;
    else
      m(k, static_cast<std::size_t>(s)) = 1.0;
  }
  for (std::size_t j = 0; j < width; ++j) {
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += m(k, j);
    mean /= nd;
    for (std::size_t k = 0; k < n; ++k) m(k, j) -= mean;
  }

  PenaltyEval out;
  out.seed = Matrix(n, probs.cols());
  const double scale = 1.0 / (nd * nd);
  if (cfg.score == HsicConfig::ScoreKernel::linear) {
    std::vector<double> a(width, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < width; ++j) a[j] += probs(k, 1) * m(k, j);
    for (double aj : a) out.value += aj * aj;
    out.value *= scale;
    for (std::size_t k = 0; k < n; ++k) {
      double g = 0.0;
      for (std::size_t j = 0; j < width; ++j) g += a[j] * m(k, j);
      out.seed(k, 1) = 2.0 * scale * g;
    }
    return out;
  }

  const double inv_bw2 = 1.0 / (cfg.bandwidth * cfg.bandwidth);
  for (std::size_t a = 0; a < n; ++a) {
    const double ta = probs(a, 1);
    double g = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      double mab = 0.0;
      for (std::size_t j = 0; j < width; ++j) mab += m(a, j) * m(b, j);
      const double diff = ta - probs(b, 1);
      const double kab = std::exp(-0.5 * diff * diff * inv_bw2);
      out.value += kab * mab;
      g -= mab * kab * diff * inv_bw2;
    }
    out.seed(a, 1) = 2.0 * scale * g;
  }
  out.value *= scale;
  return out;
}

std::vector<int> CombinedSensitive::decode(int code) const {
  if (code < 0 || static_cast<std::size_t>(code) >= alphabet)
    throw std::invalid_argument("CombinedSensitive::decode: code outside alphabet");
  std::vector<int> digits(radices.size());
  auto rest = static_cast<std::size_t>(code);
  for (std::size_t k = radices.size(); k-- > 0;) {
    digits[k] = static_cast<int>(rest % radices[k]);
    rest /= radices[k];
  }
  return digits;
}

CombinedSensitive combine_sensitive(const std::vector<std::vector<int>>& columns,
                                    const std::vector<std::size_t>& sizes) {
  if (columns.empty() || columns.size() != sizes.size())
    throw std::invalid_argument("combine_sensitive: need one alphabet size per column");
  CombinedSensitive out;
  out.radices = sizes;
  const std::size_t n = columns.front().size();
  out.codes.assign(n, 0);
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k].size() != n)
      throw std::invalid_argument("combine_sensitive: columns differ in length");
    if (sizes[k] == 0) throw std::invalid_argument("combine_sensitive: empty alphabet");
    out.alphabet *= sizes[k];
    for (std::size_t r = 0; r < n; ++r) {
      const int v = columns[k][r];
      if (v < 0 || static_cast<std::size_t>(v) >= sizes[k])
        throw std::invalid_argument("combine_sensitive: value outside alphabet in column " +
                                    std::to_string(k));
      out.codes[r] = out.codes[r] * static_cast<int>(sizes[k]) + v;
    }
  }
  return out;
}

FairnessEval evaluate_fairness(const Matrix& probs, const model::Batch& batch,
                               const TrainConfig& cfg, std::vector<std::string>* warnings) {
  switch (cfg.mode) {
    case FairnessMode::dp_discrete:
      return discrete_slice(probs, batch.sensitive, batch.groups, cfg);
    case FairnessMode::dp_binary:
      return binary_slice(probs, batch.sensitive, cfg);
    case FairnessMode::eo:
      return equalized_odds(probs, batch, cfg, warnings);
    case FairnessMode::pearson:
    case FairnessMode::hsic:
    case FairnessMode::none: {
      FairnessEval out;
      if (cfg.mode == FairnessMode::pearson)
        out.penalty = pearson_penalty(probs, batch.sensitive, cfg.floor);
      else if (cfg.mode == FairnessMode::hsic)
        out.penalty = hsic_penalty(probs, batch.sensitive, batch.groups, cfg.hsic);
      else
        out.penalty.seed = Matrix(probs.rows(), probs.cols());
      out.sigma2 = sigma2_of(probs, batch.sensitive, batch.groups, cfg.floor, cfg.exec);
      return out;
    }
  }
  throw std::logic_error("evaluate_fairness: unhandled mode");
}

std::vector<double> objective_gradient(const model::ModelParams& params,
                                       const model::Batch& batch, const TrainConfig& cfg) {
  return evaluate_step(params, batch, cfg, nullptr).grad;
}

TrainTrace train(const model::ModelParams& init, const model::Batch& batch,
                 const TrainConfig& cfg) {
  switch (cfg.mode) {
    case FairnessMode::dp_discrete: return train_discrete(init, batch, cfg);
    case FairnessMode::dp_binary: return train_binary(init, batch, cfg);
    case FairnessMode::eo: return train_equalized_odds(init, batch, cfg);
    default: return run(init, batch, cfg);
  }
}

TrainTrace train_discrete(const model::ModelParams& init, const model::Batch& batch,
                          const TrainConfig& cfg) {
  if (cfg.mode != FairnessMode::dp_discrete)
    throw std::invalid_argument("train_discrete: fairness mode must be dp_discrete");
  if (batch.groups < 2) throw std::invalid_argument("train_discrete: need at least two groups");
  return run(init, batch, cfg);
}

TrainTrace train_binary(const model::ModelParams& init, const model::Batch& batch,
                        const TrainConfig& cfg) {
  if (cfg.mode != FairnessMode::dp_binary)
    throw std::invalid_argument("train_binary: fairness mode must be dp_binary");
  if (batch.groups != 2) throw std::invalid_argument("train_binary: sensitive attribute must be binary");
  return run(init, batch, cfg);
}

TrainTrace train_equalized_odds(const model::ModelParams& init, const model::Batch& batch,
                                const TrainConfig& cfg) {
  if (cfg.mode != FairnessMode::eo)
    throw std::invalid_argument("train_equalized_odds: fairness mode must be eo");
  if (batch.groups < 2)
    throw std::invalid_argument("train_equalized_odds: need at least two groups");
  return run(init, batch, cfg);
}

void write_trace_csv(std::ostream& os, const TrainTrace& trace) {
  os << "iter,loss,penalty,grad_norm,sigma2\n";
  char buf[160];
  for (const TraceRecord& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.loss, r.penalty,
                  r.grad_norm, r.sigma2);
    os << buf;
  }
}

}  // namespace rfair::fairtrain
