#include "rfair/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rfair::model {
namespace {

struct Views {
  std::span<const double> w1, b1, w2, b2;
};

// linear:     [W (c x p) | b (c)]
// one_hidden: [W1 (h x p) | b1 (h) | W2 (c x h) | b2 (c)]
Views views(const ModelParams& m) {
  const std::span<const double> t(m.theta);
  Views v;
  if (m.arch == Architecture::linear) {
    v.w2 = t.subspan(0, m.classes * m.input_dim);
    v.b2 = t.subspan(m.classes * m.input_dim, m.classes);
  } else {
    std::size_t off = 0;
    v.w1 = t.subspan(off, m.hidden_dim * m.input_dim);
    off += m.hidden_dim * m.input_dim;
    v.b1 = t.subspan(off, m.hidden_dim);
    off += m.hidden_dim;
    v.w2 = t.subspan(off, m.classes * m.hidden_dim);
    off += m.classes * m.hidden_dim;
    v.b2 = t.subspan(off, m.classes);
  }
  return v;
}

void check_features(const ModelParams& params, const Matrix& features) {
  if (features.cols() != params.input_dim)
    throw std::invalid_argument("model: feature width " + std::to_string(features.cols()) +
                                " does not match input_dim " + std::to_string(params.input_dim));
}

}  // namespace

std::string to_string(Architecture arch) {
  return arch == Architecture::linear ? "linear" : "one_hidden";
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "linear" || name == "logistic") return Architecture::linear;
  if (name == "one_hidden" || name == "mlp") return Architecture::one_hidden;
  throw std::invalid_argument("unknown architecture '" + name + "'");
}

std::size_t ModelParams::parameter_count(Architecture arch, std::size_t input_dim,
                                         std::size_t hidden_dim, std::size_t classes) {
  if (arch == Architecture::linear) return classes * input_dim + classes;
  return hidden_dim * input_dim + hidden_dim + classes * hidden_dim + classes;
}

void ModelParams::validate() const {
  if (classes < 2) throw std::invalid_argument("ModelParams: need at least two classes");
  if (input_dim == 0) throw std::invalid_argument("ModelParams: input_dim must be positive");
  if (arch == Architecture::linear && hidden_dim != 0)
    throw std::invalid_argument("ModelParams: linear model has no hidden layer");
  if (arch == Architecture::one_hidden && hidden_dim == 0)
    throw std::invalid_argument("ModelParams: one_hidden model needs hidden_dim > 0");
  if (theta.size() != parameter_count(arch, input_dim, hidden_dim, classes))
    throw std::invalid_argument("ModelParams: parameter vector length does not match shapes");
  for (double v : theta)
    if (!std::isfinite(v)) throw std::invalid_argument("ModelParams: non-finite parameter");
}

void Batch::validate() const {
  const std::size_t n = features.rows();
  if (labels.size() != n || sensitive.size() != n)
    throw std::invalid_argument("Batch: features, labels and sensitive must have equal length");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw std::invalid_argument("Batch: label outside {0.." + std::to_string(classes - 1) + "}");
  for (int s : sensitive)
    if (s < 0 || static_cast<std::size_t>(s) >= groups)
      throw std::invalid_argument("Batch: sensitive value outside {0.." +
                                  std::to_string(groups - 1) + "}");
}

Batch Batch::subset(std::span<const std::size_t> rows) const {
  Batch out;
  out.features = features.select_rows(rows);
  out.classes = classes;
  out.groups = groups;
  out.labels.reserve(rows.size());
  out.sensitive.reserve(rows.size());
  for (std::size_t r : rows) {
    out.labels.push_back(labels[r]);
    out.sensitive.push_back(sensitive[r]);
  }
  return out;
}

ModelParams zero_params(Architecture arch, std::size_t input_dim, std::size_t hidden_dim,
                        std::size_t classes) {
  ModelParams m;
  m.arch = arch;
  m.input_dim = input_dim;
  m.hidden_dim = arch == Architecture::linear ? 0 : hidden_dim;
  m.classes = classes;
  m.theta.assign(ModelParams::parameter_count(arch, input_dim, m.hidden_dim, classes), 0.0);
  m.validate();
  return m;
}

ModelParams init_params(Architecture arch, std::size_t input_dim, std::size_t hidden_dim,
                        std::size_t classes, std::uint64_t seed) {
  ModelParams m = zero_params(arch, input_dim, hidden_dim, classes);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t offset, std::size_t fan_out, std::size_t fan_in) {
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-r, r);
    for (std::size_t i = 0; i < fan_out * fan_in; ++i) m.theta[offset + i] = dist(rng);
  };
  if (arch == Architecture::linear) {
    fill(0, classes, input_dim);
  } else {
    fill(0, m.hidden_dim, input_dim);
    fill(m.hidden_dim * input_dim + m.hidden_dim, classes, m.hidden_dim);
  }
  return m;
}

void forward(const ModelParams& params, const Matrix& features, ForwardCache& cache,
             kernels::Exec exec) {
  check_features(params, features);
  const Views v = views(params);
  if (params.arch == Architecture::linear) {
    kernels::affine_rows(features, v.w2, v.b2, cache.probs, exec);
  } else {
    kernels::affine_rows(features, v.w1, v.b1, cache.hidden, exec);
    kernels::tanh_inplace(cache.hidden, exec);
    kernels::affine_rows(cache.hidden, v.w2, v.b2, cache.probs, exec);
  }
  kernels::softmax_rows(cache.probs, exec);
}

Matrix forward(const ModelParams& params, const Matrix& features, kernels::Exec exec) {
  ForwardCache cache;
  forward(params, features, cache, exec);
  return std::move(cache.probs);
}

std::vector<double> backprop_logits(const ModelParams& params, const Matrix& features,
                                    const ForwardCache& cache, const Matrix& dlogits,
                                    kernels::Exec exec) {
  check_features(params, features);
  if (dlogits.rows() != features.rows() || dlogits.cols() != params.classes)
    throw std::invalid_argument("backprop_logits: dlogits shape mismatch");
  std::vector<double> grad(params.theta.size(), 0.0);
  const std::span<double> g(grad);
  if (params.arch == Architecture::linear) {
    const std::size_t wn = params.classes * params.input_dim;
    kernels::accumulate_outer(dlogits, features, g.subspan(0, wn), g.subspan(wn, params.classes),
                              exec);
    return grad;
  }
  const std::size_t p = params.input_dim;
  const std::size_t h = params.hidden_dim;
  const std::size_t c = params.classes;
  const Views v = views(params);
  const std::size_t off_b1 = h * p;
  const std::size_t off_w2 = off_b1 + h;
  const std::size_t off_b2 = off_w2 + c * h;
  kernels::accumulate_outer(dlogits, cache.hidden, g.subspan(off_w2, c * h), g.subspan(off_b2, c),
                            exec);
  Matrix dhidden;
  kernels::backprop_input(dlogits, v.w2, h, dhidden, exec);
  kernels::tanh_backward(cache.hidden, dhidden, exec);
  kernels::accumulate_outer(dhidden, features, g.subspan(0, h * p), g.subspan(off_b1, h), exec);
  return grad;
}

double cross_entropy(const Matrix& probs, std::span<const int> labels, double floor) {
  if (labels.size() != probs.rows()) throw std::invalid_argument("cross_entropy: size mismatch");
  double total = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n)
    total -= std::log(std::max(probs(n, labels[n]), floor));
  return total / static_cast<double>(labels.size());
}

Matrix cross_entropy_logit_grad(const Matrix& probs, std::span<const int> labels) {
  Matrix g = probs;
  const double inv_n = 1.0 / static_cast<double>(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    g(n, labels[n]) -= 1.0;
    for (double& x : g.row(n)) x *= inv_n;
  }
  return g;
}

LossGrad loss_and_grad(const ModelParams& params, const Batch& batch, double floor,
                       kernels::Exec exec) {
  ForwardCache cache;
  forward(params, batch.features, cache, exec);
  LossGrad out;
  out.loss = cross_entropy(cache.probs, batch.labels, floor);
  out.grad = backprop_logits(params, batch.features, cache,
                             cross_entropy_logit_grad(cache.probs, batch.labels), exec);
  return out;
}

std::vector<double> jacobian_probs_vjp(const ModelParams& params, const Matrix& features,
                                       const ForwardCache& cache, const Matrix& seed,
                                       kernels::Exec exec) {
  if (seed.rows() != features.rows() || seed.cols() != params.classes)
    throw std::invalid_argument("jacobian_probs_vjp: seed shape mismatch");
  Matrix dlogits;
  kernels::softmax_vjp_rows(cache.probs, seed, dlogits, exec);
  return backprop_logits(params, features, cache, dlogits, exec);
}

std::vector<double> jacobian_probs_vjp(const ModelParams& params, const Matrix& features,
                                       const Matrix& seed, kernels::Exec exec) {
  ForwardCache cache;
  forward(params, features, cache, exec);
  return jacobian_probs_vjp(params, features, cache, seed, exec);
}

std::vector<int> hard_predictions(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t n = 0; n < probs.rows(); ++n) {
    auto r = probs.row(n);
    out[n] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  params.validate();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
  os << "rfair-checkpoint 1\n"
     << "architecture " << to_string(params.arch) << '\n'
     << "input_dim " << params.input_dim << '\n'
     << "hidden_dim " << params.hidden_dim << '\n'
     << "classes " << params.classes << '\n'
     << "parameters " << params.theta.size() << '\n';
  char buf[40];
  for (double v : params.theta) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
  if (!os) throw std::runtime_error("failed writing checkpoint " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
  auto expect = [&](const char* key) {
    std::string k;
    if (!(is >> k) || k != key)
      throw std::runtime_error("checkpoint " + path.string() + ": expected '" + key + "'");
  };
  expect("rfair-checkpoint");
  int version = 0;
  is >> version;
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
  ModelParams m;
  std::string arch;
  std::size_t count = 0;
  expect("architecture");
  is >> arch;
  m.arch = architecture_from_string(arch);
  expect("input_dim");
  is >> m.input_dim;
  expect("hidden_dim");
  is >> m.hidden_dim;
  expect("classes");
  is >> m.classes;
  expect("parameters");
  is >> count;
  if (!is) throw std::runtime_error("checkpoint: malformed header");
  m.theta.resize(count);
  for (double& v : m.theta) {
    std::string tok;
    if (!(is >> tok)) throw std::runtime_error("checkpoint: truncated parameter list");
    v = std::stod(tok);
  }
  m.validate();
  return m;
}

}  // namespace rfair::model
