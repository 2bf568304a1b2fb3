#pragma once

// Soft classifiers F(theta, x) with probability-simplex outputs:
//   linear:      softmax(W x + b)
//   one_hidden:  softmax(W2 tanh(W1 x + b1) + b2)
// Parameters live in one flat vector so optimizers and finite-difference
// checks can treat them uniformly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rfair/kernels.hpp"
#include "rfair/matrix.hpp"

namespace rfair::model {

enum class Architecture { linear, one_hidden };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

struct ModelParams {
  Architecture arch = Architecture::linear;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;  // 0 for linear
  std::size_t classes = 2;
  std::vector<double> theta;

  static std::size_t parameter_count(Architecture arch, std::size_t input_dim,
                                     std::size_t hidden_dim, std::size_t classes);

  // Throws std::invalid_argument if shapes or values are inconsistent.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Features with 0-based labels in {0..classes-1} and sensitive groups in
// {0..groups-1}.
struct Batch {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> sensitive;
  std::size_t classes = 2;
  std::size_t groups = 2;

  std::size_t size() const { return features.rows(); }
  void validate() const;
  Batch subset(std::span<const std::size_t> rows) const;
};

// Weights uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out)); biases zero.
ModelParams init_params(Architecture arch, std::size_t input_dim, std::size_t hidden_dim,
                        std::size_t classes, std::uint64_t seed);
ModelParams zero_params(Architecture arch, std::size_t input_dim, std::size_t hidden_dim,
                        std::size_t classes);

// Intermediate values kept for the backward pass.
struct ForwardCache {
  Matrix hidden;  // N x hidden_dim (one_hidden only)
  Matrix probs;   // N x classes
};

void forward(const ModelParams& params, const Matrix& features, ForwardCache& cache,
             kernels::Exec exec = kernels::Exec::parallel);
Matrix forward(const ModelParams& params, const Matrix& features,
               kernels::Exec exec = kernels::Exec::parallel);

// Gradient with respect to theta given dL/dlogits for every sample.
std::vector<double> backprop_logits(const ModelParams& params, const Matrix& features,
                                    const ForwardCache& cache, const Matrix& dlogits,
                                    kernels::Exec exec = kernels::Exec::parallel);

// Mean cross-entropy -1/N sum log F_{y_n}; probabilities below `floor` are
// clamped before the log.
double cross_entropy(const Matrix& probs, std::span<const int> labels, double floor);

// d(mean cross-entropy)/dlogits = (F - onehot(y)) / N.
Matrix cross_entropy_logit_grad(const Matrix& probs, std::span<const int> labels);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

LossGrad loss_and_grad(const ModelParams& params, const Batch& batch, double floor = 1e-12,
                       kernels::Exec exec = kernels::Exec::parallel);

// u -> sum_n sum_i u(n, i) dF_i(theta, x_n)/dtheta without forming the Jacobian.
std::vector<double> jacobian_probs_vjp(const ModelParams& params, const Matrix& features,
                                       const Matrix& seed,
                                       kernels::Exec exec = kernels::Exec::parallel);

// Same, reusing a forward pass already computed for these features.
std::vector<double> jacobian_probs_vjp(const ModelParams& params, const Matrix& features,
                                       const ForwardCache& cache, const Matrix& seed,
                                       kernels::Exec exec = kernels::Exec::parallel);

// Argmax of each row, lowest index on ties.
std::vector<int> hard_predictions(const Matrix& probs);

// Text checkpoint:
//   rfair-checkpoint 1
//   architecture <linear|one_hidden>
//   input_dim <p>
//   hidden_dim <h>
//   classes <c>
//   parameters <count>
//   <one value per line, %.17g>
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace rfair::model
