#pragma once

// Fairness-regularized training by alternating an exact inner maximization
// with a gradient step on the classifier parameters:
//
//   dp_discrete  min_theta  CE(theta) + lambda * max_{v orth v1} |Q_theta v|^2
//                (inner max = second right singular vector of the empirical Q)
//   dp_binary    min_theta max_w CE(theta) + lambda * sum_i (w_i E[s~ F_i] - w_i^2 E[F_i])
//                with s~ = 2s - 1 (inner max in closed form)
//   eo           sum over labels y of the dp penalty restricted to {Y = y}
//   pearson      squared Pearson correlation of F_1 and s
//   hsic         biased empirical HSIC between F_1 and s
//
// Each penalty returns its value and a "seed", the derivative of the value
// with respect to every soft output F(n, i); the trainer pushes lambda * seed
// through the softmax and the network in the same backward pass as the loss.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfair/kernels.hpp"
#include "rfair/matrix.hpp"
#include "rfair/model.hpp"

namespace rfair::fairtrain {

enum class FairnessMode { none, dp_discrete, dp_binary, eo, pearson, hsic };

std::string to_string(FairnessMode mode);
FairnessMode fairness_mode_from_string(const std::string& name);

struct HsicConfig {
  enum class ScoreKernel { linear, gaussian };
  enum class SensitiveKernel { delta, linear };
  ScoreKernel score = ScoreKernel::linear;
  SensitiveKernel sensitive = SensitiveKernel::delta;
  double bandwidth = 0.5;  // gaussian score kernel only; O(N^2) per evaluation
};

struct TrainConfig {
  double lambda = 0.0;
  double eta = 0.1;
  std::size_t iterations = 5000;  // T
  std::size_t batch_size = 0;     // 0 = full batch
  double floor = 1e-6;
  std::uint64_t seed = 0;
  FairnessMode mode = FairnessMode::none;
  double grad_tol = 0.0;
  std::size_t eo_min_group = 30;
  HsicConfig hsic;
  kernels::Exec exec = kernels::Exec::parallel;

  void validate() const;
};

struct TraceRecord {
  std::size_t iter = 0;
  double loss = 0.0;
  double penalty = 0.0;  // unscaled; the objective is loss + lambda * penalty
  double grad_norm = 0.0;
  // Empirical maximal correlation of the soft predictions with s. For eo this
  // is sqrt(sum_y sigma2_y^2) over the participating label slices.
  double sigma2 = 0.0;
  std::vector<double> snapshot;  // v or w of the inner maximization
};

struct TrainTrace {
  std::vector<TraceRecord> records;  // at most T + 1 entries
  model::ModelParams params;         // final parameters
  bool stopped_on_grad_tol = false;
  std::vector<std::string> warnings;

  const TraceRecord& last() const { return records.back(); }
};

// Thrown when the loss or gradient becomes non-finite; carries the trace up
// to and including the offending iteration.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, TrainTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const { return trace_; }

 private:
  TrainTrace trace_;
};

struct PenaltyEval {
  double value = 0.0;
  Matrix seed;  // N x c, d value / d F(n, i)
};

// |Q v|^2 for the empirical Q of `probs`, v held fixed. Marginals are floored
// exactly as in maxcorr::empirical_q (a floored marginal contributes no
// derivative).
PenaltyEval discrete_penalty(const Matrix& probs, std::span<const int> sensitive,
                             std::size_t groups, std::span<const double> v, double floor,
                             kernels::Exec exec = kernels::Exec::parallel);

// (1/N) sum_n sum_i (w_i s~_n F(n, i) - w_i^2 F(n, i)) for fixed w.
PenaltyEval binary_penalty(const Matrix& probs, std::span<const double> s_tilde,
                           std::span<const double> w);

// w_i = sum_n s~_n F(n, i) / (2 max(sum_n F(n, i), floor * N)).
std::vector<double> inner_w_closed_form(const Matrix& probs, std::span<const double> s_tilde,
                                        double floor);

// s~ = 2s - 1 for s in {0, 1}.
std::vector<double> signed_sensitive(std::span<const int> sensitive);

// Squared Pearson correlation between column 1 of `probs` and the sensitive
// code taken as a number. Zero when either variance is below `floor`.
PenaltyEval pearson_penalty(const Matrix& probs, std::span<const int> sensitive, double floor);

// Biased HSIC (1/N^2) tr(K H L H) between column 1 of `probs` and s.
PenaltyEval hsic_penalty(const Matrix& probs, std::span<const int> sensitive,
                         std::size_t groups, const HsicConfig& cfg);

// Mixed-radix product encoding of several discrete columns into one; the
// first column is the most significant digit.
struct CombinedSensitive {
  std::vector<int> codes;
  std::vector<std::size_t> radices;
  std::size_t alphabet = 1;

  std::vector<int> decode(int code) const;
};

CombinedSensitive combine_sensitive(const std::vector<std::vector<int>>& columns,
                                    const std::vector<std::size_t>& sizes);

// Dispatches on cfg.mode. The specific entry points check their
// preconditions (mode and alphabet size) before delegating.
TrainTrace train(const model::ModelParams& init, const model::Batch& batch,
                 const TrainConfig& cfg);
TrainTrace train_discrete(const model::ModelParams& init, const model::Batch& batch,
                          const TrainConfig& cfg);
TrainTrace train_binary(const model::ModelParams& init, const model::Batch& batch,
                        const TrainConfig& cfg);
TrainTrace train_equalized_odds(const model::ModelParams& init, const model::Batch& batch,
                                const TrainConfig& cfg);

// Penalty value, seed, inner snapshot and reported sigma2 for the current
// predictions on `batch` (exposed for gradient checks and diagnostics).
struct FairnessEval {
  PenaltyEval penalty;
  std::vector<double> snapshot;
  double sigma2 = 0.0;
};

FairnessEval evaluate_fairness(const Matrix& probs, const model::Batch& batch,
                               const TrainConfig& cfg, std::vector<std::string>* warnings = nullptr);

// Gradient of CE + lambda * penalty at `params` with the inner variable held at
// the value chosen for the current predictions.
std::vector<double> objective_gradient(const model::ModelParams& params,
                                       const model::Batch& batch, const TrainConfig& cfg);

// "iter,loss,penalty,grad_norm,sigma2" followed by one line per record.
void write_trace_csv(std::ostream& os, const TrainTrace& trace);

}  // namespace rfair::fairtrain
