#pragma once

// Accuracy and group-fairness metrics on hard predictions. The positive class
// is 1; sensitive codes are 0-based.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rfair/faircluster.hpp"
#include "rfair/matrix.hpp"
#include "rfair/model.hpp"

namespace rfair::metrics {

double accuracy(std::span<const int> preds, std::span<const int> labels);

struct GroupRates {
  std::vector<double> rate;  // P(Yhat = 1 | S = j); 0 for empty groups
  std::vector<std::size_t> count;
};

GroupRates positive_rates(std::span<const int> preds, std::span<const int> sensitive,
                          std::size_t groups);

// min over group pairs of rate_a / rate_b, i.e. min rate / max rate. 1 when
// every rate is 0, 0 when only some are. Empty groups throw.
double p_percent(std::span<const int> preds, std::span<const int> sensitive,
                 std::size_t groups = 2);

// Largest pairwise gap of positive rates over the nonempty groups. Empty
// groups are left out and reported through `warnings` when given.
double dp_violation(std::span<const int> preds, std::span<const int> sensitive, std::size_t groups,
                    std::vector<std::string>* warnings = nullptr);

// Largest pairwise gap of true-positive rates P(Yhat = 1 | S, Y = 1). Throws
// if some group has no positive example.
double eo_violation(std::span<const int> preds, std::span<const int> sensitive,
                    std::span<const int> labels, std::size_t groups = 2);

// I(A; B) / sqrt(H(A) H(B)) from counts, natural log; 0 if either entropy is 0.
double nmi(std::span<const int> a, std::size_t a_size, std::span<const int> b, std::size_t b_size);

struct WStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population
  double max_deviation = 0.0;  // max_k |w_k - mean|
};

// Over clusters with at least one member.
WStats cluster_fairness(const faircluster::ClusterState& state);

struct EvalReport {
  std::size_t samples = 0;
  double accuracy = 0.0;
  double p_percent = 0.0;
  double dp_violation = 0.0;
  double eo_violation = 0.0;
  double nmi = 0.0;
  double sigma2 = 0.0;       // maximal correlation of hard predictions with S
  double sigma2_soft = 0.0;  // same, from the soft-output Q estimate
  GroupRates rates;
  std::vector<std::string> warnings;
};

EvalReport evaluate(const Matrix& probs, const model::Batch& batch, double floor = 1e-6);

// Flat JSON object (rates as rate_0, rate_1, ...).
std::string to_json(const EvalReport& report);
std::string csv_header();
std::string csv_row(const EvalReport& report);

}  // namespace rfair::metrics
