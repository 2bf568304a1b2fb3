#include "rfair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "rfair/maxcorr.hpp"

namespace rfair::metrics {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* who) {
  if (a != b) throw std::invalid_argument(std::string(who) + ": length mismatch");
  if (a == 0) throw std::invalid_argument(std::string(who) + ": empty input");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double max_gap(const std::vector<double>& rates, const std::vector<bool>& used) {
  double lo = 1.0, hi = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < rates.size(); ++j) {
    if (!used[j]) continue;
    lo = std::min(lo, rates[j]);
    hi = std::max(hi, rates[j]);
    any = true;
  }
  return any ? hi - lo : 0.0;
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  check_lengths(preds.size(), labels.size(), "accuracy");
  std::size_t hit = 0;
  for (std::size_t n = 0; n < preds.size(); ++n) hit += preds[n] == labels[n] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

GroupRates positive_rates(std::span<const int> preds, std::span<const int> sensitive,
                          std::size_t groups) {
  check_lengths(preds.size(), sensitive.size(), "positive_rates");
  GroupRates out;
  out.rate.assign(groups, 0.0);
  out.count.assign(groups, 0);
  for (std::size_t n = 0; n < preds.size(); ++n) {
    const int s = sensitive[n];
    if (s < 0 || static_cast<std::size_t>(s) >= groups)
      throw std::invalid_argument("positive_rates: sensitive code outside alphabet");
    ++out.count[static_cast<std::size_t>(s)];
    if (preds[n] == 1) out.rate[static_cast<std::size_t>(s)] += 1.0;
  }
  for (std::size_t j = 0; j < groups; ++j)
    if (out.count[j] > 0) out.rate[j] /= static_cast<double>(out.count[j]);
  return out;
}

double p_percent(std::span<const int> preds, std::span<const int> sensitive, std::size_t groups) {
  const GroupRates r = positive_rates(preds, sensitive, groups);
  for (std::size_t j = 0; j < groups; ++j)
    if (r.count[j] == 0) throw std::invalid_argument("p_percent: group " + std::to_string(j) + " is empty");
  const double lo = *std::min_element(r.rate.begin(), r.rate.end());
  const double hi = *std::max_element(r.rate.begin(), r.rate.end());
  if (hi == 0.0) return 1.0;
  return lo / hi;
}

double dp_violation(std::span<const int> preds, std::span<const int> sensitive, std::size_t groups,
                    std::vector<std::string>* warnings) {
  const GroupRates r = positive_rates(preds, sensitive, groups);
  std::vector<bool> used(groups);
  std::size_t nonempty = 0;
  for (std::size_t j = 0; j < groups; ++j) {
    used[j] = r.count[j] > 0;
    nonempty += used[j] ? 1 : 0;
    if (!used[j] && warnings != nullptr)
      warnings->push_back("dp_violation: group " + std::to_string(j) + " is empty and was excluded");
  }
  if (nonempty < 2) throw std::invalid_argument("dp_violation: need at least two nonempty groups");
  return max_gap(r.rate, used);
}

double eo_violation(std::span<const int> preds, std::span<const int> sensitive,
                    std::span<const int> labels, std::size_t groups) {
  check_lengths(preds.size(), sensitive.size(), "eo_violation");
  check_lengths(preds.size(), labels.size(), "eo_violation");
  std::vector<double> tp(groups, 0.0), pos(groups, 0.0);
  for (std::size_t n = 0; n < preds.size(); ++n) {
    if (labels[n] != 1) continue;
    const auto s = static_cast<std::size_t>(sensitive[n]);
    if (s >= groups) throw std::invalid_argument("eo_violation: sensitive code outside alphabet");
    pos[s] += 1.0;
    if (preds[n] == 1) tp[s] += 1.0;
  }
  std::vector<double> tpr(groups);
  for (std::size_t j = 0; j < groups; ++j) {
    if (pos[j] == 0.0)
      throw std::invalid_argument("eo_violation: group " + std::to_string(j) + " has no Y = 1 sample");
    tpr[j] = tp[j] / pos[j];
  }
  return max_gap(tpr, std::vector<bool>(groups, true));
}

double nmi(std::span<const int> a, std::size_t a_size, std::span<const int> b, std::size_t b_size) {
  check_lengths(a.size(), b.size(), "nmi");
  const maxcorr::JointTable joint = maxcorr::JointTable::from_labels(a, a_size, b, b_size);
  const auto pa = joint.row_marginal();
  const auto pb = joint.col_marginal();
  auto entropy = [](const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
      if (x > 0.0) h -= x * std::log(x);
    return h;
  };
  const double ha = entropy(pa);
  const double hb = entropy(pb);
  if (ha <= 0.0 || hb <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < a_size; ++i)
    for (std::size_t j = 0; j < b_size; ++j) {
      const double p = joint.probs()(i, j);
      if (p > 0.0) mi += p * std::log(p / (pa[i] * pb[j]));
    }
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

WStats cluster_fairness(const faircluster::ClusterState& state) {
  std::vector<double> w;
  for (std::size_t k = 0; k < state.k(); ++k)
    if (state.counts[k] > 0) w.push_back(state.proportions[k]);
  WStats out;
  if (w.empty()) return out;
  out.min = *std::min_element(w.begin(), w.end());
  out.max = *std::max_element(w.begin(), w.end());
  for (double x : w) out.mean += x;
  out.mean /= static_cast<double>(w.size());
  double var = 0.0;
  for (double x : w) {
    var += (x - out.mean) * (x - out.mean);
    out.max_deviation = std::max(out.max_deviation, std::abs(x - out.mean));
  }
  out.std = std::sqrt(var / static_cast<double>(w.size()));
  return out;
}

EvalReport evaluate(const Matrix& probs, const model::Batch& batch, double floor) {
  batch.validate();
  if (probs.rows() != batch.size()) throw std::invalid_argument("evaluate: size mismatch");
  const std::vector<int> preds = model::hard_predictions(probs);
  EvalReport r;
  r.samples = batch.size();
  r.accuracy = accuracy(preds, batch.labels);
  r.rates = positive_rates(preds, batch.sensitive, batch.groups);
  r.dp_violation = dp_violation(preds, batch.sensitive, batch.groups, &r.warnings);
  try {
    r.p_percent = p_percent(preds, batch.sensitive, batch.groups);
  } catch (const std::invalid_argument& e) {
    r.p_percent = 0.0;
    r.warnings.emplace_back(e.what());
  }
  try {
    r.eo_violation = eo_violation(preds, batch.sensitive, batch.labels, batch.groups);
  } catch (const std::invalid_argument& e) {
    r.eo_violation = 0.0;
    r.warnings.emplace_back(e.what());
  }
  r.nmi = nmi(preds, batch.classes, batch.sensitive, batch.groups);
  r.sigma2 = maxcorr::renyi_discrete_on_support(
      maxcorr::JointTable::from_labels(preds, batch.classes, batch.sensitive, batch.groups));
  r.sigma2_soft = maxcorr::sigma2(maxcorr::empirical_q(probs, batch.sensitive, batch.groups, floor));
  return r;
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["samples"] = report.samples;
  j["accuracy"] = report.accuracy;
  j["p_percent"] = report.p_percent;
  j["dp_violation"] = report.dp_violation;
  j["eo_violation"] = report.eo_violation;
  j["nmi"] = report.nmi;
  j["sigma2"] = report.sigma2;
  j["sigma2_soft"] = report.sigma2_soft;
  for (std::size_t g = 0; g < report.rates.rate.size(); ++g) {
    j["rate_" + std::to_string(g)] = report.rates.rate[g];
    j["count_" + std::to_string(g)] = report.rates.count[g];
  }
  return j.dump();
}

std::string csv_header() {
  return "samples,accuracy,p_percent,dp_violation,eo_violation,nmi,sigma2,sigma2_soft";
}

std::string csv_row(const EvalReport& r) {
  return std::to_string(r.samples) + "," + fmt(r.accuracy) + "," + fmt(r.p_percent) + "," +
         fmt(r.dp_violation) + "," + fmt(r.eo_violation) + "," + fmt(r.nmi) + "," + fmt(r.sigma2) +
         "," + fmt(r.sigma2_soft);
}

}  // namespace rfair::metrics
