#include "rfair/faircluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace rfair::faircluster {
namespace {

void check_inputs(const Matrix& points, std::span<const int> sensitive, std::size_t k) {
  if (points.rows() == 0) throw std::invalid_argument("fair_kmeans: empty input");
  if (sensitive.size() != points.rows())
    throw std::invalid_argument("fair_kmeans: sensitive column length differs from point count");
  if (k > points.rows())
    throw std::invalid_argument("fair_kmeans: K = " + std::to_string(k) + " exceeds N = " +
                                std::to_string(points.rows()));
  for (int s : sensitive)
    if (s != 0 && s != 1) throw std::invalid_argument("fair_kmeans: sensitive must be binary");
}

double fairness_score(double dist, double w, int s, double lambda) {
  const double gap = w - s;
  return dist - lambda * gap * gap;
}

double population_std(const ClusterState& state) {
  double mean = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < state.k(); ++k) {
    if (state.counts[k] == 0) continue;
    mean += state.proportions[k];
    ++used;
  }
  if (used == 0) return 0.0;
  mean /= static_cast<double>(used);
  double var = 0.0;
  for (std::size_t k = 0; k < state.k(); ++k) {
    if (state.counts[k] == 0) continue;
    const double d = state.proportions[k] - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(used));
}

}  // namespace

void ClusterConfig::validate() const {
  if (k < 1) throw std::invalid_argument("ClusterConfig: K must be >= 1");
  if (max_sweeps < 1) throw std::invalid_argument("ClusterConfig: max_sweeps must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("ClusterConfig: lambda must be finite and >= 0");
}

ClusterState ClusterState::from_assignments(std::span<const int> assignments,
                                            std::span<const int> sensitive, Matrix centers) {
  if (assignments.size() != sensitive.size())
    throw std::invalid_argument("ClusterState: assignments and sensitive differ in length");
  ClusterState st;
  const std::size_t k = centers.rows();
  st.assignments.assign(assignments.begin(), assignments.end());
  st.centers = std::move(centers);
  st.counts.assign(k, 0);
  st.privileged.assign(k, 0);
  std::size_t total_privileged = 0;
  for (std::size_t n = 0; n < assignments.size(); ++n) {
    const int a = assignments[n];
    if (a < 0 || static_cast<std::size_t>(a) >= k)
      throw std::invalid_argument("ClusterState: assignment outside {0..K-1}");
    ++st.counts[static_cast<std::size_t>(a)];
    if (sensitive[n] == 1) {
      ++st.privileged[static_cast<std::size_t>(a)];
      ++total_privileged;
    }
  }
  st.global_proportion =
      assignments.empty() ? 0.0
                          : static_cast<double>(total_privileged) / static_cast<double>(assignments.size());
  st.proportions.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) st.refresh_proportion(j);
  return st;
}

void ClusterState::refresh_proportion(std::size_t k) {
  proportions[k] = counts[k] == 0 ? global_proportion
                                  : static_cast<double>(privileged[k]) / static_cast<double>(counts[k]);
}

int assign_point(std::span<const double> x, int s, const Matrix& centers,
                 std::span<const double> proportions, double lambda) {
  if (x.size() != centers.cols() || proportions.size() != centers.rows())
    throw std::invalid_argument("assign_point: shape mismatch");
  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centers.rows(); ++k) {
    auto c = centers.row(k);
    double dist = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dist += (x[j] - c[j]) * (x[j] - c[j]);
    const double score = fairness_score(dist, proportions[k], s, lambda);
    if (score < best_score) {
      best_score = score;
      best = static_cast<int>(k);
    }
  }
  return best;
}

void update_proportions_incremental(ClusterState& state, std::span<const int> sensitive,
                                    std::size_t point, int from, int to) {
  if (state.assignments.at(point) != from)
    throw std::logic_error("update_proportions_incremental: point is not in the source cluster");
  if (from == to) return;
  const auto f = static_cast<std::size_t>(from);
  const auto t = static_cast<std::size_t>(to);
  const bool priv = sensitive[point] == 1;
  if (state.counts.at(f) == 0 || (priv && state.privileged[f] == 0))
    throw std::logic_error("update_proportions_incremental: count underflow in cluster " +
                           std::to_string(from));
  --state.counts[f];
  ++state.counts.at(t);
  if (priv) {
    --state.privileged[f];
    ++state.privileged[t];
  }
  state.assignments[point] = to;
  state.refresh_proportion(f);
  state.refresh_proportion(t);
}

std::uint64_t assignment_hash(std::span<const int> assignments) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (int a : assignments) {
    auto v = static_cast<std::uint32_t>(a);
    for (int b = 0; b < 4; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

double kmeans_loss(const Matrix& points, const ClusterState& state) {
  double total = 0.0;
  for (std::size_t n = 0; n < points.rows(); ++n) {
    auto x = points.row(n);
    auto c = state.centers.row(static_cast<std::size_t>(state.assignments[n]));
    for (std::size_t j = 0; j < x.size(); ++j) total += (x[j] - c[j]) * (x[j] - c[j]);
  }
  return total;
}

double fair_objective(const Matrix& points, std::span<const int> sensitive,
                      const ClusterState& state, double lambda) {
  double penalty = 0.0;
  for (std::size_t n = 0; n < points.rows(); ++n) {
    const double gap = state.proportions[static_cast<std::size_t>(state.assignments[n])] - sensitive[n];
    penalty += gap * gap;
  }
  return kmeans_loss(points, state) - lambda * penalty;
}

ClusterState initial_state(const Matrix& points, std::span<const int> sensitive,
                           const ClusterConfig& cfg) {
  cfg.validate();
  check_inputs(points, sensitive, cfg.k);
  const std::size_t n = points.rows();
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> assign(n, 0);

  if (cfg.init == InitMethod::random_assignment) {
    // The first K points of a random permutation seed one cluster each so no
    // cluster starts empty; the rest are drawn uniformly.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(cfg.k) - 1);
    for (std::size_t i = 0; i < n; ++i)
      assign[perm[i]] = i < cfg.k ? static_cast<int>(i) : pick(rng);
    Matrix centers = kernels::cluster_means(points, assign, Matrix(cfg.k, points.cols()), cfg.exec);
    return ClusterState::from_assignments(assign, sensitive, std::move(centers));
  }

  Matrix centers(cfg.k, points.cols());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  const std::size_t f = first(rng);
  std::copy(points.row(f).begin(), points.row(f).end(), centers.row(0).begin());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t k = 1; k < cfg.k; ++k) {
    const Matrix prev = centers.select_rows(std::vector<std::size_t>{k - 1});
    const Matrix d = kernels::squared_distances(points, prev, cfg.exec);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], d(i, 0));
      total += d2[i];
    }
    std::size_t chosen = n - 1;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = first(rng);
    }
    std::copy(points.row(chosen).begin(), points.row(chosen).end(), centers.row(k).begin());
  }
  const Matrix d = kernels::squared_distances(points, centers, cfg.exec);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = d.row(i);
    assign[i] = static_cast<int>(std::min_element(r.begin(), r.end()) - r.begin());
  }
  return ClusterState::from_assignments(assign, sensitive, std::move(centers));
}

ClusterResult fair_kmeans(const Matrix& points, std::span<const int> sensitive,
                          const ClusterConfig& cfg) {
  return fair_kmeans(points, sensitive, cfg, initial_state(points, sensitive, cfg));
}

ClusterResult fair_kmeans(const Matrix& points, std::span<const int> sensitive,
                          const ClusterConfig& cfg, ClusterState start) {
  cfg.validate();
  check_inputs(points, sensitive, cfg.k);
  if (start.centers.rows() != cfg.k || start.centers.cols() != points.cols() ||
      start.assignments.size() != points.rows())
    throw std::invalid_argument("fair_kmeans: initial state does not match the data");

  ClusterResult result;
  result.state = ClusterState::from_assignments(start.assignments, sensitive, std::move(start.centers));
  ClusterState& st = result.state;
  const bool per_point = cfg.w_update == WUpdateMode::per_point;
  const bool guard_empty =
      per_point && cfg.lambda > 0.0 && cfg.empty_policy == EmptyClusterPolicy::keep_nonempty;

  std::vector<std::vector<int>> history{st.assignments};
  result.hashes.push_back(assignment_hash(st.assignments));

  for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    // Centers are fixed for the whole pass, so all distances can be computed
    // up front; only the w-dependent choice is sequential.
    const Matrix dist = kernels::squared_distances(points, st.centers, cfg.exec);
    const std::vector<double> frozen = st.proportions;
    std::size_t moves = 0;
    for (std::size_t n = 0; n < points.rows(); ++n) {
      const std::span<const double> w = per_point ? std::span<const double>(st.proportions)
                                                  : std::span<const double>(frozen);
      const int s = sensitive[n];
      const int cur = st.assignments[n];
      // A point leaves its cluster only for a strictly better score.
      int best = cur;
      double best_score = fairness_score(dist(n, static_cast<std::size_t>(cur)),
                                         w[static_cast<std::size_t>(cur)], s, cfg.lambda);
      for (std::size_t k = 0; k < cfg.k; ++k) {
        const double score = fairness_score(dist(n, k), w[k], s, cfg.lambda);
        if (score < best_score) {
          best_score = score;
          best = static_cast<int>(k);
        }
      }
      if (best == cur) continue;
      if (guard_empty && st.counts[static_cast<std::size_t>(cur)] == 1) continue;
      update_proportions_incremental(st, sensitive, n, cur, best);
      ++moves;
    }
    st.centers = kernels::cluster_means(points, st.assignments, st.centers, cfg.exec);

    SweepRecord rec;
    rec.sweep = sweep;
    rec.kmeans_loss = kmeans_loss(points, st);
    rec.objective = fair_objective(points, sensitive, st, cfg.lambda);
    rec.w_std = population_std(st);
    rec.moves = moves;
    rec.assignment_hash = assignment_hash(st.assignments);
    result.trace.push_back(rec);
    result.hashes.push_back(rec.assignment_hash);
    result.sweeps = sweep;

    if (moves == 0) {
      result.converged = true;
      break;
    }
    for (std::size_t j = history.size(); j-- > 0;) {
      if (result.hashes[j] == rec.assignment_hash && history[j] == st.assignments) {
        result.cycled = true;
        result.cycle_period = sweep - j;
        break;
      }
    }
    if (result.cycled) break;
    history.push_back(st.assignments);
  }
  return result;
}

ToyData toy_dataset(std::uint64_t seed) {
  constexpr std::size_t kCenters = 5;
  constexpr std::size_t kPerCenter = 500;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(0.0, 10.0);
  ToyData out;
  out.true_centers = Matrix(kCenters, 2);
  for (double& v : out.true_centers.data()) v = box(rng);
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < kCenters; ++a)
    for (std::size_t b = a + 1; b < kCenters; ++b) {
      const double dx = out.true_centers(a, 0) - out.true_centers(b, 0);
      const double dy = out.true_centers(a, 1) - out.true_centers(b, 1);
      min_gap = std::min(min_gap, std::sqrt(dx * dx + dy * dy));
    }
  std::normal_distribution<double> noise(0.0, 0.05 * min_gap);
  std::bernoulli_distribution coin(0.5);

  const std::size_t n = kCenters * kPerCenter;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  out.points = Matrix(n, 2);
  out.sensitive.assign(n, 0);
  out.source.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i / kPerCenter;
    const std::size_t slot = order[i];
    out.points(slot, 0) = out.true_centers(c, 0) + noise(rng);
    out.points(slot, 1) = out.true_centers(c, 1) + noise(rng);
    out.source[slot] = static_cast<int>(c);
    if (c == 1)
      out.sensitive[slot] = 1;
    else if (c == 3)
      out.sensitive[slot] = 0;
    else
      out.sensitive[slot] = coin(rng) ? 1 : 0;
  }
  return out;
}

}  // namespace rfair::faircluster
