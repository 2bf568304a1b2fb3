#pragma once

// K-means with a disparate-impact penalty. Each point n is assigned to
//
//     argmin_k |x_n - c_k|^2 - lambda (w_k - s_n)^2
//
// where w_k is the current share of privileged points (s = 1) in cluster k.
// Centers are refreshed after every full pass over the points. In per_point
// mode w is refreshed after every single reassignment; in per_sweep mode only
// after the pass, which can cycle forever (see the two-cluster, four-point
// example in the tests).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rfair/kernels.hpp"
#include "rfair/matrix.hpp"

namespace rfair::faircluster {

enum class WUpdateMode { per_point, per_sweep };
enum class InitMethod { random_assignment, kmeans_plus_plus };

// keep_center: an emptied cluster keeps its last center and takes the global
//   privileged share as its w.
// keep_nonempty: as keep_center, but in per_point mode with lambda > 0 a move
//   that would empty its source cluster is not made.
enum class EmptyClusterPolicy { keep_center, keep_nonempty };

struct ClusterConfig {
  std::size_t k = 2;
  double lambda = 0.0;
  std::size_t max_sweeps = 200;
  std::uint64_t seed = 0;
  WUpdateMode w_update = WUpdateMode::per_point;
  InitMethod init = InitMethod::random_assignment;
  EmptyClusterPolicy empty_policy = EmptyClusterPolicy::keep_nonempty;
  kernels::Exec exec = kernels::Exec::parallel;

  void validate() const;
};

struct ClusterState {
  std::vector<int> assignments;  // 0-based cluster per point
  Matrix centers;                // K x p
  std::vector<double> proportions;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> privileged;
  double global_proportion = 0.0;

  std::size_t k() const { return counts.size(); }

  // Counts and proportions recomputed from scratch.
  static ClusterState from_assignments(std::span<const int> assignments,
                                       std::span<const int> sensitive, Matrix centers);

  // w_k from the counts, or the global share when cluster k is empty.
  void refresh_proportion(std::size_t k);
};

// Exact argmin of |x - c_k|^2 - lambda (w_k - s)^2, lowest index on ties.
int assign_point(std::span<const double> x, int s, const Matrix& centers,
                 std::span<const double> proportions, double lambda);

// Moves `point` from cluster `from` to cluster `to` and updates counts and
// the two affected proportions in O(1). Throws std::logic_error on count
// underflow or when the point is not in `from`.
void update_proportions_incremental(ClusterState& state, std::span<const int> sensitive,
                                    std::size_t point, int from, int to);

struct SweepRecord {
  std::size_t sweep = 0;
  double objective = 0.0;    // kmeans_loss - lambda * sum_n (w_{a_n} - s_n)^2
  double kmeans_loss = 0.0;  // sum_n |x_n - c_{a_n}|^2
  double w_std = 0.0;
  std::size_t moves = 0;
  std::uint64_t assignment_hash = 0;
};

struct ClusterResult {
  ClusterState state;
  std::vector<SweepRecord> trace;
  std::vector<std::uint64_t> hashes;  // initial assignment first, then one per sweep
  bool converged = false;             // a sweep changed nothing
  bool cycled = false;                // an earlier assignment recurred
  std::size_t cycle_period = 0;
  std::size_t sweeps = 0;
};

std::uint64_t assignment_hash(std::span<const int> assignments);

double kmeans_loss(const Matrix& points, const ClusterState& state);
double fair_objective(const Matrix& points, std::span<const int> sensitive,
                      const ClusterState& state, double lambda);

// Seeded initial state per cfg.init.
ClusterState initial_state(const Matrix& points, std::span<const int> sensitive,
                           const ClusterConfig& cfg);

ClusterResult fair_kmeans(const Matrix& points, std::span<const int> sensitive,
                          const ClusterConfig& cfg);
// Starts from a given state (assignments and centers; counts are recomputed).
ClusterResult fair_kmeans(const Matrix& points, std::span<const int> sensitive,
                          const ClusterConfig& cfg, ClusterState start);

struct ToyData {
  Matrix points;  // 2500 x 2
  std::vector<int> sensitive;
  Matrix true_centers;  // 5 x 2
  std::vector<int> source;  // generating center per point
};

// Five centers uniform in [0, 10]^2, 500 Gaussian points around each with
// sd = 0.05 * (smallest center gap). Points of center 1 have s = 1, points of
// center 3 have s = 0, the rest a fair coin (0-based center indices). Points
// are shuffled.
ToyData toy_dataset(std::uint64_t seed);

}  // namespace rfair::faircluster
