#pragma once

// Exact maximal (Hirschfeld-Gebelein-Renyi) correlation for discrete random
// variables.
//
// For discrete a in {0..c-1} and b in {0..d-1} the maximal correlation equals
// the second largest singular value of the c x d matrix
//
//     Q[i][j] = P(a=i, b=j) / sqrt(P(a=i) P(b=j)),
//
// whose largest singular value is always 1 with right singular vector
// (sqrt(P(b=j)))_j. When b is binary the same quantity has a closed form in
// terms of a separable quadratic (see renyi_binary).
//
// All functions here are pure; alphabets are 0-based.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfair/kernels.hpp"
#include "rfair/matrix.hpp"

namespace rfair::maxcorr {

// Raised when the Jacobi SVD fails to converge within its sweep cap.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Joint probability table P(a=i, b=j). Construction validates nonnegativity
// and normalization (|sum - 1| <= 1e-9).
class JointTable {
 public:
  explicit JointTable(Matrix probs);

  // Empirical joint of two label vectors (histogram / N).
  static JointTable from_labels(std::span<const int> a, std::size_t a_size,
                                std::span<const int> b, std::size_t b_size);

  const Matrix& probs() const { return probs_; }
  std::size_t rows() const { return probs_.rows(); }
  std::size_t cols() const { return probs_.cols(); }
  std::vector<double> row_marginal() const;
  std::vector<double> col_marginal() const;

 private:
  Matrix probs_;
};

struct QMatrix {
  Matrix q;
  std::vector<double> row_marginal;
  std::vector<double> col_marginal;
};

struct SvdResult {
  std::vector<double> singular_values;  // descending
  Matrix left;                          // rows x r, orthonormal columns
  Matrix right;                         // cols x r, orthonormal columns
  int sweeps = 0;

  std::vector<double> right_vector(std::size_t k) const { return right.column(k); }
  std::vector<double> left_vector(std::size_t k) const { return left.column(k); }
};

struct RenyiBinaryResult {
  double rho = 0.0;
  double gamma = 0.25;
  std::vector<double> w_star;
  double q_prob = 0.0;  // P(b = 1)
};

inline constexpr double kSvdTolerance = 1e-12;
inline constexpr int kSvdMaxSweeps = 100;

// q_ij = joint_ij / sqrt(p_i p_j). Marginals below `marginal_floor` are
// raised to it before the division; a marginal that is still zero throws.
QMatrix q_from_joint(const JointTable& joint, double marginal_floor = 0.0);

// Thin SVD by one-sided (Hestenes) Jacobi rotations, r = min(rows, cols).
// Right singular vectors are sign-normalized so that their largest-magnitude
// entry (lowest index on ties) is nonnegative; equal singular values are
// ordered by the lexicographically larger right vector first.
SvdResult svd_small(const Matrix& m, double tol = kSvdTolerance,
                    int max_sweeps = kSvdMaxSweeps);

// Second singular value of Q, clamped to [0, 1]. Zero when either alphabet
// has a single symbol.
double renyi_discrete(const JointTable& joint);

// renyi_discrete after removing symbols of probability zero from either
// alphabet (they carry no dependence). Zero when fewer than two symbols remain
// on a side.
double renyi_discrete_on_support(const JointTable& joint);

// Closed form for binary b (column 0 is b=0, column 1 is b=1):
// w*_i = (p_i1 - p_i0) / (2 p_i), gamma = sum_i w_i^2 p_i - sum_i w_i (p_i1 - p_i0) + 1/4,
// rho = sqrt(1 - gamma / (q (1 - q))).
RenyiBinaryResult renyi_binary(const JointTable& joint, double marginal_floor = 0.0);

// Q estimated from soft classifier outputs:
//   P(Yhat=i)       ~ mean_n F_i(x_n)
//   P(Yhat=i | s_j) ~ mean over group j of F_i
//   P(s_j)          = |X_j| / N
// Marginal estimates are clamped below at `floor` before use.
QMatrix empirical_q(const Matrix& soft_probs, std::span<const int> sensitive,
                    std::size_t groups, double floor,
                    kernels::Exec exec = kernels::Exec::parallel);

// Maximizer of v' Q'Q v over unit v orthogonal to the top right singular
// vector: the second right singular vector of q.q.
std::vector<double> second_right_singular_vector(const QMatrix& q);

// Second singular value of a Q matrix (0 when r < 2).
double sigma2(const QMatrix& q);

}  // namespace rfair::maxcorr
