#pragma once

// Data-parallel inner loops shared by the classifiers, the Q estimator and
// K-means. Every kernel has a plain serial implementation, kept as the
// reference for tests, and a parallel one (OpenMP when available).
//
// Reductions over samples in the parallel path are computed per fixed-size
// block of rows and the block partials are summed in block order, so results
// do not depend on the number of threads. They can differ from the serial
// reference by rounding only.

#include <cstddef>
#include <span>
#include <vector>

#include "rfair/matrix.hpp"

namespace rfair::kernels {

enum class Exec { serial, parallel };

inline constexpr std::size_t kBlockRows = 256;

// Number of worker threads the parallel path will use (1 without OpenMP).
int max_threads();

// out(n, i) = b[i] + sum_k w[i * p + k] * x(n, k), with p = x.cols().
void affine_rows(const Matrix& x, std::span<const double> w, std::span<const double> b,
                 Matrix& out, Exec exec);

// Row-wise numerically stable softmax, in place.
void softmax_rows(Matrix& z, Exec exec);

void tanh_inplace(Matrix& z, Exec exec);

// g(n, j) *= 1 - h(n, j)^2
void tanh_backward(const Matrix& h, Matrix& g, Exec exec);

// out(n, i) = f(n, i) * (u(n, i) - sum_j u(n, j) f(n, j))
// Vector-Jacobian product of a row softmax with respect to its logits.
void softmax_vjp_rows(const Matrix& f, const Matrix& u, Matrix& out, Exec exec);

// gw[i * p + k] += sum_n g(n, i) x(n, k);  gb[i] += sum_n g(n, i)
void accumulate_outer(const Matrix& g, const Matrix& x, std::span<double> gw,
                      std::span<double> gb, Exec exec);

// dx(n, k) = sum_i g(n, i) w[i * p + k]
void backprop_input(const Matrix& g, std::span<const double> w, std::size_t p, Matrix& dx,
                    Exec exec);

// Per-group column sums: out(i, j) = sum over rows n with group[n] == j of v(n, i).
// Returns a v.cols() x groups matrix.
Matrix group_column_sums(const Matrix& v, std::span<const int> group, std::size_t groups,
                         Exec exec);

// Squared Euclidean distance from every row of x to every row of centers
// (N x K).
Matrix squared_distances(const Matrix& x, const Matrix& centers, Exec exec);

// Means of the rows of x per cluster label; clusters without members keep
// the row given in `previous`.
Matrix cluster_means(const Matrix& x, std::span<const int> labels, const Matrix& previous,
                     Exec exec);

}  // namespace rfair::kernels
