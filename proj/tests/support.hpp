#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rfair/maxcorr.hpp"
#include "rfair/model.hpp"

namespace rfair::testing {

// Dirichlet(1, ..., 1) joint with rows x cols cells. With `sparse`, about a
// third of the cells are zeroed (the table is renormalized and every row and
// column keeps some mass).
maxcorr::JointTable random_joint(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                 bool sparse = false);

// Singular values of Q computed with Eigen's two-sided Jacobi SVD, descending.
std::vector<double> eigen_singular_values(const Matrix& m);

// Second singular value of Q built directly from the joint, via Eigen.
double eigen_sigma2(const maxcorr::JointTable& joint);

// Central differences of f at x, one coordinate at a time.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-6);

// max_i |a_i - b_i| / max(1, max_i |b_i|)
double relative_error(const std::vector<double>& a, const std::vector<double>& b);

// Gaussian features, uniform labels and groups (every group present).
model::Batch random_batch(std::size_t n, std::size_t p, std::size_t classes, std::size_t groups,
                          std::uint64_t seed);

// Rows of a random probability simplex matrix.
Matrix random_probs(std::size_t n, std::size_t c, std::mt19937_64& rng);

}  // namespace rfair::testing
