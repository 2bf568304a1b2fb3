#include "support.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace rfair::testing {

maxcorr::JointTable random_joint(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                 bool sparse) {
  std::exponential_distribution<double> ex(1.0);
  std::bernoulli_distribution drop(1.0 / 3.0);
  Matrix p(rows, cols);
  for (;;) {
    double total = 0.0;
    for (double& v : p.data()) {
      v = ex(rng);
      if (sparse && drop(rng)) v = 0.0;
      total += v;
    }
    bool ok = total > 0.0;
    for (std::size_t i = 0; ok && i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += p(i, j);
      ok = s > 0.0;
    }
    for (std::size_t j = 0; ok && j < cols; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < rows; ++i) s += p(i, j);
      ok = s > 0.0;
    }
    if (!ok) continue;
    for (double& v : p.data()) v /= total;
    return maxcorr::JointTable(p);
  }
}

std::vector<double> eigen_singular_values(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  const auto& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

double eigen_sigma2(const maxcorr::JointTable& joint) {
  const std::size_t c = joint.rows(), d = joint.cols();
  std::vector<double> pa(c, 0.0), pb(d, 0.0);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      pa[i] += joint.probs()(i, j);
      pb[j] += joint.probs()(i, j);
    }
  Matrix q(c, d);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < d; ++j) q(i, j) = joint.probs()(i, j) / std::sqrt(pa[i] * pb[j]);
  const auto s = eigen_singular_values(q);
  return s.size() < 2 ? 0.0 : std::clamp(s[1], 0.0, 1.0);
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double up = f(x);
    x[k] = x0 - h;
    const double down = f(x);
    x[k] = x0;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

model::Batch random_batch(std::size_t n, std::size_t p, std::size_t classes, std::size_t groups,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  model::Batch b;
  b.classes = classes;
  b.groups = groups;
  b.features = Matrix(n, p);
  for (double& v : b.features.data()) v = g(rng);
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(static_cast<int>(i < classes ? i : rng() % classes));
    b.sensitive.push_back(static_cast<int>(i < groups ? i : rng() % groups));
  }
  return b;
}

Matrix random_probs(std::size_t n, std::size_t c, std::mt19937_64& rng) {
  std::exponential_distribution<double> ex(1.0);
  Matrix m(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (m(i, j) = ex(rng) + 1e-3);
    for (std::size_t j = 0; j < c; ++j) m(i, j) /= s;
  }
  return m;
}

}  // namespace rfair::testing
