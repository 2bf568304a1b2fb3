#include "rfair/maxcorr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rfair::maxcorr {
namespace {

constexpr double kNormalizationTol = 1e-9;
constexpr double kSimplexTol = 1e-9;

struct RawSvd {
  std::vector<double> sigma;
  Matrix left;
  Matrix right;
  int sweeps = 0;
};

// One-sided Jacobi on the columns of a (rows >= cols). On return a = U diag(sigma)
// column-wise and v accumulates the right rotations.
RawSvd jacobi_tall(Matrix a, double tol, int max_sweeps) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix v = Matrix::identity(n);
  int sweep = 0;
  bool rotated = true;
  while (rotated) {
    if (sweep == max_sweeps) {
      std::ostringstream msg;
      msg << "svd_small: no convergence after " << max_sweeps << " sweeps on a " << m << "x"
          << n << " matrix; column norms:";
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a(i, j) * a(i, j);
        msg << ' ' << std::sqrt(s);
      }
      throw NumericalError(msg.str());
    }
    rotated = false;
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = cs * ap - sn * aq;
          a(i, q) = sn * ap + cs * aq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = cs * vp - sn * vq;
          v(i, q) = sn * vp + cs * vq;
        }
      }
    }
  }

  RawSvd out;
  out.sweeps = sweep;
  out.sigma.resize(n);
  out.left = Matrix(m, n);
  double sigma_max = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a(i, j) * a(i, j);
    out.sigma[j] = std::sqrt(s);
    sigma_max = std::max(sigma_max, out.sigma[j]);
  }
  // Columns with (numerically) zero norm get an orthonormal completion below.
  const double zero_cut = sigma_max * 1e-15;
  std::vector<bool> filled(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    if (out.sigma[j] <= zero_cut) {
      out.sigma[j] = 0.0;
      continue;
    }
    for (std::size_t i = 0; i < m; ++i) out.left(i, j) = a(i, j) / out.sigma[j];
    filled[j] = true;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (filled[j]) continue;
    // Pick the standard basis vector with the largest residual against the
    // columns already filled.
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < m; ++e) {
      std::vector<double> r(m, 0.0);
      r[e] = 1.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (!filled[k]) continue;
        const double proj = out.left(e, k);
        for (std::size_t i = 0; i < m; ++i) r[i] -= proj * out.left(i, k);
      }
      const double nr = norm2(r);
      if (nr > best_norm + 1e-12) {
        best_norm = nr;
        best = std::move(r);
      }
    }
    for (std::size_t i = 0; i < m; ++i) out.left(i, j) = best[i] / best_norm;
    filled[j] = true;
  }
  out.right = std::move(v);
  return out;
}

std::size_t dominant_index(std::span<const double> v) {
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, std::abs(x));
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) >= mx - 1e-12) return i;
  return 0;
}

}  // namespace

JointTable::JointTable(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() == 0 || probs_.cols() == 0)
    throw std::invalid_argument("JointTable: empty table");
  double total = 0.0;
  for (double p : probs_.data()) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument("JointTable: entries must be finite and nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormalizationTol)
    throw std::invalid_argument("JointTable: entries sum to " + std::to_string(total) +
                                ", expected 1");
}

JointTable JointTable::from_labels(std::span<const int> a, std::size_t a_size,
                                   std::span<const int> b, std::size_t b_size) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("JointTable::from_labels: label vectors must match and be nonempty");
  Matrix counts(a_size, b_size);
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n] < 0 || static_cast<std::size_t>(a[n]) >= a_size || b[n] < 0 ||
        static_cast<std::size_t>(b[n]) >= b_size)
      throw std::invalid_argument("JointTable::from_labels: label outside alphabet");
    counts(a[n], b[n]) += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(a.size());
  for (double& x : counts.data()) x *= inv;
  return JointTable(std::move(counts));
}

std::vector<double> JointTable::row_marginal() const {
  std::vector<double> m(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) m[i] += probs_(i, j);
  return m;
}

std::vector<double> JointTable::col_marginal() const {
  std::vector<double> m(cols(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i)
    for (std::size_t j = 0; j < cols(); ++j) m[j] += probs_(i, j);
  return m;
}

QMatrix q_from_joint(const JointTable& joint, double marginal_floor) {
  QMatrix out;
  out.row_marginal = joint.row_marginal();
  out.col_marginal = joint.col_marginal();
  for (double& p : out.row_marginal) p = std::max(p, marginal_floor);
  for (double& p : out.col_marginal) p = std::max(p, marginal_floor);
  for (double p : out.row_marginal)
    if (p <= 0.0) throw std::invalid_argument("q_from_joint: zero row marginal");
  for (double p : out.col_marginal)
    if (p <= 0.0) throw std::invalid_argument("q_from_joint: zero column marginal");
  out.q = Matrix(joint.rows(), joint.cols());
  for (std::size_t i = 0; i < joint.rows(); ++i)
    for (std::size_t j = 0; j < joint.cols(); ++j)
      out.q(i, j) = joint.probs()(i, j) / std::sqrt(out.row_marginal[i] * out.col_marginal[j]);
  return out;
}

SvdResult svd_small(const Matrix& m, double tol, int max_sweeps) {
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("svd_small: empty matrix");
  if (!(tol > 0.0)) throw std::invalid_argument("svd_small: tol must be positive");
  if (m.rows() > 64 || m.cols() > 64)
    throw std::invalid_argument("svd_small: intended for matrices up to 64x64");
  for (double x : m.data())
    if (!std::isfinite(x)) throw std::invalid_argument("svd_small: non-finite entry");

  const bool wide = m.rows() < m.cols();
  RawSvd raw = jacobi_tall(wide ? m.transposed() : m, tol, max_sweeps);
  Matrix left = wide ? std::move(raw.right) : std::move(raw.left);
  Matrix right = wide ? std::move(raw.left) : std::move(raw.right);
  const std::size_t r = raw.sigma.size();

  // Sign convention on the right vectors.
  for (std::size_t k = 0; k < r; ++k) {
    auto v = right.column(k);
    if (v[dominant_index(v)] < 0.0) {
      for (std::size_t i = 0; i < right.rows(); ++i) right(i, k) = -right(i, k);
      for (std::size_t i = 0; i < left.rows(); ++i) left(i, k) = -left(i, k);
    }
  }

  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return raw.sigma[a] > raw.sigma[b]; });
  const double sigma_max = r ? raw.sigma[order[0]] : 0.0;
  const double tie = tol * std::max(1.0, sigma_max);
  for (std::size_t start = 0; start < r;) {
    std::size_t stop = start + 1;
    while (stop < r && raw.sigma[order[start]] - raw.sigma[order[stop]] <= tie) ++stop;
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop),
                     [&](std::size_t a, std::size_t b) {
                       for (std::size_t i = 0; i < right.rows(); ++i) {
                         if (right(i, a) > right(i, b) + tie) return true;
                         if (right(i, a) < right(i, b) - tie) return false;
                       }
                       return false;
                     });
    start = stop;
  }

  SvdResult out;
  out.sweeps = raw.sweeps;
  out.singular_values.resize(r);
  out.left = Matrix(left.rows(), r);
  out.right = Matrix(right.rows(), r);
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t src = order[k];
    out.singular_values[k] = raw.sigma[src];
    for (std::size_t i = 0; i < left.rows(); ++i) out.left(i, k) = left(i, src);
    for (std::size_t i = 0; i < right.rows(); ++i) out.right(i, k) = right(i, src);
  }
  return out;
}

double sigma2(const QMatrix& q) {
  if (std::min(q.q.rows(), q.q.cols()) < 2) return 0.0;
  const auto svd = svd_small(q.q);
  return std::clamp(svd.singular_values[1], 0.0, 1.0);
}

double renyi_discrete(const JointTable& joint) { return sigma2(q_from_joint(joint)); }

double renyi_discrete_on_support(const JointTable& joint) {
  const auto pa = joint.row_marginal();
  const auto pb = joint.col_marginal();
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i] > 0.0) rows.push_back(i);
  for (std::size_t j = 0; j < pb.size(); ++j)
    if (pb[j] > 0.0) cols.push_back(j);
  if (rows.size() < 2 || cols.size() < 2) return 0.0;
  Matrix sub(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) sub(i, j) = joint.probs()(rows[i], cols[j]);
  return renyi_discrete(JointTable(std::move(sub)));
}

RenyiBinaryResult renyi_binary(const JointTable& joint, double marginal_floor) {
  if (joint.cols() != 2) throw std::invalid_argument("renyi_binary: b must be binary");
  const Matrix& p = joint.probs();
  const std::size_t c = joint.rows();
  RenyiBinaryResult out;
  out.w_star.resize(c);
  std::vector<double> pi(c);
  double q = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    pi[i] = std::max(p(i, 0) + p(i, 1), marginal_floor);
    if (pi[i] <= 0.0) throw std::invalid_argument("renyi_binary: zero class marginal");
    q += p(i, 1);
  }
  double gamma = 0.25;
  for (std::size_t i = 0; i < c; ++i) {
    const double diff = p(i, 1) - p(i, 0);
    out.w_star[i] = diff / (2.0 * pi[i]);
    gamma += out.w_star[i] * out.w_star[i] * pi[i] - out.w_star[i] * diff;
  }
  out.gamma = gamma;
  out.q_prob = q;
  const double var_b = q * (1.0 - q);
  if (var_b <= 0.0) {
    out.rho = 0.0;
    return out;
  }
  // 1 - gamma / (q(1-q)) expanded as a sum of squares, which avoids the
  // cancellation of the direct form near independence.
  double rho_sq = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    const double t = p(i, 1) * (1.0 - q) - p(i, 0) * q;
    rho_sq += t * t / (pi[i] * var_b);
  }
  out.rho = std::sqrt(std::clamp(rho_sq, 0.0, 1.0));
  return out;
}

QMatrix empirical_q(const Matrix& soft_probs, std::span<const int> sensitive, std::size_t groups,
                    double floor, kernels::Exec exec) {
  const std::size_t n = soft_probs.rows();
  const std::size_t c = soft_probs.cols();
  if (n == 0 || sensitive.size() != n)
    throw std::invalid_argument("empirical_q: probabilities and sensitive labels must align");
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (double v : soft_probs.row(r)) {
      if (v < -kSimplexTol) throw std::invalid_argument("empirical_q: negative probability");
      s += v;
    }
    if (std::abs(s - 1.0) > kSimplexTol)
      throw std::invalid_argument("empirical_q: row " + std::to_string(r) + " is off the simplex");
  }
  std::vector<double> counts(groups, 0.0);
  for (int s : sensitive) {
    if (s < 0 || static_cast<std::size_t>(s) >= groups)
      throw std::invalid_argument("empirical_q: sensitive label outside alphabet");
    counts[static_cast<std::size_t>(s)] += 1.0;
  }
  for (std::size_t j = 0; j < groups; ++j)
    if (counts[j] == 0.0)
      throw std::invalid_argument("empirical_q: sensitive group " + std::to_string(j) + " is empty");

  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix joint = kernels::group_column_sums(soft_probs, sensitive, groups, exec);
  QMatrix out;
  out.row_marginal.assign(c, 0.0);
  out.col_marginal.resize(groups);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < groups; ++j) {
      joint(i, j) *= inv_n;
      out.row_marginal[i] += joint(i, j);
    }
    out.row_marginal[i] = std::max(out.row_marginal[i], floor);
  }
  for (std::size_t j = 0; j < groups; ++j) out.col_marginal[j] = std::max(counts[j] * inv_n, floor);
  out.q = Matrix(c, groups);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < groups; ++j)
      out.q(i, j) = joint(i, j) / std::sqrt(out.row_marginal[i] * out.col_marginal[j]);
  return out;
}

std::vector<double> second_right_singular_vector(const QMatrix& q) {
  if (std::min(q.q.rows(), q.q.cols()) < 2)
    throw std::invalid_argument("second_right_singular_vector: Q must be at least 2x2");
  return svd_small(q.q).right_vector(1);
}

}  // namespace rfair::maxcorr
