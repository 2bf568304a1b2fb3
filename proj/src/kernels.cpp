#include "rfair/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#ifdef RFAIR_HAVE_OPENMP
#include <omp.h>
#define RFAIR_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")
#else
#define RFAIR_PARALLEL_FOR
#endif

namespace rfair::kernels {
namespace {

using Index = std::ptrdiff_t;

Index block_count(std::size_t rows) {
  return static_cast<Index>((rows + kBlockRows - 1) / kBlockRows);
}

// Runs body(begin, end) over row blocks; in parallel mode blocks are spread
// across threads.
template <class Body>
void for_each_block(std::size_t rows, Exec exec, Body&& body) {
  const Index blocks = block_count(rows);
  if (exec == Exec::serial) {
    body(std::size_t{0}, rows);
    return;
  }
  RFAIR_PARALLEL_FOR
  for (Index b = 0; b < blocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockRows;
    body(begin, std::min(rows, begin + kBlockRows));
  }
}

// Block-partial reduction: each block writes its own slice of `partials`,
// then slices are folded into `out` in block order.
template <class Body>
void reduce_blocks(std::size_t rows, std::size_t width, std::span<double> out, Exec exec,
                   Body&& body) {
  if (exec == Exec::serial) {
    body(std::size_t{0}, rows, out);
    return;
  }
  const Index blocks = block_count(rows);
  std::vector<double> partials(static_cast<std::size_t>(blocks) * width, 0.0);
  RFAIR_PARALLEL_FOR
  for (Index b = 0; b < blocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockRows;
    std::span<double> slice(partials.data() + static_cast<std::size_t>(b) * width, width);
    body(begin, std::min(rows, begin + kBlockRows), slice);
  }
  for (Index b = 0; b < blocks; ++b) {
    const double* p = partials.data() + static_cast<std::size_t>(b) * width;
    for (std::size_t j = 0; j < width; ++j) out[j] += p[j];
  }
}

}  // namespace

int max_threads() {
#ifdef RFAIR_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void affine_rows(const Matrix& x, std::span<const double> w, std::span<const double> b,
                 Matrix& out, Exec exec) {
  const std::size_t p = x.cols();
  const std::size_t c = b.size();
  if (w.size() != c * p) throw std::invalid_argument("affine_rows: weight shape mismatch");
  if (out.rows() != x.rows() || out.cols() != c) out = Matrix(x.rows(), c);
  for_each_block(x.rows(), exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      auto xr = x.row(n);
      auto orow = out.row(n);
      for (std::size_t i = 0; i < c; ++i) {
        const double* wi = w.data() + i * p;
        double s = b[i];
        for (std::size_t k = 0; k < p; ++k) s += wi[k] * xr[k];
        orow[i] = s;
      }
    }
  });
}

void softmax_rows(Matrix& z, Exec exec) {
  const std::size_t c = z.cols();
  for_each_block(z.rows(), exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      auto r = z.row(n);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < c; ++i) mx = std::max(mx, r[i]);
      double total = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        r[i] = std::exp(r[i] - mx);
        total += r[i];
      }
      for (std::size_t i = 0; i < c; ++i) r[i] /= total;
    }
  });
}

void tanh_inplace(Matrix& z, Exec exec) {
  for_each_block(z.rows(), exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n)
      for (double& v : z.row(n)) v = std::tanh(v);
  });
}

void tanh_backward(const Matrix& h, Matrix& g, Exec exec) {
  for_each_block(h.rows(), exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      auto hr = h.row(n);
      auto gr = g.row(n);
      for (std::size_t j = 0; j < hr.size(); ++j) gr[j] *= 1.0 - hr[j] * hr[j];
    }
  });
}

void softmax_vjp_rows(const Matrix& f, const Matrix& u, Matrix& out, Exec exec) {
  if (f.rows() != u.rows() || f.cols() != u.cols())
    throw std::invalid_argument("softmax_vjp_rows: shape mismatch");
  if (out.rows() != f.rows() || out.cols() != f.cols()) out = Matrix(f.rows(), f.cols());
  for_each_block(f.rows(), exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      auto fr = f.row(n);
      auto ur = u.row(n);
      auto orow = out.row(n);
      const double inner = dot(ur, fr);
      for (std::size_t i = 0; i < fr.size(); ++i) orow[i] = fr[i] * (ur[i] - inner);
    }
  });
}

void accumulate_outer(const Matrix& g, const Matrix& x, std::span<double> gw,
                      std::span<double> gb, Exec exec) {
  const std::size_t c = g.cols();
  const std::size_t p = x.cols();
  if (g.rows() != x.rows() || gw.size() != c * p || gb.size() != c)
    throw std::invalid_argument("accumulate_outer: shape mismatch");
  std::vector<double> packed(c * p + c, 0.0);
  reduce_blocks(g.rows(), packed.size(), packed, exec,
                [&](std::size_t begin, std::size_t end, std::span<double> acc) {
                  for (std::size_t n = begin; n < end; ++n) {
                    auto gr = g.row(n);
                    auto xr = x.row(n);
                    for (std::size_t i = 0; i < c; ++i) {
                      const double gi = gr[i];
                      acc[c * p + i] += gi;
                      if (gi == 0.0) continue;
                      double* wi = acc.data() + i * p;
                      for (std::size_t k = 0; k < p; ++k) wi[k] += gi * xr[k];
                    }
                  }
                });
  for (std::size_t j = 0; j < c * p; ++j) gw[j] += packed[j];
  for (std::size_t i = 0; i < c; ++i) gb[i] += packed[c * p + i];
}

void backprop_input(const Matrix& g, std::span<const double> w, std::size_t p, Matrix& dx,
                    Exec exec) {
  const std::size_t c = g.cols();
  if (w.size() != c * p) throw std::invalid_argument("backprop_input: weight shape mismatch");
  if (dx.rows() != g.rows() || dx.cols() != p) dx = Matrix(g.rows(), p);
  for_each_block(g.rows(), exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      auto gr = g.row(n);
      auto dr = dx.row(n);
      std::fill(dr.begin(), dr.end(), 0.0);
      for (std::size_t i = 0; i < c; ++i) {
        const double gi = gr[i];
        const double* wi = w.data() + i * p;
        for (std::size_t k = 0; k < p; ++k) dr[k] += gi * wi[k];
      }
    }
  });
}

Matrix group_column_sums(const Matrix& v, std::span<const int> group, std::size_t groups,
                         Exec exec) {
  if (group.size() != v.rows()) throw std::invalid_argument("group_column_sums: size mismatch");
  const std::size_t c = v.cols();
  Matrix out(c, groups);
  reduce_blocks(v.rows(), c * groups, out.data(), exec,
                [&](std::size_t begin, std::size_t end, std::span<double> acc) {
                  for (std::size_t n = begin; n < end; ++n) {
                    const auto j = static_cast<std::size_t>(group[n]);
                    auto r = v.row(n);
                    for (std::size_t i = 0; i < c; ++i) acc[i * groups + j] += r[i];
                  }
                });
  return out;
}

Matrix squared_distances(const Matrix& x, const Matrix& centers, Exec exec) {
  if (x.cols() != centers.cols()) throw std::invalid_argument("squared_distances: width mismatch");
  const std::size_t k_count = centers.rows();
  Matrix out(x.rows(), k_count);
  for_each_block(x.rows(), exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      auto xr = x.row(n);
      for (std::size_t k = 0; k < k_count; ++k) {
        auto cr = centers.row(k);
        double s = 0.0;
        for (std::size_t j = 0; j < xr.size(); ++j) {
          const double d = xr[j] - cr[j];
          s += d * d;
        }
        out(n, k) = s;
      }
    }
  });
  return out;
}

Matrix cluster_means(const Matrix& x, std::span<const int> labels, const Matrix& previous,
                     Exec exec) {
  const std::size_t k_count = previous.rows();
  const std::size_t p = x.cols();
  if (labels.size() != x.rows() || previous.cols() != p)
    throw std::invalid_argument("cluster_means: shape mismatch");
  // Packed per-cluster [sum_0 .. sum_{p-1}, count].
  const std::size_t width = k_count * (p + 1);
  std::vector<double> acc(width, 0.0);
  reduce_blocks(x.rows(), width, acc, exec,
                [&](std::size_t begin, std::size_t end, std::span<double> a) {
                  for (std::size_t n = begin; n < end; ++n) {
                    double* slot = a.data() + static_cast<std::size_t>(labels[n]) * (p + 1);
                    auto xr = x.row(n);
                    for (std::size_t j = 0; j < p; ++j) slot[j] += xr[j];
                    slot[p] += 1.0;
                  }
                });
  Matrix out = previous;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double* slot = acc.data() + k * (p + 1);
    if (slot[p] == 0.0) continue;
    for (std::size_t j = 0; j < p; ++j) out(k, j) = slot[j] / slot[p];
  }
  return out;
}

}  // namespace rfair::kernels
