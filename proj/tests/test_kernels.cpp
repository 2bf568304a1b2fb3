#include <doctest.h>

#include <random>

#ifdef RFAIR_HAVE_OPENMP
#include <omp.h>
#endif

#include "rfair/kernels.hpp"
#include "support.hpp"

using rfair::Matrix;
using rfair::kernels::Exec;
namespace k = rfair::kernels;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (double& v : m.data()) v = g(rng);
  return m;
}

std::vector<double> gaussian_vec(std::size_t n, std::uint64_t seed) {
  const Matrix m = gaussian(1, n, seed);
  return {m.data().begin(), m.data().end()};
}

// Enough rows to span several reduction blocks plus a ragged tail.
constexpr std::size_t kRows = 3 * k::kBlockRows + 17;

}  // namespace

TEST_CASE("affine and softmax agree between serial and parallel") {
  const Matrix x = gaussian(kRows, 7, 1);
  const auto w = gaussian_vec(3 * 7, 2);
  const auto b = gaussian_vec(3, 3);
  Matrix s(kRows, 3), p(kRows, 3);
  k::affine_rows(x, w, b, s, Exec::serial);
  k::affine_rows(x, w, b, p, Exec::parallel);
  CHECK(rfair::max_abs_diff(s, p) == 0.0);
  k::softmax_rows(s, Exec::serial);
  k::softmax_rows(p, Exec::parallel);
  CHECK(rfair::max_abs_diff(s, p) == 0.0);
  for (std::size_t n = 0; n < kRows; ++n) {
    double sum = 0.0;
    for (double v : s.row(n)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("softmax is stable for large logits") {
  Matrix z{{1000.0, 1000.0}, {-1000.0, 0.0}};
  k::softmax_rows(z, Exec::serial);
  CHECK(z(0, 0) == doctest::Approx(0.5));
  CHECK(z(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("softmax vjp matches the explicit Jacobian") {
  std::mt19937_64 rng(4);
  const Matrix f = rfair::testing::random_probs(5, 4, rng);
  const Matrix u = gaussian(5, 4, 5);
  Matrix out(5, 4);
  k::softmax_vjp_rows(f, u, out, Exec::serial);
  for (std::size_t n = 0; n < 5; ++n)
    for (std::size_t j = 0; j < 4; ++j) {
      // dF_i/dz_j = F_i (delta_ij - F_j)
      double expect = 0.0;
      for (std::size_t i = 0; i < 4; ++i) expect += u(n, i) * f(n, i) * ((i == j ? 1.0 : 0.0) - f(n, j));
      CHECK(out(n, j) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("reductions agree with the serial reference") {
  const Matrix x = gaussian(kRows, 6, 6);
  const Matrix g = gaussian(kRows, 3, 7);
  std::vector<double> gw_s(18, 0.0), gb_s(3, 0.0), gw_p(18, 0.0), gb_p(3, 0.0);
  k::accumulate_outer(g, x, gw_s, gb_s, Exec::serial);
  k::accumulate_outer(g, x, gw_p, gb_p, Exec::parallel);
  CHECK(rfair::testing::relative_error(gw_p, gw_s) < 1e-13);
  CHECK(rfair::testing::relative_error(gb_p, gb_s) < 1e-13);

  std::vector<int> group(kRows);
  for (std::size_t n = 0; n < kRows; ++n) group[n] = static_cast<int>(n % 3);
  const Matrix gs = k::group_column_sums(g, group, 3, Exec::serial);
  const Matrix gp = k::group_column_sums(g, group, 3, Exec::parallel);
  CHECK(rfair::max_abs_diff(gs, gp) < 1e-12);
  double direct = 0.0;
  for (std::size_t n = 1; n < kRows; n += 3) direct += g(n, 2);
  CHECK(gs(2, 1) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("backprop_input and tanh kernels agree") {
  const Matrix g = gaussian(kRows, 3, 8);
  const auto w = gaussian_vec(3 * 5, 9);
  Matrix ds(kRows, 5), dp(kRows, 5);
  k::backprop_input(g, w, 5, ds, Exec::serial);
  k::backprop_input(g, w, 5, dp, Exec::parallel);
  CHECK(rfair::max_abs_diff(ds, dp) == 0.0);

  Matrix hs = gaussian(kRows, 4, 10), hp = hs;
  k::tanh_inplace(hs, Exec::serial);
  k::tanh_inplace(hp, Exec::parallel);
  CHECK(rfair::max_abs_diff(hs, hp) == 0.0);
  Matrix a = gaussian(kRows, 4, 11), b = a;
  k::tanh_backward(hs, a, Exec::serial);
  k::tanh_backward(hs, b, Exec::parallel);
  CHECK(rfair::max_abs_diff(a, b) == 0.0);
}

TEST_CASE("distances and cluster means") {
  const Matrix x = gaussian(kRows, 3, 12);
  const Matrix c = gaussian(4, 3, 13);
  const Matrix ds = k::squared_distances(x, c, Exec::serial);
  const Matrix dp = k::squared_distances(x, c, Exec::parallel);
  CHECK(rfair::max_abs_diff(ds, dp) == 0.0);
  double d = 0.0;
  for (std::size_t j = 0; j < 3; ++j) d += (x(5, j) - c(2, j)) * (x(5, j) - c(2, j));
  CHECK(ds(5, 2) == doctest::Approx(d).epsilon(1e-13));

  std::vector<int> labels(kRows);
  for (std::size_t n = 0; n < kRows; ++n) labels[n] = static_cast<int>(n % 3);  // cluster 3 empty
  const Matrix ms = k::cluster_means(x, labels, c, Exec::serial);
  const Matrix mp = k::cluster_means(x, labels, c, Exec::parallel);
  CHECK(rfair::max_abs_diff(ms, mp) < 1e-12);
  for (std::size_t j = 0; j < 3; ++j) CHECK(ms(3, j) == c(3, j));
}

#ifdef RFAIR_HAVE_OPENMP
TEST_CASE("parallel reductions do not depend on the thread count") {
  const Matrix x = gaussian(10 * k::kBlockRows + 3, 5, 14);
  const Matrix g = gaussian(10 * k::kBlockRows + 3, 2, 15);
  const int saved = omp_get_max_threads();
  std::vector<std::vector<double>> results;
  for (int t : {1, 2, 3, 7}) {
    omp_set_num_threads(t);
    std::vector<double> gw(10, 0.0), gb(2, 0.0);
    k::accumulate_outer(g, x, gw, gb, Exec::parallel);
    gw.insert(gw.end(), gb.begin(), gb.end());
    results.push_back(gw);
  }
  omp_set_num_threads(saved);
  for (const auto& r : results) CHECK(r == results.front());
}
#endif
