#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gats/metrics.hpp"
#include "gats/linalg.hpp"
#include "gats/procrustes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace gats;

TEST_CASE("error_report on identical tensors") {
  DenseTensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  ErrorReport r = error_report(x, x, std::nullopt, 1.0);
  CHECK(r.rel_err_l1 == 0.0);
  CHECK(r.rel_err_l2 == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(std::isinf(r.psnr));
  CHECK_FALSE(r.avg_rmse.has_value());
}

TEST_CASE("error_report hand case: rmse 0.1 with unit range gives 20 dB") {
  std::vector<double> xd(100, 0.5), yd(100, 0.6);
  DenseTensor x({10, 10}, xd), y({10, 10}, yd);
  ErrorReport r = error_report(x, y, 2, 1.0);
  CHECK(r.rmse == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.psnr == doctest::Approx(20.0).epsilon(1e-10));
  CHECK(r.rel_err_l1 == doctest::Approx(0.1 / 0.5).epsilon(1e-12));
  CHECK(r.rel_err_l2 == doctest::Approx(0.1 / 0.5).epsilon(1e-12));
  REQUIRE(r.avg_rmse.has_value());
  CHECK(*r.avg_rmse == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS(error_report(x, DenseTensor({5, 20}, yd)));
}

TEST_CASE("avg_rmse averages per-frame rmse along the time mode") {
  // Two frames along mode 1: errors 0.1 on frame 1, 0.3 on frame 2.
  DenseTensor x({2, 4}, std::vector<double>(8, 1.0));
  std::vector<double> yd{1.1, 1.1, 1.1, 1.1, 1.3, 1.3, 1.3, 1.3};
  DenseTensor y({2, 4}, yd);
  ErrorReport r = error_report(x, y, 1);
  REQUIRE(r.avg_rmse.has_value());
  CHECK(*r.avg_rmse == doctest::Approx(0.2).epsilon(1e-12));
  // Global rmse is the quadratic mean instead.
  CHECK(r.rmse == doctest::Approx(std::sqrt((0.01 + 0.09) / 2.0)).epsilon(1e-12));
}

TEST_CASE("classical_mds recovers planar configurations up to rigid motion") {
  Rng rng(7);
  const int n = 12;
  Matrix pts(n, 2);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = rng.normal();
    pts(i, 1) = rng.normal();
  }
  Matrix d(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d(i, j) = (pts.row(i) - pts.row(j)).norm();
  Matrix rec = classical_mds(d, 2);
  REQUIRE(rec.rows() == n);
  REQUIRE(rec.cols() == 2);

  // Distances are reproduced exactly.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK((rec.row(i) - rec.row(j)).norm() ==
            doctest::Approx(d(i, j)).epsilon(1e-8));

  // And a Procrustes fit to the centered truth is near perfect.
  Matrix centered = pts.rowwise() - pts.colwise().mean();
  Matrix rc = rec.rowwise() - rec.colwise().mean();
  SvdResult s = svd(Matrix(rc.transpose() * centered));
  Matrix q = s.u * s.v.transpose();
  CHECK((rc * q - centered).norm() < 1e-8 * centered.norm());
}

TEST_CASE("classical_mds clamps non-Euclidean inputs without failing") {
  // Violates the triangle inequality strongly: d(0,2) >> d(0,1)+d(1,2).
  Matrix d(3, 3);
  d << 0, 1, 10, 1, 0, 1, 10, 1, 0;
  Matrix rec = classical_mds(d, 2);
  CHECK(rec.allFinite());
}

TEST_CASE("silverman bandwidth closed form") {
  // 0.9 * min(sigma, IQR/1.34) * n^{-1/5} with a hand-computable sample.
  std::vector<double> s{1.0, 2.0, 3.0, 4.0, 5.0};
  const double bw = silverman_bandwidth(s);
  CHECK(bw > 0.0);
  CHECK(bw < 0.9 * std::sqrt(2.5) * std::pow(5.0, -0.2) + 1e-12);
  // Degenerate samples fall back to a unit bandwidth.
  CHECK(silverman_bandwidth({}) == 1.0);
  CHECK(silverman_bandwidth({2.0}) == 1.0);
  CHECK(silverman_bandwidth({3.0, 3.0, 3.0}) > 0.0);
}

TEST_CASE("kde integrates to one and peaks at the data") {
  Rng rng(17);
  std::vector<double> samples(500);
  for (double& v : samples) v = rng.normal();
  std::vector<double> grid;
  const double lo = -8.0, hi = 8.0;
  const int m = 3201;
  for (int i = 0; i < m; ++i) grid.push_back(lo + (hi - lo) * i / (m - 1));
  std::vector<double> f = kde_1d(samples, 0.0, grid);
  double mass = 0.0;
  for (int i = 0; i + 1 < m; ++i)
    mass += 0.5 * (f[i] + f[i + 1]) * (grid[i + 1] - grid[i]);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
  // Density near 0 dominates density near the tails for a N(0,1) sample.
  CHECK(f[m / 2] > 10.0 * f[0]);
}

TEST_CASE("wasserstein_1d exact values") {
  // Point masses: W1(delta_a, delta_b) = |a - b|.
  CHECK(wasserstein_1d({0.0}, {3.5}) == doctest::Approx(3.5));
  // Shift invariance: W1(X, X + c) = |c|.
  Rng rng(27);
  std::vector<double> a(200), b(200);
  for (int i = 0; i < 200; ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + 0.7;
  }
  CHECK(wasserstein_1d(a, b) == doctest::Approx(0.7).epsilon(1e-10));
  // Equal-size empirical measures: mean absolute difference of sorted
  // samples (the assignment oracle).
  std::vector<double> c(200);
  for (double& v : c) v = rng.uniform(0.0, 2.0);
  std::vector<double> as = a, cs = c;
  std::sort(as.begin(), as.end());
  std::sort(cs.begin(), cs.end());
  double oracle = 0.0;
  for (int i = 0; i < 200; ++i) oracle += std::abs(as[i] - cs[i]);
  oracle /= 200.0;
  CHECK(wasserstein_1d(a, c) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(wasserstein_1d(a, a) == doctest::Approx(0.0));
  CHECK_THROWS(wasserstein_1d({}, {1.0}));
}

TEST_CASE("wasserstein_1d handles unequal sizes and obeys the triangle "
          "inequality") {
  Rng rng(37);
  std::vector<double> a(150), b(90), c(210);
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = 1.0 + 0.5 * rng.normal();
  for (double& v : c) v = rng.uniform(-2.0, 2.0);
  const double ab = wasserstein_1d(a, b);
  const double bc = wasserstein_1d(b, c);
  const double ac = wasserstein_1d(a, c);
  CHECK(ab >= 0.0);
  CHECK(ac <= ab + bc + 1e-10);
  CHECK(ab == doctest::Approx(wasserstein_1d(b, a)).epsilon(1e-12));

  // Unequal point masses with a common refinement oracle:
  // a = {0, 1}, b = {0, 0, 3}: quantile difference integral =
  // |0-0|*1/3 + |0-0|*1/6 + |1-0|*1/6 + |1-3|*1/3.
  const double expect = (1.0 / 6.0) + 2.0 / 3.0;
  CHECK(wasserstein_1d({0.0, 1.0}, {0.0, 0.0, 3.0}) ==
        doctest::Approx(expect).epsilon(1e-12));
}
