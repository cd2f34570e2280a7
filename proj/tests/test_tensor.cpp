#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gats/rng.hpp"
#include "gats/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace gats;

namespace {

DenseTensor random_tensor(const std::vector<std::size_t>& dims,
                          std::uint64_t seed) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  Rng rng(seed);
  std::vector<double> data(n);
  for (double& v : data) v = rng.normal();
  return DenseTensor(dims, std::move(data));
}

// Naive index-enumeration oracle for the unfolding: walks every tensor
// entry with nested loops and places it by the documented column rule.
Matrix unfold_oracle(const DenseTensor& x, std::size_t k) {
  const auto& dims = x.dims();
  const std::size_t nk = dims[k - 1];
  Matrix m = Matrix::Zero(nk, x.size() / nk);
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t flat = 0; flat < x.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t d = dims.size(); d-- > 0;) {
      idx[d] = rem % dims[d];
      rem /= dims[d];
    }
    std::size_t col = 0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      if (d == k - 1) continue;
      col = col * dims[d] + idx[d];
    }
    m(idx[k - 1], col) = x[flat];
  }
  return m;
}

}  // namespace

TEST_CASE("constructor validates shape and finiteness") {
  CHECK_THROWS(DenseTensor({2, 2}, {1.0, 2.0, 3.0}));
  CHECK_THROWS(DenseTensor({2}, {1.0, std::nan("")}));
  CHECK_THROWS(DenseTensor({2}, {1.0, INFINITY}));
  CHECK_NOTHROW(DenseTensor({2, 2}, {1.0, 2.0, 3.0, 4.0}));
}

TEST_CASE("unfold of a matrix is the matrix itself") {
  auto x = random_tensor({3, 5}, 11);
  CHECK((unfold(x, 1) - x.as_matrix()).norm() == 0.0);
}

TEST_CASE("unfold matches index-enumeration oracle") {
  // 2x2x2 with X[i,j,l] = 4i + 2j + l, mode 2.
  std::vector<double> data(8);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t l = 0; l < 2; ++l)
        data[4 * i + 2 * j + l] = static_cast<double>(4 * i + 2 * j + l);
  DenseTensor x({2, 2, 2}, data);
  Matrix m = unfold(x, 2);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t l = 0; l < 2; ++l)
        CHECK(m(j, 2 * i + l) == doctest::Approx(4.0 * i + 2.0 * j + l));

  for (std::size_t k = 1; k <= 3; ++k) {
    auto t = random_tensor({3, 4, 5}, 100 + k);
    CHECK((unfold(t, k) - unfold_oracle(t, k)).norm() == 0.0);
  }
}

TEST_CASE("unfold of zero tensor") {
  auto z = DenseTensor::zeros({3, 4, 5});
  Matrix m = unfold(z, 2);
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 15);
  CHECK(m.norm() == 0.0);
}

TEST_CASE("fold is the exact inverse of unfold") {
  auto x = random_tensor({3, 4, 5}, 7);
  for (std::size_t k = 1; k <= 3; ++k) {
    DenseTensor back = fold(unfold(x, k), k, x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == x[i]);
  }
  CHECK_THROWS(unfold(x, 0));
  CHECK_THROWS(unfold(x, 4));
  CHECK_THROWS(fold(Matrix::Zero(3, 3), 1, {3, 4}));
}

TEST_CASE("fold of a row vector") {
  Matrix row(1, 4);
  row << 1, 2, 3, 4;
  DenseTensor t = fold(row, 1, {1, 4});
  CHECK(t.at({0, 2}) == 3.0);
}

TEST_CASE("mode_product matrix cases") {
  auto c = random_tensor({3, 4}, 21);
  Rng rng(5);
  Matrix u1(2, 3), u2(6, 4);
  for (int i = 0; i < u1.size(); ++i) u1(i / 3, i % 3) = rng.normal();
  for (int i = 0; i < u2.size(); ++i) u2(i / 4, i % 4) = rng.normal();
  Matrix m = c.as_matrix();
  CHECK((mode_product(c, u1, 1).as_matrix() - u1 * m).norm() < 1e-12);
  CHECK((mode_product(c, u2, 2).as_matrix() - m * u2.transpose()).norm() <
        1e-12);
}

TEST_CASE("mode_product identity leaves tensor unchanged") {
  auto c = random_tensor({2, 3, 4}, 31);
  auto r = mode_product(c, Matrix::Identity(3, 3), 2);
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(r[i] == doctest::Approx(c[i]).epsilon(1e-14));
}

TEST_CASE("mode_product matches quadruple-loop oracle") {
  auto c = random_tensor({2, 3, 4}, 41);
  Rng rng(42);
  Matrix u(5, 3);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) u(i, j) = rng.normal();
  DenseTensor r = mode_product(c, u, 2);
  REQUIRE(r.dims() == std::vector<std::size_t>{2, 5, 4});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t l = 0; l < 4; ++l) {
        double expect = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
          expect += u(a, j) * c.at({i, j, l});
        CHECK(r.at({i, a, l}) == doctest::Approx(expect).epsilon(1e-12));
      }
  CHECK_THROWS(mode_product(c, Matrix::Zero(5, 4), 2));
}

TEST_CASE("mode_product associativity and composition") {
  auto c = random_tensor({3, 4, 5}, 51);
  Rng rng(52);
  auto gauss = [&](Eigen::Index r, Eigen::Index cdim) {
    Matrix m(r, cdim);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < cdim; ++j) m(i, j) = rng.normal();
    return m;
  };
  Matrix a = gauss(6, 3), b = gauss(7, 5);
  auto r1 = mode_product(mode_product(c, a, 1), b, 3);
  auto r2 = mode_product(mode_product(c, b, 3), a, 1);
  for (std::size_t i = 0; i < r1.size(); ++i)
    CHECK(r1[i] == doctest::Approx(r2[i]).epsilon(1e-12));

  Matrix a2 = gauss(4, 6);
  auto lhs = mode_product(mode_product(c, a, 1), a2, 1);
  auto rhs = mode_product(c, Matrix(a2 * a), 1);
  for (std::size_t i = 0; i < lhs.size(); ++i)
    CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
}

TEST_CASE("sk_gram identities") {
  CHECK(sk_gram(DenseTensor::zeros({2, 3}), 1).norm() == 0.0);

  // rank-(1,1,1) outer product a o b o c.
  Rng rng(61);
  Vector a(3), b(4), c(5);
  for (int i = 0; i < 3; ++i) a(i) = rng.normal();
  for (int i = 0; i < 4; ++i) b(i) = rng.normal();
  for (int i = 0; i < 5; ++i) c(i) = rng.normal();
  DenseTensor x = DenseTensor::zeros({3, 4, 5});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t l = 0; l < 5; ++l)
        x.at({i, j, l}) = a(i) * b(j) * c(l);
  Matrix g = sk_gram(x, 1);
  Matrix expect = b.squaredNorm() * c.squaredNorm() * a * a.transpose();
  CHECK((g - expect).norm() < 1e-12 * expect.norm());

  // multi-sum entry formula by loops.
  auto t = random_tensor({3, 4, 5}, 62);
  Matrix g2 = sk_gram(t, 2);
  CHECK((g2 - g2.transpose()).norm() < 1e-12);
  for (std::size_t al = 0; al < 4; ++al)
    for (std::size_t be = 0; be < 4; ++be) {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t l = 0; l < 5; ++l)
          s += t.at({i, al, l}) * t.at({i, be, l});
      CHECK(g2(al, be) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("sk_gram equals unfold gram up to d=4") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto x = random_tensor({2, 3, 2, 4}, 70 + seed);
    for (std::size_t k = 1; k <= 4; ++k) {
      Matrix u = unfold(x, k);
      CHECK((sk_gram(x, k) - u * u.transpose()).norm() < 1e-12 * x.size());
    }
  }
}

TEST_CASE("norm and relative error") {
  auto x = random_tensor({4, 4}, 81);
  CHECK(rel_err_l2(x, x) == 0.0);
  CHECK(rel_err_l2(x, DenseTensor::zeros({4, 4})) == doctest::Approx(1.0));
  DenseTensor ones({2, 2}, {1, 1, 1, 1});
  DenseTensor scaled({2, 2}, {0.9, 0.9, 0.9, 0.9});
  CHECK(rel_err_l2(ones, scaled) == doctest::Approx(0.1));
  CHECK_THROWS(rel_err_l2(x, random_tensor({4, 5}, 1)));
  CHECK_THROWS(rel_err_l2(DenseTensor::zeros({2}), DenseTensor::zeros({2})));
}

TEST_CASE("dtz round trip and hash stability") {
  namespace fs = std::filesystem;
  auto x = random_tensor({3, 4, 5}, 91);
  const std::string path =
      (fs::temp_directory_path() / "gats_test_tensor.dtz").string();
  io::write_dtz(path, x);
  DenseTensor back = io::read_dtz(path);
  REQUIRE(back.dims() == x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == x[i]);
  CHECK(io::content_hash(x) == io::content_hash(back));
  fs::remove(path);
}
