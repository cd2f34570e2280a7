#include "gats/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace gats {

StiefelMatrix::StiefelMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() < m_.cols())
    throw std::invalid_argument("StiefelMatrix: more columns than rows");
  const double err =
      (m_.transpose() * m_ - Matrix::Identity(m_.cols(), m_.cols())).norm();
  if (err > 1e-8)
    throw std::invalid_argument("StiefelMatrix: columns not orthonormal");
}

namespace {

void check_finite(const Matrix& m) {
  if (!m.allFinite()) throw std::invalid_argument("non-finite matrix entry");
}

// Flip each U column so its largest-magnitude entry is positive; V
// follows. Ties (exact magnitude equality) resolve to the lowest row.
void fix_signs(Matrix& u, Matrix& v) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, j));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (u(imax, j) < 0.0) {
      u.col(j) = -u.col(j);
      if (j < v.cols()) v.col(j) = -v.col(j);
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& m) {
  check_finite(m);
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult r{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  fix_signs(r.u, r.v);
  return r;
}

SvdResult truncated_svd(const Matrix& m, Eigen::Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols()))
    throw std::invalid_argument("truncated_svd: rank out of range");
  SvdResult full = svd(m);
  return SvdResult{full.u.leftCols(r), full.s.head(r), full.v.leftCols(r)};
}

std::pair<Vector, Matrix> sym_eig(const Matrix& s) {
  check_finite(s);
  if (s.rows() != s.cols())
    throw std::invalid_argument("sym_eig: not square");
  const double scale = s.norm();
  if ((s - s.transpose()).norm() > 1e-8 * std::max(scale, 1e-300))
    throw std::invalid_argument("sym_eig: input not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(
      0.5 * (s + s.transpose()));
  // Eigen returns ascending order; reverse to descending.
  Vector vals = solver.eigenvalues().reverse();
  Matrix vecs = solver.eigenvectors().rowwise().reverse();
  Matrix dummy(0, vecs.cols());
  fix_signs(vecs, dummy);
  return {vals, vecs};
}

double pd_floor(const Matrix& s) {
  return kPdFloorScale * s.trace() / static_cast<double>(s.rows());
}

Matrix spd_inv_sqrt(const Matrix& s) {
  auto [vals, vecs] = sym_eig(s);
  const double floor = pd_floor(s);
  const double lmin = vals(vals.size() - 1);
  if (lmin <= floor)
    throw OverlapViolation(lmin, "spd_inv_sqrt: matrix not positive definite "
                                 "above floor (anchor-overlap violated)");
  Vector inv_sqrt = vals.array().sqrt().inverse();
  return vecs * inv_sqrt.asDiagonal() * vecs.transpose();
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

StiefelMatrix haar_stiefel(Eigen::Index n, Eigen::Index r, Rng& rng) {
  if (r > n) throw std::invalid_argument("haar_stiefel: r > n");
  Matrix g = gaussian_matrix(n, r, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, r);
  Matrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  // diag(R) > 0 makes the QR factorization unique, which is what turns
  // the Gaussian draw into exact Haar measure.
  for (Eigen::Index j = 0; j < r; ++j)
    if (rr(j, j) < 0.0) q.col(j) = -q.col(j);
  return StiefelMatrix(std::move(q));
}

StiefelMatrix haar_stiefel(Eigen::Index n, Eigen::Index r,
                           std::uint64_t seed) {
  Rng rng(seed);
  return haar_stiefel(n, r, rng);
}

double nuclear_norm(const Matrix& m) {
  check_finite(m);
  return Eigen::JacobiSVD<Matrix>(m).singularValues().sum();
}

}  // namespace gats
