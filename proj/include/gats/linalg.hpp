#pragma once

#include "gats/rng.hpp"
#include "gats/tensor.hpp"

#include <stdexcept>
#include <utility>

namespace gats {

struct SvdResult {
  Matrix u;   // m x q
  Vector s;   // q, descending, nonnegative
  Matrix v;   // n x q
};

/// Column-orthonormal n x r matrix; orthonormality checked at
/// construction (||V^T V - I||_F <= 1e-8).
class StiefelMatrix {
 public:
  explicit StiefelMatrix(Matrix m);

  const Matrix& mat() const { return m_; }
  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }

 private:
  Matrix m_;
};

/// Full SVD with deterministic sign convention: each U column is
/// flipped so its largest-magnitude entry is positive (V flipped along
/// with it).
SvdResult svd(const Matrix& m);

/// Top-r SVD (computed from the full factorization; desk scale).
SvdResult truncated_svd(const Matrix& m, Eigen::Index r);

/// Symmetric eigendecomposition, eigenvalues descending, sign-fixed
/// eigenvectors. Rejects inputs with ||S - S^T|| > 1e-8 ||S||.
std::pair<Vector, Matrix> sym_eig(const Matrix& s);

constexpr double kPdFloorScale = 1e-10;

/// Scale-invariant positive-definiteness floor used by spd_inv_sqrt and
/// the anchor-overlap checks: 1e-10 * trace(S) / r.
double pd_floor(const Matrix& s);

/// Raised when the anchor-overlap condition V0^T V V^T V0 > 0 fails;
/// carries the offending minimum eigenvalue.
class OverlapViolation : public std::runtime_error {
 public:
  OverlapViolation(double lambda_min, const std::string& what)
      : std::runtime_error(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

/// Symmetric T with T*T == S^{-1}. Throws OverlapViolation when the
/// smallest eigenvalue is at or below pd_floor(S).
Matrix spd_inv_sqrt(const Matrix& s);

/// Haar-distributed element of Stie(n, r): QR of an i.i.d. standard
/// Gaussian matrix with diag(R) > 0. Deterministic per seed.
StiefelMatrix haar_stiefel(Eigen::Index n, Eigen::Index r,
                           std::uint64_t seed);

/// Haar sample drawn from an existing stream.
StiefelMatrix haar_stiefel(Eigen::Index n, Eigen::Index r, Rng& rng);

/// Gaussian matrix filled in row-major order from the stream.
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

double nuclear_norm(const Matrix& m);

}  // namespace gats
