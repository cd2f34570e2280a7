#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gats {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense d-dimensional real tensor, row-major (last index fastest).
/// Entries are validated finite at construction.
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(std::vector<std::size_t> dims, std::vector<double> data);

  // All-zeros tensor.
  static DenseTensor zeros(std::vector<std::size_t> dims);
  static DenseTensor from_matrix(const Matrix& m);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t ndim() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& mutable_data() { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double at(const std::vector<std::size_t>& idx) const {
    return data_[flat_index(idx)];
  }
  double& at(const std::vector<std::size_t>& idx) {
    return data_[flat_index(idx)];
  }

  std::size_t flat_index(const std::vector<std::size_t>& idx) const;

  // Interprets a 2-d tensor as a matrix.
  Matrix as_matrix() const;

  bool same_shape(const DenseTensor& other) const {
    return dims_ == other.dims_;
  }

 private:
  void validate() const;

  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

// Modes are 1-based throughout, matching the usual tensor literature.

/// Mode-k unfolding: rows enumerate the mode-k index, columns enumerate
/// the remaining indices (i_1,...,i_{k-1},i_{k+1},...,i_d) with the
/// last varying fastest.
Matrix unfold(const DenseTensor& x, std::size_t k);

/// Inverse of unfold for the stated column convention.
DenseTensor fold(const Matrix& m, std::size_t k,
                 const std::vector<std::size_t>& dims);

/// Mode-k product: contracts mode k of the tensor with the columns of u.
DenseTensor mode_product(const DenseTensor& c, const Matrix& u, std::size_t k);

/// Mode-k Gram matrix unfold(x,k) * unfold(x,k)^T (n_k x n_k, PSD).
Matrix sk_gram(const DenseTensor& x, std::size_t k);

double frobenius_norm(const DenseTensor& x);

/// ||x - xhat||_F / ||x||_F. Throws if shapes differ or ||x||_F == 0.
double rel_err_l2(const DenseTensor& x, const DenseTensor& xhat);

namespace io {

// ".dtz" container: "DATS", u16 version=1, u8 dtype=1 (f64), u8 ndim,
// ndim x u64 dims, row-major little-endian f64 payload.
void write_dtz(const std::string& path, const DenseTensor& t);
DenseTensor read_dtz(const std::string& path);
std::vector<std::uint8_t> dtz_bytes(const DenseTensor& t);

void write_matrix_dtz(const std::string& path, const Matrix& m);
Matrix read_matrix_dtz(const std::string& path);

/// FNV-1a 64-bit hash of the tensor's .dtz byte stream, as hex.
std::string content_hash(const DenseTensor& t);
std::string content_hash(const Matrix& m);

}  // namespace io

}  // namespace gats
