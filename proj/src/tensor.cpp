#include "gats/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

namespace gats {

DenseTensor::DenseTensor(std::vector<std::size_t> dims,
                         std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  validate();
}

void DenseTensor::validate() const {
  if (dims_.empty()) throw std::invalid_argument("tensor needs >= 1 mode");
  if (dims_.size() > 8) throw std::invalid_argument("tensors with d > 8 unsupported");
  std::size_t n = 1;
  for (std::size_t d : dims_) {
    if (d == 0) throw std::invalid_argument("zero dimension");
    n *= d;
  }
  if (n != data_.size())
    throw std::invalid_argument("dims/data length mismatch");
  for (double v : data_)
    if (!std::isfinite(v))
      throw std::invalid_argument("non-finite tensor entry");
}

DenseTensor DenseTensor::zeros(std::vector<std::size_t> dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return DenseTensor(std::move(dims), std::vector<double>(n, 0.0));
}

DenseTensor DenseTensor::from_matrix(const Matrix& m) {
  std::vector<double> data(static_cast<std::size_t>(m.rows() * m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      data[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return DenseTensor({static_cast<std::size_t>(m.rows()),
                      static_cast<std::size_t>(m.cols())},
                     std::move(data));
}

std::size_t DenseTensor::flat_index(const std::vector<std::size_t>& idx) const {
  if (idx.size() != dims_.size()) throw std::invalid_argument("index arity");
  std::size_t flat = 0;
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    if (idx[d] >= dims_[d]) throw std::out_of_range("tensor index");
    flat = flat * dims_[d] + idx[d];
  }
  return flat;
}

Matrix DenseTensor::as_matrix() const {
  if (dims_.size() != 2) throw std::invalid_argument("not a matrix");
  Matrix m(dims_[0], dims_[1]);
  for (std::size_t i = 0; i < dims_[0]; ++i)
    for (std::size_t j = 0; j < dims_[1]; ++j)
      m(i, j) = data_[i * dims_[1] + j];
  return m;
}

namespace {

void check_mode(const DenseTensor& x, std::size_t k) {
  if (k < 1 || k > x.ndim())
    throw std::out_of_range("mode index out of range");
}

// Row-major strides.
std::vector<std::size_t> strides_of(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> s(dims.size());
  std::size_t acc = 1;
  for (std::size_t d = dims.size(); d-- > 0;) {
    s[d] = acc;
    acc *= dims[d];
  }
  return s;
}

}  // namespace

Matrix unfold(const DenseTensor& x, std::size_t k) {
  check_mode(x, k);
  const auto& dims = x.dims();
  const std::size_t d = dims.size();
  const std::size_t nk = dims[k - 1];
  const std::size_t ncols = x.size() / nk;
  const auto strides = strides_of(dims);

  Matrix m(nk, ncols);
  // The column index walks the non-k indices in row-major order (last
  // varying fastest), which is exactly the flat order of the tensor
  // with mode k deleted.
  std::vector<std::size_t> rest_dims;
  std::vector<std::size_t> rest_strides;
  for (std::size_t j = 0; j < d; ++j) {
    if (j == k - 1) continue;
    rest_dims.push_back(dims[j]);
    rest_strides.push_back(strides[j]);
  }
  for (std::size_t col = 0; col < ncols; ++col) {
    std::size_t rem = col;
    std::size_t base = 0;
    for (std::size_t j = rest_dims.size(); j-- > 0;) {
      base += (rem % rest_dims[j]) * rest_strides[j];
      rem /= rest_dims[j];
    }
    for (std::size_t row = 0; row < nk; ++row)
      m(row, col) = x[base + row * strides[k - 1]];
  }
  return m;
}

DenseTensor fold(const Matrix& m, std::size_t k,
                 const std::vector<std::size_t>& dims) {
  if (k < 1 || k > dims.size())
    throw std::out_of_range("mode index out of range");
  std::size_t total = 1;
  for (std::size_t d : dims) total *= d;
  const std::size_t nk = dims[k - 1];
  if (static_cast<std::size_t>(m.rows()) != nk ||
      static_cast<std::size_t>(m.cols()) != total / nk)
    throw std::invalid_argument("fold: matrix shape mismatch");

  const auto strides = strides_of(dims);
  std::vector<std::size_t> rest_dims;
  std::vector<std::size_t> rest_strides;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    if (j == k - 1) continue;
    rest_dims.push_back(dims[j]);
    rest_strides.push_back(strides[j]);
  }
  std::vector<double> data(total);
  const std::size_t ncols = total / nk;
  for (std::size_t col = 0; col < ncols; ++col) {
    std::size_t rem = col;
    std::size_t base = 0;
    for (std::size_t j = rest_dims.size(); j-- > 0;) {
      base += (rem % rest_dims[j]) * rest_strides[j];
      rem /= rest_dims[j];
    }
    for (std::size_t row = 0; row < nk; ++row)
      data[base + row * strides[k - 1]] = m(row, col);
  }
  return DenseTensor(dims, std::move(data));
}

DenseTensor mode_product(const DenseTensor& c, const Matrix& u,
                         std::size_t k) {
  check_mode(c, k);
  if (static_cast<std::size_t>(u.cols()) != c.dims()[k - 1])
    throw std::invalid_argument("mode_product: dimension mismatch on mode");
  Matrix contracted = u * unfold(c, k);
  auto dims = c.dims();
  dims[k - 1] = static_cast<std::size_t>(u.rows());
  return fold(contracted, k, dims);
}

Matrix sk_gram(const DenseTensor& x, std::size_t k) {
  check_mode(x, k);
  Matrix m = unfold(x, k);
  return m * m.transpose();
}

double frobenius_norm(const DenseTensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return std::sqrt(s);
}

double rel_err_l2(const DenseTensor& x, const DenseTensor& xhat) {
  if (!x.same_shape(xhat))
    throw std::invalid_argument("rel_err_l2: shape mismatch");
  const double ref = frobenius_norm(x);
  if (ref == 0.0) throw std::invalid_argument("rel_err_l2: zero reference");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    s += d * d;
  }
  return std::sqrt(s) / ref;
}

namespace io {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> dtz_bytes(const DenseTensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 8 * t.ndim() + 8 * t.size());
  out.push_back('D');
  out.push_back('A');
  out.push_back('T');
  out.push_back('S');
  out.push_back(1);  // version lo
  out.push_back(0);  // version hi
  out.push_back(1);  // dtype f64
  out.push_back(static_cast<std::uint8_t>(t.ndim()));
  for (std::size_t d : t.dims()) put_u64(out, d);
  for (double v : t.data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
  }
  return out;
}

void write_dtz(const std::string& path, const DenseTensor& t) {
  auto bytes = dtz_bytes(t);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

DenseTensor read_dtz(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || bytes[0] != 'D' || bytes[1] != 'A' ||
      bytes[2] != 'T' || bytes[3] != 'S')
    throw std::runtime_error("bad .dtz magic: " + path);
  const std::uint16_t version = bytes[4] | (bytes[5] << 8);
  if (version != 1) throw std::runtime_error("unsupported .dtz version");
  if (bytes[6] != 1) throw std::runtime_error("unsupported .dtz dtype");
  const std::size_t ndim = bytes[7];
  if (bytes.size() < 8 + 8 * ndim) throw std::runtime_error("truncated .dtz");
  std::vector<std::size_t> dims(ndim);
  std::size_t total = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = static_cast<std::size_t>(get_u64(bytes.data() + 8 + 8 * i));
    total *= dims[i];
  }
  const std::size_t off = 8 + 8 * ndim;
  if (bytes.size() != off + 8 * total)
    throw std::runtime_error("payload length mismatch in " + path);
  std::vector<double> data(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::uint64_t bits = get_u64(bytes.data() + off + 8 * i);
    std::memcpy(&data[i], &bits, 8);
  }
  return DenseTensor(std::move(dims), std::move(data));
}

void write_matrix_dtz(const std::string& path, const Matrix& m) {
  write_dtz(path, DenseTensor::from_matrix(m));
}

Matrix read_matrix_dtz(const std::string& path) {
  return read_dtz(path).as_matrix();
}

namespace {

std::string fnv1a_hex(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::string content_hash(const DenseTensor& t) {
  return fnv1a_hex(dtz_bytes(t));
}

std::string content_hash(const Matrix& m) {
  return content_hash(DenseTensor::from_matrix(m));
}

}  // namespace io

}  // namespace gats
