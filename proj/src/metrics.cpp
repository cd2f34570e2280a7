#include "gats/metrics.hpp"

#include "gats/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace gats {

ErrorReport error_report(const DenseTensor& x, const DenseTensor& xhat,
                         std::optional<std::size_t> time_mode,
                         std::optional<double> value_range) {
  if (!x.same_shape(xhat))
    throw std::invalid_argument("error_report: shape mismatch");
  double abs1 = 0.0, ref1 = 0.0, sq = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    abs1 += std::abs(d);
    ref1 += std::abs(x[i]);
    sq += d * d;
    ref2 += x[i] * x[i];
  }
  if (ref1 == 0.0 || ref2 == 0.0)
    throw std::invalid_argument("error_report: zero reference norm");

  ErrorReport rep;
  rep.rel_err_l1 = abs1 / ref1;
  rep.rel_err_l2 = std::sqrt(sq) / std::sqrt(ref2);
  rep.rmse = std::sqrt(sq / static_cast<double>(x.size()));
  if (value_range) {
    rep.psnr = rep.rmse > 0.0
                   ? 20.0 * std::log10(*value_range / rep.rmse)
                   : std::numeric_limits<double>::infinity();
  }
  if (time_mode) {
    Matrix dx = unfold(x, *time_mode) - unfold(xhat, *time_mode);
    double acc = 0.0;
    for (Eigen::Index t = 0; t < dx.rows(); ++t)
      acc += std::sqrt(dx.row(t).squaredNorm() /
                       static_cast<double>(dx.cols()));
    rep.avg_rmse = acc / static_cast<double>(dx.rows());
  }
  return rep;
}

Matrix classical_mds(const Matrix& d, int out_dim) {
  if (d.rows() != d.cols())
    throw std::invalid_argument("classical_mds: not square");
  if ((d - d.transpose()).norm() > 1e-10 * std::max(d.norm(), 1.0))
    throw std::invalid_argument("classical_mds: asymmetric distances");
  const Eigen::Index n = d.rows();
  Matrix d2 = d.array().square();
  Matrix j = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
  Matrix b = -0.5 * j * d2 * j;
  auto [vals, vecs] = sym_eig(b);
  Matrix coords(n, out_dim);
  bool clamped = false;
  for (int k = 0; k < out_dim; ++k) {
    double lambda = k < vals.size() ? vals(k) : 0.0;
    if (lambda < 0.0) {
      lambda = 0.0;
      clamped = true;
    }
    coords.col(k) = vecs.col(k) * std::sqrt(lambda);
  }
  if (clamped)
    std::cerr << "classical_mds: negative eigenvalue clamped "
                 "(non-Euclidean distances)\n";
  return coords;
}

double silverman_bandwidth(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) return 1.0;
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var /= (n - 1);
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  const double q1 = sorted[n / 4];
  const double q3 = sorted[(3 * n) / 4];
  const double spread = std::min(std::sqrt(var), (q3 - q1) / 1.34);
  const double s = spread > 0.0 ? spread : std::sqrt(var);
  return 0.9 * std::max(s, 1e-12) * std::pow(static_cast<double>(n), -0.2);
}

std::vector<double> kde_1d(const std::vector<double>& samples,
                           double bandwidth,
                           const std::vector<double>& grid) {
  if (samples.empty()) throw std::invalid_argument("kde_1d: empty samples");
  const double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
  const double norm =
      1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * M_PI));
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (grid[g] - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out[g] = acc * norm;
  }
  return out;
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("wasserstein_1d: empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Quantile integral over the merged breakpoints of the two empirical
  // inverse CDFs; exact for empirical measures.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double q = 0.0, w = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double qa = static_cast<double>(ia + 1) / na;
    const double qb = static_cast<double>(ib + 1) / nb;
    const double qn = std::min(qa, qb);
    w += (qn - q) * std::abs(a[ia] - b[ib]);
    q = qn;
    if (qa <= qn + 1e-15) ++ia;
    if (qb <= qn + 1e-15) ++ib;
  }
  return w;
}

}  // namespace gats
