#pragma once

#include "gats/tensor.hpp"

#include <optional>
#include <vector>

namespace gats {

struct ErrorReport {
  double rel_err_l1 = 0.0;
  double rel_err_l2 = 0.0;
  double rmse = 0.0;
  double psnr = 0.0;  // dB; +inf when rmse == 0
  std::optional<double> avg_rmse;  // mean per-frame rmse along time_mode
};

/// Elementwise error metrics between a reference and a reconstruction.
/// psnr is only populated when a value range is given; avg_rmse only
/// when a time mode is given.
ErrorReport error_report(const DenseTensor& x, const DenseTensor& xhat,
                         std::optional<std::size_t> time_mode = std::nullopt,
                         std::optional<double> value_range = std::nullopt);

/// Classical (Torgerson) MDS: double-center the squared distances, take
/// the top out_dim eigenpairs, scale eigenvectors by sqrt(eigenvalue).
/// Negative eigenvalues (non-Euclidean input) are clamped to zero.
Matrix classical_mds(const Matrix& d, int out_dim = 2);

/// Gaussian KDE evaluated on a grid. bandwidth <= 0 selects Silverman's
/// rule.
std::vector<double> kde_1d(const std::vector<double>& samples,
                           double bandwidth, const std::vector<double>& grid);

double silverman_bandwidth(const std::vector<double>& samples);

/// Exact W1 between two 1-d empirical measures (quantile integral).
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

}  // namespace gats
