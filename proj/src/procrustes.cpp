#include "gats/procrustes.hpp"

#include <cmath>
#include <thread>
#include <vector>

namespace gats {

Matrix op_solve(const StiefelMatrix& a, const StiefelMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("op_solve: shape mismatch");
  SvdResult s = svd(a.mat().transpose() * b.mat());
  return s.u * s.v.transpose();
}

AlignmentResult op_align(const StiefelMatrix& v, const StiefelMatrix& v0) {
  if (v.rows() != v0.rows() || v.cols() != v0.cols())
    throw std::invalid_argument("op_align: shape mismatch");
  Matrix cross = v0.mat().transpose() * v.mat();  // r x r
  Matrix overlap = cross * cross.transpose();     // V0^T V V^T V0
  auto [vals, vecs] = sym_eig(overlap);
  const double lmin = vals(vals.size() - 1);
  if (lmin <= pd_floor(overlap))
    throw OverlapViolation(
        lmin, "op_align: anchor-overlap condition V0^T V V^T V0 > 0 fails "
              "(lambda_min = " + std::to_string(lmin) + ")");

  Matrix q = op_solve(v, v0);
  StiefelMatrix aligned(v.mat() * q);
  const double sq = (v0.mat() - aligned.mat()).squaredNorm();
  return AlignmentResult{std::move(aligned), std::move(q), lmin, sq};
}

double ell(double c) {
  if (c < 1.0) throw std::invalid_argument("ell: c must be >= 1");
  const double b = 4.0 * (c - 1.0) / (c * c);
  const double tail = std::max(2.0 - c, 0.0);
  if (b < 1e-14) return tail;  // c -> 1 or c -> infinity
  double integral;
  if (1.0 - b < 1e-14) {
    integral = std::sqrt(b);  // c -> 2: the arctan term vanishes
  } else {
    integral = std::sqrt(b) -
               std::sqrt(1.0 - b) * std::atan(std::sqrt(b / (1.0 - b)));
  }
  return (c / M_PI) * integral + tail;
}

McResult mc_aligned_distance(Eigen::Index p, Eigen::Index r, int trials,
                             std::uint64_t seed, int threads) {
  if (r >= p) throw std::invalid_argument("mc_aligned_distance: need r < p");
  if (trials < 1) throw std::invalid_argument("mc_aligned_distance: trials");
  if (threads < 1) threads = 1;

  std::vector<double> values(static_cast<std::size_t>(trials));
  auto run_trial = [&](int i) {
    // Distance via the nuclear-norm identity ||V0 - V Q*||^2 =
    // 2r - 2 ||V0^T V||_*.
    Rng rng(derive_seed(seed, "mc-aligned-distance", static_cast<std::uint64_t>(i)));
    StiefelMatrix v0 = haar_stiefel(p, r, rng);
    StiefelMatrix v = haar_stiefel(p, r, rng);
    const double nn = nuclear_norm(v0.mat().transpose() * v.mat());
    const double dist_sq = 2.0 * static_cast<double>(r) - 2.0 * nn;
    values[static_cast<std::size_t>(i)] =
        dist_sq / (2.0 * static_cast<double>(r));
  };

  if (threads == 1) {
    for (int i = 0; i < trials; ++i) run_trial(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int i = t; i < trials; i += threads) run_trial(i);
      });
    for (auto& th : pool) th.join();
  }

  // Ascending trial-index reduction regardless of execution order.
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= trials;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = trials > 1 ? var / (trials - 1) : 0.0;
  return McResult{mean, std::sqrt(var / trials)};
}

}  // namespace gats
