#pragma once

#include "gats/linalg.hpp"

#include <cstdint>
#include <utility>

namespace gats {

struct AlignmentResult {
  StiefelMatrix aligned;    // V * Q*, the anchored canonical frame
  Matrix rotation;          // Q* (r x r orthogonal)
  double overlap_min_eig;   // lambda_min of V0^T V V^T V0
  double sq_distance;       // ||V0 - aligned||_F^2
};

/// Closed-form orthogonal Procrustes solve: Q* = L R^T from the SVD
/// A^T B = L Lambda R^T, minimizing ||A Q - B||_F over O(r).
Matrix op_solve(const StiefelMatrix& a, const StiefelMatrix& b);

/// Anchored alignment op(V, V0): the frame of span(V) closest to the
/// anchor. Throws OverlapViolation when lambda_min(V0^T V V^T V0) is at
/// or below the positive-definiteness floor, where uniqueness fails.
AlignmentResult op_align(const StiefelMatrix& v, const StiefelMatrix& v0);

/// Asymptotic fraction of squared Stiefel distance removed by OP
/// alignment between independent Haar subspaces at aspect ratio c:
///   ell(c) = (c/pi) (sqrt(b) - sqrt(1-b) atan sqrt(b/(1-b))) + max{2-c, 0},
///   b = 4(c-1)/c^2,
/// with the removable b -> 0 and b -> 1 limits handled explicitly.
double ell(double c);

struct McResult {
  double mean;        // mean of ||V0 - V Q*||_F^2 / (2r)
  double std_error;   // standard error of that mean
};

/// Monte Carlo estimate of the normalized aligned distance between
/// independent Haar pairs in Stie(p, r). Per-trial derived seeds and an
/// index-ordered reduction keep the result independent of thread count.
McResult mc_aligned_distance(Eigen::Index p, Eigen::Index r, int trials,
                             std::uint64_t seed, int threads = 1);

}  // namespace gats
