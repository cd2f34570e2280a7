#pragma once

#include "gats/linalg.hpp"
#include "gats/tensor.hpp"

#include <vector>

namespace gats {

struct TuckerFactors {
  DenseTensor core;                   // dims == ranks
  std::vector<StiefelMatrix> factors; // factor k is n_k x r_k
  std::vector<std::size_t> ranks;
};

/// Higher-order SVD: factor k = top-r_k left singular vectors of the
/// mode-k unfolding; core = X contracted by every factor transpose.
TuckerFactors hosvd(const DenseTensor& x, const std::vector<std::size_t>& ranks);

/// Higher-order orthogonal iteration, initialized from hosvd. Each
/// sweep refreshes factor k from the SVD of the partially contracted
/// unfolding; stops when the relative reconstruction-error decrease
/// drops below tol or max_iter sweeps have run.
TuckerFactors hooi(const DenseTensor& x, const std::vector<std::size_t>& ranks,
                   int max_iter = 25, double tol = 1e-8);

DenseTensor tucker_reconstruct(const TuckerFactors& f);

/// Relative reconstruction error, with a zero tensor treated as
/// perfectly reconstructed.
double rel_err_l2_or_zero(const DenseTensor& x, const TuckerFactors& f);

}  // namespace gats
