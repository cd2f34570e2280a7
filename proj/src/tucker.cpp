#include "gats/tucker.hpp"

#include <cmath>

namespace gats {

namespace {

void check_ranks(const DenseTensor& x, const std::vector<std::size_t>& ranks) {
  if (ranks.size() != x.ndim())
    throw std::invalid_argument("ranks arity != tensor order");
  for (std::size_t k = 0; k < ranks.size(); ++k)
    if (ranks[k] < 1 || ranks[k] > x.dims()[k])
      throw std::invalid_argument("rank out of range on mode " +
                                  std::to_string(k + 1));
}

DenseTensor contract_all(const DenseTensor& x,
                         const std::vector<StiefelMatrix>& factors) {
  DenseTensor core = x;
  for (std::size_t k = 0; k < factors.size(); ++k)
    core = mode_product(core, factors[k].mat().transpose(), k + 1);
  return core;
}

}  // namespace

TuckerFactors hosvd(const DenseTensor& x,
                    const std::vector<std::size_t>& ranks) {
  check_ranks(x, ranks);
  std::vector<StiefelMatrix> factors;
  factors.reserve(x.ndim());
  for (std::size_t k = 1; k <= x.ndim(); ++k) {
    SvdResult s = truncated_svd(unfold(x, k),
                                static_cast<Eigen::Index>(ranks[k - 1]));
    factors.emplace_back(s.u);
  }
  DenseTensor core = contract_all(x, factors);
  return TuckerFactors{std::move(core), std::move(factors), ranks};
}

TuckerFactors hooi(const DenseTensor& x, const std::vector<std::size_t>& ranks,
                   int max_iter, double tol) {
  check_ranks(x, ranks);
  if (max_iter < 1) throw std::invalid_argument("hooi: max_iter must be >= 1");
  if (tol <= 0.0) throw std::invalid_argument("hooi: tol must be > 0");

  TuckerFactors f = hosvd(x, ranks);
  double prev_err = rel_err_l2_or_zero(x, f);

  for (int sweep = 0; sweep < max_iter; ++sweep) {
    for (std::size_t k = 1; k <= x.ndim(); ++k) {
      // Contract every mode except k, then take the top left singular
      // vectors of the k-unfolding (size n_k x prod_{j != k} r_j).
      DenseTensor partial = x;
      for (std::size_t j = 1; j <= x.ndim(); ++j)
        if (j != k)
          partial = mode_product(partial, f.factors[j - 1].mat().transpose(), j);
      SvdResult s = truncated_svd(unfold(partial, k),
                                  static_cast<Eigen::Index>(ranks[k - 1]));
      f.factors[k - 1] = StiefelMatrix(s.u);
    }
    f.core = contract_all(x, f.factors);
    const double err = rel_err_l2_or_zero(x, f);
    if (prev_err - err < tol) {
      prev_err = err;
      break;
    }
    prev_err = err;
  }
  return f;
}

double rel_err_l2_or_zero(const DenseTensor& x, const TuckerFactors& f) {
  const double nx = frobenius_norm(x);
  if (nx == 0.0) return 0.0;
  return rel_err_l2(x, tucker_reconstruct(f));
}

DenseTensor tucker_reconstruct(const TuckerFactors& f) {
  DenseTensor out = f.core;
  for (std::size_t k = 0; k < f.factors.size(); ++k)
    out = mode_product(out, f.factors[k].mat(), k + 1);
  return out;
}

}  // namespace gats
