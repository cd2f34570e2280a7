#include "gats/primitives.hpp"

#include "gats/procrustes.hpp"

#include <cmath>

namespace gats {

PatchSpec::PatchSpec(std::size_t rows_, std::size_t cols_,
                     std::size_t patch_rows_, std::size_t patch_cols_)
    : rows(rows_), cols(cols_), patch_rows(patch_rows_),
      patch_cols(patch_cols_) {
  if (patch_rows == 0 || patch_cols == 0 || rows % patch_rows != 0 ||
      cols % patch_cols != 0)
    throw std::invalid_argument("patch dims must divide field dims exactly");
}

Matrix patchify(const Matrix& x, const PatchSpec& spec) {
  if (static_cast<std::size_t>(x.rows()) != spec.rows ||
      static_cast<std::size_t>(x.cols()) != spec.cols)
    throw std::invalid_argument("patchify: field shape mismatch");
  Matrix out(spec.num_patches(), spec.patch_size());
  for (std::size_t gr = 0; gr < spec.grid_rows(); ++gr)
    for (std::size_t gc = 0; gc < spec.grid_cols(); ++gc) {
      const std::size_t p = gr * spec.grid_cols() + gc;
      for (std::size_t i = 0; i < spec.patch_rows; ++i)
        for (std::size_t j = 0; j < spec.patch_cols; ++j)
          out(p, i * spec.patch_cols + j) =
              x(gr * spec.patch_rows + i, gc * spec.patch_cols + j);
    }
  return out;
}

Matrix unpatchify(const Matrix& patches, const PatchSpec& spec) {
  if (static_cast<std::size_t>(patches.rows()) != spec.num_patches() ||
      static_cast<std::size_t>(patches.cols()) != spec.patch_size())
    throw std::invalid_argument("unpatchify: patch matrix shape mismatch");
  Matrix out(spec.rows, spec.cols);
  for (std::size_t gr = 0; gr < spec.grid_rows(); ++gr)
    for (std::size_t gc = 0; gc < spec.grid_cols(); ++gc) {
      const std::size_t p = gr * spec.grid_cols() + gc;
      for (std::size_t i = 0; i < spec.patch_rows; ++i)
        for (std::size_t j = 0; j < spec.patch_cols; ++j)
          out(gr * spec.patch_rows + i, gc * spec.patch_cols + j) =
              patches(p, i * spec.patch_cols + j);
    }
  return out;
}

MatrixGrassmannPrimitive mgp_encode(const Matrix& m, Eigen::Index r,
                                    const StiefelMatrix& v0,
                                    const std::string& anchor_hash) {
  if (r < 1 || r > std::min(m.rows(), m.cols()))
    throw std::invalid_argument("mgp_encode: rank out of range");
  if (v0.rows() != m.cols() || v0.cols() != r)
    throw std::invalid_argument("mgp_encode: anchor shape mismatch");

  SvdResult s = truncated_svd(m, r);
  AlignmentResult al = op_align(StiefelMatrix(s.v), v0);
  // A = M V_tilde equals U Sigma Q* exactly: the truncation residual's
  // right singular directions are orthogonal to span(V).
  Matrix a = m * al.aligned.mat();

  SvdResult sa = svd(a);
  const bool off_manifold =
      sa.s(sa.s.size() - 1) <= 1e-10 * sa.s(0);
  return MatrixGrassmannPrimitive{std::move(a), std::move(al.aligned),
                                  anchor_hash, r, off_manifold};
}

Matrix mgp_decode(const MatrixGrassmannPrimitive& p) {
  return p.a * p.v_tilde.mat().transpose();
}

TensorGrassmannPrimitive tgp_encode(
    const DenseTensor& x, const std::map<std::size_t, std::size_t>& ranks,
    const std::set<std::size_t>& aligned_modes, const AnchorSet& anchors,
    FactorSource source) {
  for (std::size_t mode : aligned_modes) {
    if (mode < 1 || mode > x.ndim())
      throw std::invalid_argument("tgp_encode: aligned mode out of range");
    if (ranks.find(mode) == ranks.end())
      throw std::invalid_argument("tgp_encode: missing rank for mode " +
                                  std::to_string(mode));
    if (anchors.per_mode.find(mode) == anchors.per_mode.end())
      throw std::invalid_argument("tgp_encode: missing anchor for mode " +
                                  std::to_string(mode));
  }

  // HOOI factors only make sense over the full mode set; for the
  // ablation path we run it with aligned ranks and full rank elsewhere.
  std::vector<TuckerFactors> hooi_holder;
  if (source == FactorSource::kHooi) {
    std::vector<std::size_t> full_ranks(x.dims());
    for (std::size_t mode : aligned_modes) full_ranks[mode - 1] = ranks.at(mode);
    hooi_holder.push_back(hooi(x, full_ranks));
  }

  TensorGrassmannPrimitive out;
  out.aligned_modes = aligned_modes;
  out.original_dims = x.dims();
  out.core = x;
  for (std::size_t mode : aligned_modes) {
    const std::size_t rk = ranks.at(mode);
    const auto& ma = anchors.per_mode.at(mode);
    if (static_cast<std::size_t>(ma.anchor.rows()) != x.dims()[mode - 1] ||
        static_cast<std::size_t>(ma.anchor.cols()) != rk)
      throw std::invalid_argument("tgp_encode: anchor shape mismatch on mode " +
                                  std::to_string(mode));
    if (rk > x.dims()[mode - 1])
      throw std::invalid_argument("tgp_encode: rank exceeds dim on mode " +
                                  std::to_string(mode));

    StiefelMatrix uk = [&] {
      if (source == FactorSource::kHooi)
        return hooi_holder[0].factors[mode - 1];
      auto [vals, vecs] = sym_eig(sk_gram(x, mode));
      return StiefelMatrix(vecs.leftCols(static_cast<Eigen::Index>(rk)));
    }();

    try {
      AlignmentResult al = op_align(uk, ma.anchor);
      out.core = mode_product(out.core, al.aligned.mat().transpose(), mode);
      out.aligned_factors.emplace(mode, al.aligned.mat());
      out.anchor_hashes.emplace(mode, ma.hash);
    } catch (const OverlapViolation& e) {
      throw OverlapViolation(e.lambda_min(),
                             "tgp_encode: overlap violated on mode " +
                                 std::to_string(mode) + ": " + e.what());
    }
  }
  return out;
}

DenseTensor tgp_decode(const TensorGrassmannPrimitive& p) {
  DenseTensor out = p.core;
  for (const auto& [mode, factor] : p.aligned_factors)
    out = mode_product(out, factor, mode);
  return out;
}

double compression_ratio(const std::vector<std::size_t>& dims,
                         const std::map<std::size_t, std::size_t>& ranks,
                         const std::set<std::size_t>& aligned_modes) {
  double original = 1.0;
  double core = 1.0;
  double factors = 0.0;
  for (std::size_t k = 1; k <= dims.size(); ++k) {
    const double nk = static_cast<double>(dims[k - 1]);
    original *= nk;
    if (aligned_modes.count(k)) {
      auto it = ranks.find(k);
      if (it == ranks.end() || it->second < 1 || it->second > dims[k - 1])
        throw std::invalid_argument("compression_ratio: invalid rank on mode " +
                                    std::to_string(k));
      const double rk = static_cast<double>(it->second);
      core *= rk;
      factors += nk * rk;
    } else {
      core *= nk;
    }
  }
  return original / (core + factors);
}

}  // namespace gats
