#pragma once

#include "gats/anchor.hpp"
#include "gats/linalg.hpp"
#include "gats/tensor.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gats {

/// Non-overlapping patch tiling of a 2-d field. Patch dims must divide
/// the original dims exactly.
struct PatchSpec {
  std::size_t rows, cols;              // original field shape
  std::size_t patch_rows, patch_cols;  // patch shape

  PatchSpec(std::size_t rows_, std::size_t cols_, std::size_t patch_rows_,
            std::size_t patch_cols_);

  std::size_t grid_rows() const { return rows / patch_rows; }
  std::size_t grid_cols() const { return cols / patch_cols; }
  std::size_t num_patches() const { return grid_rows() * grid_cols(); }
  std::size_t patch_size() const { return patch_rows * patch_cols; }
};

/// Row p of the result is the row-major flattening of patch p, with
/// patches enumerated row-major over the grid. Exact inverse of
/// unpatchify.
Matrix patchify(const Matrix& x, const PatchSpec& spec);
Matrix unpatchify(const Matrix& patches, const PatchSpec& spec);

/// MGP: coefficient block A = M * V_tilde paired with the anchored
/// right-subspace frame V_tilde. Exact decode A V_tilde^T for rank-r
/// inputs.
struct MatrixGrassmannPrimitive {
  Matrix a;                // n1 x r, full column rank on-manifold
  StiefelMatrix v_tilde;   // n2 x r, anchor-aligned
  std::string anchor_hash;
  Eigen::Index rank;
  bool off_manifold = false;  // input rank < r; decode still valid
};

MatrixGrassmannPrimitive mgp_encode(const Matrix& m, Eigen::Index r,
                                    const StiefelMatrix& v0,
                                    const std::string& anchor_hash = "");
Matrix mgp_decode(const MatrixGrassmannPrimitive& p);

enum class FactorSource {
  kGramEig,  // top eigenvectors of the mode-k Gram matrix (default)
  kHooi,     // factors from a full HOOI run, for ablation
};

/// TGP: core contracted by the anchor-aligned factor transposes on each
/// aligned mode; unaligned modes untouched.
struct TensorGrassmannPrimitive {
  DenseTensor core;
  std::map<std::size_t, Matrix> aligned_factors;  // mode -> n_k x r_k
  std::set<std::size_t> aligned_modes;
  std::map<std::size_t, std::string> anchor_hashes;
  std::vector<std::size_t> original_dims;
};

TensorGrassmannPrimitive tgp_encode(
    const DenseTensor& x, const std::map<std::size_t, std::size_t>& ranks,
    const std::set<std::size_t>& aligned_modes, const AnchorSet& anchors,
    FactorSource source = FactorSource::kGramEig);

DenseTensor tgp_decode(const TensorGrassmannPrimitive& p);

/// Original element count over primitive parameter count: the core
/// keeps n_k on unaligned modes and r_k on aligned ones, plus one
/// n_k x r_k factor per aligned mode.
double compression_ratio(const std::vector<std::size_t>& dims,
                         const std::map<std::size_t, std::size_t>& ranks,
                         const std::set<std::size_t>& aligned_modes);

}  // namespace gats
