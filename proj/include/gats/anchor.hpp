#pragma once

#include "gats/linalg.hpp"
#include "gats/tucker.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace gats {

struct ModeAnchor {
  StiefelMatrix anchor;
  std::size_t medoid_index = 0;
  std::vector<double> overlap_scores;  // per candidate, kept for audit
  std::string hash;                    // content hash of the anchor frame
};

struct AnchorSet {
  std::map<std::size_t, ModeAnchor> per_mode;  // keyed by 1-based mode
};

/// Medoid of a corpus of same-shape frames: arg-max of
/// sum_j ||V_i^T V_j||_F^2, ties broken toward the smallest index
/// (scores compared with absolute tolerance 1e-9).
std::pair<std::size_t, std::vector<double>> medoid_index(
    const std::vector<StiefelMatrix>& frames);

/// One medoid anchor per aligned mode, each computed independently from
/// the corresponding factors of the corpus.
AnchorSet select_anchors(const std::vector<TuckerFactors>& corpus,
                         const std::set<std::size_t>& aligned_modes);

namespace io {

/// Anchor archive: <dir>/manifest.json mapping mode -> {file, n, r,
/// medoid_index, hash} plus one .dtz per anchor frame.
void write_anchor_archive(const std::string& dir, const AnchorSet& anchors);
AnchorSet read_anchor_archive(const std::string& dir);

}  // namespace io

}  // namespace gats
