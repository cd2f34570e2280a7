#include "gats/anchor.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace gats {

std::pair<std::size_t, std::vector<double>> medoid_index(
    const std::vector<StiefelMatrix>& frames) {
  if (frames.empty()) throw std::invalid_argument("medoid_index: empty corpus");
  const Eigen::Index n = frames[0].rows();
  const Eigen::Index r = frames[0].cols();
  for (const auto& f : frames)
    if (f.rows() != n || f.cols() != r)
      throw std::invalid_argument("medoid_index: frame shape mismatch");

  const std::size_t count = frames.size();
  std::vector<double> scores(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    double s = 0.0;
    // Fixed j order keeps the accumulation bitwise deterministic. The
    // self term contributes the constant r and never moves the arg-max.
    for (std::size_t j = 0; j < count; ++j)
      s += (frames[i].mat().transpose() * frames[j].mat()).squaredNorm();
    scores[i] = s;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < count; ++i)
    if (scores[i] > scores[best] + 1e-9) best = i;
  return {best, std::move(scores)};
}

AnchorSet select_anchors(const std::vector<TuckerFactors>& corpus,
                         const std::set<std::size_t>& aligned_modes) {
  if (corpus.empty()) throw std::invalid_argument("select_anchors: empty corpus");
  AnchorSet out;
  for (std::size_t mode : aligned_modes) {
    if (mode < 1 || mode > corpus[0].factors.size())
      throw std::invalid_argument("select_anchors: mode out of range");
    std::vector<StiefelMatrix> frames;
    frames.reserve(corpus.size());
    for (const auto& f : corpus) {
      if (f.factors.size() != corpus[0].factors.size())
        throw std::invalid_argument("select_anchors: inconsistent corpus");
      frames.push_back(f.factors[mode - 1]);
    }
    auto [idx, scores] = medoid_index(frames);
    ModeAnchor ma{frames[idx], idx, std::move(scores),
                  io::content_hash(frames[idx].mat())};
    out.per_mode.emplace(mode, std::move(ma));
  }
  return out;
}

namespace io {

void write_anchor_archive(const std::string& dir, const AnchorSet& anchors) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  for (const auto& [mode, ma] : anchors.per_mode) {
    const std::string file = "anchor_mode" + std::to_string(mode) + ".dtz";
    write_matrix_dtz((fs::path(dir) / file).string(), ma.anchor.mat());
    manifest[std::to_string(mode)] = {
        {"file", file},
        {"n", ma.anchor.rows()},
        {"r", ma.anchor.cols()},
        {"medoid_index", ma.medoid_index},
        {"hash", ma.hash},
    };
  }
  std::ofstream f((fs::path(dir) / "manifest.json").string());
  f << manifest.dump(2) << "\n";
}

AnchorSet read_anchor_archive(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream f((fs::path(dir) / "manifest.json").string());
  if (!f) throw std::runtime_error("no anchor manifest in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(f);
  AnchorSet out;
  for (const auto& [key, entry] : manifest.items()) {
    const std::size_t mode = std::stoul(key);
    Matrix m = read_matrix_dtz(
        (fs::path(dir) / entry.at("file").get<std::string>()).string());
    ModeAnchor ma{StiefelMatrix(m), entry.at("medoid_index").get<std::size_t>(),
                  {}, entry.at("hash").get<std::string>()};
    if (content_hash(m) != ma.hash)
      throw std::runtime_error("anchor hash mismatch for mode " + key);
    out.per_mode.emplace(mode, std::move(ma));
  }
  return out;
}

}  // namespace io

}  // namespace gats
