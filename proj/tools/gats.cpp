// gats — anchored low-rank tensor primitives CLI.
//
// Subcommands: gen-data, anchor, encode, decode, stats, mds,
// validate-prop2, toy-diffusion, train, sample, selfcheck.
// Exit codes: 0 success, 1 validation/runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include "gats/anchor.hpp"
#include "gats/datagen.hpp"
#include "gats/diffusion.hpp"
#include "gats/metrics.hpp"
#include "gats/primitives.hpp"
#include "gats/procrustes.hpp"
#include "gats/tucker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gats;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kDtzFormat = 1;
constexpr int kCheckpointFormat = 1;
constexpr int kManifestFormat = 1;

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// One run_manifest.json per artifact-writing command. The timestamp is
// informational; artifacts must be reproducible from the config echo.
void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const json& config, std::uint64_t seed,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs,
                        const json& extra = json::object()) {
  json m;
  m["manifest_version"] = kManifestFormat;
  m["tool_version"] = kVersion;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["timestamp"] = iso_timestamp();
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream f(fs::path(out_dir) / "run_manifest.json");
  if (!f) throw std::runtime_error("cannot write run manifest in " + out_dir);
  f << m.dump(2) << "\n";
}

std::vector<std::string> list_dtz(const std::string& dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".dtz") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .dtz files in " + dir);
  return files;
}

// Deterministic parallel-for: static index chunking, results land in
// caller-owned slots, so output is independent of the thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body) {
  const int nthreads =
      std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < nthreads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += nthreads) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(tok)));
  }
  if (out.empty()) throw CLI::ValidationError("empty list: " + csv);
  return out;
}

std::string sample_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return buf;
}

// ---- gen-data ----

struct RdCliOpts {
  RdConfig cfg;
  int n = 8;
  int ic_modes = 5;
  std::string out;
};

int run_gen_rd1d(const RdCliOpts& o, std::uint64_t seed, int threads) {
  fs::create_directories(o.out);
  std::vector<std::string> outputs(o.n);
  std::vector<std::string> hashes(o.n);
  std::vector<Matrix> trajs(o.n);
  parallel_for(o.n, threads, [&](std::size_t i) {
    std::vector<double> u0 = random_initial_condition(
        o.cfg.nx, o.ic_modes, derive_seed(seed, "rd1d-ic", i));
    trajs[i] = reaction_diffusion_1d(o.cfg, u0);
  });
  for (int i = 0; i < o.n; ++i) {
    const std::string path =
        (fs::path(o.out) / ("traj_" + sample_name(i) + ".dtz")).string();
    io::write_matrix_dtz(path, trajs[i]);
    outputs[i] = path;
    hashes[i] = io::content_hash(trajs[i]);
  }
  json cfg{{"generator", "rd1d"}, {"nu", o.cfg.nu},   {"rho", o.cfg.rho},
           {"nx", o.cfg.nx},      {"nt", o.cfg.nt},   {"t_end", o.cfg.t_end},
           {"n", o.n},            {"ic_modes", o.ic_modes}};
  json extra;
  extra["conditions"] = json::array();
  for (int i = 0; i < o.n; ++i)
    extra["conditions"].push_back({{"sample", sample_name(i)},
                                   {"nu", o.cfg.nu},
                                   {"rho", o.cfg.rho},
                                   {"hash", hashes[i]}});
  write_run_manifest(o.out, "gen-data rd1d", cfg, seed, {}, outputs, extra);
  std::cout << "wrote " << o.n << " trajectories to " << o.out << "\n";
  return 0;
}

struct SynthCliOpts {
  std::string dims_csv, ranks_csv;
  double decay = 0.5, noise = 0.0;
  int n = 8;
  std::string out;
};

int run_gen_synthetic(const SynthCliOpts& o, std::uint64_t seed, int threads) {
  (void)threads;  // generation shares one stream; cheap enough serial
  auto dims = parse_size_list(o.dims_csv);
  auto ranks = parse_size_list(o.ranks_csv);
  std::vector<DenseTensor> corpus =
      synthetic_lowrank(dims, ranks, o.decay, o.noise, o.n, seed);
  fs::create_directories(o.out);
  std::vector<std::string> outputs;
  for (int i = 0; i < o.n; ++i) {
    const std::string path =
        (fs::path(o.out) / ("sample_" + sample_name(i) + ".dtz")).string();
    io::write_dtz(path, corpus[i]);
    outputs.push_back(path);
  }
  json cfg{{"generator", "synthetic"}, {"dims", dims},   {"ranks", ranks},
           {"decay", o.decay},         {"noise", o.noise}, {"n", o.n}};
  write_run_manifest(o.out, "gen-data synthetic", cfg, seed, {}, outputs);
  std::cout << "wrote " << o.n << " samples to " << o.out << "\n";
  return 0;
}

// ---- anchor ----

struct AnchorCliOpts {
  std::string in, out, modes_csv, ranks_csv;
};

int run_anchor(const AnchorCliOpts& o, std::uint64_t seed, int threads) {
  (void)seed;
  auto modes = parse_size_list(o.modes_csv);
  auto rank_list = parse_size_list(o.ranks_csv);
  if (modes.size() != rank_list.size())
    throw CLI::ValidationError("--modes and --ranks must have equal length");
  auto files = list_dtz(o.in);

  std::vector<TuckerFactors> corpus(files.size());
  parallel_for(files.size(), threads, [&](std::size_t i) {
    DenseTensor x = io::read_dtz(files[i]);
    // Unaligned modes keep their feasible full rank: min(n_k, prod of
    // the other dims).
    std::vector<std::size_t> full(x.ndim());
    for (std::size_t k = 0; k < x.ndim(); ++k) {
      std::size_t other = 1;
      for (std::size_t j = 0; j < x.ndim(); ++j)
        if (j != k) other *= x.dims()[j];
      full[k] = std::min(x.dims()[k], other);
    }
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (modes[m] < 1 || modes[m] > x.ndim())
        throw std::runtime_error("anchor: mode out of range for " + files[i]);
      full[modes[m] - 1] = rank_list[m];
    }
    corpus[i] = hosvd(x, full);
  });

  std::set<std::size_t> mode_set(modes.begin(), modes.end());
  AnchorSet anchors = select_anchors(corpus, mode_set);
  fs::create_directories(o.out);
  io::write_anchor_archive(o.out, anchors);

  json cfg{{"modes", modes}, {"ranks", rank_list}};
  json extra;
  for (const auto& [mode, ma] : anchors.per_mode)
    extra["anchor_hashes"][std::to_string(mode)] = ma.hash;
  write_run_manifest(o.out, "anchor", cfg, 0, files, {o.out}, extra);
  std::cout << "anchors selected over " << files.size() << " samples\n";
  return 0;
}

// ---- encode / decode ----

struct EncodeCliOpts {
  std::string type = "mgp";
  std::size_t rank = 0;
  std::string modes_csv, ranks_csv;
  std::string anchor_dir, in, out;
  std::string source = "gram";
};

int run_encode(const EncodeCliOpts& o, std::uint64_t seed, int threads) {
  (void)seed;
  AnchorSet anchors = io::read_anchor_archive(o.anchor_dir);
  auto files = list_dtz(o.in);
  fs::create_directories(o.out);

  json manifest;
  manifest["type"] = o.type;
  manifest["samples"] = json::array();
  std::vector<std::string> outputs;

  if (o.type == "mgp") {
    if (o.rank < 1) throw CLI::ValidationError("mgp encode needs --rank");
    if (!anchors.per_mode.count(2))
      throw std::runtime_error("anchor archive lacks a mode-2 frame");
    const ModeAnchor& ma = anchors.per_mode.at(2);
    manifest["ranks"] = {{"2", o.rank}};
    manifest["aligned_modes"] = {2};
    manifest["anchor_hashes"] = {{"2", ma.hash}};

    std::vector<MatrixGrassmannPrimitive> prims;
    prims.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i)
      prims.push_back(MatrixGrassmannPrimitive{Matrix(), ma.anchor, "", 0,
                                               false});
    parallel_for(files.size(), threads, [&](std::size_t i) {
      Matrix m = io::read_matrix_dtz(files[i]);
      prims[i] = mgp_encode(m, static_cast<Eigen::Index>(o.rank), ma.anchor,
                            ma.hash);
    });
    for (std::size_t i = 0; i < files.size(); ++i) {
      const std::string name = sample_name(i);
      const std::string a_file = "a_" + name + ".dtz";
      const std::string v_file = "v_" + name + ".dtz";
      io::write_matrix_dtz((fs::path(o.out) / a_file).string(), prims[i].a);
      io::write_matrix_dtz((fs::path(o.out) / v_file).string(),
                           prims[i].v_tilde.mat());
      manifest["samples"].push_back(
          {{"name", name},
           {"source", files[i]},
           {"dims", {prims[i].a.rows(), prims[i].v_tilde.rows()}},
           {"a", a_file},
           {"v", v_file},
           {"off_manifold", prims[i].off_manifold}});
      outputs.push_back(a_file);
      outputs.push_back(v_file);
    }
  } else if (o.type == "tgp") {
    auto modes = parse_size_list(o.modes_csv);
    auto rank_list = parse_size_list(o.ranks_csv);
    if (modes.size() != rank_list.size())
      throw CLI::ValidationError("--modes and --ranks must match in length");
    std::map<std::size_t, std::size_t> ranks;
    for (std::size_t m = 0; m < modes.size(); ++m)
      ranks[modes[m]] = rank_list[m];
    std::set<std::size_t> mode_set(modes.begin(), modes.end());
    const FactorSource source =
        o.source == "hooi" ? FactorSource::kHooi : FactorSource::kGramEig;

    manifest["aligned_modes"] = modes;
    for (const auto& [mode, r] : ranks)
      manifest["ranks"][std::to_string(mode)] = r;
    for (std::size_t mode : modes)
      manifest["anchor_hashes"][std::to_string(mode)] =
          anchors.per_mode.at(mode).hash;

    std::vector<TensorGrassmannPrimitive> prims(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
      prims[i] = tgp_encode(io::read_dtz(files[i]), ranks, mode_set, anchors,
                            source);
    });
    for (std::size_t i = 0; i < files.size(); ++i) {
      const std::string name = sample_name(i);
      const std::string core_file = "core_" + name + ".dtz";
      io::write_dtz((fs::path(o.out) / core_file).string(), prims[i].core);
      json entry{{"name", name},
                 {"source", files[i]},
                 {"dims", prims[i].original_dims},
                 {"core", core_file}};
      for (const auto& [mode, factor] : prims[i].aligned_factors) {
        const std::string f_file =
            "f" + std::to_string(mode) + "_" + name + ".dtz";
        io::write_matrix_dtz((fs::path(o.out) / f_file).string(), factor);
        entry["factors"][std::to_string(mode)] = f_file;
        outputs.push_back(f_file);
      }
      manifest["samples"].push_back(entry);
      outputs.push_back(core_file);
    }
  } else {
    throw CLI::ValidationError("--type must be mgp or tgp");
  }

  std::ofstream mf(fs::path(o.out) / "manifest.json");
  mf << manifest.dump(2) << "\n";
  json cfg{{"type", o.type},   {"rank", o.rank},     {"modes", o.modes_csv},
           {"ranks", o.ranks_csv}, {"source", o.source},
           {"anchor", o.anchor_dir}};
  write_run_manifest(o.out, "encode", cfg, 0, files, outputs);
  std::cout << "encoded " << files.size() << " samples (" << o.type << ")\n";
  return 0;
}

struct DecodeCliOpts {
  std::string in, out;
};

int run_decode(const DecodeCliOpts& o, int threads) {
  std::ifstream mf(fs::path(o.in) / "manifest.json");
  if (!mf) throw std::runtime_error("no manifest.json in " + o.in);
  json manifest = json::parse(mf);
  const std::string type = manifest.at("type");
  fs::create_directories(o.out);

  const auto& samples = manifest.at("samples");
  std::vector<DenseTensor> decoded(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const json& s = samples[i];
    if (type == "mgp") {
      Matrix a =
          io::read_matrix_dtz((fs::path(o.in) / s.at("a").get<std::string>())
                                  .string());
      Matrix v =
          io::read_matrix_dtz((fs::path(o.in) / s.at("v").get<std::string>())
                                  .string());
      Matrix m = a * v.transpose();
      std::vector<double> data(m.size());
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
          data[static_cast<std::size_t>(r) * m.cols() + c] = m(r, c);
      decoded[i] = DenseTensor({static_cast<std::size_t>(m.rows()),
                                static_cast<std::size_t>(m.cols())},
                               std::move(data));
    } else {
      TensorGrassmannPrimitive p;
      p.core = io::read_dtz(
          (fs::path(o.in) / s.at("core").get<std::string>()).string());
      for (const auto& [mode_str, file] : s.at("factors").items()) {
        const std::size_t mode = std::stoul(mode_str);
        p.aligned_factors.emplace(
            mode, io::read_matrix_dtz(
                      (fs::path(o.in) / file.get<std::string>()).string()));
        p.aligned_modes.insert(mode);
      }
      decoded[i] = tgp_decode(p);
    }
  });

  std::vector<std::string> outputs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string path =
        (fs::path(o.out) /
         ("decoded_" + samples[i].at("name").get<std::string>() + ".dtz"))
            .string();
    io::write_dtz(path, decoded[i]);
    outputs.push_back(path);
  }
  write_run_manifest(o.out, "decode", json{{"in", o.in}}, 0, {o.in}, outputs);
  std::cout << "decoded " << samples.size() << " samples\n";
  return 0;
}

// ---- stats / mds ----

struct StatsCliOpts {
  std::string ref, in, out;
  double range = 0.0;
  int time_mode = 0;
};

int run_stats(const StatsCliOpts& o) {
  auto ref_files = list_dtz(o.ref);
  auto in_files = list_dtz(o.in);
  if (ref_files.size() != in_files.size())
    throw std::runtime_error("stats: corpus sizes differ");
  json out = json::array();
  for (std::size_t i = 0; i < ref_files.size(); ++i) {
    DenseTensor x = io::read_dtz(ref_files[i]);
    DenseTensor xhat = io::read_dtz(in_files[i]);
    ErrorReport r = error_report(
        x, xhat,
        o.time_mode > 0 ? std::optional<std::size_t>(o.time_mode)
                        : std::nullopt,
        o.range > 0.0 ? std::optional<double>(o.range) : std::nullopt);
    json e{{"ref", ref_files[i]},
           {"sample", in_files[i]},
           {"rel_err_l1", r.rel_err_l1},
           {"rel_err_l2", r.rel_err_l2},
           {"rmse", r.rmse}};
    if (o.range > 0.0) e["psnr"] = r.psnr;
    if (r.avg_rmse) e["avg_rmse"] = *r.avg_rmse;
    out.push_back(e);
  }
  const std::string dump = out.dump(2);
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << dump << "\n";
  }
  std::cout << dump << "\n";
  return 0;
}

struct MdsCliOpts {
  std::string in, out;
  int dim = 2;
};

int run_mds(const MdsCliOpts& o) {
  auto files = list_dtz(o.in);
  std::vector<DenseTensor> xs;
  xs.reserve(files.size());
  for (const auto& f : files) xs.push_back(io::read_dtz(f));
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (!xs[i].same_shape(xs[j]))
        throw std::runtime_error("mds: shape mismatch in corpus");
      double sq = 0.0;
      for (std::size_t k = 0; k < xs[i].size(); ++k) {
        const double diff = xs[i][k] - xs[j][k];
        sq += diff * diff;
      }
      d(i, j) = d(j, i) = std::sqrt(sq);
    }
  Matrix coords = classical_mds(d, o.dim);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    os = &file;
  }
  *os << "name";
  for (int k = 0; k < o.dim; ++k) *os << ",c" << k;
  *os << "\n";
  os->precision(17);
  for (Eigen::Index i = 0; i < n; ++i) {
    *os << fs::path(files[i]).stem().string();
    for (int k = 0; k < o.dim; ++k) *os << "," << coords(i, k);
    *os << "\n";
  }
  return 0;
}

// ---- validate-prop2 ----

int run_validate_prop2(int p, int r, int trials, std::uint64_t seed,
                       int threads) {
  const double c = static_cast<double>(p) / r;
  McResult mc = mc_aligned_distance(p, r, trials, seed, threads);
  const double analytic = 1.0 - ell(c);
  const bool pass = std::abs(mc.mean - analytic) <= 0.02;
  json out{{"p", p},
           {"r", r},
           {"trials", trials},
           {"mean", mc.mean},
           {"std_error", mc.std_error},
           {"analytic", analytic},
           {"band", 0.02},
           {"pass", pass}};
  std::cout << out.dump(2) << "\n";
  std::cout << (pass ? "PASS" : "FAIL") << ": mean " << mc.mean
            << " vs analytic " << analytic << " (band 0.02)\n";
  return pass ? 0 : 1;
}

// ---- toy diffusion / train / sample ----

struct ToyCliOpts {
  std::string law = "anchored";
  double a = 0.5, b = 4.0;
  int n = 20000;
  int steps = 5000;
  double lr = 0.1;
  int ddim = 250;
  int n_generate = 2000;
  std::string out;
};

int run_toy(const ToyCliOpts& o, std::uint64_t seed) {
  ToyConfig cfg;
  cfg.n_samples = o.n;
  cfg.a = o.a;
  cfg.b = o.b;
  if (o.law == "uniform")
    cfg.law = ToyLaw::kUniform;
  else if (o.law != "anchored")
    throw CLI::ValidationError("--law must be anchored or uniform");

  ToyRunResult res =
      run_toy_experiment(cfg, o.steps, o.lr, o.ddim, o.n_generate, seed);
  fs::create_directories(o.out);
  const std::string csv_path = (fs::path(o.out) / "samples.csv").string();
  std::ofstream csv(csv_path);
  csv << "x\n";
  csv.precision(17);
  for (double x : res.generated_x) csv << x << "\n";
  csv.close();

  json metrics{{"w1", res.w1},
               {"frac_mode_low", res.frac_mode_low},
               {"frac_mode_high", res.frac_mode_high},
               {"loss_trace", res.loss_trace}};
  const std::string metrics_path = (fs::path(o.out) / "metrics.json").string();
  std::ofstream mj(metrics_path);
  mj << metrics.dump(2) << "\n";
  mj.close();

  json cfg_json{{"law", o.law},   {"a", o.a},         {"b", o.b},
                {"n", o.n},       {"steps", o.steps}, {"lr", o.lr},
                {"ddim", o.ddim}, {"n_generate", o.n_generate}};
  write_run_manifest(o.out, "toy-diffusion", cfg_json, seed, {},
                     {csv_path, metrics_path});
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

std::vector<BatchSample> archive_dataset(const std::string& dir,
                                         json& manifest_out) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("no manifest.json in " + dir);
  manifest_out = json::parse(mf);
  const std::string type = manifest_out.at("type");
  std::vector<BatchSample> data;
  for (const auto& s : manifest_out.at("samples")) {
    std::vector<double> flat;
    if (type == "mgp") {
      Matrix a = io::read_matrix_dtz(
          (fs::path(dir) / s.at("a").get<std::string>()).string());
      flat.reserve(a.size());
      for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) flat.push_back(a(r, c));
    } else {
      DenseTensor core = io::read_dtz(
          (fs::path(dir) / s.at("core").get<std::string>()).string());
      flat.assign(core.data().begin(), core.data().end());
    }
    Vector x0 = Eigen::Map<Vector>(flat.data(),
                                   static_cast<Eigen::Index>(flat.size()));
    data.push_back(BatchSample{x0, Vector()});
  }
  return data;
}

struct TrainCliOpts {
  std::string in, out;
  int steps = 5000;
  double lr = 1e-3;
  int batch = 256;
  int hidden = 128;
};

int run_train(const TrainCliOpts& o, std::uint64_t seed) {
  json manifest;
  std::vector<BatchSample> data = archive_dataset(o.in, manifest);
  Standardizer st = Standardizer::fit(data);
  std::vector<BatchSample> standardized;
  standardized.reserve(data.size());
  for (const auto& s : data)
    standardized.push_back(BatchSample{st.apply(s.x0), Vector()});

  DiffusionSchedule schedule = DiffusionSchedule::linear();
  ScoreNet net(static_cast<int>(data[0].x0.size()), 0, o.hidden,
               derive_seed(seed, "train-net"));
  TrainResult tr = train(net, standardized, schedule, o.steps, o.lr, o.batch,
                         derive_seed(seed, "train-gd"));
  fs::create_directories(fs::path(o.out).parent_path().empty()
                             ? "."
                             : fs::path(o.out).parent_path().string());
  io::write_checkpoint(o.out, net, schedule, st);

  json cfg{{"in", o.in},       {"steps", o.steps}, {"lr", o.lr},
           {"batch", o.batch}, {"hidden", o.hidden}};
  json extra{{"loss_trace", tr.loss_trace}};
  const std::string out_dir = fs::path(o.out).parent_path().string().empty()
                                  ? "."
                                  : fs::path(o.out).parent_path().string();
  write_run_manifest(out_dir, "train", cfg, seed, {o.in}, {o.out}, extra);
  std::cout << "final recorded loss " << tr.loss_trace.back() << ", wrote "
            << o.out << "\n";
  return 0;
}

struct SampleCliOpts {
  std::string ckpt, out;
  int n = 16;
  int ddim = 250;
  double x0_clip = 3.0;
};

int run_sample(const SampleCliOpts& o, std::uint64_t seed) {
  io::Checkpoint ck = io::read_checkpoint(o.ckpt);
  std::vector<Vector> samples =
      ddim_sample(ck.net, ck.schedule, o.ddim, o.n, seed, Vector(), o.x0_clip);
  fs::create_directories(o.out);
  std::vector<std::string> outputs;
  for (int i = 0; i < o.n; ++i) {
    Vector v = ck.std_xform.invert(samples[i]);
    std::vector<double> data(v.data(), v.data() + v.size());
    DenseTensor t({static_cast<std::size_t>(v.size())}, std::move(data));
    const std::string path =
        (fs::path(o.out) / ("sample_" + sample_name(i) + ".dtz")).string();
    io::write_dtz(path, t);
    outputs.push_back(path);
  }
  json cfg{{"ckpt", o.ckpt}, {"n", o.n}, {"ddim", o.ddim},
           {"x0_clip", o.x0_clip}};
  write_run_manifest(o.out, "sample", cfg, seed, {o.ckpt}, outputs);
  std::cout << "wrote " << o.n << " samples to " << o.out << "\n";
  return 0;
}

// ---- selfcheck ----

int run_selfcheck() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "ok" : "FAIL") << ": " << name << "\n";
    if (!ok) ++failures;
  };

  {  // unfold against a loop oracle
    DenseTensor x({2, 3, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    Matrix u = unfold(x, 2);
    bool ok = u.rows() == 3 && u.cols() == 4;
    for (std::size_t i = 0; ok && i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 2; ++k)
          if (u(j, i * 2 + k) != x[i * 6 + j * 2 + k]) ok = false;
    check("unfold matches index oracle", ok);
  }
  {  // procrustes exact recovery + nuclear identity
    Rng rng(1);
    StiefelMatrix v0 = haar_stiefel(10, 3, rng);
    Matrix q = haar_stiefel(3, 3, rng).mat();
    AlignmentResult al = op_align(StiefelMatrix(v0.mat() * q), v0);
    check("procrustes recovers rotated frame",
          (al.aligned.mat() - v0.mat()).norm() < 1e-9);
    StiefelMatrix v = haar_stiefel(10, 3, rng);
    AlignmentResult al2 = op_align(v, v0);
    const double nn = nuclear_norm(v0.mat().transpose() * v.mat());
    check("nuclear-norm distance identity",
          std::abs(al2.sq_distance - (6.0 - 2.0 * nn)) < 1e-8);
  }
  {  // ell limits
    check("ell(1) == 1", std::abs(ell(1.0) - 1.0) < 1e-12);
    check("ell(2) == 2/pi", std::abs(ell(2.0) - 2.0 / M_PI) < 1e-12);
  }
  {  // mgp round trip
    Rng rng(2);
    Matrix m = gaussian_matrix(8, 3, rng) * gaussian_matrix(3, 6, rng);
    StiefelMatrix v0 = haar_stiefel(6, 3, rng);
    MatrixGrassmannPrimitive p = mgp_encode(m, 3, v0);
    check("mgp exact-rank round trip",
          (mgp_decode(p) - m).norm() < 1e-10 * m.norm());
  }
  {  // medoid hand case
    Matrix v1 = Matrix::Zero(4, 1), v2 = Matrix::Zero(4, 1),
           v3 = Matrix::Zero(4, 1);
    v1(0, 0) = 1;
    v2(1, 0) = 1;
    v3(0, 0) = v3(1, 0) = std::sqrt(0.5);
    auto [idx, scores] = medoid_index(
        {StiefelMatrix(v1), StiefelMatrix(v2), StiefelMatrix(v3)});
    check("medoid hand example", idx == 2);
  }
  {  // rd fixed points
    RdConfig cfg;
    cfg.nx = 32;
    cfg.nt = 5;
    cfg.t_end = 0.2;
    Matrix ones = reaction_diffusion_1d(cfg, std::vector<double>(32, 1.0));
    check("rd logistic fixed point",
          (ones - Matrix::Ones(32, 5)).norm() == 0.0);
  }
  {  // small MC law probe
    McResult mc = mc_aligned_distance(40, 20, 100, 5);
    check("aligned-distance MC near analytic law",
          std::abs(mc.mean - (1.0 - ell(2.0))) < 0.05);
  }
  {  // compression ratios
    check("compression 16.00",
          std::abs(compression_ratio({1024, 1024}, {{2, 32}}, {2}) - 16.0) <
              1e-9);
    check("compression 3.94",
          std::abs(compression_ratio({20, 64, 64}, {{1, 15}, {3, 20}},
                                     {1, 3}) -
                   3.94) < 0.01);
  }
  std::cout << (failures == 0 ? "selfcheck passed\n" : "selfcheck FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchored low-rank tensor primitives"};
  app.set_version_flag(
      "--version",
      std::string(kVersion) + " (dtz format " + std::to_string(kDtzFormat) +
          ", checkpoint format " + std::to_string(kCheckpointFormat) +
          ", manifest format " + std::to_string(kManifestFormat) + ")");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "base seed; all task seeds derive from it");
  app.add_option("--threads", threads, "worker threads (outputs independent)")
      ->check(CLI::PositiveNumber);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate input corpora");
  gen->require_subcommand(1);
  RdCliOpts rd;
  auto* rd1d = gen->add_subcommand("rd1d", "1-d reaction-diffusion corpus");
  rd1d->add_option("--nu", rd.cfg.nu, "diffusivity");
  rd1d->add_option("--rho", rd.cfg.rho, "reaction rate");
  rd1d->add_option("--nx", rd.cfg.nx, "spatial cells");
  rd1d->add_option("--nt", rd.cfg.nt, "output frames");
  rd1d->add_option("--t-end", rd.cfg.t_end, "final time");
  rd1d->add_option("--n", rd.n, "number of trajectories");
  rd1d->add_option("--ic-modes", rd.ic_modes, "sinusoids per initial state");
  rd1d->add_option("--out", rd.out, "output directory")->required();

  SynthCliOpts sy;
  auto* synth =
      gen->add_subcommand("synthetic", "exact low-multilinear-rank corpus");
  synth->add_option("--dims", sy.dims_csv, "comma-separated dims")->required();
  synth->add_option("--ranks", sy.ranks_csv, "comma-separated ranks")
      ->required();
  synth->add_option("--decay", sy.decay, "spectral decay");
  synth->add_option("--noise", sy.noise, "additive noise level");
  synth->add_option("--n", sy.n, "number of samples");
  synth->add_option("--out", sy.out, "output directory")->required();

  // anchor
  AnchorCliOpts an;
  auto* anchor_cmd =
      app.add_subcommand("anchor", "select medoid anchors per mode");
  anchor_cmd->add_option("--in", an.in, "corpus directory")->required();
  anchor_cmd->add_option("--out", an.out, "anchor archive directory")
      ->required();
  anchor_cmd->add_option("--modes", an.modes_csv, "aligned modes (1-based)")
      ->required();
  anchor_cmd->add_option("--ranks", an.ranks_csv, "rank per aligned mode")
      ->required();

  // encode / decode
  EncodeCliOpts en;
  auto* encode_cmd = app.add_subcommand("encode", "encode corpus to primitives");
  encode_cmd->add_option("--type", en.type, "mgp or tgp");
  encode_cmd->add_option("--rank", en.rank, "rank (mgp)");
  encode_cmd->add_option("--modes", en.modes_csv, "aligned modes (tgp)");
  encode_cmd->add_option("--ranks", en.ranks_csv, "ranks per mode (tgp)");
  encode_cmd->add_option("--source", en.source, "gram or hooi factor source");
  encode_cmd->add_option("--anchor", en.anchor_dir, "anchor archive")
      ->required();
  encode_cmd->add_option("--in", en.in, "corpus directory")->required();
  encode_cmd->add_option("--out", en.out, "primitive archive")->required();

  DecodeCliOpts de;
  auto* decode_cmd = app.add_subcommand("decode", "decode primitive archive");
  decode_cmd->add_option("--in", de.in, "primitive archive")->required();
  decode_cmd->add_option("--out", de.out, "output directory")->required();

  // stats / mds
  StatsCliOpts st;
  auto* stats_cmd =
      app.add_subcommand("stats", "error report between two corpora");
  stats_cmd->add_option("--ref", st.ref, "reference directory")->required();
  stats_cmd->add_option("--in", st.in, "reconstruction directory")->required();
  stats_cmd->add_option("--out", st.out, "optional JSON output file");
  stats_cmd->add_option("--range", st.range, "value range for psnr");
  stats_cmd->add_option("--time-mode", st.time_mode,
                        "1-based time mode for avg_rmse");

  MdsCliOpts md;
  auto* mds_cmd = app.add_subcommand("mds", "classical MDS of a corpus");
  mds_cmd->add_option("--in", md.in, "corpus directory")->required();
  mds_cmd->add_option("--out", md.out, "CSV output file (default stdout)");
  mds_cmd->add_option("--dim", md.dim, "embedding dimension");

  // validate-prop2
  int vp = 400, vr = 100, vtrials = 50;
  auto* prop2_cmd = app.add_subcommand(
      "validate-prop2", "Monte Carlo check of the aligned-distance law");
  prop2_cmd->add_option("--p", vp, "ambient dimension");
  prop2_cmd->add_option("--r", vr, "subspace rank");
  prop2_cmd->add_option("--trials", vtrials, "Monte Carlo trials");

  // toy-diffusion
  ToyCliOpts toy;
  auto* toy_cmd =
      app.add_subcommand("toy-diffusion", "scalar factorization experiment");
  toy_cmd->add_option("--law", toy.law, "anchored or uniform");
  toy_cmd->add_option("--a", toy.a, "uniform law lower bound");
  toy_cmd->add_option("--b", toy.b, "uniform law upper bound");
  toy_cmd->add_option("--n", toy.n, "training samples");
  toy_cmd->add_option("--steps", toy.steps, "training steps");
  toy_cmd->add_option("--lr", toy.lr, "learning rate");
  toy_cmd->add_option("--ddim", toy.ddim, "DDIM steps");
  toy_cmd->add_option("--n-generate", toy.n_generate, "generated samples");
  toy_cmd->add_option("--out", toy.out, "output directory")->required();

  // train / sample
  TrainCliOpts tr;
  auto* train_cmd =
      app.add_subcommand("train", "train a score net on a primitive archive");
  train_cmd->add_option("--in", tr.in, "primitive archive")->required();
  train_cmd->add_option("--out", tr.out, "checkpoint path")->required();
  train_cmd->add_option("--steps", tr.steps, "training steps");
  train_cmd->add_option("--lr", tr.lr, "learning rate");
  train_cmd->add_option("--batch", tr.batch, "batch size");
  train_cmd->add_option("--hidden", tr.hidden, "hidden units");

  SampleCliOpts sa;
  auto* sample_cmd = app.add_subcommand("sample", "sample from a checkpoint");
  sample_cmd->add_option("--ckpt", sa.ckpt, "checkpoint path")->required();
  sample_cmd->add_option("--out", sa.out, "output directory")->required();
  sample_cmd->add_option("--n", sa.n, "number of samples");
  sample_cmd->add_option("--ddim", sa.ddim, "DDIM steps");
  sample_cmd->add_option("--x0-clip", sa.x0_clip, "x0 clamp (standardized)");

  auto* selfcheck_cmd =
      app.add_subcommand("selfcheck", "run the fast invariant suite");

  // Let --seed/--threads appear anywhere on the command line.
  for (CLI::App* sub : {gen, rd1d, synth, anchor_cmd, encode_cmd, decode_cmd,
                        stats_cmd, mds_cmd, prop2_cmd, toy_cmd, train_cmd,
                        sample_cmd, selfcheck_cmd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage to stderr
    return 2;
  }

  try {
    if (rd1d->parsed()) return run_gen_rd1d(rd, seed, threads);
    if (synth->parsed()) return run_gen_synthetic(sy, seed, threads);
    if (anchor_cmd->parsed()) return run_anchor(an, seed, threads);
    if (encode_cmd->parsed()) return run_encode(en, seed, threads);
    if (decode_cmd->parsed()) return run_decode(de, threads);
    if (stats_cmd->parsed()) return run_stats(st);
    if (mds_cmd->parsed()) return run_mds(md);
    if (prop2_cmd->parsed())
      return run_validate_prop2(vp, vr, vtrials, seed, threads);
    if (toy_cmd->parsed()) return run_toy(toy, seed);
    if (train_cmd->parsed()) return run_train(tr, seed);
    if (sample_cmd->parsed()) return run_sample(sa, seed);
    if (selfcheck_cmd->parsed()) return run_selfcheck();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "no subcommand given\n";
  return 2;
}
