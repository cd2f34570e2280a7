#include "gats/datagen.hpp"

#include "gats/linalg.hpp"
#include "gats/tucker.hpp"

#include <cmath>
#include <stdexcept>

namespace gats {

std::vector<DenseTensor> synthetic_lowrank(
    const std::vector<std::size_t>& dims, const std::vector<std::size_t>& ranks,
    double spectrum_decay, double noise_level, int n_samples,
    std::uint64_t seed) {
  if (dims.size() != ranks.size())
    throw std::invalid_argument("synthetic_lowrank: dims/ranks arity");
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (ranks[k] < 1 || ranks[k] > dims[k])
      throw std::invalid_argument("synthetic_lowrank: invalid ranks");

  std::vector<DenseTensor> out;
  out.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    Rng rng(derive_seed(seed, "synthetic-lowrank",
                        static_cast<std::uint64_t>(s)));
    std::size_t core_size = 1;
    for (std::size_t r : ranks) core_size *= r;

    DenseTensor core = DenseTensor::zeros(std::vector<std::size_t>(ranks));
    if (dims.size() == 2) {
      // Exact decay^i singular spectrum: Q_a diag(decay^i) Q_b^T.
      const Eigen::Index r1 = static_cast<Eigen::Index>(ranks[0]);
      const Eigen::Index r2 = static_cast<Eigen::Index>(ranks[1]);
      const Eigen::Index q = std::min(r1, r2);
      Matrix qa = haar_stiefel(r1, r1, rng).mat();
      Matrix qb = haar_stiefel(r2, r2, rng).mat();
      Matrix d = Matrix::Zero(r1, r2);
      for (Eigen::Index i = 0; i < q; ++i)
        d(i, i) = std::pow(spectrum_decay, static_cast<double>(i));
      core = DenseTensor::from_matrix(qa * d * qb.transpose());
    } else {
      // Gaussian core with entries damped by decay^(mean index); full
      // mode-k ranks almost surely.
      std::vector<std::size_t> idx(ranks.size(), 0);
      for (std::size_t flat = 0; flat < core_size; ++flat) {
        std::size_t rem = flat;
        double idx_sum = 0.0;
        for (std::size_t d = ranks.size(); d-- > 0;) {
          idx[d] = rem % ranks[d];
          rem /= ranks[d];
          idx_sum += static_cast<double>(idx[d]);
        }
        core[flat] = rng.normal() *
                     std::pow(spectrum_decay,
                              idx_sum / static_cast<double>(ranks.size()));
      }
    }

    std::vector<StiefelMatrix> factors;
    for (std::size_t k = 0; k < dims.size(); ++k)
      factors.push_back(haar_stiefel(static_cast<Eigen::Index>(dims[k]),
                                     static_cast<Eigen::Index>(ranks[k]),
                                     rng));
    DenseTensor x = tucker_reconstruct(
        TuckerFactors{std::move(core), std::move(factors),
                      std::vector<std::size_t>(ranks)});
    if (noise_level > 0.0)
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] += noise_level * rng.normal();
    out.push_back(std::move(x));
  }
  return out;
}

Matrix reaction_diffusion_1d(const RdConfig& cfg,
                             const std::vector<double>& u0) {
  if (cfg.nu < 0.0 || cfg.rho < 0.0 || cfg.nx < 8 || cfg.nt < 2 ||
      cfg.t_end <= 0.0)
    throw std::invalid_argument("reaction_diffusion_1d: invalid config");
  if (u0.size() != cfg.nx)
    throw std::invalid_argument("reaction_diffusion_1d: u0 length != nx");
  for (double v : u0)
    if (v < 0.0 || v > 1.0)
      throw std::invalid_argument("reaction_diffusion_1d: u0 outside [0,1]");

  const double dx = 1.0 / static_cast<double>(cfg.nx);
  const double dt_diff = 0.4 * dx * dx / std::max(cfg.nu, 1e-12);
  const double dt_react = 0.1 / std::max(cfg.rho, 1e-12);
  const double dt_max = std::min(dt_diff, dt_react);
  const double steps_needed = std::ceil(cfg.t_end / dt_max);
  if (steps_needed > 5e7)
    throw std::invalid_argument(
        "reaction_diffusion_1d: stability bound requires " +
        std::to_string(static_cast<long long>(steps_needed)) +
        " steps; refusing (reduce nu, nx, or t_end)");

  // Frames sampled at j * t_end / (nt - 1). Step counts between frames
  // are integers, so pick a per-frame-interval step count that honors
  // the stability bound.
  const double frame_dt = cfg.t_end / static_cast<double>(cfg.nt - 1);
  const std::size_t steps_per_frame =
      static_cast<std::size_t>(std::ceil(frame_dt / dt_max));
  const double dt = frame_dt / static_cast<double>(steps_per_frame);
  const double diff_coef = cfg.nu * dt / (dx * dx);

  Matrix out(cfg.nx, cfg.nt);
  std::vector<double> u = u0;
  std::vector<double> next(cfg.nx);
  for (std::size_t i = 0; i < cfg.nx; ++i) out(i, 0) = u[i];
  for (std::size_t frame = 1; frame < cfg.nt; ++frame) {
    for (std::size_t s = 0; s < steps_per_frame; ++s) {
      for (std::size_t i = 0; i < cfg.nx; ++i) {
        const std::size_t im = (i + cfg.nx - 1) % cfg.nx;
        const std::size_t ip = (i + 1) % cfg.nx;
        next[i] = u[i] + diff_coef * (u[ip] - 2.0 * u[i] + u[im]) +
                  dt * cfg.rho * u[i] * (1.0 - u[i]);
      }
      u.swap(next);
    }
    for (std::size_t i = 0; i < cfg.nx; ++i) out(i, frame) = u[i];
  }
  if (out.minCoeff() < -1e-9 || out.maxCoeff() > 1.0 + 1e-9)
    throw std::runtime_error("reaction_diffusion_1d: solution left [0,1]");
  return out;
}

std::vector<double> random_initial_condition(std::size_t nx, int n_modes,
                                             std::uint64_t seed) {
  if (n_modes < 1)
    throw std::invalid_argument("random_initial_condition: n_modes >= 1");
  Rng rng(derive_seed(seed, "rd-initial-condition"));
  std::vector<double> amp(n_modes), phase(n_modes);
  std::vector<int> freq(n_modes);
  for (int m = 0; m < n_modes; ++m) {
    amp[m] = rng.uniform();
    phase[m] = rng.uniform(0.0, 2.0 * M_PI);
    freq[m] = 1 + static_cast<int>(rng.next_u64() % 5);
  }
  std::vector<double> u(nx);
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(nx);
    double s = 0.0;
    for (int m = 0; m < n_modes; ++m)
      s += amp[m] * std::sin(2.0 * M_PI * freq[m] * x + phase[m]);
    u[i] = s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double span = hi - lo;
  for (double& v : u)
    v = span > 0.0 ? 0.1 + 0.8 * (v - lo) / span : 0.5;
  return u;
}

}  // namespace gats
