#pragma once

#include "gats/rng.hpp"
#include "gats/tensor.hpp"

#include <vector>

namespace gats {

/// 1-d reaction-diffusion configuration: du/dt = nu u_xx + rho u(1-u)
/// on the periodic unit interval.
struct RdConfig {
  double nu = 1e-3;
  double rho = 1.0;
  std::size_t nx = 1024;
  std::size_t nt = 201;
  double t_end = 1.0;
  std::uint64_t seed = 0;
};

/// Corpus of synthetic low-multilinear-rank tensors: random cores with
/// a decay^i spectral profile expanded through Haar factors, plus
/// optional Gaussian noise. noise_level = 0 gives exact rank.
std::vector<DenseTensor> synthetic_lowrank(
    const std::vector<std::size_t>& dims, const std::vector<std::size_t>& ranks,
    double spectrum_decay, double noise_level, int n_samples,
    std::uint64_t seed);

/// Forward-Euler / central-difference integration of the reaction-
/// diffusion equation. Returns an nx x nt matrix whose columns are
/// frames evenly sampled on [0, t_end] (column 0 is u0). Refuses
/// configurations whose stable step count is astronomically large.
Matrix reaction_diffusion_1d(const RdConfig& cfg,
                             const std::vector<double>& u0);

/// Smooth periodic initial condition: a superposition of random
/// sinusoids rescaled into [0.1, 0.9].
std::vector<double> random_initial_condition(std::size_t nx, int n_modes,
                                             std::uint64_t seed);

}  // namespace gats
