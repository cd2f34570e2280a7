#pragma once

#include "gats/rng.hpp"
#include "gats/tensor.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gats {

/// Linear-beta DDPM schedule.
struct DiffusionSchedule {
  int steps;                      // T
  std::vector<double> betas;      // length T, increasing in (0,1)
  std::vector<double> alphas;     // 1 - beta
  std::vector<double> alpha_bars; // cumulative product, strictly decreasing

  static DiffusionSchedule linear(int steps = 1000, double beta_start = 1e-4,
                                  double beta_end = 2e-2);

  double alpha_bar(int t) const { return alpha_bars[t - 1]; }
};

/// Two-layer tanh MLP epsilon-predictor. Input layout:
/// state (dim) | time embedding (t/T, sin 2*pi*t/T, cos 2*pi*t/T) |
/// condition (cond_dim). Output has state dimension.
class ScoreNet {
 public:
  ScoreNet(int state_dim, int cond_dim, int hidden, std::uint64_t seed);

  int state_dim() const { return state_dim_; }
  int cond_dim() const { return cond_dim_; }
  int hidden() const { return hidden_; }
  int input_dim() const { return state_dim_ + 3 + cond_dim_; }
  std::size_t param_count() const;

  Vector forward(const Vector& x_t, int t, int total_steps,
                 const Vector& cond) const;

  // Flat parameter access in the fixed order W1, b1, W2, b2 (row-major).
  std::vector<double> params_flat() const;
  void set_params_flat(const std::vector<double>& p);

  Matrix w1, w2;
  Vector b1, b2;

  Vector embed(const Vector& x_t, int t, int total_steps,
               const Vector& cond) const;

 private:
  int state_dim_, cond_dim_, hidden_;
};

struct Gradients {
  Matrix w1, w2;
  Vector b1, b2;

  static Gradients zeros(const ScoreNet& net);
  void axpy_into(ScoreNet& net, double step) const;  // net += step * grad
};

struct BatchSample {
  Vector x0;
  Vector cond;  // empty when unconditional
};

/// Forward diffusion marginal x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
Vector forward_noise(const Vector& x0, int t, const Vector& eps,
                     const DiffusionSchedule& schedule);

/// Epsilon-prediction denoising score-matching loss with exact
/// backpropagated gradients: mean over the batch of ||eps - net(x_t)||^2.
/// Noise and timesteps come from the supplied stream.
std::pair<double, Gradients> dsm_loss_and_grad(
    const ScoreNet& net, const std::vector<BatchSample>& batch,
    const DiffusionSchedule& schedule, Rng& rng);

struct TrainResult {
  std::vector<double> loss_trace;  // recorded every 100 steps
};

/// Plain gradient descent on the DSM loss; deterministic per seed.
/// Throws on NaN loss.
TrainResult train(ScoreNet& net, const std::vector<BatchSample>& dataset,
                  const DiffusionSchedule& schedule, int steps, double lr,
                  int batch_size, std::uint64_t seed);

/// Deterministic DDIM (eta = 0) over an evenly spaced timestep
/// subsequence; one independent chain per sample. A finite x0_clip
/// clamps the predicted x0 to [-x0_clip, x0_clip] each step (the usual
/// stabilizer for standardized data); the default leaves it unclamped.
std::vector<Vector> ddim_sample(
    const ScoreNet& net, const DiffusionSchedule& schedule, int num_steps,
    int n_samples, std::uint64_t seed, const Vector& cond = Vector(),
    double x0_clip = std::numeric_limits<double>::infinity());

// ---- scalar toy factorization experiment ----

enum class ToyLaw { kAnchored, kUniform };

struct ToyConfig {
  int n_samples = 20000;
  ToyLaw law = ToyLaw::kAnchored;
  double a = 0.5, b = 4.0;  // Uniform(a, b) support for the V draw
};

/// Draws x from the mixture N(1, 0.2^2)/2 + N(3, 0.2^2)/2 and factors
/// it as (u, v) with u v = x. Anchored law fixes v = 1.
struct ToyDataset {
  std::vector<double> x;
  std::vector<BatchSample> pairs;  // state (u, v)
};
ToyDataset toy_factorization_dataset(const ToyConfig& cfg, std::uint64_t seed);

struct Standardizer {
  Vector mean, scale;  // scale falls back to 1 where the std is ~0

  static Standardizer fit(const std::vector<BatchSample>& data);
  Vector apply(const Vector& v) const;
  Vector invert(const Vector& v) const;
};

struct ToyRunResult {
  double w1 = 0.0;            // W1(generated X, fresh mixture draw)
  double frac_mode_low = 0.0; // mass within +-0.6 of 1
  double frac_mode_high = 0.0;// mass within +-0.6 of 3
  std::vector<double> generated_x;
  std::vector<double> loss_trace;
};

/// Full toy pipeline: standardize, train, DDIM-sample, map back to
/// X = U V, and score against a fresh mixture draw.
ToyRunResult run_toy_experiment(const ToyConfig& cfg, int train_steps,
                                double lr, int ddim_steps, int n_generate,
                                std::uint64_t seed, int hidden = 128,
                                int batch_size = 256);

namespace io {

/// Model checkpoint: "GATM" header with layer sizes, schedule length and
/// standardization vectors, then the flat parameter blob (f64 LE).
void write_checkpoint(const std::string& path, const ScoreNet& net,
                      const DiffusionSchedule& schedule,
                      const Standardizer& std_xform);
struct Checkpoint {
  ScoreNet net;
  DiffusionSchedule schedule;
  Standardizer std_xform;
};
Checkpoint read_checkpoint(const std::string& path);

}  // namespace io

}  // namespace gats
