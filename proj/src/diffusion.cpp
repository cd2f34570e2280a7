#include "gats/diffusion.hpp"

#include "gats/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gats {

DiffusionSchedule DiffusionSchedule::linear(int steps, double beta_start,
                                            double beta_end) {
  if (steps < 1) throw std::invalid_argument("schedule needs >= 1 step");
  if (beta_start <= 0.0 || beta_end >= 1.0 || beta_end < beta_start)
    throw std::invalid_argument("schedule needs 0 < beta_start <= beta_end < 1");
  DiffusionSchedule s;
  s.steps = steps;
  s.betas.resize(steps);
  s.alphas.resize(steps);
  s.alpha_bars.resize(steps);
  double prod = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double beta =
        steps == 1 ? beta_start
                   : beta_start + (beta_end - beta_start) * t / (steps - 1);
    s.betas[t] = beta;
    s.alphas[t] = 1.0 - beta;
    prod *= s.alphas[t];
    s.alpha_bars[t] = prod;
  }
  return s;
}

ScoreNet::ScoreNet(int state_dim, int cond_dim, int hidden, std::uint64_t seed)
    : state_dim_(state_dim), cond_dim_(cond_dim), hidden_(hidden) {
  Rng rng(derive_seed(seed, "scorenet-init"));
  const int in = input_dim();
  w1 = Matrix(hidden, in);
  for (Eigen::Index i = 0; i < w1.rows(); ++i)
    for (Eigen::Index j = 0; j < w1.cols(); ++j)
      w1(i, j) = rng.normal() / std::sqrt(static_cast<double>(in));
  b1 = Vector::Zero(hidden);
  w2 = Matrix(state_dim, hidden);
  for (Eigen::Index i = 0; i < w2.rows(); ++i)
    for (Eigen::Index j = 0; j < w2.cols(); ++j)
      w2(i, j) = rng.normal() / std::sqrt(static_cast<double>(hidden));
  b2 = Vector::Zero(state_dim);
}

std::size_t ScoreNet::param_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() +
                                  b2.size());
}

Vector ScoreNet::embed(const Vector& x_t, int t, int total_steps,
                       const Vector& cond) const {
  if (x_t.size() != state_dim_)
    throw std::invalid_argument("scorenet: state dim mismatch");
  if (cond.size() != cond_dim_)
    throw std::invalid_argument("scorenet: cond dim mismatch");
  Vector in(input_dim());
  in.head(state_dim_) = x_t;
  const double tau = static_cast<double>(t) / total_steps;
  in(state_dim_) = tau;
  in(state_dim_ + 1) = std::sin(2.0 * M_PI * tau);
  in(state_dim_ + 2) = std::cos(2.0 * M_PI * tau);
  if (cond_dim_ > 0) in.tail(cond_dim_) = cond;
  return in;
}

Vector ScoreNet::forward(const Vector& x_t, int t, int total_steps,
                         const Vector& cond) const {
  Vector in = embed(x_t, t, total_steps, cond);
  Vector h = (w1 * in + b1).array().tanh();
  return w2 * h + b2;
}

std::vector<double> ScoreNet::params_flat() const {
  std::vector<double> p;
  p.reserve(param_count());
  for (Eigen::Index i = 0; i < w1.rows(); ++i)
    for (Eigen::Index j = 0; j < w1.cols(); ++j) p.push_back(w1(i, j));
  for (Eigen::Index i = 0; i < b1.size(); ++i) p.push_back(b1(i));
  for (Eigen::Index i = 0; i < w2.rows(); ++i)
    for (Eigen::Index j = 0; j < w2.cols(); ++j) p.push_back(w2(i, j));
  for (Eigen::Index i = 0; i < b2.size(); ++i) p.push_back(b2(i));
  return p;
}

void ScoreNet::set_params_flat(const std::vector<double>& p) {
  if (p.size() != param_count())
    throw std::invalid_argument("scorenet: parameter blob size mismatch");
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < w1.rows(); ++i)
    for (Eigen::Index j = 0; j < w1.cols(); ++j) w1(i, j) = p[k++];
  for (Eigen::Index i = 0; i < b1.size(); ++i) b1(i) = p[k++];
  for (Eigen::Index i = 0; i < w2.rows(); ++i)
    for (Eigen::Index j = 0; j < w2.cols(); ++j) w2(i, j) = p[k++];
  for (Eigen::Index i = 0; i < b2.size(); ++i) b2(i) = p[k++];
}

Gradients Gradients::zeros(const ScoreNet& net) {
  return Gradients{Matrix::Zero(net.w1.rows(), net.w1.cols()),
                   Matrix::Zero(net.w2.rows(), net.w2.cols()),
                   Vector::Zero(net.b1.size()), Vector::Zero(net.b2.size())};
}

void Gradients::axpy_into(ScoreNet& net, double step) const {
  net.w1 += step * w1;
  net.b1 += step * b1;
  net.w2 += step * w2;
  net.b2 += step * b2;
}

Vector forward_noise(const Vector& x0, int t, const Vector& eps,
                     const DiffusionSchedule& schedule) {
  if (t < 1 || t > schedule.steps)
    throw std::out_of_range("forward_noise: t out of range");
  if (eps.size() != x0.size())
    throw std::invalid_argument("forward_noise: eps size mismatch");
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

std::pair<double, Gradients> dsm_loss_and_grad(
    const ScoreNet& net, const std::vector<BatchSample>& batch,
    const DiffusionSchedule& schedule, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("dsm: empty batch");
  Gradients grad = Gradients::zeros(net);
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (const auto& sample : batch) {
    const int t =
        1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(
                                                  schedule.steps));
    Vector eps(sample.x0.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
    Vector x_t = forward_noise(sample.x0, t, eps, schedule);

    Vector in = net.embed(x_t, t, schedule.steps, sample.cond);
    Vector z = net.w1 * in + net.b1;
    Vector h = z.array().tanh();
    Vector out = net.w2 * h + net.b2;

    Vector res = out - eps;
    loss += res.squaredNorm() * inv_b;

    Vector gout = 2.0 * inv_b * res;
    grad.w2 += gout * h.transpose();
    grad.b2 += gout;
    Vector gz =
        (net.w2.transpose() * gout).array() * (1.0 - h.array().square());
    grad.w1 += gz * in.transpose();
    grad.b1 += gz;
  }
  return {loss, std::move(grad)};
}

TrainResult train(ScoreNet& net, const std::vector<BatchSample>& dataset,
                  const DiffusionSchedule& schedule, int steps, double lr,
                  int batch_size, std::uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  Rng rng(derive_seed(seed, "train"));
  TrainResult result;
  std::vector<BatchSample> batch;
  batch.reserve(batch_size);
  for (int step = 0; step < steps; ++step) {
    batch.clear();
    for (int i = 0; i < batch_size; ++i) {
      const std::size_t idx = static_cast<std::size_t>(
          rng.next_u64() % static_cast<std::uint64_t>(dataset.size()));
      batch.push_back(dataset[idx]);
    }
    auto [loss, grad] = dsm_loss_and_grad(net, batch, schedule, rng);
    if (!std::isfinite(loss))
      throw std::runtime_error("train: loss diverged (non-finite) at step " +
                               std::to_string(step));
    grad.axpy_into(net, -lr);
    if (step % 100 == 0) result.loss_trace.push_back(loss);
  }
  return result;
}

std::vector<Vector> ddim_sample(const ScoreNet& net,
                                const DiffusionSchedule& schedule,
                                int num_steps, int n_samples,
                                std::uint64_t seed, const Vector& cond,
                                double x0_clip) {
  if (!(x0_clip > 0.0))
    throw std::invalid_argument("ddim_sample: x0_clip must be positive");
  if (num_steps < 2 || num_steps > schedule.steps)
    throw std::invalid_argument("ddim_sample: num_steps out of range");
  if (n_samples < 1)
    throw std::invalid_argument("ddim_sample: n_samples must be positive");
  // Evenly spaced subsequence of timesteps spanning [1, T], descending.
  std::vector<int> ts(num_steps);
  for (int i = 0; i < num_steps; ++i) {
    ts[i] = num_steps == 1
                ? schedule.steps
                : 1 + static_cast<int>(std::llround(
                          static_cast<double>(i) * (schedule.steps - 1) /
                          (num_steps - 1)));
  }

  std::vector<Vector> out;
  out.reserve(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    Rng rng(derive_seed(seed, "ddim-chain", static_cast<std::uint64_t>(s)));
    Vector x(net.state_dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (int i = num_steps - 1; i >= 0; --i) {
      const int t = ts[i];
      const int t_prev = i > 0 ? ts[i - 1] : 0;
      const double ab = schedule.alpha_bar(t);
      const double ab_prev = t_prev > 0 ? schedule.alpha_bar(t_prev) : 1.0;
      Vector eps_hat = net.forward(x, t, schedule.steps, cond);
      Vector x0_pred = (x - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab);
      if (std::isfinite(x0_clip)) {
        for (Eigen::Index k = 0; k < x0_pred.size(); ++k)
          x0_pred(k) = std::clamp(x0_pred(k), -x0_clip, x0_clip);
        // Keep the update consistent with the clamped prediction.
        eps_hat = (x - std::sqrt(ab) * x0_pred) / std::sqrt(1.0 - ab);
      }
      x = std::sqrt(ab_prev) * x0_pred +
          std::sqrt(1.0 - ab_prev) * eps_hat;  // eta = 0
    }
    out.push_back(std::move(x));
  }
  return out;
}

ToyDataset toy_factorization_dataset(const ToyConfig& cfg,
                                     std::uint64_t seed) {
  if (cfg.n_samples < 1) throw std::invalid_argument("toy: n_samples >= 1");
  if (cfg.law == ToyLaw::kUniform && cfg.b <= cfg.a)
    throw std::invalid_argument("toy: need a < b for the uniform law");
  Rng rng(derive_seed(seed, "toy-dataset"));
  ToyDataset out;
  out.x.reserve(cfg.n_samples);
  out.pairs.reserve(cfg.n_samples);
  for (int i = 0; i < cfg.n_samples; ++i) {
    const double mean = (rng.next_u64() & 1) ? 3.0 : 1.0;
    const double x = mean + 0.2 * rng.normal();
    double v = 1.0;
    if (cfg.law == ToyLaw::kUniform) v = rng.uniform(cfg.a, cfg.b);
    const double u = x / v;
    out.x.push_back(x);
    Vector state(2);
    state << u, v;
    out.pairs.push_back(BatchSample{std::move(state), Vector()});
  }
  return out;
}

Standardizer Standardizer::fit(const std::vector<BatchSample>& data) {
  if (data.empty()) throw std::invalid_argument("standardizer: empty data");
  const Eigen::Index dim = data[0].x0.size();
  Vector mean = Vector::Zero(dim);
  for (const auto& s : data) mean += s.x0;
  mean /= static_cast<double>(data.size());
  Vector var = Vector::Zero(dim);
  for (const auto& s : data) var += (s.x0 - mean).array().square().matrix();
  var /= static_cast<double>(data.size());
  Vector scale(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double sd = std::sqrt(var(i));
    scale(i) = sd > 1e-12 ? sd : 1.0;  // constant coordinates pass through
  }
  return Standardizer{std::move(mean), std::move(scale)};
}

Vector Standardizer::apply(const Vector& v) const {
  return ((v - mean).array() / scale.array()).matrix();
}

Vector Standardizer::invert(const Vector& v) const {
  return (v.array() * scale.array()).matrix() + mean;
}

ToyRunResult run_toy_experiment(const ToyConfig& cfg, int train_steps,
                                double lr, int ddim_steps, int n_generate,
                                std::uint64_t seed, int hidden,
                                int batch_size) {
  ToyDataset data = toy_factorization_dataset(cfg, seed);
  Standardizer std_xform = Standardizer::fit(data.pairs);
  std::vector<BatchSample> standardized;
  standardized.reserve(data.pairs.size());
  for (const auto& s : data.pairs)
    standardized.push_back(BatchSample{std_xform.apply(s.x0), Vector()});

  DiffusionSchedule schedule = DiffusionSchedule::linear();
  ScoreNet net(2, 0, hidden, derive_seed(seed, "toy-net"));
  TrainResult tr = train(net, standardized, schedule, train_steps, lr,
                         batch_size, derive_seed(seed, "toy-train"));

  // Clip predicted x0 at 3 standardized units: the data is whitened, so
  // this only suppresses runaway chains, not legitimate samples.
  std::vector<Vector> samples =
      ddim_sample(net, schedule, ddim_steps, n_generate,
                  derive_seed(seed, "toy-sample"), Vector(), 3.0);
  ToyRunResult result;
  result.loss_trace = tr.loss_trace;
  result.generated_x.reserve(samples.size());
  int near_low = 0, near_high = 0;
  for (const auto& s : samples) {
    Vector uv = std_xform.invert(s);
    const double x = uv(0) * uv(1);
    result.generated_x.push_back(x);
    if (std::abs(x - 1.0) <= 0.6) ++near_low;
    if (std::abs(x - 3.0) <= 0.6) ++near_high;
  }
  result.frac_mode_low =
      static_cast<double>(near_low) / static_cast<double>(samples.size());
  result.frac_mode_high =
      static_cast<double>(near_high) / static_cast<double>(samples.size());

  // Fresh mixture reference draw, independent of the training stream.
  ToyConfig ref_cfg = cfg;
  ref_cfg.law = ToyLaw::kAnchored;
  ref_cfg.n_samples = static_cast<int>(result.generated_x.size());
  ToyDataset ref =
      toy_factorization_dataset(ref_cfg, derive_seed(seed, "toy-reference"));
  result.w1 = wasserstein_1d(result.generated_x, ref.x);
  return result;
}

namespace io {

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  f.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ofstream& f, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (bits >> (8 * i)) & 0xff;
  f.write(reinterpret_cast<char*>(b), 8);
}

double get_f64(std::ifstream& f) {
  unsigned char b[8];
  f.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const ScoreNet& net,
                      const DiffusionSchedule& schedule,
                      const Standardizer& std_xform) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint for write: " + path);
  f.write("GATM", 4);
  put_u32(f, 1);  // format version
  put_u32(f, static_cast<std::uint32_t>(net.state_dim()));
  put_u32(f, static_cast<std::uint32_t>(net.cond_dim()));
  put_u32(f, static_cast<std::uint32_t>(net.hidden()));
  put_u32(f, static_cast<std::uint32_t>(schedule.steps));
  for (double b : schedule.betas) put_f64(f, b);
  for (Eigen::Index i = 0; i < std_xform.mean.size(); ++i)
    put_f64(f, std_xform.mean(i));
  for (Eigen::Index i = 0; i < std_xform.scale.size(); ++i)
    put_f64(f, std_xform.scale(i));
  for (double p : net.params_flat()) put_f64(f, p);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, "GATM", 4) != 0)
    throw std::runtime_error("bad checkpoint magic: " + path);
  if (get_u32(f) != 1) throw std::runtime_error("unsupported checkpoint version");
  const int state_dim = static_cast<int>(get_u32(f));
  const int cond_dim = static_cast<int>(get_u32(f));
  const int hidden = static_cast<int>(get_u32(f));
  const int steps = static_cast<int>(get_u32(f));

  DiffusionSchedule schedule;
  schedule.steps = steps;
  schedule.betas.resize(steps);
  schedule.alphas.resize(steps);
  schedule.alpha_bars.resize(steps);
  double prod = 1.0;
  for (int t = 0; t < steps; ++t) {
    schedule.betas[t] = get_f64(f);
    schedule.alphas[t] = 1.0 - schedule.betas[t];
    prod *= schedule.alphas[t];
    schedule.alpha_bars[t] = prod;
  }
  Standardizer std_xform{Vector(state_dim), Vector(state_dim)};
  for (int i = 0; i < state_dim; ++i) std_xform.mean(i) = get_f64(f);
  for (int i = 0; i < state_dim; ++i) std_xform.scale(i) = get_f64(f);

  ScoreNet net(state_dim, cond_dim, hidden, 0);
  std::vector<double> params(net.param_count());
  for (double& p : params) p = get_f64(f);
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  net.set_params_flat(params);
  return Checkpoint{std::move(net), std::move(schedule), std::move(std_xform)};
}

}  // namespace io

}  // namespace gats
