#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gats/diffusion.hpp"
#include "gats/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace gats;

TEST_CASE("linear schedule invariants") {
  DiffusionSchedule s = DiffusionSchedule::linear();
  REQUIRE(s.steps == 1000);
  REQUIRE(s.betas.size() == 1000);
  CHECK(s.betas.front() == doctest::Approx(1e-4));
  CHECK(s.betas.back() == doctest::Approx(2e-2));
  double prod = 1.0;
  for (int t = 1; t <= s.steps; ++t) {
    CHECK(s.betas[t - 1] > 0.0);
    CHECK(s.betas[t - 1] < 1.0);
    if (t > 1) CHECK(s.betas[t - 1] > s.betas[t - 2]);
    CHECK(s.alphas[t - 1] == doctest::Approx(1.0 - s.betas[t - 1]));
    prod *= s.alphas[t - 1];
    CHECK(s.alpha_bar(t) == doctest::Approx(prod).epsilon(1e-12));
    if (t > 1) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }
  CHECK_THROWS(DiffusionSchedule::linear(0));
  CHECK_THROWS(DiffusionSchedule::linear(10, 0.5, 0.1));
}

TEST_CASE("forward_noise closed form and moments") {
  DiffusionSchedule s = DiffusionSchedule::linear(100);
  Vector x0(2), eps(2);
  x0 << 1.0, -2.0;
  eps << 0.5, 0.25;
  const int t = 40;
  Vector xt = forward_noise(x0, t, eps, s);
  const double ab = s.alpha_bar(t);
  CHECK(xt(0) == doctest::Approx(std::sqrt(ab) * 1.0 +
                                 std::sqrt(1.0 - ab) * 0.5));
  CHECK(xt(1) == doctest::Approx(std::sqrt(ab) * -2.0 +
                                 std::sqrt(1.0 - ab) * 0.25));

  // Monte Carlo marginal: mean sqrt(ab) x0, variance 1 - ab.
  Rng rng(4);
  const int n = 20000;
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Vector e(1);
    e << rng.normal();
    Vector y = forward_noise(Vector::Ones(1), t, e, s);
    const double delta = y(0) - mean;
    mean += delta / (i + 1);
    m2 += delta * (y(0) - mean);
  }
  const double var = m2 / (n - 1);
  CHECK(std::abs(mean - std::sqrt(ab)) < 4.0 * std::sqrt((1 - ab) / n));
  CHECK(std::abs(var - (1.0 - ab)) < 0.02);

  CHECK_THROWS(forward_noise(x0, 0, eps, s));
  CHECK_THROWS(forward_noise(x0, 101, eps, s));
}

TEST_CASE("zero network loss approaches state_dim") {
  // With the output layer zeroed the prediction is 0, so the loss is the
  // batch mean of ||eps||^2, whose expectation is state_dim.
  DiffusionSchedule s = DiffusionSchedule::linear(50);
  ScoreNet net(3, 0, 16, 1);
  net.w2.setZero();
  net.b2.setZero();
  std::vector<BatchSample> batch;
  Rng data_rng(2);
  for (int i = 0; i < 4000; ++i) {
    Vector x(3);
    for (int k = 0; k < 3; ++k) x(k) = data_rng.normal();
    batch.push_back({x, Vector()});
  }
  Rng rng(3);
  auto [loss, grad] = dsm_loss_and_grad(net, batch, s, rng);
  CHECK(std::abs(loss - 3.0) < 0.2);
  CHECK(grad.w2.norm() > 0.0);  // gradient flows into the zeroed layer
  CHECK(grad.w1.norm() == 0.0); // but not past it
}

TEST_CASE("dsm gradients match central finite differences") {
  DiffusionSchedule s = DiffusionSchedule::linear(60);
  ScoreNet net(2, 1, 6, 11);
  std::vector<BatchSample> batch;
  Rng data_rng(12);
  for (int i = 0; i < 8; ++i) {
    Vector x(2), c(1);
    x << data_rng.normal(), data_rng.normal();
    c << data_rng.normal();
    batch.push_back({x, c});
  }
  const Rng frozen(13);

  Rng g = frozen;
  auto [loss0, grad] = dsm_loss_and_grad(net, batch, s, g);
  std::vector<double> flat_grad;
  for (Eigen::Index i = 0; i < grad.w1.rows(); ++i)
    for (Eigen::Index j = 0; j < grad.w1.cols(); ++j)
      flat_grad.push_back(grad.w1(i, j));
  for (Eigen::Index i = 0; i < grad.b1.size(); ++i)
    flat_grad.push_back(grad.b1(i));
  for (Eigen::Index i = 0; i < grad.w2.rows(); ++i)
    for (Eigen::Index j = 0; j < grad.w2.cols(); ++j)
      flat_grad.push_back(grad.w2(i, j));
  for (Eigen::Index i = 0; i < grad.b2.size(); ++i)
    flat_grad.push_back(grad.b2(i));
  REQUIRE(flat_grad.size() == net.param_count());

  std::vector<double> base = net.params_flat();
  Rng pick(14);
  const double h = 1e-5;
  for (int probe = 0; probe < 40; ++probe) {
    const std::size_t idx = pick.next_u64() % base.size();
    std::vector<double> p = base;
    ScoreNet pert = net;

    p[idx] = base[idx] + h;
    pert.set_params_flat(p);
    Rng gp = frozen;
    const double lp = dsm_loss_and_grad(pert, batch, s, gp).first;

    p[idx] = base[idx] - h;
    pert.set_params_flat(p);
    Rng gm = frozen;
    const double lm = dsm_loss_and_grad(pert, batch, s, gm).first;

    const double fd = (lp - lm) / (2.0 * h);
    const double scale =
        std::max({std::abs(fd), std::abs(flat_grad[idx]), 1e-8});
    CHECK(std::abs(fd - flat_grad[idx]) / scale < 1e-5);
  }
}

TEST_CASE("params_flat round trip and embed layout") {
  ScoreNet net(2, 1, 5, 21);
  std::vector<double> p = net.params_flat();
  REQUIRE(p.size() == net.param_count());
  ScoreNet other(2, 1, 5, 22);
  other.set_params_flat(p);
  Vector x(2), c(1);
  x << 0.3, -0.7;
  c << 1.5;
  CHECK((net.forward(x, 17, 60, c) - other.forward(x, 17, 60, c)).norm() ==
        0.0);

  Vector e = net.embed(x, 15, 60, c);
  REQUIRE(e.size() == 2 + 3 + 1);
  CHECK(e(0) == 0.3);
  CHECK(e(1) == -0.7);
  CHECK(e(2) == doctest::Approx(0.25));
  CHECK(e(3) == doctest::Approx(std::sin(2.0 * M_PI * 0.25)));
  CHECK(e(4) == doctest::Approx(std::cos(2.0 * M_PI * 0.25)));
  CHECK(e(5) == 1.5);
}

TEST_CASE("train is deterministic and reduces the loss") {
  DiffusionSchedule s = DiffusionSchedule::linear(100);
  std::vector<BatchSample> data;
  Rng data_rng(31);
  for (int i = 0; i < 512; ++i) {
    Vector x(1);
    x << 2.0 + 0.1 * data_rng.normal();
    data.push_back({x, Vector()});
  }
  ScoreNet a(1, 0, 32, 7);
  ScoreNet b(1, 0, 32, 7);
  TrainResult ra = train(a, data, s, 400, 1e-2, 64, 99);
  TrainResult rb = train(b, data, s, 400, 1e-2, 64, 99);
  CHECK(a.params_flat() == b.params_flat());
  CHECK(ra.loss_trace == rb.loss_trace);
  REQUIRE(ra.loss_trace.size() >= 2);
  CHECK(ra.loss_trace.back() < ra.loss_trace.front());
}

TEST_CASE("ddim with a zero predictor rescales the initial noise") {
  DiffusionSchedule s = DiffusionSchedule::linear(200);
  ScoreNet net(2, 0, 8, 41);
  net.w2.setZero();
  net.b2.setZero();
  std::vector<Vector> out = ddim_sample(net, s, 20, 3, 555);
  REQUIRE(out.size() == 3);
  for (int c = 0; c < 3; ++c) {
    // With eps_hat = 0 every update multiplies by sqrt(abar_prev/abar_t),
    // telescoping to x_T / sqrt(abar_T).
    Rng chain(derive_seed(555, "ddim-chain", static_cast<std::uint64_t>(c)));
    Vector xt(2);
    xt << chain.normal(), chain.normal();
    Vector expect = xt / std::sqrt(s.alpha_bar(s.steps));
    CHECK((out[c] - expect).norm() < 1e-10 * expect.norm());
  }
}

TEST_CASE("ddim x0 clipping bounds the final sample") {
  DiffusionSchedule s = DiffusionSchedule::linear(200);
  ScoreNet net(2, 0, 8, 41);
  net.w2.setZero();
  net.b2.setZero();
  // The zero predictor rescales noise by 1/sqrt(abar_T) ~ 150x; with a
  // clip the last step emits the clamped x0 prediction directly.
  std::vector<Vector> out = ddim_sample(net, s, 20, 8, 555, Vector(), 2.5);
  for (const auto& x : out)
    CHECK(x.cwiseAbs().maxCoeff() <= 2.5 + 1e-12);
  CHECK_THROWS(ddim_sample(net, s, 20, 2, 1, Vector(), 0.0));
  CHECK_THROWS(ddim_sample(net, s, 20, 2, 1, Vector(), -1.0));
}

TEST_CASE("ddim determinism and argument checks") {
  DiffusionSchedule s = DiffusionSchedule::linear(100);
  ScoreNet net(2, 0, 8, 51);
  std::vector<Vector> a = ddim_sample(net, s, 25, 4, 777);
  std::vector<Vector> b = ddim_sample(net, s, 25, 4, 777);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK((a[i] - b[i]).norm() == 0.0);
  std::vector<Vector> c = ddim_sample(net, s, 25, 4, 778);
  CHECK((a[0] - c[0]).norm() > 0.0);
  CHECK_THROWS(ddim_sample(net, s, 1, 4, 1));
  CHECK_THROWS(ddim_sample(net, s, 101, 4, 1));
  CHECK_THROWS(ddim_sample(net, s, 25, 0, 1));
}

TEST_CASE("toy dataset laws") {
  ToyConfig anchored;
  anchored.n_samples = 5000;
  ToyDataset d = toy_factorization_dataset(anchored, 61);
  REQUIRE(d.x.size() == 5000);
  REQUIRE(d.pairs.size() == 5000);
  int low = 0, high = 0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    CHECK(d.pairs[i].x0.size() == 2);
    CHECK(d.pairs[i].x0(1) == 1.0);  // anchored: v fixed at 1
    CHECK(d.pairs[i].x0(0) == d.x[i]);
    if (std::abs(d.x[i] - 1.0) < 0.6) ++low;
    if (std::abs(d.x[i] - 3.0) < 0.6) ++high;
  }
  // The 0.6 window is 3 sigma, so only ~0.3% of mass escapes both modes.
  CHECK(low + high > 4950);
  CHECK(low > 2200);
  CHECK(high > 2200);

  ToyConfig uniform = anchored;
  uniform.law = ToyLaw::kUniform;
  ToyDataset u = toy_factorization_dataset(uniform, 61);
  for (std::size_t i = 0; i < u.x.size(); ++i) {
    const double v = u.pairs[i].x0(1);
    CHECK(v >= 0.5);
    CHECK(v <= 4.0);
    CHECK(u.pairs[i].x0(0) * v == doctest::Approx(u.x[i]).epsilon(1e-12));
  }
}

TEST_CASE("standardizer round trip and degenerate coordinates") {
  std::vector<BatchSample> data;
  Rng rng(71);
  for (int i = 0; i < 200; ++i) {
    Vector x(2);
    x << 5.0 + 2.0 * rng.normal(), 7.0;  // second coordinate constant
    data.push_back({x, Vector()});
  }
  Standardizer st = Standardizer::fit(data);
  CHECK(st.mean(0) == doctest::Approx(5.0).epsilon(0.2));
  CHECK(st.mean(1) == doctest::Approx(7.0));
  CHECK(st.scale(1) == 1.0);
  Vector v(2);
  v << 4.2, 7.0;
  CHECK((st.invert(st.apply(v)) - v).norm() < 1e-12);
  // Standardized data has near-zero mean and unit scale where defined.
  double m0 = 0.0;
  for (const auto& s : data) m0 += st.apply(s.x0)(0);
  CHECK(std::abs(m0 / 200.0) < 1e-10);
}

TEST_CASE("checkpoint round trip is bitwise") {
  namespace fs = std::filesystem;
  DiffusionSchedule s = DiffusionSchedule::linear(120);
  ScoreNet net(2, 1, 10, 81);
  Standardizer st;
  st.mean = Vector(2);
  st.scale = Vector(2);
  st.mean << 1.25, -0.5;
  st.scale << 2.0, 1.0;
  const std::string path =
      (fs::temp_directory_path() / "gats_test_ckpt.bin").string();
  io::write_checkpoint(path, net, s, st);
  io::Checkpoint back = io::read_checkpoint(path);
  CHECK(back.net.params_flat() == net.params_flat());
  CHECK(back.net.state_dim() == 2);
  CHECK(back.net.cond_dim() == 1);
  CHECK(back.net.hidden() == 10);
  CHECK(back.schedule.steps == 120);
  CHECK(back.schedule.betas == s.betas);
  CHECK((back.std_xform.mean - st.mean).norm() == 0.0);
  CHECK((back.std_xform.scale - st.scale).norm() == 0.0);
  std::remove(path.c_str());
  CHECK_THROWS(io::read_checkpoint(path));
}

TEST_CASE("toy experiment smoke run separates the two laws") {
  ToyConfig cfg;
  cfg.n_samples = 4000;
  ToyRunResult anchored =
      run_toy_experiment(cfg, 1200, 1e-3, 50, 400, 91, 64, 128);
  CHECK(anchored.generated_x.size() == 400);
  CHECK(!anchored.loss_trace.empty());
  CHECK(anchored.loss_trace.back() < anchored.loss_trace.front());
  CHECK(std::isfinite(anchored.w1));
  CHECK(anchored.frac_mode_low >= 0.0);
  CHECK(anchored.frac_mode_high >= 0.0);
  // Determinism of the full pipeline.
  ToyRunResult again =
      run_toy_experiment(cfg, 1200, 1e-3, 50, 400, 91, 64, 128);
  CHECK(again.w1 == anchored.w1);
  CHECK(again.generated_x == anchored.generated_x);
}
