#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "qsoc/core/monte_carlo.hpp"
#include "qsoc/core/sde.hpp"

using namespace qsoc;

TEST_CASE("make_time_grid accepts exact divisions") {
  CHECK(make_time_grid(1.0, 0.5).n_steps == 2);
  CHECK(make_time_grid(2.0, 0.01).n_steps == 200);
  CHECK(make_time_grid(1.0, 1e-3).n_steps == 1000);
}

TEST_CASE("make_time_grid rejects non-divisible steps") {
  CHECK_THROWS_AS(make_time_grid(1.0, 0.3), ValidationError);
  CHECK_THROWS_AS(make_time_grid(-1.0, 0.1), ValidationError);
  CHECK_THROWS_AS(make_time_grid(1.0, 0.0), ValidationError);
}

TEST_CASE("sample_wiener is deterministic per seed") {
  const auto grid = make_time_grid(1.0, 0.01);
  const auto a = sample_wiener(grid, 3, 42u);
  const auto b = sample_wiener(grid, 3, 42u);
  const auto c = sample_wiener(grid, 3, 43u);
  CHECK(a.increments == b.increments);
  CHECK(a.increments != c.increments);
}

TEST_CASE("sample_wiener moments match the law") {
  const auto grid = make_time_grid(1.0, 0.01);  // 100 steps
  const int dim = 10;                           // 100 paths x 100 steps x 10 dims
  double sum = 0.0, sum_sq = 0.0;
  long count = 0;
  for (int p = 0; p < 100; ++p) {
    const auto path = sample_wiener(grid, dim, substream_seed(7u, p));
    sum += path.increments.sum();
    sum_sq += path.increments.squaredNorm();
    count += path.increments.size();
  }
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  const double se_mean = std::sqrt(grid.dt / count);
  CHECK(std::abs(mean) < 4.0 * se_mean);                 // law of large numbers
  CHECK(std::abs(var - grid.dt) < 0.05 * grid.dt);       // chi-square bound
}

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST_CASE("euler_maruyama zero dynamics freeze the state") {
  const auto grid = make_time_grid(1.0, 0.1);
  const auto path = sample_wiener(grid, 1, 5u);
  auto ctrl = constant_controller(0.0)();
  const auto traj = euler_maruyama(
      [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return v1(0.0); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); }, *ctrl, path, v1(1.0));
  for (const auto& x : traj.states) CHECK(x(0) == 1.0);
}

TEST_CASE("euler_maruyama matches the exact deterministic recursion") {
  // f(x) = -x, g = 0: x_N = (1 - dt)^N.
  const auto grid = make_time_grid(1.0, 0.01);
  const auto path = sample_wiener(grid, 1, 5u);
  auto ctrl = constant_controller(0.0)();
  const auto traj = euler_maruyama(
      [](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return v1(-x(0)); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); }, *ctrl, path, v1(1.0));
  double expected = 1.0;
  for (int k = 0; k < grid.n_steps; ++k) expected *= 1.0 - grid.dt;
  CHECK(traj.states.back()(0) == Catch::Approx(expected).epsilon(1e-13));
  CHECK(expected == Catch::Approx(0.3660).margin(5e-5));
}

TEST_CASE("euler_maruyama with unit diffusion telescopes the increments") {
  const auto grid = make_time_grid(1.0, 0.02);
  const auto path = sample_wiener(grid, 1, 11u);
  auto ctrl = constant_controller(0.0)();
  const auto traj = euler_maruyama(
      [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return v1(0.0); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); }, *ctrl, path,
      v1(0.0));
  CHECK(traj.states.back()(0) == Catch::Approx(path.increments.col(0).sum()).margin(1e-15));
}

TEST_CASE("euler_maruyama aborts on non-finite states") {
  const auto grid = make_time_grid(1.0, 0.1);
  const auto path = sample_wiener(grid, 1, 5u);
  auto ctrl = constant_controller(0.0)();
  CHECK_THROWS_AS(
      euler_maruyama(
          [](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return v1(x(0) * 1e200); },
          [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); }, *ctrl, path,
          v1(1e200)),
      NumericalError);
}

namespace {

// Emits u(t) = cumulative observation so far; used to detect causality breaks.
class RecordingController final : public FeedbackController {
 public:
  void reset() override { y_ = 0.0; }
  Eigen::VectorXd feed(double, const Eigen::VectorXd& dy, double) override {
    if (dy.size() > 0) y_ += dy(0);
    return v1(y_);
  }

 private:
  double y_ = 0.0;
};

}  // namespace

TEST_CASE("closed loop is causal under path splicing") {
  // Perturbing increments after step K must not change x(s), u(s) for s <= K.
  const auto grid = make_time_grid(1.0, 0.05);
  auto base = sample_wiener(grid, 2, 99u);  // 1 state noise + 1 observation noise channel
  auto spliced = base;
  const int K = 10;
  for (int k = K; k < grid.n_steps; ++k) spliced.increments.row(k).setConstant(0.77);

  const DriftFn drift = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return v1(-x(0) + u(0));
  };
  const DiffusionFn diff = [](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(1, 1);
  };
  const ObservationFn obs = [](const Eigen::VectorXd& x) { return x; };

  RecordingController c1, c2;
  const auto t1 = euler_maruyama(drift, diff, obs, 1, c1, base, v1(0.5));
  const auto t2 = euler_maruyama(drift, diff, obs, 1, c2, spliced, v1(0.5));
  for (int k = 0; k <= K; ++k) {
    CHECK(t1.states[k] == t2.states[k]);
    if (k < K) CHECK(t1.controls[k] == t2.controls[k]);
  }
  CHECK(t1.states.back() != t2.states.back());
}

TEST_CASE("strong error against a fine reference improves when dt halves") {
  // OU: f(x) = -x, g = 1, common noise across refinement levels.
  const double T = 1.0;
  const int n_fine = 512;  // reference level
  const int n_paths = 1000;
  double err_coarse = 0.0, err_half = 0.0;

  for (int p = 0; p < n_paths; ++p) {
    RandomStream stream(substream_seed(2024u, p));
    Eigen::VectorXd dw(n_fine);
    const double dt_fine = T / n_fine;
    for (int k = 0; k < n_fine; ++k) dw(k) = std::sqrt(dt_fine) * stream.gaussian();

    auto integrate = [&](int n_steps) {
      const int ratio = n_fine / n_steps;
      const double dt = T / n_steps;
      double x = 1.0;
      for (int k = 0; k < n_steps; ++k) {
        double inc = 0.0;
        for (int j = 0; j < ratio; ++j) inc += dw(k * ratio + j);
        x += -x * dt + inc;
      }
      return x;
    };

    const double x_ref = integrate(n_fine);
    err_coarse += std::pow(integrate(32) - x_ref, 2);
    err_half += std::pow(integrate(64) - x_ref, 2);
  }
  const double ratio = std::sqrt(err_coarse / err_half);
  CHECK(ratio >= 1.3);
}

TEST_CASE("monte_carlo reduces deterministically over substreams") {
  McOptions opt;
  opt.n_paths = 64;
  opt.seed = 3u;
  opt.threads = 1;
  auto run = [&](int threads) {
    McOptions o = opt;
    o.threads = threads;
    return monte_carlo(o, [](int, std::uint64_t seed) {
      RandomStream s(seed);
      return s.gaussian();
    });
  };
  const auto a = run(1);
  const auto b = run(4);
  CHECK(a.per_path == b.per_path);
  CHECK(a.estimate.value == b.estimate.value);
}
