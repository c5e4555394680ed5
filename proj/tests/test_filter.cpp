#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "qsoc/classical/chain_sim.hpp"
#include "qsoc/filtering/controllers.hpp"
#include "qsoc/filtering/infostate_cost.hpp"

using namespace qsoc;

namespace {

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

MarkovChainModel two_state_chain(double rate01, double rate10, double h0, double h1) {
  Eigen::MatrixXd Q(2, 2);
  Q << -rate01, rate01, rate10, -rate10;
  Eigen::VectorXd grid(2);
  grid << 0.0, 1.0;
  Eigen::VectorXd h(2);
  h << h0, h1;
  return make_chain(grid, {Q}, h, {Eigen::VectorXd::Zero(1)});
}

}  // namespace

TEST_CASE("filter_step: constant h and frozen chain change nothing") {
  const auto chain = two_state_chain(0.0, 0.0, 2.5, 2.5);
  InfoState pi{Eigen::VectorXd::Constant(2, 0.5)};
  const auto out = filter_step(pi, chain, 0, 0.37, 0.01);
  CHECK(out.weights(0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(out.weights(1) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("filter_step reproduces the hand-evaluated two-state correction") {
  // Q = 0, h = (0, 1), pi = (1/2, 1/2), dy = 0.1, dt = 0.01:
  // weights = (0.5 (1 - 0.5 * 0.095), 0.5 (1 + 0.5 * 0.095)) = (0.47625, 0.52375).
  const auto chain = two_state_chain(0.0, 0.0, 0.0, 1.0);
  InfoState pi{Eigen::VectorXd::Constant(2, 0.5)};
  const auto out = filter_step(pi, chain, 0, 0.1, 0.01);
  CHECK(out.weights(0) == Catch::Approx(0.47625).margin(1e-12));
  CHECK(out.weights(1) == Catch::Approx(0.52375).margin(1e-12));
  CHECK(out.weights.sum() == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("filter_step reports filter collapse on degenerate input") {
  // The multiplicative correction preserves total weight, so a healthy state
  // cannot collapse; a zero input state must be caught instead of propagating.
  const auto chain = two_state_chain(0.0, 0.0, 0.0, 1e4);
  InfoState zero{Eigen::VectorXd::Zero(2)};
  CHECK_THROWS_AS(filter_step(zero, chain, 0, -10.0, 0.01), NumericalError);

  // Extreme observations clip one state but still renormalize.
  InfoState pi{Eigen::VectorXd::Constant(2, 0.5)};
  FilterStats stats;
  const auto out = filter_step(pi, chain, 0, -10.0, 0.01, &stats);
  CHECK(stats.clipped == 1);
  CHECK(out.weights.sum() == Catch::Approx(1.0).margin(1e-12));
  CHECK(out.weights.minCoeff() >= 0.0);
}

TEST_CASE("averaged filter reproduces the unconditional chain law") {
  // tower-property oracle: E[pi_T] = exp(Q^T T) pi_0 on the correctly specified chain.
  const auto chain = two_state_chain(0.7, 0.4, 0.0, 1.0);
  const auto times = make_time_grid(1.0, 0.005);
  const int n_paths = 4000;
  Eigen::VectorXd mean_pi = Eigen::VectorXd::Zero(2);
  for (int p = 0; p < n_paths; ++p) {
    RandomStream stream(substream_seed(91u, p));
    const int x0 = stream.uniform() < 0.5 ? 0 : 1;
    const auto path = simulate_chain(chain, 0, x0, times, stream);
    InfoState pi{Eigen::VectorXd::Constant(2, 0.5)};
    for (int k = 0; k < times.n_steps; ++k)
      pi = filter_step(pi, chain, 0, path.d_obs[k], times.dt);
    mean_pi += pi.weights;
  }
  mean_pi /= n_paths;
  const Eigen::MatrixXd Pt = (chain.generators[0].transpose() * times.horizon).exp();
  const Eigen::VectorXd law = Pt * Eigen::VectorXd::Constant(2, 0.5);
  CHECK((mean_pi - law).lpNorm<Eigen::Infinity>() < 0.02);
}

TEST_CASE("innovations of the correctly specified filter are standard Gaussian") {
  const auto chain = two_state_chain(0.6, 0.9, -0.5, 1.5);
  const auto times = make_time_grid(1.0, 0.001);
  const int n_paths = 100;  // 100 x 1000 = 1e5 increments
  double sum = 0.0, sum_sq = 0.0;
  long count = 0;
  for (int p = 0; p < n_paths; ++p) {
    RandomStream stream(substream_seed(71u, p));
    const int x0 = stream.uniform() < 0.4 ? 0 : 1;
    const auto path = simulate_chain(chain, 0, x0, times, stream);
    InfoState pi{(Eigen::VectorXd(2) << 0.4, 0.6).finished()};
    for (int k = 0; k < times.n_steps; ++k) {
      const double h_bar = pi.expectation(chain.h_vals);
      const double nu = (path.d_obs[k] - h_bar * times.dt) / std::sqrt(times.dt);
      sum += nu;
      sum_sq += nu * nu;
      ++count;
      pi = filter_step(pi, chain, 0, path.d_obs[k], times.dt);
    }
  }
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(count)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / static_cast<double>(count)));
}

TEST_CASE("rs_filter_step with mu L = 0 is consistent with the normalized filter") {
  // Zakai/Kushner-Stratonovich consistency: normalizing the unnormalized run
  // approaches the normalized run as dt -> 0 (ratio test at dt, dt/2).
  // The pathwise discrepancy between the two discretizations is a mean-zero
  // random walk of variance O(dt); compare in RMS over independent records.
  const auto chain = two_state_chain(0.5, 0.8, -1.0, 1.0);
  const Eigen::VectorXd zero_cost = Eigen::VectorXd::Zero(2);
  const int n_fine = 1024;
  const double T = 0.5;
  const double dt_fine = T / n_fine;

  auto discrepancy = [&](const Eigen::VectorXd& d_obs, int n_steps) {
    const int ratio = n_fine / n_steps;
    const double dt = T / n_steps;
    InfoState pi{Eigen::VectorXd::Constant(2, 0.5)};
    UnnormalizedInfoState sig{Eigen::VectorXd::Constant(2, 0.5), 0.0};
    for (int k = 0; k < n_steps; ++k) {
      double dy = 0.0;
      for (int j = 0; j < ratio; ++j) dy += d_obs(k * ratio + j);
      pi = filter_step(pi, chain, 0, dy, dt);
      sig = rs_filter_step(sig, chain, 0, dy, dt, 1.0, zero_cost);
    }
    return (sig.normalized().weights - pi.weights).lpNorm<Eigen::Infinity>();
  };

  double coarse_sq = 0.0, fine_sq = 0.0;
  for (int rec = 0; rec < 24; ++rec) {
    RandomStream stream(substream_seed(4242u, rec));
    Eigen::VectorXd d_obs(n_fine);
    for (int k = 0; k < n_fine; ++k)
      d_obs(k) = 0.3 * dt_fine + std::sqrt(dt_fine) * stream.gaussian();
    coarse_sq += std::pow(discrepancy(d_obs, 128), 2);
    fine_sq += std::pow(discrepancy(d_obs, 256), 2);
  }
  CHECK(std::sqrt(coarse_sq / fine_sq) >= 1.3);
}

TEST_CASE("rs_filter_step grows decoupled weights exactly") {
  // h = 0, Q = 0, L = 1: weights multiply by (1 + mu dt) each step.
  const auto chain = two_state_chain(0.0, 0.0, 0.0, 0.0);
  const Eigen::VectorXd ones_cost = Eigen::VectorXd::Ones(2);
  UnnormalizedInfoState sig{Eigen::VectorXd::Constant(2, 0.5), 0.0};
  const double mu = 0.7, dt = 0.05;
  for (int k = 0; k < 10; ++k) sig = rs_filter_step(sig, chain, 0, 0.0, dt, mu, ones_cost);
  const double expected = 0.5 * std::pow(1.0 + mu * dt, 10);
  CHECK(sig.weights(0) * std::exp(sig.log_scale) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("rs_filter_step single-state chain is the Euler likelihood product") {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd grid = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd h = Eigen::VectorXd::Ones(1);
  const auto chain = make_chain(grid, {Q}, h, {Eigen::VectorXd::Zero(1)});
  const Eigen::VectorXd zero_cost = Eigen::VectorXd::Zero(1);

  UnnormalizedInfoState sig{Eigen::VectorXd::Ones(1), 0.0};
  const double dys[3] = {0.12, -0.05, 0.31};
  for (double dy : dys) sig = rs_filter_step(sig, chain, 0, dy, 0.1, 0.5, zero_cost);
  const double expected = (1.0 + 0.12) * (1.0 - 0.05) * (1.0 + 0.31);
  CHECK(sig.weights(0) * std::exp(sig.log_scale) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("kalman_step: no measurement degenerates to the Lyapunov drift") {
  const auto model = LinearGaussianModel::scalar(-1.0, 1.0, 0.0, 1.0);
  GaussianState s{v1(0.5), Eigen::MatrixXd::Constant(1, 1, 0.2)};
  const double dt = 0.01;
  auto a = kalman_step(s, model, v1(0.0), v1(0.9), dt);   // dy should be ignored
  auto b = kalman_step(s, model, v1(0.0), v1(-0.4), dt);
  CHECK(a.mean(0) == b.mean(0));
  CHECK(a.cov(0, 0) == Catch::Approx(0.2 + (2.0 * -1.0 * 0.2 + 1.0) * dt).margin(1e-15));
}

TEST_CASE("kalman_step reaches the algebraic Riccati fixed point") {
  // a = -1, c = 1, sigma = 1: P_inf solves 2aP - P^2 + 1 = 0, root sqrt(2) - 1.
  const auto model = LinearGaussianModel::scalar(-1.0, 0.0, 1.0, 1.0);
  GaussianState s{v1(0.0), Eigen::MatrixXd::Zero(1, 1)};
  const double dt = 1e-3;
  for (int k = 0; k < 10000; ++k) s = kalman_step(s, model, v1(0.0), v1(0.0), dt);
  CHECK(std::abs(s.cov(0, 0) - (std::sqrt(2.0) - 1.0)) < 0.01 * (std::sqrt(2.0) - 1.0));
}

TEST_CASE("grid filter tracks the Kalman filter on the linear model") {
  const double a = -1.0, c = 1.0, sigma = 1.0;
  auto model = models::lqg_1d(a, 1.0, c, sigma, {0.0});
  const auto lin = LinearGaussianModel::scalar(a, 1.0, c, sigma);
  Eigen::VectorXd grid(121);
  for (int i = 0; i < 121; ++i) grid(i) = -3.0 + 0.05 * i;
  const auto chain = discretize_generator(model, grid);
  const auto times = make_time_grid(1.0, 1e-3);

  RandomStream stream(2718u);
  const double m0 = 0.0, s0 = 0.3;
  const Eigen::VectorXd x0 = v1(m0 + s0 * stream.gaussian());
  const auto path = sample_wiener(times, 2, stream, 2718u);
  auto ctrl = constant_controller(0.0)();
  const auto traj = euler_maruyama(model.drift, model.diffusion, model.observation, 1, *ctrl,
                                   path, x0);

  InfoState pi = InfoState::gaussian(grid, m0, s0);
  GaussianState kal{v1(m0), Eigen::MatrixXd::Constant(1, 1, s0 * s0)};
  double worst_mean = 0.0, worst_var = 0.0;
  for (int k = 0; k < times.n_steps; ++k) {
    const double dy = traj.observations[k + 1](0) - traj.observations[k](0);
    pi = filter_step(pi, chain, 0, dy, times.dt);
    kal = kalman_step(kal, lin, v1(0.0), v1(dy), times.dt);
    worst_mean = std::max(worst_mean, std::abs(pi.mean(grid) - kal.mean(0)));
    worst_var = std::max(worst_var, std::abs(pi.variance(grid) - kal.cov(0, 0)) / kal.cov(0, 0));
  }
  CHECK(worst_mean < 0.05);  // scale ~ the conditional std, 0.64 at steady state
  CHECK(worst_var < 0.05);
}

TEST_CASE("cost_via_infostate: empty cost") {
  auto model = models::lqg_1d(-1.0, 1.0, 1.0, 1.0, {0.0});
  Eigen::VectorXd grid(41);
  for (int i = 0; i < 41; ++i) grid(i) = -2.0 + 0.1 * i;
  const auto chain = discretize_generator(model, grid);
  CostSpec cost;
  cost.running = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; };
  cost.terminal = [](const Eigen::VectorXd&) { return 0.0; };
  McOptions opt{8, 1u, 1};
  const auto times = make_time_grid(0.5, 0.005);
  const auto init = InitialState::gaussian1d(0.0, 0.3);
  const auto rn = cost_via_infostate(model, chain, cost, init, times, constant_controller(0.0),
                                     opt, InfostateMode::risk_neutral);
  CHECK(rn.estimate.value == 0.0);

  // With h = 0 the reference likelihood is identically 1 and the empty-cost
  // risk-sensitive value is exactly 1 per path.
  cost.mu = 0.1;
  auto blind = models::lqg_1d(-1.0, 1.0, 0.0, 1.0, {0.0});
  const auto blind_chain = discretize_generator(blind, grid);
  const auto rs = cost_via_infostate(blind, blind_chain, cost, init, times,
                                     constant_controller(0.0), opt,
                                     InfostateMode::risk_sensitive);
  CHECK(rs.estimate.value == Catch::Approx(1.0).margin(1e-9));
  CHECK(rs.estimate.std_error == Catch::Approx(0.0).margin(1e-12));

  // With h != 0 the per-path mass is the likelihood, mean 1 within noise.
  const auto rs_noisy = cost_via_infostate(model, chain, cost, init, times,
                                           constant_controller(0.0),
                                           McOptions{2000, 9u, 1},
                                           InfostateMode::risk_sensitive);
  CHECK(std::abs(rs_noisy.estimate.value - 1.0) < 3.0 * rs_noisy.estimate.std_error);
}

TEST_CASE("cost_via_infostate agrees with direct Monte Carlo (tower property)") {
  auto model = models::lqg_1d(-1.0, 1.0, 1.0, 1.0, {-1.0, 0.0, 1.0});
  Eigen::VectorXd grid(121);
  for (int i = 0; i < 121; ++i) grid(i) = -3.0 + 0.05 * i;
  const auto chain = discretize_generator(model, grid);
  const CostSpec cost = models::quadratic_cost(1.0, 0.1, 0.5);
  const auto times = make_time_grid(1.0, 1e-3);
  const auto init = InitialState::gaussian1d(0.0, 0.3);
  const auto lin = LinearGaussianModel::scalar(-1.0, 1.0, 1.0, 1.0);
  const GaussianState kal0{v1(0.0), Eigen::MatrixXd::Constant(1, 1, 0.09)};
  const auto controller = kalman_threshold_controller(lin, kal0, 0.0, 1.0, -1.0);

  McOptions opt{1500, 77u, 1};
  const auto direct = evaluate_cost_mc(model, cost, init, times, controller, opt);
  const auto via_pi = cost_via_infostate(model, chain, cost, init, times, controller, opt,
                                         InfostateMode::risk_neutral);
  const double combined = std::sqrt(std::pow(direct.estimate.std_error, 2) +
                                    std::pow(via_pi.estimate.std_error, 2));
  CHECK(std::abs(direct.estimate.value - via_pi.estimate.value) < 3.0 * combined);
}

TEST_CASE("cost_via_infostate risk-sensitive matches direct Monte Carlo") {
  auto model = models::lqg_1d(-1.0, 1.0, 1.0, 1.0, {-1.0, 0.0, 1.0});
  Eigen::VectorXd grid(121);
  for (int i = 0; i < 121; ++i) grid(i) = -3.0 + 0.05 * i;
  const auto chain = discretize_generator(model, grid);
  CostSpec cost = models::quadratic_cost(1.0, 0.1, 0.5);
  cost.mu = 0.1;
  const auto times = make_time_grid(1.0, 1e-3);
  const auto init = InitialState::gaussian1d(0.0, 0.3);
  const auto lin = LinearGaussianModel::scalar(-1.0, 1.0, 1.0, 1.0);
  const GaussianState kal0{v1(0.0), Eigen::MatrixXd::Constant(1, 1, 0.09)};
  const auto controller = kalman_threshold_controller(lin, kal0, 0.0, 1.0, -1.0);

  McOptions opt{3000, 123u, 1};
  const auto direct = evaluate_rs_cost_mc(model, cost, init, times, controller, opt);
  const auto via_sigma = cost_via_infostate(model, chain, cost, init, times, controller, opt,
                                            InfostateMode::risk_sensitive);
  const double combined = std::sqrt(std::pow(direct.estimate.std_error, 2) +
                                    std::pow(via_sigma.estimate.std_error, 2));
  CHECK(std::abs(direct.estimate.value - via_sigma.estimate.value) < 3.0 * combined);
}
