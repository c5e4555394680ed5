#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "qsoc/core/errors.hpp"
#include "qsoc/core/rng.hpp"
#include "qsoc/core/sde.hpp"

namespace qsoc {

// Controlled diffusion dx = f(x,u)dt + g(x)dw observed through dy = h(x)dt + dv.
// The control set lists the admissible control values used by the chain and DP
// modules; simulation itself accepts whatever a controller emits.
struct ClassicalModel {
  int state_dim = 1;
  int obs_dim = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  ObservationFn observation;
  std::vector<Eigen::VectorXd> control_set;
};

// Nonnegative running and terminal costs; mu > 0 selects the risk-sensitive
// exponential-of-integral objective.
struct CostSpec {
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> running;
  std::function<double(const Eigen::VectorXd&)> terminal;
  double mu = 0.0;
};

// Initial state with independent per-component Gaussian spread (std = 0 gives
// a deterministic start).
struct InitialState {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  Eigen::VectorXd sample(RandomStream& stream) const {
    Eigen::VectorXd x = mean;
    for (int i = 0; i < x.size(); ++i)
      if (stddev.size() > i && stddev(i) > 0.0) x(i) += stddev(i) * stream.gaussian();
    return x;
  }

  static InitialState deterministic(double x0) {
    InitialState s;
    s.mean = Eigen::VectorXd::Constant(1, x0);
    s.stddev = Eigen::VectorXd::Zero(1);
    return s;
  }

  static InitialState gaussian1d(double mean, double std) {
    InitialState s;
    s.mean = Eigen::VectorXd::Constant(1, mean);
    s.stddev = Eigen::VectorXd::Constant(1, std);
    return s;
  }
};

namespace models {

// f = a x + b u, g = sigma, h = c x.
inline ClassicalModel lqg_1d(double a, double b, double c, double sigma,
                             std::vector<double> controls) {
  ClassicalModel m;
  m.state_dim = 1;
  m.obs_dim = 1;
  m.drift = [a, b](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return Eigen::VectorXd::Constant(1, a * x(0) + b * u(0));
  };
  m.diffusion = [sigma](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, sigma);
  };
  m.observation = [c](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, c * x(0));
  };
  for (double u : controls) m.control_set.push_back(Eigen::VectorXd::Constant(1, u));
  return m;
}

// Double-well benchmark f = u - x^3 + x, g = sigma, h = x.
inline ClassicalModel bench_bimodal(double sigma, std::vector<double> controls) {
  ClassicalModel m;
  m.state_dim = 1;
  m.obs_dim = 1;
  m.drift = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const double v = x(0);
    return Eigen::VectorXd::Constant(1, u(0) - v * v * v + v);
  };
  m.diffusion = [sigma](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, sigma);
  };
  m.observation = [](const Eigen::VectorXd& x) { return x; };
  for (double u : controls) m.control_set.push_back(Eigen::VectorXd::Constant(1, u));
  return m;
}

inline CostSpec quadratic_cost(double q, double r, double p, double target = 0.0,
                               double mu = 0.0) {
  CostSpec c;
  c.running = [q, r, target](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const double e = x(0) - target;
    return q * e * e + r * u.squaredNorm();
  };
  c.terminal = [p, target](const Eigen::VectorXd& x) {
    const double e = x(0) - target;
    return p * e * e;
  };
  c.mu = mu;
  return c;
}

}  // namespace models

}  // namespace qsoc
