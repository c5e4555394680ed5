#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "qsoc/core/controller.hpp"
#include "qsoc/core/errors.hpp"
#include "qsoc/core/wiener.hpp"

namespace qsoc {

using DriftFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using DiffusionFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using ObservationFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Closed-loop sample path of dx = f(x,u)dt + g(x)dw, dy = h(x)dt + dv.
struct Trajectory {
  TimeGrid grid;
  std::vector<Eigen::VectorXd> states;        // length n_steps + 1
  std::vector<Eigen::VectorXd> controls;      // length n_steps
  std::vector<Eigen::VectorXd> observations;  // cumulative record, y(0) = 0
};

// Explicit Euler-Maruyama driver. The path must carry state noise in its
// leading columns and observation noise in the trailing obs_dim columns.
// Pass obs_dim = 0 (and a null observation) for a plain state SDE.
inline Trajectory euler_maruyama(const DriftFn& drift, const DiffusionFn& diffusion,
                                 const ObservationFn& observation, int obs_dim,
                                 FeedbackController& controller, const WienerPath& path,
                                 const Eigen::VectorXd& x0) {
  const int n = path.grid.n_steps;
  const double dt = path.grid.dt;
  const int noise_dim = path.dim - obs_dim;
  if (noise_dim < 0) throw ValidationError("euler_maruyama: path.dim smaller than obs_dim");

  Trajectory traj;
  traj.grid = path.grid;
  traj.states.reserve(n + 1);
  traj.controls.reserve(n);
  traj.observations.reserve(n + 1);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(obs_dim);
  controller.reset();
  Eigen::VectorXd u = controller.feed(0.0, Eigen::VectorXd::Zero(obs_dim), 0.0);

  traj.states.push_back(x);
  traj.observations.push_back(y);

  for (int k = 0; k < n; ++k) {
    const auto dw = path.increments.row(k).head(noise_dim).transpose();
    Eigen::VectorXd x_next = x + drift(x, u) * dt;
    if (noise_dim > 0) x_next += diffusion(x) * dw;
    if (!x_next.allFinite()) {
      throw NumericalError("euler_maruyama: non-finite state at step " + std::to_string(k));
    }
    Eigen::VectorXd dy(obs_dim);
    if (obs_dim > 0) {
      dy = observation(x) * dt + path.increments.row(k).tail(obs_dim).transpose();
      y += dy;
    }
    traj.controls.push_back(u);
    x = x_next;
    traj.states.push_back(x);
    traj.observations.push_back(y);
    if (k + 1 < n) u = controller.feed(path.grid.time_at(k + 1), dy, dt);
  }
  return traj;
}

inline Trajectory euler_maruyama(const DriftFn& drift, const DiffusionFn& diffusion,
                                 FeedbackController& controller, const WienerPath& path,
                                 const Eigen::VectorXd& x0) {
  return euler_maruyama(drift, diffusion, nullptr, 0, controller, path, x0);
}

}  // namespace qsoc
