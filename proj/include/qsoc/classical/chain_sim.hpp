#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qsoc/classical/markov_chain.hpp"
#include "qsoc/core/rng.hpp"
#include "qsoc/core/time_grid.hpp"

namespace qsoc {

// Discrete-time simulation of the chain itself (transition matrix I + Q dt)
// together with its observation record dy = h(x) dt + dv. This is the
// correctly specified model for the grid filter, used by the tower-property
// and innovation tests.
struct ChainPath {
  std::vector<int> states;       // length n_steps + 1
  std::vector<double> d_obs;     // length n_steps
};

inline ChainPath simulate_chain(const MarkovChainModel& chain, int u_index, int state0,
                                const TimeGrid& times, RandomStream& stream) {
  const int n = chain.n_states();
  const double dt = times.dt;
  const Eigen::MatrixXd& Q = chain.generators[u_index];
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) + dt * Q;
  for (int i = 0; i < n; ++i)
    if (P(i, i) < 0.0)
      throw ValidationError("simulate_chain: dt too large for a valid transition matrix");

  ChainPath path;
  path.states.reserve(times.n_steps + 1);
  path.d_obs.reserve(times.n_steps);
  int x = state0;
  path.states.push_back(x);
  const double sqrt_dt = std::sqrt(dt);
  for (int k = 0; k < times.n_steps; ++k) {
    path.d_obs.push_back(chain.h_vals(x) * dt + sqrt_dt * stream.gaussian());
    const double r = stream.uniform();
    double acc = 0.0;
    int next = x;
    for (int j = 0; j < n; ++j) {
      acc += P(x, j);
      if (r <= acc) {
        next = j;
        break;
      }
    }
    x = next;
    path.states.push_back(x);
  }
  return path;
}

}  // namespace qsoc
