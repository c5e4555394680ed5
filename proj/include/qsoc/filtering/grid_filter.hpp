#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "qsoc/classical/markov_chain.hpp"
#include "qsoc/core/counters.hpp"
#include "qsoc/filtering/info_state.hpp"

namespace qsoc {

// One step of the chain filter, split into prediction (forward Kolmogorov)
// and a Bayes-style multiplicative correction:
//   predict:  pi <- pi + Q(u)^T pi dt
//   correct:  w_i <- w_i (1 + (h_i - pi(h))(dy - pi(h) dt)), clip, renormalize.
inline InfoState filter_step(const InfoState& pi, const MarkovChainModel& chain, int u_index,
                             double dy, double dt, FilterStats* stats = nullptr) {
  const int n = chain.n_states();
  Eigen::VectorXd predicted(n);
  chain.apply_transposed(u_index, pi.weights, predicted);
  predicted = pi.weights + dt * predicted;

  const double h_bar = predicted.dot(chain.h_vals);
  const double innovation = dy - h_bar * dt;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = predicted(i) * (1.0 + (chain.h_vals(i) - h_bar) * innovation);
    if (w < 0.0) {
      w = 0.0;
      if (stats) ++stats->clipped;
    }
    predicted(i) = w;
    sum += w;
  }
  if (!(sum > 0.0)) {
    throw NumericalError("filter collapse: all weights vanished after correction (dy=" +
                         std::to_string(dy) + ", dt=" + std::to_string(dt) + ")");
  }
  return InfoState{predicted / sum};
}

// One Euler step of the risk-sensitive (Zakai-form) recursion
//   w <- w + [Q(u)^T + mu diag(L(., u))] w dt + diag(h) w dy,
// with the magnitude rebalanced into log_scale when it leaves [1e-6, 1e6].
// running_cost holds L(x_i, u) sampled on the chain grid for the given u.
inline UnnormalizedInfoState rs_filter_step(const UnnormalizedInfoState& sigma,
                                            const MarkovChainModel& chain, int u_index,
                                            double dy, double dt, double mu,
                                            const Eigen::VectorXd& running_cost,
                                            FilterStats* stats = nullptr) {
  const int n = chain.n_states();
  Eigen::VectorXd drift(n);
  chain.apply_transposed(u_index, sigma.weights, drift);

  UnnormalizedInfoState out;
  out.log_scale = sigma.log_scale;
  out.weights.resize(n);
  double max_w = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = sigma.weights(i) +
                     dt * (drift(i) + mu * running_cost(i) * sigma.weights(i)) +
                     dy * chain.h_vals(i) * sigma.weights(i);
    out.weights(i) = w;
    max_w = std::max(max_w, w);
  }
  const double floor = -1e-8 * std::max(max_w, 1e-300);
  for (int i = 0; i < n; ++i) {
    if (out.weights(i) < floor) {
      throw NumericalError(
          "rs_filter_step: negative weight beyond tolerance (explicit scheme unstable; "
          "reduce dt)");
    }
    if (out.weights(i) < 0.0) {
      out.weights(i) = 0.0;
      if (stats) ++stats->clipped;
    }
  }
  if (!(max_w > 0.0)) throw NumericalError("rs_filter_step: state vanished");
  if (max_w < 1e-6 || max_w > 1e6) {
    out.weights /= max_w;
    out.log_scale += std::log(max_w);
    if (stats) ++stats->rebalances;
  }
  return out;
}

// Upwind transition rates recomputed at an arbitrary control value, for
// controllers outside the finite control set (e.g. the continuous LQG law).
struct ChainRates {
  Eigen::VectorXd right, left;

  void fill(const ClassicalModel& model, const Eigen::VectorXd& grid,
            const Eigen::VectorXd& u) {
    const int n = static_cast<int>(grid.size());
    const double dx = grid(1) - grid(0);
    right.resize(n);
    left.resize(n);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, grid(i));
      const double f = model.drift(x, u)(0);
      const double g = model.diffusion(x)(0, 0);
      const double diffusive = g * g / (2.0 * dx * dx);
      right(i) = i + 1 < n ? diffusive + std::max(f, 0.0) / dx : 0.0;
      left(i) = i > 0 ? diffusive + std::max(-f, 0.0) / dx : 0.0;
    }
  }

  // q = Q(u)^T p with the rates above.
  void apply_transposed(const Eigen::VectorXd& p, Eigen::VectorXd& q) const {
    const int n = static_cast<int>(p.size());
    for (int i = 0; i < n; ++i) {
      double acc = -(right(i) + left(i)) * p(i);
      if (i > 0) acc += right(i - 1) * p(i - 1);
      if (i + 1 < n) acc += left(i + 1) * p(i + 1);
      q(i) = acc;
    }
  }
};

inline InfoState filter_step(const InfoState& pi, const ClassicalModel& model,
                             const MarkovChainModel& chain, const Eigen::VectorXd& u,
                             double dy, double dt, FilterStats* stats = nullptr) {
  const int n = chain.n_states();
  ChainRates rates;
  rates.fill(model, chain.grid, u);
  Eigen::VectorXd predicted(n);
  rates.apply_transposed(pi.weights, predicted);
  predicted = pi.weights + dt * predicted;

  const double h_bar = predicted.dot(chain.h_vals);
  const double innovation = dy - h_bar * dt;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = predicted(i) * (1.0 + (chain.h_vals(i) - h_bar) * innovation);
    if (w < 0.0) {
      w = 0.0;
      if (stats) ++stats->clipped;
    }
    predicted(i) = w;
    sum += w;
  }
  if (!(sum > 0.0))
    throw NumericalError("filter collapse: all weights vanished after correction (dy=" +
                         std::to_string(dy) + ", dt=" + std::to_string(dt) + ")");
  return InfoState{predicted / sum};
}

inline UnnormalizedInfoState rs_filter_step(const UnnormalizedInfoState& sigma,
                                            const ClassicalModel& model,
                                            const MarkovChainModel& chain,
                                            const Eigen::VectorXd& u, double dy, double dt,
                                            double mu, const CostSpec& cost,
                                            FilterStats* stats = nullptr) {
  const int n = chain.n_states();
  ChainRates rates;
  rates.fill(model, chain.grid, u);
  Eigen::VectorXd drift(n);
  rates.apply_transposed(sigma.weights, drift);

  UnnormalizedInfoState out;
  out.log_scale = sigma.log_scale;
  out.weights.resize(n);
  double max_w = 0.0;
  for (int i = 0; i < n; ++i) {
    const double running = cost.running(Eigen::VectorXd::Constant(1, chain.grid(i)), u);
    const double w = sigma.weights(i) + dt * (drift(i) + mu * running * sigma.weights(i)) +
                     dy * chain.h_vals(i) * sigma.weights(i);
    out.weights(i) = w;
    max_w = std::max(max_w, w);
  }
  const double floor = -1e-8 * std::max(max_w, 1e-300);
  for (int i = 0; i < n; ++i) {
    if (out.weights(i) < floor)
      throw NumericalError(
          "rs_filter_step: negative weight beyond tolerance (explicit scheme unstable; "
          "reduce dt)");
    if (out.weights(i) < 0.0) {
      out.weights(i) = 0.0;
      if (stats) ++stats->clipped;
    }
  }
  if (!(max_w > 0.0)) throw NumericalError("rs_filter_step: state vanished");
  if (max_w < 1e-6 || max_w > 1e6) {
    out.weights /= max_w;
    out.log_scale += std::log(max_w);
    if (stats) ++stats->rebalances;
  }
  return out;
}

// Samples L(x_i, u) over the chain grid for one control value.
inline Eigen::VectorXd running_cost_on_grid(const MarkovChainModel& chain, const CostSpec& cost,
                                            int u_index) {
  const int n = chain.n_states();
  Eigen::VectorXd vals(n);
  for (int i = 0; i < n; ++i)
    vals(i) = cost.running(Eigen::VectorXd::Constant(1, chain.grid(i)),
                           chain.control_set[u_index]);
  return vals;
}

inline Eigen::VectorXd terminal_cost_on_grid(const MarkovChainModel& chain,
                                             const CostSpec& cost) {
  const int n = chain.n_states();
  Eigen::VectorXd vals(n);
  for (int i = 0; i < n; ++i)
    vals(i) = cost.terminal(Eigen::VectorXd::Constant(1, chain.grid(i)));
  return vals;
}

}  // namespace qsoc
