#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qsoc/classical/model.hpp"
#include "qsoc/core/errors.hpp"

namespace qsoc {

// Finite-state approximation of the controlled diffusion: one generator matrix
// per control value, observation values sampled at the grid nodes. Generators
// built by discretize_generator are tridiagonal; the banded vectors are cached
// for the filter hot loops.
struct MarkovChainModel {
  Eigen::VectorXd grid;
  double dx = 0.0;
  std::vector<Eigen::VectorXd> control_set;
  std::vector<Eigen::MatrixXd> generators;  // Q(u), zero row sums
  Eigen::VectorXd h_vals;

  bool tridiagonal = false;
  // Per control: sub-, main and super-diagonal of Q (lower[i] = Q(i, i-1)).
  std::vector<Eigen::VectorXd> lower, diag, upper;

  int n_states() const { return static_cast<int>(grid.size()); }
  int n_controls() const { return static_cast<int>(generators.size()); }

  // q = Q(u)^T p, the forward (Kolmogorov) action on distributions.
  void apply_transposed(int u_index, const Eigen::VectorXd& p, Eigen::VectorXd& q) const {
    const int n = n_states();
    if (tridiagonal) {
      const auto& lo = lower[u_index];
      const auto& di = diag[u_index];
      const auto& up = upper[u_index];
      for (int i = 0; i < n; ++i) {
        double acc = di(i) * p(i);
        if (i > 0) acc += up(i - 1) * p(i - 1);
        if (i + 1 < n) acc += lo(i + 1) * p(i + 1);
        q(i) = acc;
      }
    } else {
      q.noalias() = generators[u_index].transpose() * p;
    }
  }

  void validate() const {
    for (const auto& Q : generators) {
      if (Q.rows() != grid.size() || Q.cols() != grid.size())
        throw ValidationError("MarkovChainModel: generator dimension mismatch");
      for (int i = 0; i < Q.rows(); ++i) {
        double row = 0.0;
        for (int j = 0; j < Q.cols(); ++j) {
          if (i != j && Q(i, j) < -1e-12)
            throw ValidationError("MarkovChainModel: negative off-diagonal rate");
          row += Q(i, j);
        }
        if (std::abs(row) > 1e-9)
          throw ValidationError("MarkovChainModel: generator row sum " + std::to_string(row));
      }
    }
  }
};

inline void cache_tridiagonal(MarkovChainModel& chain) {
  const int n = chain.n_states();
  chain.tridiagonal = true;
  for (const auto& Q : chain.generators) {
    for (int i = 0; i < n && chain.tridiagonal; ++i)
      for (int j = 0; j < n; ++j)
        if (std::abs(i - j) > 1 && Q(i, j) != 0.0) {
          chain.tridiagonal = false;
          break;
        }
  }
  if (!chain.tridiagonal) return;
  chain.lower.clear();
  chain.diag.clear();
  chain.upper.clear();
  for (const auto& Q : chain.generators) {
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(n), di(n), up = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      di(i) = Q(i, i);
      if (i > 0) lo(i) = Q(i, i - 1);
      if (i + 1 < n) up(i) = Q(i, i + 1);
    }
    chain.lower.push_back(std::move(lo));
    chain.diag.push_back(std::move(di));
    chain.upper.push_back(std::move(up));
  }
}

// Hand-built chain (used by the small DP examples and tests).
inline MarkovChainModel make_chain(Eigen::VectorXd grid, std::vector<Eigen::MatrixXd> generators,
                                   Eigen::VectorXd h_vals,
                                   std::vector<Eigen::VectorXd> control_set) {
  MarkovChainModel chain;
  chain.grid = std::move(grid);
  chain.dx = chain.grid.size() > 1 ? chain.grid(1) - chain.grid(0) : 0.0;
  chain.generators = std::move(generators);
  chain.h_vals = std::move(h_vals);
  chain.control_set = std::move(control_set);
  chain.validate();
  cache_tridiagonal(chain);
  return chain;
}

// Upwind finite-difference approximation of the generator
// L^u(phi) = f phi' + (1/2) g^2 phi'' on a uniform scalar grid.
// Interior rates: right = g^2/(2 dx^2) + f^+/dx, left = g^2/(2 dx^2) + f^-/dx;
// boundary nodes reflect (rates to missing neighbours are dropped).
inline MarkovChainModel discretize_generator(const ClassicalModel& model,
                                             const Eigen::VectorXd& grid) {
  const int n = static_cast<int>(grid.size());
  if (n < 3) throw ValidationError("discretize_generator: need at least 3 grid points");
  if (model.state_dim != 1)
    throw ValidationError("discretize_generator: chain approximation requires state_dim == 1");
  const double dx = grid(1) - grid(0);
  if (!(dx > 0.0)) throw ValidationError("discretize_generator: grid spacing must be positive");
  for (int i = 1; i + 1 < n; ++i)
    if (std::abs((grid(i + 1) - grid(i)) - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
      throw ValidationError("discretize_generator: grid must be uniform");

  MarkovChainModel chain;
  chain.grid = grid;
  chain.dx = dx;
  chain.control_set = model.control_set;
  chain.h_vals.resize(n);
  for (int i = 0; i < n; ++i)
    chain.h_vals(i) = model.observation(Eigen::VectorXd::Constant(1, grid(i)))(0);

  for (const auto& u : model.control_set) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, grid(i));
      const double f = model.drift(x, u)(0);
      const double g = model.diffusion(x)(0, 0);
      const double diffusive = g * g / (2.0 * dx * dx);
      const double right = diffusive + std::max(f, 0.0) / dx;
      const double left = diffusive + std::max(-f, 0.0) / dx;
      if (i + 1 < n) Q(i, i + 1) = right;
      if (i > 0) Q(i, i - 1) = left;
      Q(i, i) = -(Q.row(i).sum() - Q(i, i));
    }
    chain.generators.push_back(std::move(Q));
  }
  chain.validate();
  cache_tridiagonal(chain);
  return chain;
}

// Matches a controller-emitted control value to its index in the control set.
inline int control_index(const std::vector<Eigen::VectorXd>& control_set,
                         const Eigen::VectorXd& u) {
  for (std::size_t i = 0; i < control_set.size(); ++i)
    if ((control_set[i] - u).lpNorm<Eigen::Infinity>() <= 1e-12) return static_cast<int>(i);
  throw ValidationError("control value not in the model's control set");
}

}  // namespace qsoc
