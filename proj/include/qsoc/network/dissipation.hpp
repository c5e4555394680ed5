#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "qsoc/core/monte_carlo.hpp"
#include "qsoc/network/linear_system.hpp"

namespace qsoc {

// Storage function V(x) = x^T M x + offset over the network quadratures.
struct StorageForm {
  Eigen::MatrixXd M;
  double offset = 0.0;
};

// Supply rate as a quadratic form over selected ports: the stacked vector is
// [w quadratures; z quadratures] with w the named inputs and z the named
// outputs. offset adds a constant rate (the lambda term absorbing vacuum
// noise contributions).
struct SupplyForm {
  std::vector<std::string> w_ports;
  std::vector<std::string> z_ports;
  Eigen::MatrixXd weight;
  double offset = 0.0;
};

// Default H-infinity supply gamma^2 |w|^2 - |z|^2.
inline SupplyForm gain_supply(double gamma, const std::string& w, const std::string& z,
                             double offset = 0.0) {
  SupplyForm s;
  s.w_ports = {w};
  s.z_ports = {z};
  s.weight = Eigen::MatrixXd::Zero(4, 4);
  s.weight.topLeftCorner(2, 2) = gamma * gamma * Eigen::MatrixXd::Identity(2, 2);
  s.weight.bottomRightCorner(2, 2) = -Eigen::MatrixXd::Identity(2, 2);
  s.offset = offset;
  return s;
}

struct DissipationReport {
  // Deterministic dissipativity LMI margin: lambda_max of the (x, w)-block of
  // d/dt V - S with w treated as an arbitrary signal. <= 0 certifies the
  // supply dominates the storage derivative.
  double quad_margin = 0.0;
  bool algebraic_pass = false;

  // Lyapunov decay rate lambda_max(A^T M + M A, M) when the check is portless
  // and M is positive definite.
  double decay_margin = 0.0;
  bool has_decay_margin = false;

  // State-independent drift under vacuum inputs: noise feeding the storage
  // minus the constant part of the expected supply rate.
  double const_margin = 0.0;

  // Monte Carlo of the quadrature dynamics with vacuum-statistics inputs:
  // worst-time sample mean of V(t) - V(0) - int S, with its standard error.
  double empirical_worst_mean = 0.0;
  double empirical_worst_se = 0.0;
  double empirical_worst_time = 0.0;
};

struct DissipationMcOptions {
  double horizon = 5.0;
  double dt = 1e-3;
  int n_traj = 0;  // 0 disables the empirical check
  std::uint64_t seed = 1;
  int threads = 1;
  double x0_scale = 1.0;  // 1 = vacuum covariance
  int checkpoints = 20;
};

inline DissipationReport check_dissipation(const LinearQuantumSystem& sys,
                                           const StorageForm& storage, const SupplyForm& supply,
                                           const DissipationMcOptions& opt = {}) {
  sys.validate();
  const int n = sys.n_states();
  if (storage.M.rows() != n || storage.M.cols() != n)
    throw ValidationError("check_dissipation: storage dimension mismatch");
  const Eigen::MatrixXd M = 0.5 * (storage.M + storage.M.transpose());

  const int mw = 2 * static_cast<int>(supply.w_ports.size());
  const int mz = 2 * static_cast<int>(supply.z_ports.size());
  if (supply.weight.rows() != mw + mz || supply.weight.cols() != mw + mz)
    throw ValidationError("check_dissipation: supply weight dimension mismatch");

  std::vector<int> w_channels, z_channels;
  for (const auto& name : supply.w_ports) w_channels.push_back(sys.input_index(name));
  for (const auto& name : supply.z_ports) z_channels.push_back(sys.output_index(name));
  std::vector<int> v_channels;
  for (int i = 0; i < sys.n_inputs(); ++i)
    if (std::find(w_channels.begin(), w_channels.end(), i) == w_channels.end())
      v_channels.push_back(i);

  Eigen::MatrixXd Bw(n, mw), Bv(n, 2 * static_cast<int>(v_channels.size()));
  for (std::size_t k = 0; k < w_channels.size(); ++k)
    Bw.middleCols(2 * k, 2) = sys.B.middleCols(2 * w_channels[k], 2);
  for (std::size_t k = 0; k < v_channels.size(); ++k)
    Bv.middleCols(2 * k, 2) = sys.B.middleCols(2 * v_channels[k], 2);
  Eigen::MatrixXd Cz(mz, n), Dzw(mz, mw), Dzv(mz, Bv.cols()), Dz_all(mz, sys.B.cols());
  for (std::size_t k = 0; k < z_channels.size(); ++k) {
    Cz.middleRows(2 * k, 2) = sys.C.middleRows(2 * z_channels[k], 2);
    Dz_all.middleRows(2 * k, 2) = sys.D.middleRows(2 * z_channels[k], 2);
    for (std::size_t j = 0; j < w_channels.size(); ++j)
      Dzw.block(2 * k, 2 * j, 2, 2) = sys.D.block(2 * z_channels[k], 2 * w_channels[j], 2, 2);
    for (std::size_t j = 0; j < v_channels.size(); ++j)
      Dzv.block(2 * k, 2 * j, 2, 2) = sys.D.block(2 * z_channels[k], 2 * v_channels[j], 2, 2);
  }

  DissipationReport report;

  // (i) algebraic: quadratic form of d/dt V - S over (x, w).
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(mw + mz, n + mw);
  T.block(0, n, mw, mw).setIdentity();
  T.block(mw, 0, mz, n) = Cz;
  T.block(mw, n, mz, mw) = Dzw;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n + mw, n + mw);
  Q.topLeftCorner(n, n) = sys.A.transpose() * M + M * sys.A;
  Q.topRightCorner(n, mw) = M * Bw;
  Q.bottomLeftCorner(mw, n) = Bw.transpose() * M;
  Q -= T.transpose() * supply.weight * T;
  {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Q + Q.transpose()));
    report.quad_margin = eig.eigenvalues().maxCoeff();
    report.algebraic_pass = report.quad_margin <= 1e-9;
  }

  if (mw + mz == 0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> m_eig(M);
    if (m_eig.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, m_eig.eigenvalues().maxCoeff())) {
      const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> gen(
          sys.A.transpose() * M + M * sys.A, M);
      report.decay_margin = gen.eigenvalues().maxCoeff();
      report.has_decay_margin = true;
    }
  }

  // Supply as a quadratic form over (x, all-input noise e) by substituting
  // z = Cz x + D e and w = selector e. The pathwise integral applies the Ito
  // rules blockwise: smooth-squared terms carry dt, cross terms ride the
  // martingale increments, noise-squared terms are quadratic variation.
  const int me = static_cast<int>(sys.B.cols());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(mw + mz, n + me);
  for (std::size_t j = 0; j < w_channels.size(); ++j)
    P.block(2 * j, n + 2 * w_channels[j], 2, 2).setIdentity();
  P.block(mw, 0, mz, n) = Cz;
  P.block(mw, n, mz, me) = Dz_all;
  const Eigen::MatrixXd S_full = P.transpose() * supply.weight * P;
  const Eigen::MatrixXd S_xx = S_full.topLeftCorner(n, n);
  const Eigen::MatrixXd S_xe = S_full.topRightCorner(n, me);
  const Eigen::MatrixXd S_ee = S_full.bottomRightCorner(me, me);

  // state-independent drift under vacuum statistics on every input
  const double storage_noise = (sys.B.transpose() * M * sys.B).trace();
  report.const_margin = storage_noise - S_ee.trace() - supply.offset;

  // (ii) empirical Monte Carlo with vacuum-statistics inputs
  if (opt.n_traj > 1) {
    const int n_steps = static_cast<int>(std::lround(opt.horizon / opt.dt));
    const int n_checks = std::min(opt.checkpoints, n_steps);
    const int stride = n_steps / n_checks;
    std::vector<std::vector<double>> samples(n_checks,
                                             std::vector<double>(opt.n_traj, 0.0));
    parallel_for(opt.n_traj, opt.threads, [&](int p) {
      RandomStream stream(substream_seed(opt.seed, p));
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i) x(i) = opt.x0_scale * stream.gaussian();
      const double v0 = x.dot(M * x);
      double supply_sum = 0.0;
      const double sqrt_dt = std::sqrt(opt.dt);
      Eigen::VectorXd xi(me);
      int check = 0;
      for (int k = 0; k < n_steps; ++k) {
        for (int i = 0; i < me; ++i) xi(i) = sqrt_dt * stream.gaussian();
        supply_sum += x.dot(S_xx * x) * opt.dt + 2.0 * x.dot(S_xe * xi) +
                      xi.dot(S_ee * xi) + supply.offset * opt.dt;
        x += sys.A * x * opt.dt + sys.B * xi;
        if ((k + 1) % stride == 0 && check < n_checks) {
          samples[check][p] = x.dot(M * x) - v0 - supply_sum;
          ++check;
        }
      }
    });
    for (int c = 0; c < n_checks; ++c) {
      const Estimate est = summarize(samples[c]);
      if (c == 0 || est.value > report.empirical_worst_mean) {
        report.empirical_worst_mean = est.value;
        report.empirical_worst_se = est.std_error;
        report.empirical_worst_time = (c + 1) * stride * opt.dt;
      }
    }
  }
  return report;
}

}  // namespace qsoc
