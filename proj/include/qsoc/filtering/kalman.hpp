#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qsoc/core/errors.hpp"

namespace qsoc {

struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// dx = (a x + b u) dt + g dw,  dy = c x dt + dv.
struct LinearGaussianModel {
  Eigen::MatrixXd a, b, c, g;

  static LinearGaussianModel scalar(double a, double b, double c, double sigma) {
    LinearGaussianModel m;
    m.a = Eigen::MatrixXd::Constant(1, 1, a);
    m.b = Eigen::MatrixXd::Constant(1, 1, b);
    m.c = Eigen::MatrixXd::Constant(1, 1, c);
    m.g = Eigen::MatrixXd::Constant(1, 1, sigma);
    return m;
  }
};

struct KalmanStats {
  long resymmetrized = 0;  // steps where the covariance lost symmetry beyond 1e-8
};

// One Euler step of the continuous-time Kalman-Bucy recursion: predict mean
// and covariance, correct with gain P c^T against the innovation dy - c m dt.
inline GaussianState kalman_step(const GaussianState& state, const LinearGaussianModel& model,
                                 const Eigen::VectorXd& u, const Eigen::VectorXd& dy, double dt,
                                 KalmanStats* stats = nullptr) {
  const Eigen::MatrixXd gain = state.cov * model.c.transpose();
  GaussianState next;
  next.mean = state.mean + (model.a * state.mean + model.b * u) * dt +
              gain * (dy - model.c * state.mean * dt);
  next.cov = state.cov +
             (model.a * state.cov + state.cov * model.a.transpose() +
              model.g * model.g.transpose() - gain * model.c * state.cov) *
                 dt;
  const double asym = (next.cov - next.cov.transpose()).lpNorm<Eigen::Infinity>();
  if (asym > 1e-8 && stats) ++stats->resymmetrized;
  next.cov = 0.5 * (next.cov + next.cov.transpose());
  if (next.cov.rows() == 1) {
    if (next.cov(0, 0) < -1e-10)
      throw NumericalError("kalman_step: covariance fell below the PSD tolerance");
    next.cov(0, 0) = std::max(next.cov(0, 0), 0.0);
  }
  return next;
}

}  // namespace qsoc
