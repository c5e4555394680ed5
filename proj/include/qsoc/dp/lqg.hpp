#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qsoc/core/controller.hpp"
#include "qsoc/core/time_grid.hpp"
#include "qsoc/filtering/kalman.hpp"

namespace qsoc {

// Scalar LQG synthesis output: backward control Riccati solution P(t), the
// feedback gain k(t) = b P(t) / r, and the Kalman parameters of the model.
struct LqgController {
  TimeGrid times;
  std::vector<double> riccati;  // P(t_k), k = 0..n_steps
  std::vector<double> gain;     // k(t_k)
  double a = 0, b = 0, c = 0, sigma = 0;
  double q = 0, r = 0, p = 0;
};

// Backward Euler sweep of -dP/dt = 2 a P - P^2 b^2 / r + q, P(T) = p.
inline LqgController lqg_synthesize(double a, double b, double c, double sigma, double q,
                                    double r, double p, const TimeGrid& times) {
  if (!(r > 0.0)) throw ValidationError("lqg_synthesize: control weight r must be positive");
  if (q < 0.0 || p < 0.0) throw ValidationError("lqg_synthesize: q and p must be nonnegative");
  LqgController ctrl;
  ctrl.times = times;
  ctrl.a = a;
  ctrl.b = b;
  ctrl.c = c;
  ctrl.sigma = sigma;
  ctrl.q = q;
  ctrl.r = r;
  ctrl.p = p;
  ctrl.riccati.assign(times.n_steps + 1, 0.0);
  ctrl.gain.assign(times.n_steps + 1, 0.0);
  double P = p;
  ctrl.riccati[times.n_steps] = P;
  ctrl.gain[times.n_steps] = b * P / r;
  for (int k = times.n_steps - 1; k >= 0; --k) {
    P += times.dt * (2.0 * a * P - P * P * b * b / r + q);
    if (!(std::abs(P) < 1e8)) {
      throw NumericalError("lqg_synthesize: Riccati blow-up at t = " +
                           std::to_string(times.time_at(k)));
    }
    ctrl.riccati[k] = P;
    ctrl.gain[k] = b * P / r;
  }
  return ctrl;
}

// Separation-structure controller: Kalman filter + certainty-equivalent
// linear gain, u(t) = -k(t) m(t).
class LqgFeedbackController final : public FeedbackController {
 public:
  LqgFeedbackController(LqgController lqg, GaussianState init)
      : lqg_(std::move(lqg)),
        model_(LinearGaussianModel::scalar(lqg_.a, lqg_.b, lqg_.c, lqg_.sigma)),
        init_(std::move(init)),
        state_(init_) {}

  void reset() override {
    state_ = init_;
    step_ = 0;
  }

  Eigen::VectorXd feed(double, const Eigen::VectorXd& dy, double dt) override {
    if (dt > 0.0 && dy.size() > 0) {
      state_ = kalman_step(state_, model_, last_u_, dy, dt);
      ++step_;
    }
    const int k = std::min(step_, static_cast<int>(lqg_.gain.size()) - 1);
    last_u_ = Eigen::VectorXd::Constant(1, -lqg_.gain[k] * state_.mean(0));
    return last_u_;
  }

 private:
  LqgController lqg_;
  LinearGaussianModel model_;
  GaussianState init_;
  GaussianState state_;
  Eigen::VectorXd last_u_ = Eigen::VectorXd::Zero(1);
  int step_ = 0;
};

inline ControllerFactory lqg_controller(const LqgController& lqg, const GaussianState& init,
                                        double gain_scale = 1.0) {
  LqgController scaled = lqg;
  for (auto& g : scaled.gain) g *= gain_scale;
  return [scaled, init] { return std::make_unique<LqgFeedbackController>(scaled, init); };
}

}  // namespace qsoc
