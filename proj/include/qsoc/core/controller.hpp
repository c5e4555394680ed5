#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

namespace qsoc {

// A causal feedback policy. The simulator feeds it the observation record one
// increment at a time, strictly in time order, so causality is structural: the
// controller can only ever depend on y(s), s <= t.
//
// Protocol: feed(0, zero-increment, 0) is called once before the first step;
// afterwards feed(t_k, dy over [t_{k-1}, t_k), dt) is called after each step.
// The returned control is applied on the interval starting at t.
class FeedbackController {
 public:
  virtual ~FeedbackController() = default;
  virtual void reset() = 0;
  virtual Eigen::VectorXd feed(double t, const Eigen::VectorXd& dy, double dt) = 0;
};

using ControllerFactory = std::function<std::unique_ptr<FeedbackController>()>;

class ConstantController final : public FeedbackController {
 public:
  explicit ConstantController(Eigen::VectorXd u) : u_(std::move(u)) {}
  void reset() override {}
  Eigen::VectorXd feed(double, const Eigen::VectorXd&, double) override { return u_; }

 private:
  Eigen::VectorXd u_;
};

inline ControllerFactory constant_controller(Eigen::VectorXd u) {
  return [u = std::move(u)] { return std::make_unique<ConstantController>(u); };
}

inline ControllerFactory constant_controller(double u) {
  Eigen::VectorXd v(1);
  v << u;
  return constant_controller(v);
}

}  // namespace qsoc
