#pragma once

#include <memory>
#include <utility>

#include "qsoc/classical/monte_carlo.hpp"
#include "qsoc/dp/value_iteration.hpp"
#include "qsoc/filtering/infostate_cost.hpp"

namespace qsoc {

// Separation-structure controller assembled from a DP policy table and the
// chain filter: the filter tracks pi from the observed record, the policy is
// looked up at the nearest grid point for the current time slice.
class DpPolicyController final : public FeedbackController {
 public:
  DpPolicyController(const MarkovChainModel* chain, const SimplexGrid* grid, PolicyTable policy,
                     InfoState init)
      : chain_(chain), grid_(grid), policy_(std::move(policy)), init_(std::move(init)),
        state_(init_) {}

  void reset() override {
    state_ = init_;
    step_ = 0;
  }

  Eigen::VectorXd feed(double, const Eigen::VectorXd& dy, double dt) override {
    if (dt > 0.0 && dy.size() > 0) {
      state_ = filter_step(state_, *chain_, last_u_index_, dy(0), dt);
      ++step_;
    }
    const int t = std::min(step_, static_cast<int>(policy_.controls.cols()) - 1);
    last_u_index_ = policy_.controls(grid_->nearest(state_.weights), t);
    return chain_->control_set[last_u_index_];
  }

 private:
  const MarkovChainModel* chain_;
  const SimplexGrid* grid_;
  PolicyTable policy_;
  InfoState init_;
  InfoState state_;
  int last_u_index_ = 0;
  int step_ = 0;
};

// Risk-sensitive counterpart: tracks the unnormalized state and looks the
// policy up on its normalized direction (positive homogeneity).
class RsDpPolicyController final : public FeedbackController {
 public:
  RsDpPolicyController(const MarkovChainModel* chain, const SimplexGrid* grid,
                       PolicyTable policy, InfoState init, double mu,
                       std::vector<Eigen::VectorXd> running)
      : chain_(chain), grid_(grid), policy_(std::move(policy)), init_(std::move(init)),
        mu_(mu), running_(std::move(running)), state_{init_.weights, 0.0} {}

  void reset() override {
    state_ = UnnormalizedInfoState{init_.weights, 0.0};
    step_ = 0;
  }

  Eigen::VectorXd feed(double, const Eigen::VectorXd& dy, double dt) override {
    if (dt > 0.0 && dy.size() > 0) {
      state_ = rs_filter_step(state_, *chain_, last_u_index_, dy(0), dt, mu_,
                              running_[last_u_index_]);
      ++step_;
    }
    const int t = std::min(step_, static_cast<int>(policy_.controls.cols()) - 1);
    const Eigen::VectorXd direction = state_.weights / state_.weights.sum();
    last_u_index_ = policy_.controls(grid_->nearest(direction), t);
    return chain_->control_set[last_u_index_];
  }

 private:
  const MarkovChainModel* chain_;
  const SimplexGrid* grid_;
  PolicyTable policy_;
  InfoState init_;
  double mu_;
  std::vector<Eigen::VectorXd> running_;
  UnnormalizedInfoState state_;
  int last_u_index_ = 0;
  int step_ = 0;
};

inline ControllerFactory dp_policy_controller(const MarkovChainModel* chain,
                                              const SimplexGrid* grid,
                                              const PolicyTable& policy,
                                              const InfoState& init) {
  return [=] { return std::make_unique<DpPolicyController>(chain, grid, policy, init); };
}

inline ControllerFactory rs_dp_policy_controller(const MarkovChainModel* chain,
                                                 const SimplexGrid* grid,
                                                 const PolicyTable& policy,
                                                 const InfoState& init, const CostSpec& cost) {
  std::vector<Eigen::VectorXd> running;
  for (int a = 0; a < chain->n_controls(); ++a)
    running.push_back(running_cost_on_grid(*chain, cost, a));
  const double mu = cost.mu;
  return [=] {
    return std::make_unique<RsDpPolicyController>(chain, grid, policy, init, mu, running);
  };
}

// Full closed loop: the true diffusion is simulated, the observation record
// drives the controller, the realized cost is averaged over paths. A
// risk-sensitive estimate rides along when the cost carries mu > 0.
struct ClosedLoopReport {
  McResult risk_neutral;
  McResult risk_sensitive;  // empty unless cost.mu > 0
  bool has_risk_sensitive = false;
};

inline ClosedLoopReport run_closed_loop(const ClassicalModel& model, const CostSpec& cost,
                                        const InitialState& init, const TimeGrid& times,
                                        const ControllerFactory& make_controller,
                                        const McOptions& opt) {
  ClosedLoopReport report;
  report.risk_neutral = evaluate_cost_mc(model, cost, init, times, make_controller, opt);
  if (cost.mu > 0.0) {
    report.risk_sensitive = evaluate_rs_cost_mc(model, cost, init, times, make_controller, opt);
    report.has_risk_sensitive = true;
  }
  return report;
}

}  // namespace qsoc
