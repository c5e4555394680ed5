#pragma once

#include <memory>
#include <utility>

#include "qsoc/filtering/grid_filter.hpp"
#include "qsoc/filtering/kalman.hpp"

namespace qsoc {

// Bang-bang policy on a causally computed scalar statistic of the record:
// emits u_below while the statistic is below the threshold, u_above otherwise.
enum class ThresholdStatistic { cumulative_y, kalman_mean, chain_mean };

class ThresholdController final : public FeedbackController {
 public:
  ThresholdController(ThresholdStatistic statistic, double threshold, Eigen::VectorXd u_below,
                      Eigen::VectorXd u_above)
      : statistic_(statistic),
        threshold_(threshold),
        u_below_(std::move(u_below)),
        u_above_(std::move(u_above)) {}

  // Wires in the estimator backing the statistic.
  void attach_kalman(LinearGaussianModel model, GaussianState init) {
    kalman_model_ = std::move(model);
    kalman_init_ = std::move(init);
  }
  void attach_chain(const MarkovChainModel* chain, InfoState init) {
    chain_ = chain;
    chain_init_ = std::move(init);
  }

  void reset() override {
    y_sum_ = 0.0;
    kalman_state_ = kalman_init_;
    chain_state_ = chain_init_;
    have_control_ = false;
  }

  Eigen::VectorXd feed(double, const Eigen::VectorXd& dy, double dt) override {
    if (dt > 0.0 && dy.size() > 0) {
      y_sum_ += dy(0);
      switch (statistic_) {
        case ThresholdStatistic::kalman_mean:
          kalman_state_ = kalman_step(kalman_state_, kalman_model_, last_u_, dy, dt);
          break;
        case ThresholdStatistic::chain_mean:
          chain_state_ = filter_step(chain_state_, *chain_,
                                     control_index(chain_->control_set, last_u_), dy(0), dt);
          break;
        case ThresholdStatistic::cumulative_y:
          break;
      }
    }
    double stat = y_sum_;
    if (statistic_ == ThresholdStatistic::kalman_mean) stat = kalman_state_.mean(0);
    if (statistic_ == ThresholdStatistic::chain_mean) stat = chain_state_.mean(chain_->grid);
    last_u_ = stat < threshold_ ? u_below_ : u_above_;
    have_control_ = true;
    return last_u_;
  }

 private:
  ThresholdStatistic statistic_;
  double threshold_;
  Eigen::VectorXd u_below_, u_above_;

  LinearGaussianModel kalman_model_;
  GaussianState kalman_init_;
  const MarkovChainModel* chain_ = nullptr;
  InfoState chain_init_;

  double y_sum_ = 0.0;
  GaussianState kalman_state_;
  InfoState chain_state_;
  Eigen::VectorXd last_u_ = Eigen::VectorXd::Zero(1);
  bool have_control_ = false;
};

inline ControllerFactory kalman_threshold_controller(const LinearGaussianModel& model,
                                                     const GaussianState& init, double threshold,
                                                     double u_below, double u_above) {
  return [=] {
    auto c = std::make_unique<ThresholdController>(ThresholdStatistic::kalman_mean, threshold,
                                                   Eigen::VectorXd::Constant(1, u_below),
                                                   Eigen::VectorXd::Constant(1, u_above));
    c->attach_kalman(model, init);
    return c;
  };
}

}  // namespace qsoc
