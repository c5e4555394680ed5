#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "qsoc/core/monte_carlo.hpp"
#include "qsoc/core/time_grid.hpp"
#include "qsoc/quantum/density.hpp"
#include "qsoc/quantum/lindblad.hpp"

namespace qsoc {

// Causal map from the homodyne record to control indices. Same protocol as
// the classical FeedbackController: fed one increment at a time.
class QuantumController {
 public:
  virtual ~QuantumController() = default;
  virtual void reset() = 0;
  virtual int feed(double t, double dY, double dt) = 0;
};

using QuantumControllerFactory = std::function<std::unique_ptr<QuantumController>()>;

class ConstantQuantumController final : public QuantumController {
 public:
  explicit ConstantQuantumController(int index) : index_(index) {}
  void reset() override {}
  int feed(double, double, double) override { return index_; }

 private:
  int index_;
};

inline QuantumControllerFactory constant_quantum_controller(int index) {
  return [index] { return std::make_unique<ConstantQuantumController>(index); };
}

// Threshold policy on the filtered ground-state population: drives with
// control index `u_on` when tr(rho |g><g|) exceeds the threshold.
class GroundThresholdController final : public QuantumController {
 public:
  GroundThresholdController(const QuantumModel* model, Cmat rho0, double threshold, int u_off,
                            int u_on)
      : model_(model), rho0_(std::move(rho0)), threshold_(threshold), u_off_(u_off),
        u_on_(u_on), rho_(rho0_) {}

  void reset() override {
    rho_ = rho0_;
    last_u_ = u_off_;
  }

  int feed(double t, double dY, double dt) override;

 private:
  const QuantumModel* model_;
  Cmat rho0_;
  double threshold_;
  int u_off_, u_on_;
  Cmat rho_;
  int last_u_ = 0;
};

struct MeasurementRecord {
  TimeGrid times;
  Eigen::VectorXd increments;  // dY per step
};

// One step of the conditional-state (adjoint) filter recursion given an
// externally supplied record increment:
//   rho <- rho + L'(rho) dt + (L rho + rho L* - tr((L+L*) rho) rho) dW,
// dW = dY - tr((L+L*) rho) dt, followed by repair.
inline Cmat quantum_filter_step(const Cmat& rho, const QuantumModel& model, int u_index,
                                double dY, double dt,
                                const RepairPolicy& policy = RepairPolicy::trajectory(),
                                RepairStats* stats = nullptr, int step = 0) {
  const Cmat& L = model.coupling;
  const Cmat Lrho = L * rho;
  const double signal = (Lrho + Lrho.adjoint()).trace().real();
  const double dW = dY - signal * dt;
  Cmat next = rho + dt * lindblad_adjoint_apply(model, u_index, rho) +
              dW * (Lrho + Lrho.adjoint() - signal * rho);
  repair_density(next, policy, stats, "quantum_filter_step", step);
  return next;
}

struct HomodyneResult {
  MeasurementRecord record;
  std::vector<Cmat> states;    // conditional states, length n_steps + 1
  std::vector<int> controls;   // control indices, length n_steps
};

// Standard trajectory construction: the innovation dW is Gaussian(0, dt),
// dY = tr((L+L*) rho) dt + dW, and the state follows the filter recursion.
inline HomodyneResult homodyne_trajectory(const QuantumModel& model,
                                          QuantumController& controller, const Cmat& rho0,
                                          const TimeGrid& times, RandomStream& stream,
                                          RepairStats* stats = nullptr) {
  HomodyneResult out;
  out.record.times = times;
  out.record.increments.resize(times.n_steps);
  out.states.reserve(times.n_steps + 1);
  out.controls.reserve(times.n_steps);

  Cmat rho = rho0;
  repair_density(rho, RepairPolicy::trajectory(), stats, "homodyne_trajectory", 0);
  out.states.push_back(rho);
  controller.reset();
  int u = controller.feed(0.0, 0.0, 0.0);
  const double sqrt_dt = std::sqrt(times.dt);

  for (int k = 0; k < times.n_steps; ++k) {
    const Cmat& L = model.coupling;
    const Cmat Lrho = L * rho;
    const double signal = (Lrho + Lrho.adjoint()).trace().real();
    const double dW = sqrt_dt * stream.gaussian();
    const double dY = signal * times.dt + dW;
    Cmat next = rho + times.dt * lindblad_adjoint_apply(model, u, rho) +
                dW * (Lrho + Lrho.adjoint() - signal * rho);
    repair_density(next, RepairPolicy::trajectory(), stats, "homodyne_trajectory", k + 1);
    out.record.increments(k) = dY;
    out.controls.push_back(u);
    rho = next;
    out.states.push_back(rho);
    if (k + 1 < times.n_steps) u = controller.feed(times.time_at(k + 1), dY, times.dt);
  }
  return out;
}

inline int GroundThresholdController::feed(double, double dY, double dt) {
  if (dt > 0.0) rho_ = quantum_filter_step(rho_, *model_, last_u_, dY, dt);
  const double ground_pop = rho_(1, 1).real();
  last_u_ = ground_pop > threshold_ ? u_on_ : u_off_;
  return last_u_;
}

inline QuantumControllerFactory ground_threshold_controller(const QuantumModel* model,
                                                            const Cmat& rho0, double threshold,
                                                            int u_off, int u_on) {
  return [=] {
    return std::make_unique<GroundThresholdController>(model, rho0, threshold, u_off, u_on);
  };
}

}  // namespace qsoc
