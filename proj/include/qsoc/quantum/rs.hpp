#pragma once

#include <cmath>
#include <string>

#include "qsoc/core/counters.hpp"
#include "qsoc/quantum/cost.hpp"

namespace qsoc {

// One Euler step of the unnormalized risk-sensitive recursion in the adjoint
// picture, driven by the reference record:
//   sigma <- sigma + [L'(sigma) + (mu/2)(C1 sigma + sigma C1)] dt
//                  + (L sigma + sigma L*) dY.
// The symmetrized cost insertion keeps sigma Hermitian; the magnitude is
// rebalanced into log_scale when the trace leaves [1e-6, 1e6].
inline UnnormalizedDensityState quantum_rs_filter_step(const UnnormalizedDensityState& state,
                                                       const QuantumModel& model,
                                                       const QuantumCostSpec& cost, int u_index,
                                                       double dY, double dt,
                                                       FilterStats* stats = nullptr) {
  if (!(cost.mu > 0.0))
    throw ValidationError("quantum_rs_filter_step: risk parameter mu must be positive");
  const Cmat& L = model.coupling;
  const Cmat& C1 = cost.running.at(u_index);
  const Cmat Lsig = L * state.sigma;
  UnnormalizedDensityState out;
  out.log_scale = state.log_scale;
  out.sigma = state.sigma +
              dt * (lindblad_adjoint_apply(model, u_index, state.sigma) +
                    0.5 * cost.mu * (C1 * state.sigma + state.sigma * C1)) +
              dY * (Lsig + Lsig.adjoint());
  const double defect = hermiticity_defect(out.sigma);
  const double scale = out.sigma.cwiseAbs().maxCoeff();
  if (defect > 1e-8 * std::max(scale, 1.0))
    throw NumericalError("quantum_rs_filter_step: Hermiticity lost beyond tolerance");
  out.sigma = 0.5 * (out.sigma + out.sigma.adjoint()).eval();
  const double tr = out.sigma.trace().real();
  if (!(tr > 0.0)) throw NumericalError("quantum_rs_filter_step: state mass vanished");
  if (tr < 1e-6 || tr > 1e6) {
    out.sigma /= tr;
    out.log_scale += std::log(tr);
    if (stats) ++stats->rebalances;
  }
  return out;
}

enum class RsRoute {
  sigma_state,  // propagate the unnormalized conditional state
  propagator,   // propagate the reference-picture propagator V(t)
};

// Risk-sensitive cost J^mu(K) under the reference picture, where the record is
// a standard Wiener process. Two algebraically equivalent routes:
//   sigma route:     J = E0[ tr(sigma_T exp(mu C2)) ] with the recursion above;
//   propagator route: dV = {L dZ + (-1/2 L*L - iH(u) + mu/2 C1(u)) dt} V,
//                     J = E0[ tr(rho0 V* exp(mu C2) V) ].
inline McResult evaluate_quantum_rs_cost(const QuantumModel& model, const QuantumCostSpec& cost,
                                         const Cmat& rho0, const TimeGrid& times,
                                         const QuantumControllerFactory& make_controller,
                                         const McOptions& opt,
                                         RsRoute route = RsRoute::sigma_state,
                                         FilterStats* stats = nullptr) {
  if (!(cost.mu > 0.0))
    throw ValidationError("evaluate_quantum_rs_cost: mu must be positive");
  const Cmat exp_c2 = expm_hermitian(cost.mu * cost.terminal);
  const double sqrt_dt = std::sqrt(times.dt);

  McResult result = monte_carlo(opt, [&](int, std::uint64_t stream_seed) {
    RandomStream stream(stream_seed);
    auto controller = make_controller();
    controller->reset();
    int u = controller->feed(0.0, 0.0, 0.0);

    if (route == RsRoute::sigma_state) {
      UnnormalizedDensityState sigma{rho0, 0.0};
      FilterStats local;
      for (int k = 0; k < times.n_steps; ++k) {
        const double dY = sqrt_dt * stream.gaussian();
        sigma = quantum_rs_filter_step(sigma, model, cost, u, dY, times.dt, &local);
        if (k + 1 < times.n_steps) u = controller->feed(times.time_at(k + 1), dY, times.dt);
      }
      if (stats) stats->rebalances += local.rebalances;
      return (sigma.sigma * exp_c2).trace().real() * std::exp(sigma.log_scale);
    }

    // propagator route
    Cmat V = Cmat::Identity(model.dim, model.dim);
    const Cmat& L = model.coupling;
    const Cmat LdL = L.adjoint() * L;
    for (int k = 0; k < times.n_steps; ++k) {
      const double dZ = sqrt_dt * stream.gaussian();
      const Cmat drift = (-0.5 * LdL - kI * model.hamiltonians[u] +
                          0.5 * cost.mu * cost.running[u]) *
                         V;
      V = V + dZ * (L * V) + times.dt * drift;
      if (k + 1 < times.n_steps) u = controller->feed(times.time_at(k + 1), dZ, times.dt);
    }
    return (rho0 * V.adjoint() * exp_c2 * V).trace().real();
  });
  if (result.estimate.std_error > 0.5 * std::abs(result.estimate.value)) {
    result.estimate.warnings.push_back(
        "heavy-tailed exponential cost: standard error exceeds 50% of the mean");
  }
  return result;
}

}  // namespace qsoc
