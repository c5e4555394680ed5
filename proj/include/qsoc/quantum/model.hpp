#pragma once

#include <Eigen/Eigenvalues>
#include <vector>

#include "qsoc/quantum/ops.hpp"

namespace qsoc {

// Open quantum system with a control-indexed Hamiltonian family H(u) and a
// single coupling channel L. Controls are classical values from a finite set.
struct QuantumModel {
  int dim = 0;
  std::vector<double> control_set;
  std::vector<Cmat> hamiltonians;  // aligned with control_set
  Cmat coupling;                   // L

  void validate() const {
    if (dim < 2 || dim > 64)
      throw ValidationError("QuantumModel: dimension must lie in [2, 64]");
    if (control_set.empty() || control_set.size() != hamiltonians.size())
      throw ValidationError("QuantumModel: control set and Hamiltonian family mismatch");
    for (const auto& H : hamiltonians) {
      if (H.rows() != dim || H.cols() != dim)
        throw ValidationError("QuantumModel: Hamiltonian dimension mismatch");
      if (!is_hermitian(H, 1e-12))
        throw ValidationError("QuantumModel: Hamiltonian not Hermitian to 1e-12");
    }
    if (coupling.rows() != dim || coupling.cols() != dim)
      throw ValidationError("QuantumModel: coupling dimension mismatch");
  }

  int control_index(double u) const {
    for (std::size_t i = 0; i < control_set.size(); ++i)
      if (std::abs(control_set[i] - u) <= 1e-12) return static_cast<int>(i);
    throw ValidationError("QuantumModel: control value not in control set");
  }
};

// Running cost observables C1(u) (Hermitian PSD per control) and terminal C2;
// mu > 0 selects the risk-sensitive objective.
struct QuantumCostSpec {
  std::vector<Cmat> running;  // aligned with the model's control set
  Cmat terminal;
  double mu = 0.0;

  void validate(const QuantumModel& model) const {
    if (running.size() != model.control_set.size())
      throw ValidationError("QuantumCostSpec: running cost family mismatch");
    auto check_psd = [&](const Cmat& m, const char* name) {
      if (!is_hermitian(m, 1e-10))
        throw ValidationError(std::string("QuantumCostSpec: ") + name + " not Hermitian");
      Eigen::SelfAdjointEigenSolver<Cmat> eig(m);
      if (eig.eigenvalues().minCoeff() < -1e-10)
        throw ValidationError(std::string("QuantumCostSpec: ") + name + " not PSD");
    };
    for (const auto& c : running) check_psd(c, "C1(u)");
    check_psd(terminal, "C2");
  }
};

namespace models {

// Decaying qubit with an x-axis drive: H(u) = u sigma_x / 2, L = sqrt(gamma) sigma_-.
inline QuantumModel qubit_decay(double gamma, const std::vector<double>& controls) {
  QuantumModel m;
  m.dim = 2;
  m.control_set = controls;
  for (double u : controls) m.hamiltonians.push_back(0.5 * u * ops::pauli_x());
  m.coupling = std::sqrt(gamma) * ops::sigma_minus();
  m.validate();
  return m;
}

// C1(u) = q (I - |e><e|) + r u^2 I, C2 = p (I - |e><e|).
inline QuantumCostSpec qubit_stabilize_cost(const QuantumModel& model, double q, double r,
                                            double p, double mu = 0.0) {
  QuantumCostSpec cost;
  for (double u : model.control_set)
    cost.running.push_back(q * ops::ground_projector() + r * u * u * ops::identity(2));
  cost.terminal = p * ops::ground_projector();
  cost.mu = mu;
  cost.validate(model);
  return cost;
}

}  // namespace models

}  // namespace qsoc
