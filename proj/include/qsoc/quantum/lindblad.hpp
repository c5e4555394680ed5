#pragma once

#include "qsoc/quantum/model.hpp"

namespace qsoc {

// Heisenberg-picture generator
//   L^u(X) = -i [X, H(u)] + 1/2 L* [X, L] + 1/2 [L*, X] L.
inline Cmat lindblad_apply(const QuantumModel& model, int u_index, const Cmat& X) {
  check_same_dim(X, model.coupling, "lindblad_apply");
  const Cmat& H = model.hamiltonians.at(u_index);
  const Cmat& L = model.coupling;
  const Cmat Ld = L.adjoint();
  return -kI * (X * H - H * X) + 0.5 * Ld * (X * L - L * X) + 0.5 * (Ld * X - X * Ld) * L;
}

// Schroedinger-picture adjoint, defined by tr(rho L(X)) = tr(L'(rho) X):
//   L'^u(rho) = -i [H(u), rho] + L rho L* - 1/2 (L* L rho + rho L* L).
inline Cmat lindblad_adjoint_apply(const QuantumModel& model, int u_index, const Cmat& rho) {
  check_same_dim(rho, model.coupling, "lindblad_adjoint_apply");
  const Cmat& H = model.hamiltonians.at(u_index);
  const Cmat& L = model.coupling;
  const Cmat LdL = L.adjoint() * L;
  return -kI * (H * rho - rho * H) + L * rho * L.adjoint() -
         0.5 * (LdL * rho + rho * LdL);
}

}  // namespace qsoc
