#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "qsoc/core/errors.hpp"

namespace qsoc {

using Cmat = Eigen::MatrixXcd;
using Cvec = Eigen::VectorXcd;
using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};

inline double hermiticity_defect(const Cmat& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Cmat& m, double tol = 1e-12) {
  return m.rows() == m.cols() && hermiticity_defect(m) <= tol;
}

inline void check_same_dim(const Cmat& a, const Cmat& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(std::string(where) + ": operator dimension mismatch");
}

namespace ops {

inline Cmat identity(int n) { return Cmat::Identity(n, n); }

inline Cmat pauli_x() {
  Cmat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Cmat pauli_y() {
  Cmat m(2, 2);
  m << 0, -kI, kI, 0;
  return m;
}

inline Cmat pauli_z() {
  Cmat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

// Lowering operator |g><e| in the (excited, ground) basis.
inline Cmat sigma_minus() {
  Cmat m = Cmat::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

inline Cmat annihilator(int n) {
  Cmat m = Cmat::Zero(n, n);
  for (int k = 1; k < n; ++k) m(k - 1, k) = std::sqrt(static_cast<double>(k));
  return m;
}

inline Cmat excited_projector() {
  Cmat m = Cmat::Zero(2, 2);
  m(0, 0) = 1.0;
  return m;
}

inline Cmat ground_projector() {
  Cmat m = Cmat::Zero(2, 2);
  m(1, 1) = 1.0;
  return m;
}

}  // namespace ops

// Bloch components of a qubit density matrix rho = (I + r . sigma)/2.
inline Eigen::Vector3d bloch_vector(const Cmat& rho) {
  Eigen::Vector3d r;
  r(0) = 2.0 * rho(1, 0).real();
  r(1) = 2.0 * rho(1, 0).imag();
  r(2) = (rho(0, 0) - rho(1, 1)).real();
  return r;
}

inline Cmat density_from_bloch(const Eigen::Vector3d& r) {
  Cmat rho(2, 2);
  rho(0, 0) = 0.5 * (1.0 + r(2));
  rho(1, 1) = 0.5 * (1.0 - r(2));
  rho(1, 0) = 0.5 * Complex(r(0), r(1));
  rho(0, 1) = std::conj(rho(1, 0));
  return rho;
}

}  // namespace qsoc
