#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <vector>

#include "qsoc/core/errors.hpp"

namespace qsoc {

// Quadrature-form state-space model of a linear quantum network. Every port
// (channel) carries exactly one pair of quadratures, so B has two columns and
// C two rows per named port.
struct LinearQuantumSystem {
  Eigen::MatrixXd A, B, C, D;
  std::vector<std::string> inputs;   // one name per input channel
  std::vector<std::string> outputs;  // one name per output channel

  int n_states() const { return static_cast<int>(A.rows()); }
  int n_inputs() const { return static_cast<int>(inputs.size()); }
  int n_outputs() const { return static_cast<int>(outputs.size()); }

  int input_index(const std::string& name) const {
    const auto it = std::find(inputs.begin(), inputs.end(), name);
    if (it == inputs.end())
      throw ValidationError("LinearQuantumSystem: no input port named '" + name + "'");
    return static_cast<int>(it - inputs.begin());
  }

  int output_index(const std::string& name) const {
    const auto it = std::find(outputs.begin(), outputs.end(), name);
    if (it == outputs.end())
      throw ValidationError("LinearQuantumSystem: no output port named '" + name + "'");
    return static_cast<int>(it - outputs.begin());
  }

  Eigen::MatrixXd input_block_B(int channel) const { return B.middleCols(2 * channel, 2); }
  Eigen::MatrixXd output_block_C(int channel) const { return C.middleRows(2 * channel, 2); }

  void validate() const {
    const int n = n_states();
    if (n % 2 != 0) throw ValidationError("LinearQuantumSystem: odd state dimension");
    if (A.cols() != n || B.rows() != n || C.cols() != n)
      throw ValidationError("LinearQuantumSystem: matrix dimension mismatch");
    if (B.cols() != 2 * n_inputs() || C.rows() != 2 * n_outputs() ||
        D.rows() != 2 * n_outputs() || D.cols() != 2 * n_inputs())
      throw ValidationError("LinearQuantumSystem: port dimension mismatch");
    auto unique_names = [](std::vector<std::string> names) {
      std::sort(names.begin(), names.end());
      return std::adjacent_find(names.begin(), names.end()) == names.end();
    };
    if (!unique_names(inputs) || !unique_names(outputs))
      throw ValidationError("LinearQuantumSystem: duplicate port names");
  }

  bool is_stable() const {
    const Eigen::EigenSolver<Eigen::MatrixXd> eig(A);
    return eig.eigenvalues().real().maxCoeff() < 0.0;
  }
};

// Symplectic form I_modes (x) J with J = [[0, 1], [-1, 0]].
inline Eigen::MatrixXd symplectic_form(int quad_dim) {
  if (quad_dim % 2 != 0) throw ValidationError("symplectic_form: odd dimension");
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(quad_dim, quad_dim);
  for (int m = 0; m < quad_dim / 2; ++m) {
    theta(2 * m, 2 * m + 1) = 1.0;
    theta(2 * m + 1, 2 * m) = -1.0;
  }
  return theta;
}

// Canonical-commutation bookkeeping A Theta + Theta A^T + B Theta_w B^T = 0;
// zero for any genuine open quantum system in quadrature form.
inline double realizability_residual(const LinearQuantumSystem& sys) {
  const Eigen::MatrixXd theta = symplectic_form(sys.n_states());
  const Eigen::MatrixXd theta_w = symplectic_form(2 * sys.n_inputs());
  return (sys.A * theta + theta * sys.A.transpose() + sys.B * theta_w * sys.B.transpose())
      .lpNorm<Eigen::Infinity>();
}

// Cavity with one mode and one mirror per coupling: in quadrature form
//   A = -(sum kappa / 2) I + Delta J,  B_i = -sqrt(kappa_i) I,
//   C_i = sqrt(kappa_i) I,  D = I on matched ports.
inline LinearQuantumSystem cavity(const std::vector<double>& couplings, double detuning,
                                  const std::vector<std::string>& input_names,
                                  const std::vector<std::string>& output_names) {
  const int m = static_cast<int>(couplings.size());
  if (m == 0) throw ValidationError("cavity: need at least one mirror");
  if (static_cast<int>(input_names.size()) != m ||
      static_cast<int>(output_names.size()) != m)
    throw ValidationError("cavity: one input and one output name per mirror");
  double total = 0.0;
  for (double k : couplings) {
    if (!(k > 0.0)) throw ValidationError("cavity: couplings must be positive");
    total += k;
  }
  LinearQuantumSystem sys;
  sys.A = -0.5 * total * Eigen::MatrixXd::Identity(2, 2) + detuning * symplectic_form(2);
  sys.B.resize(2, 2 * m);
  sys.C.resize(2 * m, 2);
  sys.D = Eigen::MatrixXd::Identity(2 * m, 2 * m);
  for (int i = 0; i < m; ++i) {
    const double root = std::sqrt(couplings[i]);
    sys.B.middleCols(2 * i, 2) = -root * Eigen::MatrixXd::Identity(2, 2);
    sys.C.middleRows(2 * i, 2) = root * Eigen::MatrixXd::Identity(2, 2);
  }
  sys.inputs = input_names;
  sys.outputs = output_names;
  sys.validate();
  return sys;
}

}  // namespace qsoc
