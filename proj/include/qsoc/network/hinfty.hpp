#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "qsoc/network/linear_system.hpp"

namespace qsoc {

struct GainResult {
  double gain = 0.0;
  double omega_at_max = 0.0;
  bool endpoint_warning = false;  // maximum attained at a grid endpoint
  std::vector<double> gains;      // per grid frequency
};

inline std::vector<double> log_frequency_grid(double lo, double hi, int n) {
  std::vector<double> grid;
  grid.reserve(n + 1);
  grid.push_back(0.0);  // include DC
  for (int k = 0; k < n; ++k)
    grid.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1)));
  return grid;
}

// Largest singular value of the port-restricted transfer function
// C_to (i w I - A)^{-1} B_from + D_{to,from} over the frequency grid.
inline GainResult hinfty_gain(const LinearQuantumSystem& sys, const std::string& from,
                              const std::string& to, const std::vector<double>& omega_grid) {
  if (omega_grid.empty()) throw ValidationError("hinfty_gain: empty frequency grid");
  if (!sys.is_stable())
    throw ValidationError("hinfty_gain: system matrix A is not Hurwitz");
  const int in = sys.input_index(from);
  const int out = sys.output_index(to);
  const Eigen::MatrixXd Bf = sys.B.middleCols(2 * in, 2);
  const Eigen::MatrixXd Ct = sys.C.middleRows(2 * out, 2);
  const Eigen::MatrixXd Dtf = sys.D.block(2 * out, 2 * in, 2, 2);
  const int n = sys.n_states();

  GainResult result;
  result.gains.reserve(omega_grid.size());
  std::size_t argmax = 0;
  for (std::size_t k = 0; k < omega_grid.size(); ++k) {
    const std::complex<double> jw(0.0, omega_grid[k]);
    const Eigen::MatrixXcd resolvent =
        (jw * Eigen::MatrixXcd::Identity(n, n) - sys.A.cast<std::complex<double>>())
            .partialPivLu()
            .solve(Bf.cast<std::complex<double>>());
    const Eigen::MatrixXcd G =
        Ct.cast<std::complex<double>>() * resolvent + Dtf.cast<std::complex<double>>();
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
    const double s = svd.singularValues()(0);
    result.gains.push_back(s);
    if (s > result.gain) {
      result.gain = s;
      result.omega_at_max = omega_grid[k];
      argmax = k;
    }
  }
  result.endpoint_warning = argmax == 0 ? omega_grid.size() > 1 && omega_grid[0] != 0.0
                                        : argmax + 1 == omega_grid.size();
  return result;
}

}  // namespace qsoc
