#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "qsoc/core/errors.hpp"
#include "qsoc/quantum/ops.hpp"

namespace qsoc {

// Spherical product lattice over the Bloch ball: radii k/n_r, polar angles
// j pi/n_theta, azimuths l 2pi/n_phi. Degenerate nodes (centre, poles) are
// stored once. Queries interpolate trilinearly in (r, theta, phi) with the
// azimuth treated periodically; |r| > 1 queries are projected to the sphere
// and counted.
class BlochGrid {
 public:
  BlochGrid(int n_r, int n_theta, int n_phi)
      : n_r_(n_r), n_theta_(n_theta), n_phi_(n_phi) {
    if (n_r < 1 || n_theta < 2 || n_phi < 3)
      throw ValidationError("BlochGrid: need n_r >= 1, n_theta >= 2, n_phi >= 3");
    for (int i = 0; i <= n_r_; ++i)
      for (int j = 0; j <= n_theta_; ++j)
        for (int l = 0; l < n_phi_; ++l) {
          const auto key = canonical(i, j, l);
          if (node_ids_.count(key)) continue;
          const int id = static_cast<int>(points_.size());
          node_ids_[key] = id;
          points_.push_back(cartesian(i, j, l));
        }
  }

  int size() const { return static_cast<int>(points_.size()); }
  const Eigen::Vector3d& point(int id) const { return points_[id]; }

  int node(int i, int j, int l) const { return node_ids_.at(canonical(i, j, l)); }

  struct Interpolation {
    std::vector<int> nodes;
    std::vector<double> weights;
    bool projected = false;
  };

  Interpolation locate(const Eigen::Vector3d& r_vec) const {
    Eigen::Vector3d v = r_vec;
    Interpolation out;
    double r = v.norm();
    if (r > 1.0 + 1e-12) {
      v /= r;
      r = 1.0;
      out.projected = true;
    }
    const double theta = r > 1e-14 ? std::atan2(std::hypot(v(0), v(1)), v(2)) : 0.0;
    double phi = std::atan2(v(1), v(0));
    if (phi < 0.0) phi += 2.0 * kPi;

    const double tr = std::clamp(r * n_r_, 0.0, static_cast<double>(n_r_));
    const double tt = std::clamp(theta / kPi * n_theta_, 0.0, static_cast<double>(n_theta_));
    const double tp = phi / (2.0 * kPi) * n_phi_;

    const int i0 = std::min(static_cast<int>(tr), n_r_ - 1);
    const int j0 = std::min(static_cast<int>(tt), n_theta_ - 1);
    const int l0 = std::min(static_cast<int>(tp), n_phi_ - 1);
    const double wr = tr - i0, wt = tt - j0, wp = tp - l0;

    std::map<int, double> acc;
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        for (int dl = 0; dl < 2; ++dl) {
          const double w = (di ? wr : 1.0 - wr) * (dj ? wt : 1.0 - wt) * (dl ? wp : 1.0 - wp);
          if (w <= 0.0) continue;
          acc[node(i0 + di, j0 + dj, (l0 + dl) % n_phi_)] += w;
        }
    for (const auto& [id, w] : acc) {
      out.nodes.push_back(id);
      out.weights.push_back(w);
    }
    return out;
  }

  double interpolate(const Eigen::VectorXd& node_values, const Eigen::Vector3d& r_vec,
                     long* projections = nullptr) const {
    const auto interp = locate(r_vec);
    if (interp.projected && projections) ++(*projections);
    double v = 0.0;
    for (std::size_t k = 0; k < interp.nodes.size(); ++k)
      v += interp.weights[k] * node_values(interp.nodes[k]);
    return v;
  }

  int nearest(const Eigen::Vector3d& r_vec) const {
    const auto interp = locate(r_vec);
    int best = interp.nodes[0];
    double best_w = interp.weights[0];
    for (std::size_t k = 1; k < interp.nodes.size(); ++k)
      if (interp.weights[k] > best_w ||
          (interp.weights[k] == best_w && interp.nodes[k] < best)) {
        best = interp.nodes[k];
        best_w = interp.weights[k];
      }
    return best;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  // Collapse the degenerate coordinates: r = 0 ignores both angles, the poles
  // ignore the azimuth.
  std::array<int, 3> canonical(int i, int j, int l) const {
    if (i == 0) return {0, 0, 0};
    if (j == 0 || j == n_theta_) return {i, j, 0};
    return {i, j, l % n_phi_};
  }

  Eigen::Vector3d cartesian(int i, int j, int l) const {
    const double r = static_cast<double>(i) / n_r_;
    const double theta = kPi * j / n_theta_;
    const double phi = 2.0 * kPi * l / n_phi_;
    return {r * std::sin(theta) * std::cos(phi), r * std::sin(theta) * std::sin(phi),
            r * std::cos(theta)};
  }

  int n_r_, n_theta_, n_phi_;
  std::vector<Eigen::Vector3d> points_;
  std::map<std::array<int, 3>, int> node_ids_;
};

}  // namespace qsoc
