#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "qsoc/core/errors.hpp"

namespace qsoc {

// Regular lattice {k/m : k in N_0^n, sum k = m} over the probability simplex,
// with Freudenthal triangulation lookup for barycentric interpolation.
// Interpolation reproduces affine functions of pi exactly.
class SimplexGrid {
 public:
  struct Interpolation {
    std::vector<int> nodes;
    std::vector<double> weights;
    bool projected = false;  // query was off the simplex beyond tolerance
  };

  SimplexGrid(int n_states, int mesh) : n_(n_states), mesh_(mesh) {
    if (n_states < 2) throw ValidationError("SimplexGrid: need at least 2 states");
    if (mesh < 1) throw ValidationError("SimplexGrid: mesh must be >= 1");
    std::vector<int> comp(n_, 0);
    enumerate(comp, 0, mesh_);
  }

  int size() const { return static_cast<int>(points_.size()); }
  int n_states() const { return n_; }
  int mesh() const { return mesh_; }

  const Eigen::VectorXd& point(int i) const { return points_[i]; }
  const std::vector<int>& composition(int i) const { return comps_[i]; }

  int index_of(const std::vector<int>& comp) const {
    const auto it = lookup_.find(encode(comp));
    if (it == lookup_.end()) throw ValidationError("SimplexGrid: composition not on lattice");
    return it->second;
  }

  // Containing Freudenthal simplex and barycentric weights for a probability
  // vector. Slightly off-simplex queries (clipped filter output, fp noise)
  // are projected and flagged.
  Interpolation locate(const Eigen::VectorXd& pi) const {
    Eigen::VectorXd p = pi;
    bool projected = false;
    double sum = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (p(i) < 0.0) {
        if (p(i) < -1e-9) projected = true;
        p(i) = 0.0;
      }
      sum += p(i);
    }
    if (std::abs(sum - 1.0) > 1e-9) projected = true;
    if (!(sum > 0.0)) throw ValidationError("SimplexGrid::locate: zero vector");
    p /= sum;

    // Staircase coordinates s_j = m * sum_{i >= j} p_i, s_0 = m.
    std::vector<double> s(n_);
    s[n_ - 1] = mesh_ * p(n_ - 1);
    for (int j = n_ - 2; j >= 1; --j) s[j] = s[j + 1] + mesh_ * p(j);
    s[0] = mesh_;
    for (int j = 1; j < n_; ++j) s[j] = std::clamp(s[j], 0.0, s[j - 1]);

    std::vector<int> q(n_);
    std::vector<double> d(n_);
    q[0] = mesh_;
    d[0] = 0.0;
    for (int j = 1; j < n_; ++j) {
      q[j] = static_cast<int>(std::floor(s[j]));
      if (q[j] > q[j - 1]) q[j] = q[j - 1];
      d[j] = s[j] - q[j];
    }

    std::vector<int> order;
    order.reserve(n_ - 1);
    for (int j = 1; j < n_; ++j) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return d[a] > d[b]; });

    Interpolation out;
    out.projected = projected;
    std::vector<int> vertex = q;
    // Vertices on simplex faces can step off the lattice; that only happens
    // with vanishing barycentric weight, so those are dropped.
    auto push_vertex = [&](double weight) {
      std::vector<int> comp(n_);
      bool valid = true;
      for (int j = 0; j + 1 < n_; ++j) {
        comp[j] = vertex[j] - vertex[j + 1];
        if (comp[j] < 0) valid = false;
      }
      comp[n_ - 1] = vertex[n_ - 1];
      if (comp[n_ - 1] < 0) valid = false;
      if (!valid) {
        if (weight > 1e-12)
          throw NumericalError("SimplexGrid::locate: invalid vertex carries weight");
        return;
      }
      out.nodes.push_back(index_of(comp));
      out.weights.push_back(std::max(weight, 0.0));
    };

    double prev = 1.0;
    for (int k = 0; k < n_ - 1; ++k) {
      push_vertex(prev - d[order[k]]);
      prev = d[order[k]];
      vertex[order[k]] += 1;
    }
    push_vertex(prev);
    return out;
  }

  double interpolate(const Eigen::VectorXd& node_values, const Eigen::VectorXd& pi,
                     long* projections = nullptr) const {
    const Interpolation interp = locate(pi);
    if (interp.projected && projections) ++(*projections);
    double v = 0.0;
    for (std::size_t k = 0; k < interp.nodes.size(); ++k)
      v += interp.weights[k] * node_values(interp.nodes[k]);
    return v;
  }

  // Vertex of the containing simplex with the largest barycentric weight
  // (lowest index on ties).
  int nearest(const Eigen::VectorXd& pi) const {
    const Interpolation interp = locate(pi);
    int best = interp.nodes[0];
    double best_w = interp.weights[0];
    for (std::size_t k = 1; k < interp.nodes.size(); ++k) {
      if (interp.weights[k] > best_w ||
          (interp.weights[k] == best_w && interp.nodes[k] < best)) {
        best = interp.nodes[k];
        best_w = interp.weights[k];
      }
    }
    return best;
  }

 private:
  void enumerate(std::vector<int>& comp, int pos, int remaining) {
    if (pos == n_ - 1) {
      comp[pos] = remaining;
      lookup_[encode(comp)] = static_cast<int>(points_.size());
      Eigen::VectorXd p(n_);
      for (int i = 0; i < n_; ++i) p(i) = static_cast<double>(comp[i]) / mesh_;
      points_.push_back(std::move(p));
      comps_.push_back(comp);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      comp[pos] = k;
      enumerate(comp, pos + 1, remaining - k);
    }
  }

  std::int64_t encode(const std::vector<int>& comp) const {
    std::int64_t key = 0;
    for (int i = 0; i + 1 < n_; ++i) key = key * (mesh_ + 1) + comp[i];
    return key;
  }

  int n_;
  int mesh_;
  std::vector<Eigen::VectorXd> points_;
  std::vector<std::vector<int>> comps_;
  std::unordered_map<std::int64_t, int> lookup_;
};

}  // namespace qsoc
