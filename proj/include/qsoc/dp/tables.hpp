#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "qsoc/core/time_grid.hpp"
#include "qsoc/io/csv.hpp"

namespace qsoc {

struct DpOptions {
  bool allow_large = false;  // lifts the desk-scale guardrails
};

// DP value function tabulated over (grid point, time index). The terminal
// slice holds the terminal cost functional exactly at the grid points.
struct ValueTable {
  TimeGrid times;
  Eigen::MatrixXd values;  // (n_points, n_steps + 1)
};

// Feedback control index per (grid point, time index); lowest-index argmin.
struct PolicyTable {
  TimeGrid times;
  Eigen::MatrixXi controls;  // (n_points, n_steps)
};

using PointCoords = std::function<std::vector<double>(int)>;

// Joint CSV layout: time_index, coordinates..., value, control_index.
// The terminal slice carries control_index -1.
inline void write_dp_tables_csv(const std::string& path, int n_points, int n_coords,
                                const PointCoords& coords, const ValueTable& value,
                                const PolicyTable& policy) {
  std::vector<std::string> header{"time_index"};
  for (int c = 0; c < n_coords; ++c) header.push_back("coord" + std::to_string(c));
  header.push_back("value");
  header.push_back("control_index");
  CsvWriter csv(header);
  for (int t = 0; t <= value.times.n_steps; ++t) {
    for (int i = 0; i < n_points; ++i) {
      std::vector<std::string> row{std::to_string(t)};
      for (double c : coords(i)) row.push_back(format_double(c));
      row.push_back(format_double(value.values(i, t)));
      row.push_back(std::to_string(t < value.times.n_steps ? policy.controls(i, t) : -1));
      csv.row(row);
    }
  }
  csv.write(path);
}

// Reads a policy in the same layout; coordinates must match the given grid
// points within 1e-9.
inline PolicyTable read_policy_csv(const std::string& path, const TimeGrid& times, int n_points,
                                   int n_coords, const PointCoords& coords) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw IoError("read_policy_csv: empty file " + path);
  PolicyTable policy;
  policy.times = times;
  policy.controls = Eigen::MatrixXi::Constant(n_points, times.n_steps, -1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (static_cast<int>(cells.size()) != n_coords + 3)
      throw IoError("read_policy_csv: malformed row " + std::to_string(r));
    const int t = std::stoi(cells[0]);
    if (t < 0 || t > times.n_steps) throw IoError("read_policy_csv: time index out of range");
    if (t == times.n_steps) continue;  // terminal slice has no control
    // locate the grid point by coordinates
    int found = -1;
    for (int i = 0; i < n_points && found < 0; ++i) {
      const auto c = coords(i);
      bool match = true;
      for (int k = 0; k < n_coords; ++k)
        if (std::abs(c[k] - std::stod(cells[1 + k])) > 1e-9) {
          match = false;
          break;
        }
      if (match) found = i;
    }
    if (found < 0) throw ValidationError("read_policy_csv: row coordinates not on the grid");
    policy.controls(found, t) = std::stoi(cells[cells.size() - 1]);
  }
  if ((policy.controls.array() < 0).any())
    throw ValidationError("read_policy_csv: missing control entries");
  return policy;
}

}  // namespace qsoc
