#pragma once

#include <set>
#include <utility>

#include "qsoc/network/linear_system.hpp"

namespace qsoc {

// Output-port-name -> input-port-name connections over the union of two
// systems' ports.
struct Wiring {
  std::vector<std::pair<std::string, std::string>> connections;
};

// Standard state-space interconnection: form the direct sum, route each wired
// output into its destination input, eliminate the connected ports and expose
// the rest. Errors out when the algebraic loop through the feedthrough is
// singular.
inline LinearQuantumSystem interconnect(const LinearQuantumSystem& first,
                                        const LinearQuantumSystem& second,
                                        const Wiring& wiring) {
  first.validate();
  second.validate();

  LinearQuantumSystem sum;
  const int n1 = first.n_states(), n2 = second.n_states();
  sum.A = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
  sum.A.topLeftCorner(n1, n1) = first.A;
  sum.A.bottomRightCorner(n2, n2) = second.A;
  const int mi1 = 2 * first.n_inputs(), mi2 = 2 * second.n_inputs();
  const int mo1 = 2 * first.n_outputs(), mo2 = 2 * second.n_outputs();
  sum.B = Eigen::MatrixXd::Zero(n1 + n2, mi1 + mi2);
  sum.B.topLeftCorner(n1, mi1) = first.B;
  sum.B.bottomRightCorner(n2, mi2) = second.B;
  sum.C = Eigen::MatrixXd::Zero(mo1 + mo2, n1 + n2);
  sum.C.topLeftCorner(mo1, n1) = first.C;
  sum.C.bottomRightCorner(mo2, n2) = second.C;
  sum.D = Eigen::MatrixXd::Zero(mo1 + mo2, mi1 + mi2);
  sum.D.topLeftCorner(mo1, mi1) = first.D;
  sum.D.bottomRightCorner(mo2, mi2) = second.D;
  sum.inputs = first.inputs;
  sum.inputs.insert(sum.inputs.end(), second.inputs.begin(), second.inputs.end());
  sum.outputs = first.outputs;
  sum.outputs.insert(sum.outputs.end(), second.outputs.begin(), second.outputs.end());
  sum.validate();  // catches duplicate names across the pair

  if (wiring.connections.empty()) return sum;

  std::set<int> used_outputs, used_inputs;
  std::vector<std::pair<int, int>> routes;  // (output channel, input channel)
  for (const auto& [from, to] : wiring.connections) {
    const int out = sum.output_index(from);
    const int in = sum.input_index(to);
    if (!used_outputs.insert(out).second)
      throw ValidationError("interconnect: output port '" + from + "' used twice");
    if (!used_inputs.insert(in).second)
      throw ValidationError("interconnect: input port '" + to + "' used twice");
    const bool same_channel_first =
        out < first.n_outputs() && in < first.n_inputs() && out == in;
    const bool same_channel_second =
        out >= first.n_outputs() && in >= first.n_inputs() &&
        out - first.n_outputs() == in - first.n_inputs();
    if (same_channel_first || same_channel_second)
      throw ValidationError("interconnect: self-loop on port pair '" + from + "'/'" + to + "'");
    routes.emplace_back(out, in);
  }

  const int nc = static_cast<int>(routes.size());
  std::vector<int> ext_inputs, ext_outputs;
  for (int i = 0; i < sum.n_inputs(); ++i)
    if (!used_inputs.count(i)) ext_inputs.push_back(i);
  for (int o = 0; o < sum.n_outputs(); ++o)
    if (!used_outputs.count(o)) ext_outputs.push_back(o);

  auto in_cols = [&](const std::vector<int>& channels, const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), 2 * channels.size());
    for (std::size_t k = 0; k < channels.size(); ++k)
      out.middleCols(2 * k, 2) = m.middleCols(2 * channels[k], 2);
    return out;
  };
  auto out_rows = [&](const std::vector<int>& channels, const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(2 * channels.size(), m.cols());
    for (std::size_t k = 0; k < channels.size(); ++k)
      out.middleRows(2 * k, 2) = m.middleRows(2 * channels[k], 2);
    return out;
  };

  std::vector<int> conn_out, conn_in;
  for (const auto& [out, in] : routes) {
    conn_out.push_back(out);
    conn_in.push_back(in);
  }

  const Eigen::MatrixXd Bc = in_cols(conn_in, sum.B);
  const Eigen::MatrixXd Be = in_cols(ext_inputs, sum.B);
  const Eigen::MatrixXd Cp = out_rows(conn_out, sum.C);
  const Eigen::MatrixXd Dpe = in_cols(ext_inputs, out_rows(conn_out, sum.D));
  const Eigen::MatrixXd Dpc = in_cols(conn_in, out_rows(conn_out, sum.D));
  const Eigen::MatrixXd Cz = out_rows(ext_outputs, sum.C);
  const Eigen::MatrixXd Dze = in_cols(ext_inputs, out_rows(ext_outputs, sum.D));
  const Eigen::MatrixXd Dzc = in_cols(conn_in, out_rows(ext_outputs, sum.D));

  // u_c = y_conn (channel-aligned after the row/col gather), so the loop map
  // is u_c = Cp x + Dpe u_e + Dpc u_c.
  const Eigen::MatrixXd loop = Eigen::MatrixXd::Identity(2 * nc, 2 * nc) - Dpc;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(loop);
  if (!lu.isInvertible()) {
    std::string names;
    for (const auto& [from, to] : wiring.connections) names += " " + from + "->" + to;
    throw ValidationError("interconnect: ill-posed algebraic loop through" + names);
  }
  const Eigen::MatrixXd Minv = lu.inverse();

  LinearQuantumSystem closed;
  closed.A = sum.A + Bc * Minv * Cp;
  closed.B = Be + Bc * Minv * Dpe;
  closed.C = Cz + Dzc * Minv * Cp;
  closed.D = Dze + Dzc * Minv * Dpe;
  for (int i : ext_inputs) closed.inputs.push_back(sum.inputs[i]);
  for (int o : ext_outputs) closed.outputs.push_back(sum.outputs[o]);
  closed.validate();
  return closed;
}

}  // namespace qsoc
