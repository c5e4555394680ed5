#pragma once

#include "qsoc/network/interconnect.hpp"

namespace qsoc {

// Two-cavity robust-control configuration: a three-mirror plant cavity with
// disturbance input w and performance output z, and a three-mirror controller
// cavity closing the loop through the coherent signals y (plant to controller)
// and u (controller to plant). The controller carries its own vacuum inputs
// v_k1, v_k2.
struct CoherentNetwork {
  LinearQuantumSystem plant;
  LinearQuantumSystem controller;
  LinearQuantumSystem closed;
};

inline CoherentNetwork make_cavity_feedback_network(const std::vector<double>& plant_kappas,
                                                    double plant_detuning,
                                                    const std::vector<double>& ctrl_kappas,
                                                    double ctrl_detuning) {
  if (plant_kappas.size() != 3 || ctrl_kappas.size() != 3)
    throw ValidationError("make_cavity_feedback_network: both cavities need three mirrors");
  CoherentNetwork net;
  net.plant = cavity(plant_kappas, plant_detuning, {"w", "u", "v_p"}, {"w_out", "z", "y"});
  net.controller =
      cavity(ctrl_kappas, ctrl_detuning, {"y_k", "v_k1", "v_k2"}, {"z_k1", "u_k", "z_k2"});
  Wiring wiring;
  wiring.connections = {{"y", "y_k"}, {"u_k", "u"}};
  net.closed = interconnect(net.plant, net.controller, wiring);
  return net;
}

}  // namespace qsoc
