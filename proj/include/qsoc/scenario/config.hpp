#pragma once

#include <json.hpp>
#include <fstream>
#include <string>
#include <vector>

#include "qsoc/core/errors.hpp"

namespace qsoc {

inline const std::vector<std::pair<std::string, std::string>>& scenario_catalog() {
  static const std::vector<std::pair<std::string, std::string>> catalog = {
      {"lqg-1d",
       "scalar linear-Gaussian regulation: Kalman/grid filters, LQG synthesis, "
       "tower-property cost checks"},
      {"bench-bimodal",
       "double-well diffusion: chain approximation, information-state DP against "
       "constant policies"},
      {"qubit-stabilize",
       "monitored decaying qubit: homodyne feedback, measurement-feedback DP, "
       "risk-sensitive identities"},
      {"cavity-hinfty",
       "two-cavity coherent feedback: w->z gain reduction, realizability and "
       "dissipation checks"},
  };
  return catalog;
}

inline nlohmann::json scenario_defaults(const std::string& name) {
  using json = nlohmann::json;
  if (name == "lqg-1d") {
    return json{
        {"scenario", "lqg-1d"},
        {"seed", 20120901},
        {"model",
         {{"a", -1.0}, {"b", 1.0}, {"c", 1.0}, {"sigma", 1.0}, {"x0_mean", 0.0},
          {"x0_std", 0.3}, {"control_set", {-1.0, 0.0, 1.0}}}},
        {"cost", {{"q", 1.0}, {"r", 1.0}, {"p", 0.5}, {"mu", 0.0}}},
        {"controller",
         {{"type", "lqg"}, {"threshold", 0.0}, {"u_below", 1.0}, {"u_above", -1.0},
          {"u", 0.0}}},
        {"solver",
         {{"T", 1.0}, {"dt", 1e-3}, {"grid_min", -3.0}, {"grid_max", 3.0}, {"dx", 0.05},
          {"n_paths", 2000}}},
    };
  }
  if (name == "bench-bimodal") {
    return json{
        {"scenario", "bench-bimodal"},
        {"seed", 20120902},
        {"model", {{"sigma", 0.5}, {"x0", -1.0}, {"control_set", {-1.0, 0.0, 1.0}}}},
        {"cost", {{"q", 1.0}, {"r", 0.5}, {"p", 0.5}, {"target", 1.0}, {"mu", 0.0}}},
        {"controller", {{"type", "dp"}, {"u", 0.0}, {"policy_csv", ""}}},
        {"solver",
         {{"T", 4.0}, {"dt", 0.01}, {"chain_min", -1.0}, {"chain_max", 1.0},
          {"chain_points", 3}, {"mesh", 16}, {"n_paths", 2000}}},
    };
  }
  if (name == "qubit-stabilize") {
    return json{
        {"scenario", "qubit-stabilize"},
        {"seed", 20120903},
        {"model", {{"gamma", 1.0}, {"control_set", {0.0, 1.0, 2.0}}}},
        {"cost", {{"q", 1.0}, {"r", 0.05}, {"p", 0.5}, {"mu", 0.0}}},
        {"controller", {{"type", "threshold"}, {"threshold", 0.5}, {"u_index", 0}}},
        {"solver",
         {{"T", 1.0}, {"dt", 5e-3}, {"n_traj", 2000}, {"bloch_nr", 6}, {"bloch_ntheta", 8},
          {"bloch_nphi", 12}}},
    };
  }
  if (name == "cavity-hinfty") {
    return json{
        {"scenario", "cavity-hinfty"},
        {"seed", 20120904},
        {"plant", {{"kappas", {2.6, 0.2, 0.2}}, {"detuning", 0.0}}},
        {"controller", {{"kappas", {1.0, 1.0, 0.2}}, {"detuning", 0.0}}},
        {"solver",
         {{"omega_min", 1e-2}, {"omega_max", 1e2}, {"n_omega", 300}, {"n_traj", 2000},
          {"T", 4.0}, {"dt", 2e-3}}},
    };
  }
  std::string names;
  for (const auto& [n, _] : scenario_catalog()) names += " " + n;
  throw ValidationError("unknown scenario '" + name + "'; available:" + names);
}

inline void merge_defaults(nlohmann::json& config, const nlohmann::json& defaults) {
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    if (!config.contains(it.key())) {
      config[it.key()] = it.value();
    } else if (config[it.key()].is_object() && it.value().is_object()) {
      merge_defaults(config[it.key()], it.value());
    }
  }
}

// Loads a config from a JSON file or resolves a bare built-in scenario name;
// files must carry an explicit seed, name-only runs take the default seed.
inline nlohmann::json load_scenario_config(const std::string& path_or_name) {
  nlohmann::json config;
  std::ifstream in(path_or_name);
  if (in) {
    try {
      in >> config;
    } catch (const nlohmann::json::exception& err) {
      throw ValidationError("config parse error in " + path_or_name + ": " + err.what());
    }
    if (!config.contains("scenario") || !config["scenario"].is_string())
      throw ValidationError("config validation: missing string field 'scenario'");
    if (!config.contains("seed"))
      throw ValidationError("config validation: missing mandatory field 'seed'");
  } else {
    config["scenario"] = path_or_name;  // bare built-in name
  }
  merge_defaults(config, scenario_defaults(config["scenario"].get<std::string>()));
  if (!config["seed"].is_number_integer())
    throw ValidationError("config validation: 'seed' must be an integer");
  return config;
}

}  // namespace qsoc
