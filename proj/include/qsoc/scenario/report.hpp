#pragma once

#include <json.hpp>
#include <fstream>
#include <string>
#include <vector>

#include "qsoc/core/monte_carlo.hpp"
#include "qsoc/io/csv.hpp"

namespace qsoc {

// Structured run report: effective config echo (hash included), per-metric
// estimates with standard errors or an exactness flag, invariant-check
// outcomes, repair/clipping counters and timing.
class RunReport {
 public:
  explicit RunReport(nlohmann::json effective_config)
      : config_(std::move(effective_config)) {
    body_["scenario"] = config_.value("scenario", "");
    body_["config"] = config_;
    body_["config_hash"] = hash_hex(config_.dump());
    body_["metrics"] = nlohmann::json::object();
    body_["invariants"] = nlohmann::json::object();
    body_["counters"] = nlohmann::json::object();
    body_["artifacts"] = nlohmann::json::array();
  }

  void metric(const std::string& name, const Estimate& est) {
    nlohmann::json m;
    m["value"] = est.value;
    if (est.exact)
      m["exact"] = true;
    else
      m["std_error"] = est.std_error;
    if (!est.warnings.empty()) m["warnings"] = est.warnings;
    body_["metrics"][name] = m;
  }

  void metric_exact(const std::string& name, double value) {
    Estimate e;
    e.value = value;
    e.exact = true;
    metric(name, e);
  }

  void invariant(const std::string& name, bool pass, const std::string& detail) {
    body_["invariants"][name] = {{"pass", pass}, {"detail", detail}};
    if (!pass) all_pass_ = false;
  }

  void counter(const std::string& name, long value) { body_["counters"][name] = value; }

  void artifact(const std::string& path) { body_["artifacts"].push_back(path); }

  void timing(double seconds) { body_["timing_seconds"] = seconds; }

  bool all_invariants_pass() const { return all_pass_; }

  const nlohmann::json& json() const { return body_; }

  std::string config_hash() const { return body_["config_hash"]; }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << body_.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + path);
  }

  static std::string hash_hex(const std::string& data) {
    // FNV-1a 64-bit
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  nlohmann::json config_;
  nlohmann::json body_;
  bool all_pass_ = true;
};

}  // namespace qsoc
