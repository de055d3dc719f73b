#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "promises/aligner.hpp"

namespace promises {

inline constexpr const char* kVersion = "0.1.0";

/// Everything needed to rerun a CLI invocation and audit its outcome.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<double> dist_trace;
  int iterations_run = 0;
  bool converged = false;
  std::map<std::string, double> phase_seconds;
  std::string version = kVersion;
  std::map<std::string, std::string> input_checksums; // path -> digest
  std::vector<std::string> warnings;
  nlohmann::json extra = nlohmann::json::object();

  void record_inputs(const std::vector<std::filesystem::path>& paths);
  void record_result(const AlignmentResult& result);
};

void to_json(nlohmann::json& j, const RunManifest& manifest);
void from_json(const nlohmann::json& j, RunManifest& manifest);

nlohmann::json config_to_json(const AlignmentConfig& config);

/// Wall time of named phases.
class PhaseTimer {
public:
  explicit PhaseTimer(RunManifest& manifest, std::string phase)
      : manifest_(manifest), phase_(std::move(phase)),
        start_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start_;
    manifest_.phase_seconds[phase_] += elapsed.count();
  }
  PhaseTimer(const PhaseTimer&) = delete;
  PhaseTimer& operator=(const PhaseTimer&) = delete;

private:
  RunManifest& manifest_;
  std::string phase_;
  std::chrono::steady_clock::time_point start_;
};

} // namespace promises
