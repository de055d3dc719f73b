#include "promises/manifest.hpp"

#include <variant>

#include "promises/io.hpp"

namespace promises {

void RunManifest::record_inputs(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) input_checksums[p.string()] = io::file_checksum(p);
}

void RunManifest::record_result(const AlignmentResult& result) {
  dist_trace = result.dist_trace;
  iterations_run = result.iterations_run;
  converged = result.converged;
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
}

void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"command", m.command},
                     {"config", m.config},
                     {"dist_trace", m.dist_trace},
                     {"iterations_run", m.iterations_run},
                     {"converged", m.converged},
                     {"phase_seconds", m.phase_seconds},
                     {"version", m.version},
                     {"input_checksums", m.input_checksums},
                     {"warnings", m.warnings},
                     {"extra", m.extra}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  j.at("command").get_to(m.command);
  m.config = j.at("config");
  j.at("dist_trace").get_to(m.dist_trace);
  j.at("iterations_run").get_to(m.iterations_run);
  j.at("converged").get_to(m.converged);
  j.at("phase_seconds").get_to(m.phase_seconds);
  j.at("version").get_to(m.version);
  j.at("input_checksums").get_to(m.input_checksums);
  j.at("warnings").get_to(m.warnings);
  m.extra = j.value("extra", nlohmann::json::object());
}

nlohmann::json config_to_json(const AlignmentConfig& config) {
  nlohmann::json prior{{"k", config.prior.k}};
  std::visit(
      [&](const auto& loc) {
        using T = std::decay_t<decltype(loc)>;
        if constexpr (std::is_same_v<T, IdentityLocation>) {
          prior["location"] = "identity";
        } else if constexpr (std::is_same_v<T, EuclideanKernelLocation>) {
          prior["location"] = "euclidean";
          prior["variables"] = loc.coordinates.rows();
        } else {
          prior["location"] = "custom";
          prior["variables"] = loc.F.rows();
        }
      },
      config.prior.location);
  return {{"tol", config.tol},
          {"max_iterations", config.max_iterations},
          {"scaling_enabled", config.scaling_enabled},
          {"covariance_mode", config.covariance_mode == CovarianceMode::identity
                                  ? "identity"
                                  : "dutilleul"},
          {"epsilon1", config.epsilon1},
          {"epsilon2", config.epsilon2},
          {"max_covariance_iterations", config.max_covariance_iterations},
          {"workers", config.workers},
          {"prior", prior}};
}

} // namespace promises
