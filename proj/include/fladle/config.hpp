#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fladle/simulation.hpp"

namespace fladle {

inline constexpr const char* kVersion = "0.1.0";

struct StudySpec {
  std::vector<SimulationConfig> scenarios;
  std::vector<Method> methods;
  std::size_t replicates = 100;
};

// One scenario object; array-valued "n", "m" or "sigma2" expand into the
// cartesian product, in that nesting order.
std::vector<SimulationConfig> scenarios_from_json(const nlohmann::json& j);
StudySpec study_from_json(const nlohmann::json& j);
StudySpec load_study(const std::string& path);

EstimationOptions estimation_from_json(const nlohmann::json& j, const EstimationOptions& base = {});
nlohmann::json to_json(const SimulationConfig& c);
nlohmann::json to_json(const EstimationOptions& o);

// 64-bit FNV-1a, used to fingerprint configs in run manifests.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace fladle
