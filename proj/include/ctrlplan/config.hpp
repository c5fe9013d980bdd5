#pragma once

// JSON configuration: problem definition (model, workspace, cost, metric,
// initial state) and planner settings. See README for the schema.

#include <string>

#include <json.hpp>

#include "ctrlplan/planner.hpp"

namespace ctrlplan {

Problem problemFromJson(const nlohmann::json& j);
PlannerConfig plannerConfigFromJson(const nlohmann::json& j, const PlannerConfig& defaults = {});
nlohmann::json toJson(const PlannerConfig& cfg);

// Reads a whole file as JSON; throws Io or InvalidConfig.
nlohmann::json loadJsonFile(const std::string& path);

}  // namespace ctrlplan
