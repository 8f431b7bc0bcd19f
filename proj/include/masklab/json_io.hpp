#pragma once

#include <string>

#include <json.hpp>

#include "masklab/ingest.hpp"
#include "masklab/stats.hpp"
#include "masklab/world.hpp"

namespace masklab {

// World files use exactly: {"k": int, "pi": [[f,f],...], "gamma":
// [[f,f],...], "rho": f}; row index is the stratum, column index the group.

nlohmann::json world_to_json(const WorldModel& model);
WorldModel world_from_json(const nlohmann::json& j);

WorldModel load_world(const std::string& path);
void save_world(const WorldModel& model, const std::string& path);

nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const PolicyReport& report);
nlohmann::json test_report_to_json(const TestReport& report);
nlohmann::json stratum_map_to_json(const Stratification& strat, const std::vector<int>& kept);

}  // namespace masklab
