#include "masklab/json_io.hpp"

#include <fstream>

namespace masklab {

using nlohmann::json;

namespace {

Cells cells_from_json(const json& j, const char* field) {
  if (!j.is_array()) fail(Errc::ParseError, std::string(field) + " must be an array of [f, f] rows");
  Cells cells;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != 2)
      fail(Errc::ParseError, std::string(field) + " rows must have exactly two entries");
    cells.push_back({row[0].get<double>(), row[1].get<double>()});
  }
  return cells;
}

json cells_to_json(const Cells& cells) {
  json rows = json::array();
  for (const auto& row : cells) rows.push_back({row[0], row[1]});
  return rows;
}

}  // namespace

json world_to_json(const WorldModel& model) {
  return json{{"k", model.k}, {"pi", cells_to_json(model.pi)},
              {"gamma", cells_to_json(model.gamma)}, {"rho", model.rho}};
}

WorldModel world_from_json(const json& j) {
  for (const char* field : {"k", "pi", "gamma", "rho"})
    if (!j.contains(field)) fail(Errc::ParseError, std::string("world is missing '") + field + "'");
  Cells pi = cells_from_json(j["pi"], "pi");
  Cells gamma = cells_from_json(j["gamma"], "gamma");
  int k = j["k"].get<int>();
  if (k != static_cast<int>(pi.size()))
    fail(Errc::ParseError, "k = " + std::to_string(k) + " does not match pi rows");
  return make_world(std::move(pi), std::move(gamma), j["rho"].get<double>());
}

WorldModel load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::ParseError, "'" + path + "': " + e.what());
  }
  return world_from_json(j);
}

void save_world(const WorldModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot write '" + path + "'");
  out << world_to_json(model).dump(2) << '\n';
}

json policy_to_json(const Policy& policy) { return json{{"alpha", cells_to_json(policy.alpha)}}; }

Policy policy_from_json(const json& j) {
  if (!j.contains("alpha")) fail(Errc::ParseError, "policy is missing 'alpha'");
  Policy policy;
  policy.alpha = cells_from_json(j["alpha"], "alpha");
  for (size_t x = 0; x < policy.alpha.size(); ++x)
    for (int p = 0; p < 2; ++p) {
      double a = policy.alpha[x][p];
      if (!(a >= 0.0 && a <= 1.0))
        fail(Errc::ParseError, "alpha[" + std::to_string(x) + "][" + std::to_string(p) +
                                   "] = " + std::to_string(a) + " outside [0, 1]");
    }
  return policy;
}

json report_to_json(const PolicyReport& report) {
  return json{{"objective", report.objective},
              {"ate", report.ate},
              {"participation", report.participation},
              {"cate_gaps", report.cate_gaps},
              {"max_abs_cate", report.max_abs_cate}};
}

json test_report_to_json(const TestReport& report) {
  return json{{"statistic", report.statistic}, {"p_value", report.p_value},
              {"df", report.df},               {"reject", report.reject},
              {"strata_used", report.strata_used}, {"degenerate", report.degenerate}};
}

json stratum_map_to_json(const Stratification& strat, const std::vector<int>& kept) {
  json strata = json::array();
  for (size_t i = 0; i < kept.size(); ++i) {
    json cell = json::object();
    for (const auto& [name, label] : strat.cells[kept[i]].labels) cell[name] = label;
    strata.push_back({{"id", static_cast<int>(i)}, {"cell", cell}});
  }
  return json{{"k", static_cast<int>(kept.size())}, {"strata", strata}};
}

}  // namespace masklab
