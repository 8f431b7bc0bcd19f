#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "masklab/ingest.hpp"
#include "masklab/rng.hpp"
#include "masklab/sim.hpp"
#include "support.hpp"

using namespace masklab;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& contents) {
    static int counter = 0;
    path = "masklab_test_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << contents;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

LoadSchema basic_schema() {
  LoadSchema schema;
  schema.covariates = {"age", "priors"};
  schema.protected_col = "race";
  schema.outcome_col = "two_year_recid";
  schema.protected_mapping = {{"A", 0}, {"B", 1}};
  return schema;
}

}  // namespace

TEST_CASE("load_table round trip with typed columns") {
  TempCsv csv(
      "age,priors,charge,sex,race,two_year_recid\n"
      "25,0,F,Male,A,0\n"
      "34,2,M,Female,B,1\n"
      "41,1,F,Male,A,1\n"
      "29,5,M,Male,B,0\n");
  DataTable table = load_table(csv.path, basic_schema());
  CHECK(table.n() == 4);
  CHECK(table.rows_dropped_missing == 0);
  CHECK(table.covariates[0].numeric);
  CHECK(table.covariates[0].values[1] == 34.0);
  CHECK(table.group == std::vector<int>{0, 1, 0, 1});
  CHECK(table.outcome[1] == 1.0);
}

TEST_CASE("missing declared column") {
  TempCsv csv("age,priors,two_year_recid\n25,0,0\n");
  CHECK_THROWS_AS(load_table(csv.path, basic_schema()), Error);
  CHECK_THROWS_AS(load_table("no_such_file.csv", basic_schema()), Error);
}

TEST_CASE("rows with missing declared fields are dropped and counted") {
  TempCsv csv(
      "age,priors,race,two_year_recid\n"
      "25,0,A,0\n"
      "34,2,B,\n"
      "29,1,A,1\n");
  DataTable table = load_table(csv.path, basic_schema());
  CHECK(table.n() == 2);
  CHECK(table.rows_dropped_missing == 1);
}

TEST_CASE("unmapped protected values are filtered, bare columns must be 0/1") {
  TempCsv csv(
      "age,priors,race,two_year_recid\n"
      "25,0,A,0\n"
      "31,1,C,0\n"
      "29,1,B,1\n");
  DataTable table = load_table(csv.path, basic_schema());
  CHECK(table.n() == 2);
  CHECK(table.rows_dropped_unmapped == 1);

  TempCsv bare(
      "age,priors,race,two_year_recid\n"
      "25,0,2,0\n");
  LoadSchema schema = basic_schema();
  schema.protected_mapping.clear();
  CHECK_THROWS_AS(load_table(bare.path, schema), Error);
}

TEST_CASE("empty tables are rejected") {
  TempCsv csv("age,priors,race,two_year_recid\n");
  CHECK_THROWS_AS(load_table(csv.path, basic_schema()), Error);
}

TEST_CASE("quantile binning splits at the median") {
  TempCsv csv(
      "v,race,two_year_recid\n"
      "1,A,0\n2,A,0\n3,B,0\n4,B,1\n");
  LoadSchema schema;
  schema.covariates = {"v"};
  schema.protected_col = "race";
  schema.outcome_col = "two_year_recid";
  schema.protected_mapping = {{"A", 0}, {"B", 1}};
  DataTable table = load_table(csv.path, schema);
  Stratification strat = quantile_stratify(table, {2});
  CHECK(strat.k == 2);
  CHECK(strat.stratum_of_row == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("cross products cap the stratum count and drop empty cells") {
  TempCsv csv(
      "a,b,race,two_year_recid\n"
      "1,x,A,0\n2,x,B,0\n3,y,A,1\n4,y,B,1\n");
  LoadSchema schema;
  schema.covariates = {"a", "b"};
  schema.protected_col = "race";
  schema.outcome_col = "two_year_recid";
  schema.protected_mapping = {{"A", 0}, {"B", 1}};
  DataTable table = load_table(csv.path, schema);
  Stratification strat = quantile_stratify(table, {2, 1});
  CHECK(strat.k <= 4);
  CHECK(*std::max_element(strat.stratum_of_row.begin(), strat.stratum_of_row.end()) ==
        strat.k - 1);
  // Every stratum cell carries a label per covariate.
  for (const auto& cell : strat.cells) CHECK(cell.labels.size() == 2);
}

TEST_CASE("constant covariates collapse with a warning") {
  TempCsv csv(
      "v,race,two_year_recid\n"
      "7,A,0\n7,B,0\n7,A,1\n");
  LoadSchema schema;
  schema.covariates = {"v"};
  schema.protected_col = "race";
  schema.outcome_col = "two_year_recid";
  schema.protected_mapping = {{"A", 0}, {"B", 1}};
  DataTable table = load_table(csv.path, schema);
  Stratification strat = quantile_stratify(table, {3});
  CHECK(strat.k == 1);
  REQUIRE(!strat.warnings.empty());
  CHECK(strat.warnings[0].find("v") != std::string::npos);
}

TEST_CASE("stratification is invariant to row order") {
  std::string header = "v,w,race,two_year_recid\n";
  std::vector<std::string> rows = {"1,0.5,A,0\n", "2,0.1,B,0\n", "3,0.9,A,1\n",
                                   "4,0.4,B,1\n", "5,0.2,A,0\n", "6,0.8,B,1\n"};
  LoadSchema schema;
  schema.covariates = {"v", "w"};
  schema.protected_col = "race";
  schema.outcome_col = "two_year_recid";
  schema.protected_mapping = {{"A", 0}, {"B", 1}};

  TempCsv forward(header + rows[0] + rows[1] + rows[2] + rows[3] + rows[4] + rows[5]);
  TempCsv reversed(header + rows[5] + rows[4] + rows[3] + rows[2] + rows[1] + rows[0]);
  Stratification a = quantile_stratify(load_table(forward.path, schema), {2, 3});
  Stratification b = quantile_stratify(load_table(reversed.path, schema), {2, 3});
  REQUIRE(a.k == b.k);
  for (size_t i = 0; i < 6; ++i) CHECK(a.stratum_of_row[i] == b.stratum_of_row[5 - i]);
}

TEST_CASE("estimate_world reproduces an exactly realized joint") {
  // 15 rows realizing the worked example's joint: 1, 9, 4, 1 per cell.
  std::string body;
  auto rows = [&](int count, const std::string& x, const std::string& p, const std::string& y) {
    for (int i = 0; i < count; ++i) body += x + "," + p + "," + y + "\n";
  };
  rows(1, "0", "0", "1");
  rows(9, "0", "1", "0");
  rows(4, "1", "0", "0");
  rows(1, "1", "1", "1");
  TempCsv csv("x,p,y\n" + body);
  LoadSchema schema;
  schema.covariates = {"x"};
  schema.protected_col = "p";
  schema.outcome_col = "y";
  DataTable table = load_table(csv.path, schema);
  Stratification strat = quantile_stratify(table, {2});
  EstimatedWorld est = estimate_world(table, strat, 0.1);
  WorldModel expected = masklab::testing::example_world();
  for (int x = 0; x < 2; ++x)
    for (int p = 0; p < 2; ++p)
      CHECK(est.world.pi[x][p] == doctest::Approx(expected.pi[x][p]).epsilon(1e-12));
  CHECK_NOTHROW(validate_world(est.world));
}

TEST_CASE("degenerate outcomes and empty cells") {
  TempCsv csv(
      "x,p,y\n"
      "0,0,0\n0,0,0\n0,1,0\n1,0,0\n1,0,0\n");
  LoadSchema schema;
  schema.covariates = {"x"};
  schema.protected_col = "p";
  schema.outcome_col = "y";
  DataTable table = load_table(csv.path, schema);
  Stratification strat = quantile_stratify(table, {2});
  EstimatedWorld est = estimate_world(table, strat, 0.2);
  CHECK(est.world.gamma[0][0] == 0.0);
  CHECK(est.world.gamma[0][1] == 0.0);
  // The (1, 1) cell has no rows: imputed at 0.5 with a warning.
  CHECK(est.world.gamma[1][1] == 0.5);
  REQUIRE(!est.warnings.empty());

  EstimatedWorld dropped = estimate_world(table, strat, 0.2, /*drop_empty_cells=*/true);
  CHECK(dropped.world.k == 1);
  CHECK(dropped.kept_strata == std::vector<int>{0});
}

TEST_CASE("estimation recovers pi from simulated decision logs") {
  WorldModel model = sample_world(2, 0.3, 901);
  const long n = 100000;
  DecisionBatch batch = generate_batch(model, Policy::constant(2, 1.0), n, 902);
  std::string body = "x,p,y\n";
  for (const auto& rec : batch.records)
    body += std::to_string(rec.x) + "," + std::to_string(rec.p) + "," +
            std::to_string(rec.y.value() ? 1 : 0) + "\n";
  TempCsv csv(body);
  LoadSchema schema;
  schema.covariates = {"x"};
  schema.protected_col = "p";
  schema.outcome_col = "y";
  DataTable table = load_table(csv.path, schema);
  Stratification strat = quantile_stratify(table, {2});
  EstimatedWorld est = estimate_world(table, strat, model.rho);
  for (int x = 0; x < 2; ++x)
    for (int p = 0; p < 2; ++p) {
      double se = std::sqrt(model.pi[x][p] * (1 - model.pi[x][p]) / n);
      CHECK(std::abs(est.world.pi[x][p] - model.pi[x][p]) <= 3 * se);
    }
  CHECK_NOTHROW(validate_world(est.world));
}
