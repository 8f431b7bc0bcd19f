#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "masklab/world.hpp"

namespace masklab {

/// One declared covariate after typing: numeric columns keep parsed values,
/// categorical columns keep category codes plus the sorted label set.
struct CovariateColumn {
  std::string name;
  bool numeric = false;
  std::vector<double> values;        // numeric values, aligned with rows
  std::vector<int> codes;            // categorical codes, aligned with rows
  std::vector<std::string> labels;   // categorical label per code
};

struct LoadSchema {
  std::vector<std::string> covariates;
  std::string protected_col;
  std::string outcome_col;
  /// Optional raw-value mapping to {0, 1}; without it the column must
  /// already hold 0/1. Rows with unmapped values are filtered out.
  std::map<std::string, int> protected_mapping;
};

struct DataTable {
  std::vector<CovariateColumn> covariates;
  std::vector<int> group;       // 0/1 per row
  std::vector<double> outcome;  // declared outcome (or decision) per row
  long rows_dropped_missing = 0;
  long rows_dropped_unmapped = 0;

  long n() const { return static_cast<long>(group.size()); }
};

/// Reads a comma-delimited, header-row CSV. Rows missing any declared field
/// are dropped and counted.
DataTable load_table(const std::string& path, const LoadSchema& schema);

struct StratumCell {
  std::vector<std::pair<std::string, std::string>> labels;  // covariate -> bin label
};

struct Stratification {
  std::vector<int> stratum_of_row;  // 0..k-1
  int k = 0;
  std::vector<StratumCell> cells;   // one per stratum, for audit reports
  std::vector<std::string> warnings;
};

/// Cuts each numeric covariate at nearest-rank quantiles into the requested
/// number of bins (left-closed, right-open, final bin closed); categorical
/// covariates keep their categories. Strata are the nonempty cells of the
/// cross product. A covariate with fewer distinct values than bins
/// collapses, with a warning.
Stratification quantile_stratify(const DataTable& table, const std::vector<int>& bins_per_covariate);

struct EstimatedWorld {
  WorldModel world;
  std::vector<std::string> warnings;
  std::vector<int> kept_strata;  // original stratum ids, after any drops
};

/// pi from cell frequencies, gamma from mean outcomes per cell. Empty
/// (x, p) cells get gamma = 0.5 with a warning, or the whole stratum is
/// excluded when drop_empty_cells is set.
EstimatedWorld estimate_world(const DataTable& table, const Stratification& strat, double rho,
                              bool drop_empty_cells = false);

}  // namespace masklab
