#include "masklab/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace masklab {

namespace {

// Minimal CSV field splitter: handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

bool parse_double(const std::string& text, double* out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end;
}

std::string trim(const std::string& text) {
  size_t a = text.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = text.find_last_not_of(" \t");
  return text.substr(a, b - a + 1);
}

std::string format_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

DataTable load_table(const std::string& path, const LoadSchema& schema) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) fail(Errc::EmptyTable, "'" + path + "' has no header row");
  std::vector<std::string> header = split_csv_line(line);
  auto column_index = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return static_cast<int>(i);
    fail(Errc::MissingColumn, "column '" + name + "' not found in '" + path + "'");
  };

  std::vector<int> cov_idx;
  for (const auto& name : schema.covariates) cov_idx.push_back(column_index(name));
  int prot_idx = column_index(schema.protected_col);
  int out_idx = column_index(schema.outcome_col);

  std::vector<std::vector<std::string>> cov_raw(schema.covariates.size());
  DataTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    auto get = [&](int idx) -> std::string {
      return idx < static_cast<int>(fields.size()) ? trim(fields[idx]) : std::string();
    };

    bool missing = get(prot_idx).empty() || get(out_idx).empty();
    for (int idx : cov_idx) missing = missing || get(idx).empty();
    if (missing) {
      ++table.rows_dropped_missing;
      continue;
    }

    int group;
    std::string prot_value = get(prot_idx);
    if (!schema.protected_mapping.empty()) {
      auto it = schema.protected_mapping.find(prot_value);
      if (it == schema.protected_mapping.end()) {
        ++table.rows_dropped_unmapped;
        continue;
      }
      group = it->second;
    } else {
      double v;
      if (!parse_double(prot_value, &v) || (v != 0.0 && v != 1.0))
        fail(Errc::NonBinaryProtected,
             "protected column '" + schema.protected_col + "' has value '" + prot_value + "'");
      group = static_cast<int>(v);
    }
    if (group != 0 && group != 1)
      fail(Errc::NonBinaryProtected, "protected mapping must target {0, 1}");

    double outcome;
    if (!parse_double(get(out_idx), &outcome))
      fail(Errc::ParseError,
           "outcome column '" + schema.outcome_col + "' has non-numeric value '" + get(out_idx) + "'");

    table.group.push_back(group);
    table.outcome.push_back(outcome);
    for (size_t c = 0; c < cov_idx.size(); ++c) cov_raw[c].push_back(get(cov_idx[c]));
  }
  if (table.group.empty())
    fail(Errc::EmptyTable, "'" + path + "' has no usable rows");

  // Type each covariate: numeric when every value parses, else categorical
  // with lexicographically sorted labels (row-order invariant).
  for (size_t c = 0; c < cov_raw.size(); ++c) {
    CovariateColumn col;
    col.name = schema.covariates[c];
    col.numeric = true;
    std::vector<double> nums(cov_raw[c].size());
    for (size_t r = 0; r < cov_raw[c].size(); ++r) {
      if (!parse_double(cov_raw[c][r], &nums[r])) {
        col.numeric = false;
        break;
      }
    }
    if (col.numeric) {
      col.values = std::move(nums);
    } else {
      std::set<std::string> labels(cov_raw[c].begin(), cov_raw[c].end());
      col.labels.assign(labels.begin(), labels.end());
      col.codes.resize(cov_raw[c].size());
      for (size_t r = 0; r < cov_raw[c].size(); ++r) {
        auto it = std::lower_bound(col.labels.begin(), col.labels.end(), cov_raw[c][r]);
        col.codes[r] = static_cast<int>(it - col.labels.begin());
      }
    }
    table.covariates.push_back(std::move(col));
  }
  return table;
}

Stratification quantile_stratify(const DataTable& table, const std::vector<int>& bins_per_covariate) {
  if (table.n() == 0) fail(Errc::EmptyTable, "table has no rows");
  if (bins_per_covariate.size() != table.covariates.size())
    fail(Errc::DimensionMismatch, "bins_per_covariate size does not match covariate count");
  for (int b : bins_per_covariate)
    if (b < 1) fail(Errc::DomainError, "bins_per_covariate entries must be >= 1");

  const long n = table.n();
  Stratification strat;

  struct Dimension {
    std::vector<int> code_of_row;
    std::vector<std::string> labels;
  };
  std::vector<Dimension> dims;

  for (size_t c = 0; c < table.covariates.size(); ++c) {
    const CovariateColumn& col = table.covariates[c];
    Dimension dim;
    if (!col.numeric) {
      dim.code_of_row = col.codes;
      dim.labels = col.labels;
    } else {
      std::vector<double> sorted(col.values);
      std::sort(sorted.begin(), sorted.end());
      long distinct = 1;
      for (long r = 1; r < n; ++r)
        if (sorted[r] != sorted[r - 1]) ++distinct;
      int bins = bins_per_covariate[c];
      if (distinct < bins) {
        strat.warnings.push_back("covariate '" + col.name + "' has " + std::to_string(distinct) +
                                 " distinct values, fewer than " + std::to_string(bins) +
                                 " bins; collapsing");
        bins = static_cast<int>(distinct);
      }
      // Nearest-rank quantile cuts. The tied block holding the cut value
      // goes to whichever side leaves the left count closer to the target,
      // so imbalanced binary columns still split; duplicate cuts merge into
      // wider bins.
      std::vector<double> edges;
      for (int j = 1; j < bins; ++j) {
        double target = static_cast<double>(j) * static_cast<double>(n) / bins;
        long rank = (static_cast<long>(j) * n + bins - 1) / bins;  // ceil(target), 1-based
        double cut = sorted[std::clamp<long>(rank, 1, n) - 1];
        long below = std::lower_bound(sorted.begin(), sorted.end(), cut) - sorted.begin();
        auto next = std::upper_bound(sorted.begin(), sorted.end(), cut);
        long through = next - sorted.begin();
        double edge;
        if (next == sorted.end())
          edge = cut;
        else
          edge = std::abs(below - target) < std::abs(through - target) ? cut : *next;
        if ((edges.empty() || edge > edges.back()) && edge > sorted.front()) edges.push_back(edge);
      }
      dim.code_of_row.resize(n);
      for (long r = 0; r < n; ++r)
        dim.code_of_row[r] = static_cast<int>(
            std::upper_bound(edges.begin(), edges.end(), col.values[r]) - edges.begin());
      for (size_t b = 0; b <= edges.size(); ++b) {
        std::string lo = b == 0 ? "-inf" : format_number(edges[b - 1]);
        std::string hi = b == edges.size() ? "+inf" : format_number(edges[b]);
        dim.labels.push_back("[" + lo + ";" + hi + ")");
      }
    }
    dims.push_back(std::move(dim));
  }

  // Mixed-radix cell index over the declared covariate order; only
  // realized cells become strata.
  std::vector<long> cell_of_row(n);
  for (long r = 0; r < n; ++r) {
    long cell = 0;
    for (const Dimension& dim : dims)
      cell = cell * static_cast<long>(dim.labels.size()) + dim.code_of_row[r];
    cell_of_row[r] = cell;
  }
  std::vector<long> cells(cell_of_row);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  strat.k = static_cast<int>(cells.size());
  strat.stratum_of_row.resize(n);
  for (long r = 0; r < n; ++r) {
    auto it = std::lower_bound(cells.begin(), cells.end(), cell_of_row[r]);
    strat.stratum_of_row[r] = static_cast<int>(it - cells.begin());
  }
  for (long cell : cells) {
    StratumCell desc;
    long rest = cell;
    std::vector<int> codes(dims.size());
    for (size_t c = dims.size(); c-- > 0;) {
      codes[c] = static_cast<int>(rest % static_cast<long>(dims[c].labels.size()));
      rest /= static_cast<long>(dims[c].labels.size());
    }
    for (size_t c = 0; c < dims.size(); ++c)
      desc.labels.emplace_back(table.covariates[c].name, dims[c].labels[codes[c]]);
    strat.cells.push_back(std::move(desc));
  }
  return strat;
}

EstimatedWorld estimate_world(const DataTable& table, const Stratification& strat, double rho,
                              bool drop_empty_cells) {
  if (table.n() == 0 || strat.k == 0) fail(Errc::EmptyTable, "nothing to estimate from");
  if (static_cast<long>(strat.stratum_of_row.size()) != table.n())
    fail(Errc::DimensionMismatch, "stratification does not match table rows");

  std::vector<std::array<long, 2>> count(strat.k, {0, 0});
  std::vector<std::array<double, 2>> outcome_sum(strat.k, {0.0, 0.0});
  for (long r = 0; r < table.n(); ++r) {
    int x = strat.stratum_of_row[r];
    int p = table.group[r];
    ++count[x][p];
    outcome_sum[x][p] += table.outcome[r];
  }

  EstimatedWorld est;
  std::vector<int> keep;
  for (int x = 0; x < strat.k; ++x) {
    bool has_empty = count[x][0] == 0 || count[x][1] == 0;
    if (drop_empty_cells && has_empty) {
      est.warnings.push_back("stratum " + std::to_string(x) + " dropped: a group cell is empty");
      continue;
    }
    keep.push_back(x);
  }
  if (keep.empty()) fail(Errc::EmptyTable, "all strata dropped");

  long total = 0;
  for (int x : keep) total += count[x][0] + count[x][1];

  Cells pi, gamma;
  for (int x : keep) {
    std::array<double, 2> pr, gm;
    for (int p = 0; p < 2; ++p) {
      pr[p] = static_cast<double>(count[x][p]) / static_cast<double>(total);
      if (count[x][p] > 0) {
        gm[p] = outcome_sum[x][p] / static_cast<double>(count[x][p]);
      } else {
        gm[p] = 0.5;
        est.warnings.push_back("cell (x=" + std::to_string(x) + ", p=" + std::to_string(p) +
                               ") is empty; using gamma = 0.5");
      }
    }
    pi.push_back(pr);
    gamma.push_back(gm);
  }
  est.kept_strata = std::move(keep);
  est.world = make_world(std::move(pi), std::move(gamma), rho);
  return est;
}

}  // namespace masklab
