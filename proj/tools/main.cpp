#include <charconv>
#include <cstdint>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "masklab/ingest.hpp"
#include "masklab/json_io.hpp"
#include "masklab/parallel.hpp"
#include "masklab/rng.hpp"
#include "masklab/sim.hpp"
#include "masklab/stats.hpp"
#include "masklab/synthesis.hpp"
#include "masklab/theory.hpp"
#include "masklab/world.hpp"

namespace {

using nlohmann::json;
using namespace masklab;

std::string fmt(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

struct GlobalOptions {
  std::uint64_t seed = 0;
  int jobs = default_jobs();
  double alpha = 0.05;
  std::string format = "";  // per-command default when empty
};

std::string format_or(const GlobalOptions& global, const std::string& fallback) {
  return global.format.empty() ? fallback : global.format;
}

// --protected col or --protected col=raw:0,raw:1
void parse_protected(const std::string& spec, LoadSchema* schema) {
  auto eq = spec.find('=');
  if (eq == std::string::npos) {
    schema->protected_col = spec;
    return;
  }
  schema->protected_col = spec.substr(0, eq);
  std::string rest = spec.substr(eq + 1);
  size_t start = 0;
  while (start <= rest.size()) {
    size_t comma = rest.find(',', start);
    std::string entry = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    auto colon = entry.rfind(':');
    if (colon == std::string::npos || colon + 1 >= entry.size())
      fail(Errc::ParseError, "bad protected mapping entry '" + entry + "'");
    std::string target = entry.substr(colon + 1);
    if (target != "0" && target != "1")
      fail(Errc::ParseError, "protected mapping must target 0 or 1, got '" + target + "'");
    schema->protected_mapping[entry.substr(0, colon)] = target == "1" ? 1 : 0;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (schema->protected_mapping.empty())
    fail(Errc::ParseError, "empty protected mapping in '" + spec + "'");
}

int cmd_solve(const GlobalOptions& global, const std::string& world_path,
              const std::string& family_name, double eps) {
  WorldModel model = load_world(world_path);
  PolicyFamily family = parse_family(family_name);
  SolvedPolicy solved = solve_family(model, family, eps);
  std::string format = format_or(global, "json");
  if (format == "json") {
    json out{{"family", to_string(family)},
             {"eps", eps},
             {"status", to_string(solved.status)},
             {"policy", policy_to_json(solved.policy)},
             {"report", report_to_json(solved.report)}};
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << "family,eps,status,objective,ate,participation,max_abs_cate,x,alpha_p0,alpha_p1,"
                 "cate_gap\n";
    for (int x = 0; x < model.k; ++x) {
      std::cout << to_string(family) << ',' << fmt(eps) << ',' << to_string(solved.status) << ','
                << fmt(solved.report.objective) << ',' << fmt(solved.report.ate) << ','
                << fmt(solved.report.participation) << ',' << fmt(solved.report.max_abs_cate) << ','
                << x << ',' << fmt(solved.policy.alpha[x][0]) << ',' << fmt(solved.policy.alpha[x][1])
                << ',' << fmt(solved.report.cate_gaps[x]) << '\n';
    }
  }
  return solved.status == LpStatus::Optimal ? 0 : 2;
}

int cmd_sample_world(const GlobalOptions& global, int k, double rho) {
  WorldModel model = sample_world(k, rho, global.seed);
  std::cout << world_to_json(model).dump(2) << '\n';
  return 0;
}

int cmd_sweep(const GlobalOptions& global, int k, double rho, int n_worlds,
              const std::vector<double>& eps_grid, const std::vector<std::string>& family_names) {
  if (eps_grid.empty()) fail(Errc::DomainError, "eps grid must be nonempty");
  std::vector<PolicyFamily> families;
  for (const auto& name : family_names) {
    PolicyFamily family = parse_family(name);
    if (family == PolicyFamily::Exploit)
      fail(Errc::DomainError, "sweep families are fair, mask, mask+fair");
    families.push_back(family);
  }

  struct WorldRows {
    bool skipped = false;
    std::vector<std::string> rows;
  };
  std::vector<WorldRows> per_world(static_cast<size_t>(n_worlds));
  parallel_for(n_worlds, global.jobs, [&](long w) {
    WorldModel model = sample_world(k, rho, derive_seed(global.seed, w));
    NormalizationAnchors anchors = normalization_anchors(model);
    if (anchors.w_exploit - anchors.w_fair0 < 1e-12) {
      per_world[w].skipped = true;
      return;
    }
    for (double eps : eps_grid)
      for (PolicyFamily family : families) {
        double norm =
            normalized_performance(anchors, solve_family(model, family, eps).report.objective);
        per_world[w].rows.push_back(std::to_string(w) + "," + fmt(eps) + "," + to_string(family) +
                                    "," + fmt(norm));
      }
  });

  long skipped = 0;
  std::string format = format_or(global, "csv");
  if (format == "json") {
    json rows = json::array();
    for (const auto& world : per_world) {
      if (world.skipped) {
        ++skipped;
        continue;
      }
      for (const auto& row : world.rows) rows.push_back(row);
    }
    std::cout << json{{"rows", rows}, {"skipped_zero_gap", skipped}}.dump(2) << '\n';
  } else {
    std::cout << "world_id,eps,family,norm_perf\n";
    for (const auto& world : per_world) {
      if (world.skipped) {
        ++skipped;
        continue;
      }
      for (const auto& row : world.rows) std::cout << row << '\n';
    }
    if (skipped > 0) std::cerr << "skipped " << skipped << " zero-gap worlds\n";
  }
  return 0;
}

int cmd_genericity(const GlobalOptions& global, int k, double rho, int n_worlds,
                   const std::string& mode_name) {
  WorldMode mode = parse_world_mode(mode_name);
  GenericitySummary s = genericity_experiment(k, rho, n_worlds, mode, global.seed, global.jobs);
  std::string format = format_or(global, "csv");
  if (format == "json") {
    std::cout << json{{"mode", to_string(mode)},
                      {"k", k},
                      {"rho", rho},
                      {"n_worlds", s.n_worlds},
                      {"frac_gap_positive", s.frac_gap_positive},
                      {"frac_exploit_fair", s.frac_exploit_fair},
                      {"frac_exploit_masked", s.frac_exploit_masked},
                      {"frac_mask_fair", s.frac_mask_fair}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "mode,k,rho,n_worlds,frac_gap_positive,frac_exploit_fair,frac_exploit_masked,"
                 "frac_mask_fair\n";
    std::cout << to_string(mode) << ',' << k << ',' << fmt(rho) << ',' << s.n_worlds << ','
              << fmt(s.frac_gap_positive) << ',' << fmt(s.frac_exploit_fair) << ','
              << fmt(s.frac_exploit_masked) << ',' << fmt(s.frac_mask_fair) << '\n';
  }
  return 0;
}

int cmd_volume(const GlobalOptions& global, const std::string& world_path, int k, double rho,
               const std::string& family_name, const std::vector<double>& eps_grid, long n_samples) {
  if (eps_grid.empty()) fail(Errc::DomainError, "eps grid must be nonempty");
  WorldModel model =
      world_path.empty() ? sample_world(k, rho, derive_seed(global.seed, 0xA11CE)) : load_world(world_path);
  ConstraintFamily family;
  if (family_name == "fair")
    family = ConstraintFamily::Fair;
  else if (family_name == "mask")
    family = ConstraintFamily::Mask;
  else
    fail(Errc::ParseError, "volume family must be fair or mask");

  std::vector<double> acceptance(eps_grid.size());
  for (size_t i = 0; i < eps_grid.size(); ++i)
    acceptance[i] =
        feasible_volume_estimate(model, family, eps_grid[i], n_samples, global.seed, global.jobs);

  std::string format = format_or(global, "csv");
  if (format == "json") {
    json rows = json::array();
    for (size_t i = 0; i < eps_grid.size(); ++i)
      rows.push_back({{"family", to_string(family)},
                      {"k", model.k},
                      {"eps", eps_grid[i]},
                      {"n_samples", n_samples},
                      {"acceptance", acceptance[i]}});
    std::cout << rows.dump(2) << '\n';
  } else {
    std::cout << "family,k,eps,n_samples,acceptance\n";
    for (size_t i = 0; i < eps_grid.size(); ++i)
      std::cout << to_string(family) << ',' << model.k << ',' << fmt(eps_grid[i]) << ',' << n_samples
                << ',' << fmt(acceptance[i]) << '\n';
  }
  return 0;
}

int cmd_longevity(const GlobalOptions& global, const std::vector<std::string>& world_paths,
                  const std::vector<std::string>& family_names, int reps, long batch_size,
                  long cap) {
  std::vector<WorldModel> worlds;
  for (const auto& path : world_paths) worlds.push_back(load_world(path));
  std::vector<PolicyFamily> families;
  for (const auto& name : family_names) families.push_back(parse_family(name));

  LongevityConfig config{batch_size, cap, global.alpha};
  LongevitySweepResult result = longevity_sweep(worlds, families, reps, config, global.seed, global.jobs);

  std::string format = format_or(global, "csv");
  if (format == "json") {
    json rows = json::array();
    for (const auto& row : result.rows)
      rows.push_back({{"policy", to_string(row.family)},
                      {"world_id", row.world_id},
                      {"rep", row.rep},
                      {"n_reject_ate", row.outcome.n_reject_ate},
                      {"n_reject_cate", row.outcome.n_reject_cate},
                      {"n_caught", row.outcome.n_caught},
                      {"total_unfairness", row.outcome.total_unfairness}});
    json summary = json::object();
    for (const auto& [family, stats] : result.summary)
      summary[to_string(family)] = {
          {"n_reject_ate", {{"mean", stats.n_reject_ate.mean}, {"se", stats.n_reject_ate.se}}},
          {"n_reject_cate", {{"mean", stats.n_reject_cate.mean}, {"se", stats.n_reject_cate.se}}},
          {"n_caught", {{"mean", stats.n_caught.mean}, {"se", stats.n_caught.se}}},
          {"total_unfairness",
           {{"mean", stats.total_unfairness.mean}, {"se", stats.total_unfairness.se}}}};
    std::cout << json{{"rows", rows}, {"summary", summary}}.dump(2) << '\n';
  } else {
    std::cout << "policy,world_id,rep,n_reject_ate,n_reject_cate,n_caught,total_unfairness\n";
    for (const auto& row : result.rows)
      std::cout << to_string(row.family) << ',' << row.world_id << ',' << row.rep << ','
                << row.outcome.n_reject_ate << ',' << row.outcome.n_reject_cate << ','
                << row.outcome.n_caught << ',' << fmt(row.outcome.total_unfairness) << '\n';
    for (const auto& [family, stats] : result.summary)
      std::cerr << to_string(family) << ": n_reject_ate " << fmt(stats.n_reject_ate.mean) << " +- "
                << fmt(stats.n_reject_ate.se) << ", n_reject_cate " << fmt(stats.n_reject_cate.mean)
                << " +- " << fmt(stats.n_reject_cate.se) << ", n_caught " << fmt(stats.n_caught.mean)
                << " +- " << fmt(stats.n_caught.se) << ", total_unfairness "
                << fmt(stats.total_unfairness.mean) << " +- " << fmt(stats.total_unfairness.se)
                << '\n';
  }
  return 0;
}

int cmd_audit(const GlobalOptions& global, const std::string& data_path,
              const std::vector<std::string>& covariates, const std::vector<int>& bins,
              const std::string& protected_spec, const std::string& decision_col,
              const std::string& outcome_col, const std::string& emit_world,
              const std::string& emit_strata, double rho, bool drop_empty_cells) {
  LoadSchema schema;
  schema.covariates = covariates;
  schema.outcome_col = decision_col;
  parse_protected(protected_spec, &schema);

  DataTable table = load_table(data_path, schema);
  if (table.rows_dropped_missing > 0)
    std::cerr << "dropped " << table.rows_dropped_missing << " rows with missing fields\n";
  if (table.rows_dropped_unmapped > 0)
    std::cerr << "dropped " << table.rows_dropped_unmapped << " rows with unmapped protected values\n";
  for (double d : table.outcome)
    if (d != 0.0 && d != 1.0)
      fail(Errc::ParseError, "decision column '" + decision_col + "' must be 0/1");

  Stratification strat = quantile_stratify(table, bins);
  for (const auto& warning : strat.warnings) std::cerr << warning << '\n';

  StratifiedCounts counts(strat.k);
  for (long r = 0; r < table.n(); ++r)
    counts.add(strat.stratum_of_row[r], table.group[r], table.outcome[r] != 0.0);

  TestReport ate = z_test_ate(counts, global.alpha);
  TestReport cate = cate_test(counts, global.alpha);
  AuditVerdict verdict = audit_verdict(ate, cate);

  std::string format = format_or(global, "text");
  if (format == "json") {
    std::cout << json{{"ate_test", test_report_to_json(ate)},
                      {"cate_test", test_report_to_json(cate)},
                      {"k", strat.k},
                      {"verdict", to_string(verdict)}}
                     .dump(2)
              << '\n';
  } else {
    auto print = [](const char* name, const TestReport& r) {
      std::cout << name << ": statistic=" << fmt(r.statistic) << " p_value=" << fmt(r.p_value)
                << " df=" << r.df << " strata_used=" << r.strata_used
                << " reject=" << (r.reject ? "true" : "false")
                << (r.degenerate ? " degenerate=true" : "") << '\n';
    };
    print("ate_test", ate);
    print("cate_test", cate);
    std::cout << "verdict: " << to_string(verdict) << '\n';
  }

  if (!emit_world.empty()) {
    if (outcome_col.empty())
      fail(Errc::DomainError, "--emit-world requires --outcome to estimate rewards");
    LoadSchema world_schema = schema;
    world_schema.outcome_col = outcome_col;
    DataTable outcome_table = load_table(data_path, world_schema);
    Stratification outcome_strat = quantile_stratify(outcome_table, bins);
    EstimatedWorld est = estimate_world(outcome_table, outcome_strat, rho, drop_empty_cells);
    for (const auto& warning : est.warnings) std::cerr << warning << '\n';
    save_world(est.world, emit_world);
    if (!emit_strata.empty()) {
      std::ofstream out(emit_strata);
      if (!out) fail(Errc::IoError, "cannot write '" + emit_strata + "'");
      out << stratum_map_to_json(outcome_strat, est.kept_strata).dump(2) << '\n';
    }
  } else if (!emit_strata.empty()) {
    std::ofstream out(emit_strata);
    if (!out) fail(Errc::IoError, "cannot write '" + emit_strata + "'");
    std::vector<int> all(strat.k);
    for (int i = 0; i < strat.k; ++i) all[i] = i;
    out << stratum_map_to_json(strat, all).dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-policy synthesis under global/stratified parity constraints, "
               "with detection tests and longevity simulations"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--seed", global.seed, "RNG seed (commands are bit-reproducible per seed)");
  app.add_option("--jobs", global.jobs, "Worker threads for sweeps and experiments");
  app.add_option("--alpha", global.alpha, "Significance level for hypothesis tests");
  app.add_option("--format", global.format, "Output format: json, csv, or text (per command)");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one policy family on a world file");
  std::string solve_world, solve_family_name = "mask";
  double solve_eps = 0.0;
  solve->add_option("--world", solve_world, "World JSON file")->required();
  solve->add_option("--family", solve_family_name, "exploit, fair, mask, or mask+fair");
  solve->add_option("--eps", solve_eps, "Constraint relaxation (budget stays an equality)");

  // sample-world
  auto* sample = app.add_subcommand("sample-world", "Sample a random world and print its JSON");
  int sample_k = 2;
  double sample_rho = 0.25;
  sample->add_option("--k", sample_k, "Number of strata");
  sample->add_option("--rho", sample_rho, "Participation budget");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Normalized performance over sampled worlds and an eps grid");
  int sweep_k = 2, sweep_worlds = 1000;
  double sweep_rho = 0.25;
  std::vector<double> sweep_eps;
  std::vector<std::string> sweep_families{"fair", "mask", "mask+fair"};
  sweep->add_option("--k", sweep_k, "Number of strata");
  sweep->add_option("--rho", sweep_rho, "Participation budget");
  sweep->add_option("--n-worlds", sweep_worlds, "Worlds to sample");
  sweep->add_option("--eps", sweep_eps, "Relaxation grid")->delimiter(',')->required();
  sweep->add_option("--families", sweep_families, "fair, mask, mask+fair")->delimiter(',');

  // genericity
  auto* genericity = app.add_subcommand("genericity", "Frequency of gaps and coincidences over sampled worlds");
  int gen_k = 2, gen_worlds = 1000;
  double gen_rho = 0.25;
  std::string gen_mode = "free";
  genericity->add_option("--k", gen_k, "Number of strata");
  genericity->add_option("--rho", gen_rho, "Participation budget");
  genericity->add_option("--n-worlds", gen_worlds, "Worlds to sample");
  genericity->add_option("--mode", gen_mode,
                         "free, independent_homogeneous, confounded_only, heterogeneous_only");

  // volume
  auto* volume = app.add_subcommand("volume", "Monte Carlo acceptance volume of constraint slabs");
  std::string vol_world, vol_family = "fair";
  int vol_k = 2;
  double vol_rho = 0.25;
  std::vector<double> vol_eps;
  long vol_samples = 1000000;
  volume->add_option("--world", vol_world, "World JSON file (else a world is sampled)");
  volume->add_option("--k", vol_k, "Strata of the sampled world when no file is given");
  volume->add_option("--rho", vol_rho, "Budget of the sampled world when no file is given");
  volume->add_option("--family", vol_family, "fair or mask");
  volume->add_option("--eps", vol_eps, "Slab widths")->delimiter(',')->required();
  volume->add_option("--n-samples", vol_samples, "Samples per eps");

  // longevity
  auto* longevity = app.add_subcommand("longevity", "Sample size until each test first rejects");
  std::vector<std::string> lon_worlds;
  std::vector<std::string> lon_families{"fair", "mask", "exploit"};
  int lon_reps = 50;
  long lon_batch = 500, lon_cap = 200000;
  longevity->add_option("--world", lon_worlds, "World JSON file (repeatable)")->required();
  longevity->add_option("--families", lon_families, "Subset of exploit, fair, mask")->delimiter(',');
  longevity->add_option("--reps", lon_reps, "Replications per (world, family)");
  longevity->add_option("--batch-size", lon_batch, "Records added between test evaluations");
  longevity->add_option("--cap", lon_cap, "Maximum records per run");

  // audit
  auto* audit = app.add_subcommand("audit", "Run both detection tests on a decision log CSV");
  std::string audit_data, audit_protected, audit_decision, audit_outcome;
  std::string audit_emit_world, audit_emit_strata;
  std::vector<std::string> audit_covariates;
  std::vector<int> audit_bins;
  double audit_rho = 0.1;
  bool audit_drop_empty = false;
  audit->add_option("--data", audit_data, "CSV file with header row")->required();
  audit->add_option("--covariates", audit_covariates, "Covariate column names")->delimiter(',')->required();
  audit->add_option("--bins", audit_bins, "Quantile bins per covariate")->delimiter(',')->required();
  audit->add_option("--protected", audit_protected, "Protected column, optionally col=raw:0,raw:1")
      ->required();
  audit->add_option("--decision", audit_decision, "0/1 decision column")->required();
  audit->add_option("--outcome", audit_outcome, "Outcome column for --emit-world");
  audit->add_option("--emit-world", audit_emit_world, "Write the estimated world JSON here");
  audit->add_option("--emit-strata", audit_emit_strata, "Write the stratum map JSON here");
  audit->add_option("--rho", audit_rho, "Budget stored in the emitted world");
  audit->add_flag("--drop-empty-cells", audit_drop_empty,
                  "Drop strata with an empty group cell instead of imputing gamma = 0.5");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(global, solve_world, solve_family_name, solve_eps);
    if (*sample) return cmd_sample_world(global, sample_k, sample_rho);
    if (*sweep) return cmd_sweep(global, sweep_k, sweep_rho, sweep_worlds, sweep_eps, sweep_families);
    if (*genericity) return cmd_genericity(global, gen_k, gen_rho, gen_worlds, gen_mode);
    if (*volume)
      return cmd_volume(global, vol_world, vol_k, vol_rho, vol_family, vol_eps, vol_samples);
    if (*longevity)
      return cmd_longevity(global, lon_worlds, lon_families, lon_reps, lon_batch, lon_cap);
    if (*audit)
      return cmd_audit(global, audit_data, audit_covariates, audit_bins, audit_protected,
                       audit_decision, audit_outcome, audit_emit_world, audit_emit_strata, audit_rho,
                       audit_drop_empty);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
