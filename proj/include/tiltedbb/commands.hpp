#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tiltedbb/diagnostics.hpp"
#include "tiltedbb/model_selection.hpp"
#include "tiltedbb/run_config.hpp"
#include "tiltedbb/self_check.hpp"

namespace tiltedbb {

struct ParameterSummary {
  std::string name;
  std::string term;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double median = 0.0;
  double q975 = 0.0;
  McError mc_error;
};

/// Everything persisted by `fit`: the posterior summary table plus
/// convergence diagnostics, deviance summary and DIC.
struct FitReport {
  std::string model_label;
  std::vector<ParameterSummary> parameters;
  DevianceSummary deviance;
  DicResult dic;
  DiagnosticsReport diagnostics;
  std::vector<std::string> block_names;
  std::vector<std::vector<double>> acceptance;  // chain x block, after burn-in
  std::size_t chains = 0;
  std::size_t retained_per_chain = 0;

  const ParameterSummary& parameter(std::string_view name) const;
};

/// Human-readable model description, e.g. "TBB mu_b[1,x1+1] phi[1] theta[1] mu_t free".
std::string describe_model(const ModelSpec& spec);

/// Default structure used when only a family name is given: every dataset
/// covariate on mu_b, intercepts elsewhere, free mu_t for TBB.
ModelSpec default_model(Family family, const Dataset& data);

FitReport summarize_fit(const RegressionModel& model, const PosteriorSample& posterior);

void write_summary_text(std::ostream& os, const FitReport& report);
void write_summary_csv(std::ostream& os, const FitReport& report);
void write_diagnostics_json(std::ostream& os, const FitReport& report);
void write_residuals_csv(std::ostream& os, const std::vector<PearsonResidual>& residuals);

/// Writes summary.txt, summary.csv, chains_<k>.csv, diagnostics.json,
/// residuals.csv, geweke.csv, bgr.csv and run.json into `dir`.
void write_fit_artifacts(const std::filesystem::path& dir, const RegressionModel& model,
                         const PosteriorSample& posterior, const FitReport& report,
                         const std::filesystem::path& dataset_path);

/// Fits the first model of the config. Throws on bad input or sampler failure.
FitReport cmd_fit(const RunConfig& config);

/// Fits every model (at least two). A model that fails becomes a failed row
/// and the others still run. Each fit's artifacts go to `<out>/<k>_<label>/`;
/// comparison.csv and comparison.txt go to `<out>`.
std::vector<ComparisonRow> cmd_compare(const RunConfig& config);

/// Draws a synthetic dataset from the simulation recipe.
Dataset cmd_simulate(const SimulationSpec& spec, std::uint64_t seed);

/// Rebuilds the fit report from chains_<k>.csv in `config.output_dir` and
/// rewrites the summary and diagnostic files there.
FitReport cmd_diagnose(const RunConfig& config);

CheckReport cmd_check();

/// Settings given on top of an optional config file (command-line flags or
/// keyword arguments). Unset fields keep the config's values.
struct RunOverrides {
  std::filesystem::path config;
  std::filesystem::path data;
  std::filesystem::path out;
  std::vector<std::string> families;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> burn_in;
  std::optional<std::size_t> thin;
};

/// Loads the config (if any), applies the overrides and validates the
/// sampler settings. Families are applied with select_families.
RunConfig resolve_run_config(const RunOverrides& overrides);

/// Keeps only the configured models of the listed families, in that order.
/// With no configured models, default structures are built from the data.
void select_families(RunConfig& config, const std::vector<std::string>& families);

}  // namespace tiltedbb
