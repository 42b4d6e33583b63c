#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tiltedbb/mcmc.hpp"
#include "tiltedbb/regression.hpp"

namespace tiltedbb {

/// Synthetic-data recipe. Covariate j cycles through its levels in a full
/// factorial pattern over the rows (the first covariate varies slowest).
struct SimulationSpec {
  std::size_t rows = 0;
  std::int64_t trials = 1;
  std::vector<std::pair<std::string, std::vector<double>>> covariates;
  ModelSpec model;
  ParameterVector parameters;
};

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path output_dir = "tiltedbb_out";
  std::vector<ModelSpec> models;
  PriorSpec prior;
  SamplerConfig sampler;
  std::optional<SimulationSpec> simulation;
};

/// JSON run configuration; relative paths resolve against `base_dir`.
/// Throws std::invalid_argument with the offending key on bad input.
RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Model entry as written in config files, e.g.
/// {"family": "TBB", "mu_b": ["1","x1+1"], "phi": ["1"], "theta": ["1"], "mu_t": "free"}.
ModelSpec parse_model_spec(const std::string& json_text);

/// Covariate columns named by the spec that the dataset lacks.
std::vector<std::string> missing_covariates(const ModelSpec& spec, const Dataset& data);

}  // namespace tiltedbb
