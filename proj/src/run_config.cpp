#include "tiltedbb/run_config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace tiltedbb {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config: '" + key + "' " + what);
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(key, std::string("has the wrong type: ") + e.what());
  }
}

std::vector<std::string> term_list(const json& obj, const char* key) {
  if (!obj.contains(key)) return {};
  const auto& v = obj.at(key);
  if (!v.is_array()) bad(key, "must be a list of terms");
  std::vector<std::string> out;
  for (const auto& t : v) {
    if (t.is_string()) {
      out.push_back(t.get<std::string>());
    } else if (t.is_number() && t.get<double>() == 1.0) {
      out.emplace_back("1");
    } else {
      bad(key, "entries must be strings such as \"1\" or \"x1+1\"");
    }
  }
  return out;
}

ModelSpec model_from_json(const json& m) {
  if (!m.is_object()) throw std::invalid_argument("config: each model must be an object");
  ModelSpec spec;
  if (!m.contains("family")) bad("family", "is required for every model");
  spec.family = parse_family(m.at("family").get<std::string>());
  spec.mu_b_terms = term_list(m, "mu_b");
  spec.phi_terms = term_list(m, "phi");
  spec.theta_terms = term_list(m, "theta");
  if (m.contains("mu_t")) {
    const auto& v = m.at("mu_t");
    if (v.is_string()) {
      if (v.get<std::string>() != "free") bad("mu_t", "must be \"free\" or a number");
    } else if (v.is_number()) {
      spec.fixed_mu_t = v.get<double>();
    } else {
      bad("mu_t", "must be \"free\" or a number");
    }
  }
  spec.validate();
  return spec;
}

std::vector<double> number_list(const json& obj, const char* key) {
  if (!obj.contains(key)) return {};
  try {
    return obj.at(key).get<std::vector<double>>();
  } catch (const json::exception&) {
    bad(key, "must be a list of numbers");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

ModelSpec parse_model_spec(const std::string& json_text) {
  return model_from_json(json::parse(json_text));
}

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");

  RunConfig cfg;
  if (root.contains("data")) cfg.dataset = resolve(base_dir, root.at("data").get<std::string>());
  if (root.contains("output")) {
    cfg.output_dir = resolve(base_dir, root.at("output").get<std::string>());
  }

  if (root.contains("sampler")) {
    const auto& s = root.at("sampler");
    SamplerConfig& sc = cfg.sampler;
    sc.iterations = get_or<std::size_t>(s, "iterations", sc.iterations);
    sc.burn_in = get_or<std::size_t>(s, "burn_in", sc.burn_in);
    sc.thin = get_or<std::size_t>(s, "thin", sc.thin);
    sc.chains = get_or<std::size_t>(s, "chains", sc.chains);
    sc.seed = get_or<std::uint64_t>(s, "seed", sc.seed);
    sc.adapt_window = get_or<std::size_t>(s, "adapt_window", sc.adapt_window);
    sc.target_acceptance = get_or<double>(s, "target_acceptance", sc.target_acceptance);
    sc.target_acceptance_scalar =
        get_or<double>(s, "target_acceptance_scalar", sc.target_acceptance_scalar);
    sc.parallel = get_or<bool>(s, "parallel", sc.parallel);
    const auto init = get_or<std::string>(s, "init", "jittered");
    if (init == "zeros") {
      sc.init = InitStrategy::Zeros;
    } else if (init == "jittered") {
      sc.init = InitStrategy::Jittered;
    } else {
      bad("init", "must be \"zeros\" or \"jittered\"");
    }
  }

  if (root.contains("prior")) {
    const auto& p = root.at("prior");
    PriorSpec& pr = cfg.prior;
    const double shared = get_or<double>(p, "precision", -1.0);
    if (shared > 0.0) pr.beta_precision = pr.gamma_precision = pr.delta_precision = shared;
    pr.beta_precision = get_or<double>(p, "beta_precision", pr.beta_precision);
    pr.gamma_precision = get_or<double>(p, "gamma_precision", pr.gamma_precision);
    pr.delta_precision = get_or<double>(p, "delta_precision", pr.delta_precision);
    pr.validate();
  }

  if (root.contains("models")) {
    const auto& ms = root.at("models");
    if (!ms.is_array()) bad("models", "must be a list");
    for (const auto& m : ms) cfg.models.push_back(model_from_json(m));
  }

  if (root.contains("simulate")) {
    const auto& s = root.at("simulate");
    SimulationSpec sim;
    sim.rows = get_or<std::size_t>(s, "rows", 0);
    sim.trials = get_or<std::int64_t>(s, "trials", 1);
    if (sim.rows == 0) bad("simulate.rows", "must be >= 1");
    if (sim.trials < 1) bad("simulate.trials", "must be >= 1");
    if (s.contains("covariates")) {
      const auto& cov = s.at("covariates");
      if (!cov.is_object()) bad("simulate.covariates", "must map names to level lists");
      for (const auto& [name, levels] : cov.items()) {
        auto values = levels.get<std::vector<double>>();
        if (values.empty()) bad("simulate.covariates." + name, "needs at least one level");
        sim.covariates.emplace_back(name, std::move(values));
      }
    }
    if (!s.contains("model")) bad("simulate.model", "is required");
    sim.model = model_from_json(s.at("model"));
    const json params = s.value("parameters", json::object());
    sim.parameters.beta = number_list(params, "beta");
    sim.parameters.gamma = number_list(params, "gamma");
    sim.parameters.delta = number_list(params, "delta");
    if (params.contains("mu_t")) sim.parameters.mu_t = params.at("mu_t").get<double>();
    cfg.simulation = std::move(sim);
  }

  cfg.sampler.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::vector<std::string> missing_covariates(const ModelSpec& spec, const Dataset& data) {
  std::vector<std::string> missing;
  for (const auto* terms : {&spec.mu_b_terms, &spec.phi_terms, &spec.theta_terms}) {
    for (const auto& t : *terms) {
      const Term term = parse_term(t);
      if (!term.is_intercept() && !data.has_covariate(term.covariate)) {
        missing.push_back(term.covariate);
      }
    }
  }
  return missing;
}

}  // namespace tiltedbb
