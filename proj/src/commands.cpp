#include "tiltedbb/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "tiltedbb/dataset_io.hpp"

namespace tiltedbb {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kMinRetained = 100;  // Geweke needs this many per chain

json model_to_json(const ModelSpec& spec) {
  json j;
  j["family"] = std::string(family_label(spec.family));
  j["mu_b"] = spec.mu_b_terms;
  if (!spec.phi_terms.empty()) j["phi"] = spec.phi_terms;
  if (!spec.theta_terms.empty()) j["theta"] = spec.theta_terms;
  if (spec.family == Family::TiltedBetaBinomial) {
    if (spec.fixed_mu_t) {
      j["mu_t"] = *spec.fixed_mu_t;
    } else {
      j["mu_t"] = "free";
    }
  }
  return j;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::string terms_text(const std::vector<std::string>& terms) {
  std::string s = "[";
  for (std::size_t i = 0; i < terms.size(); ++i) s += (i ? "," : "") + terms[i];
  return s + "]";
}

void require_covariates(const ModelSpec& spec, const Dataset& data) {
  const auto missing = missing_covariates(spec, data);
  if (missing.empty()) return;
  std::string names;
  for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
  throw std::invalid_argument(describe_model(spec) + ": covariate(s) not in the dataset: " +
                              names);
}

void require_enough_draws(const SamplerConfig& config) {
  config.validate();
  if (config.retained_per_chain() < kMinRetained) {
    throw std::invalid_argument(
        "sampler keeps " + std::to_string(config.retained_per_chain()) +
        " draws per chain; diagnostics need at least " + std::to_string(kMinRetained) +
        " (raise iterations or lower burn-in/thin)");
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

struct FittedRun {
  RegressionModel model;
  PosteriorSample posterior;
  FitReport report;
};

FittedRun fit_model(const ModelSpec& spec, const Dataset& data, const RunConfig& config) {
  require_covariates(spec, data);
  RegressionModel model(spec, data);
  auto posterior = run_chains(model, config.prior, config.sampler);
  auto report = summarize_fit(model, posterior);
  return {std::move(model), std::move(posterior), std::move(report)};
}

ModelSpec model_from_run_file(const fs::path& dir, fs::path& dataset) {
  const auto path = dir / "run.json";
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("no model given and '" + path.string() +
                                "' is missing; pass --config or --family");
  }
  const json j = json::parse(in);
  if (dataset.empty() && j.contains("data")) dataset = j.at("data").get<std::string>();
  return parse_model_spec(j.at("model").dump());
}

}  // namespace

const ParameterSummary& FitReport::parameter(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::string describe_model(const ModelSpec& spec) {
  std::string s(family_label(spec.family));
  s += " mu_b" + terms_text(spec.mu_b_terms);
  if (!spec.phi_terms.empty()) s += " phi" + terms_text(spec.phi_terms);
  if (!spec.theta_terms.empty()) s += " theta" + terms_text(spec.theta_terms);
  if (spec.family == Family::TiltedBetaBinomial) {
    s += spec.fixed_mu_t ? " mu_t=" + fixed(*spec.fixed_mu_t, 4) : " mu_t free";
  }
  return s;
}

ModelSpec default_model(Family family, const Dataset& data) {
  ModelSpec spec;
  spec.family = family;
  spec.mu_b_terms.emplace_back("1");
  for (const auto& name : data.covariate_names()) spec.mu_b_terms.push_back(name);
  if (family_has_phi(family)) spec.phi_terms = {"1"};
  if (family_has_theta(family)) spec.theta_terms = {"1"};
  spec.validate();
  return spec;
}

FitReport summarize_fit(const RegressionModel& model, const PosteriorSample& posterior) {
  FitReport report;
  report.model_label = describe_model(model.spec());
  report.chains = posterior.n_chains();
  report.retained_per_chain = posterior.retained_per_chain();
  report.diagnostics = diagnose(model, posterior);
  const auto terms = model.parameter_terms();
  for (std::size_t j = 0; j < posterior.n_params(); ++j) {
    const auto draws = posterior.pooled_column(j);
    const auto s = deviance_summary(draws);
    ParameterSummary p;
    p.name = posterior.names[j];
    p.term = j < terms.size() ? terms[j] : "";
    p.mean = s.mean;
    p.sd = s.sd;
    p.q025 = s.q025;
    p.median = s.median;
    p.q975 = s.q975;
    p.mc_error = report.diagnostics.parameters[j].mc_error;
    report.parameters.push_back(std::move(p));
  }
  report.deviance = deviance_summary(posterior);
  report.dic = dic(posterior, model);
  report.block_names = posterior.block_names;
  for (const auto& c : posterior.chains) report.acceptance.push_back(c.acceptance_rate);
  return report;
}

void write_summary_text(std::ostream& os, const FitReport& r) {
  os << "Model: " << r.model_label << '\n';
  os << "Chains: " << r.chains << " x " << r.retained_per_chain << " retained draws\n\n";
  os << std::left << std::setw(10) << "node" << std::right;
  for (const char* h : {"mean", "sd", "MC error", "2.5%", "median", "97.5%"}) {
    os << std::setw(11) << h;
  }
  os << "   term\n";
  for (const auto& p : r.parameters) {
    os << std::left << std::setw(10) << p.name << std::right;
    for (double v : {p.mean, p.sd, p.mc_error.batch_means, p.q025, p.median, p.q975}) {
      os << std::setw(11) << fixed(v, 4);
    }
    os << "   " << p.term << '\n';
  }
  os << std::left << std::setw(10) << "deviance" << std::right;
  for (double v : {r.deviance.mean, r.deviance.sd}) os << std::setw(11) << fixed(v, 2);
  os << std::setw(11) << "";
  for (double v : {r.deviance.q025, r.deviance.median, r.deviance.q975}) {
    os << std::setw(11) << fixed(v, 2);
  }
  os << "\n\nDIC " << fixed(r.dic.dic, 2) << "  (pD " << fixed(r.dic.p_d, 2) << ", Dbar "
     << fixed(r.dic.d_bar, 2) << ", D(mean) " << fixed(r.dic.d_hat, 2) << ")\n";

  if (r.diagnostics.r_hat_omitted_reason) {
    os << "BGR R: omitted. " << *r.diagnostics.r_hat_omitted_reason << '\n';
  } else {
    double worst = 0.0;
    for (const auto& d : r.diagnostics.parameters) worst = std::max(worst, d.r_hat.value_or(0.0));
    os << "BGR R: max " << fixed(worst, 4) << " over parameters\n";
  }
  std::size_t inside = 0;
  for (const auto& d : r.diagnostics.parameters) inside += std::abs(d.geweke_z) < 1.96;
  os << "Geweke |Z| < 1.96 (chain 1): " << inside << " of " << r.diagnostics.parameters.size()
     << " parameters\n";
  if (!r.acceptance.empty() && !r.block_names.empty()) {
    os << "Acceptance after burn-in:";
    for (std::size_t b = 0; b < r.block_names.size(); ++b) {
      double mean = 0.0;
      for (const auto& c : r.acceptance) mean += c.at(b);
      os << ' ' << r.block_names[b] << '=' << fixed(mean / r.acceptance.size(), 3);
    }
    os << '\n';
  }
}

void write_summary_csv(std::ostream& os, const FitReport& r) {
  os << "node,term,mean,sd,mc_error_naive,mc_error_batch,q025,median,q975,r_hat,geweke_z\n";
  os << std::setprecision(17);
  for (std::size_t j = 0; j < r.parameters.size(); ++j) {
    const auto& p = r.parameters[j];
    const auto& d = r.diagnostics.parameters[j];
    os << p.name << ',' << p.term << ',' << p.mean << ',' << p.sd << ',' << p.mc_error.naive << ','
       << p.mc_error.batch_means << ',' << p.q025 << ',' << p.median << ',' << p.q975 << ',';
    if (d.r_hat) os << *d.r_hat;
    os << ',' << d.geweke_z << '\n';
  }
  const auto& dv = r.deviance;
  os << "deviance,," << dv.mean << ',' << dv.sd << ",,," << dv.q025 << ',' << dv.median << ','
     << dv.q975 << ",,\n";
}

void write_diagnostics_json(std::ostream& os, const FitReport& r) {
  json j;
  j["model"] = r.model_label;
  j["chains"] = r.chains;
  j["retained_per_chain"] = r.retained_per_chain;
  j["dic"] = {{"dic", r.dic.dic}, {"p_d", r.dic.p_d}, {"d_bar", r.dic.d_bar},
              {"d_hat", r.dic.d_hat}};
  j["deviance"] = {{"mean", r.deviance.mean}, {"sd", r.deviance.sd},
                   {"q025", r.deviance.q025}, {"median", r.deviance.median},
                   {"q975", r.deviance.q975}};
  j["r_hat_omitted_reason"] = r.diagnostics.r_hat_omitted_reason
                                  ? json(*r.diagnostics.r_hat_omitted_reason)
                                  : json(nullptr);
  json params = json::array();
  for (const auto& d : r.diagnostics.parameters) {
    params.push_back({{"name", d.name},
                      {"geweke_z", d.geweke_z},
                      {"geweke_z_by_chain", d.geweke_z_by_chain},
                      {"r_hat", d.r_hat ? json(*d.r_hat) : json(nullptr)},
                      {"mc_error", {{"naive", d.mc_error.naive},
                                    {"batch_means", d.mc_error.batch_means}}},
                      {"autocorrelation", d.autocorrelation}});
  }
  j["parameters"] = std::move(params);
  json accept = json::object();
  for (std::size_t b = 0; b < r.block_names.size(); ++b) {
    std::vector<double> per_chain;
    for (const auto& c : r.acceptance) per_chain.push_back(c.at(b));
    accept[r.block_names[b]] = per_chain;
  }
  j["acceptance"] = std::move(accept);
  json res = json::array();
  for (const auto& p : r.diagnostics.residuals) {
    res.push_back({{"index", p.index + 1},
                   {"residual", p.flagged ? json(nullptr) : json(p.residual)},
                   {"flagged", p.flagged}});
  }
  j["residuals"] = std::move(res);
  os << j.dump(2) << '\n';
}

void write_residuals_csv(std::ostream& os, const std::vector<PearsonResidual>& residuals) {
  os << "index,y,n,fitted_mean,fitted_variance,residual,flagged\n" << std::setprecision(17);
  for (const auto& p : residuals) {
    os << p.index + 1 << ',' << p.y << ',' << p.trials << ',' << p.fitted_mean << ','
       << p.fitted_variance << ',';
    if (!p.flagged) os << p.residual;
    os << ',' << (p.flagged ? 1 : 0) << '\n';
  }
}

void write_fit_artifacts(const fs::path& dir, const RegressionModel& model,
                         const PosteriorSample& posterior, const FitReport& report,
                         const fs::path& dataset_path) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "summary.txt");
    write_summary_text(out, report);
  }
  {
    auto out = open_out(dir / "summary.csv");
    write_summary_csv(out, report);
  }
  for (std::size_t k = 0; k < posterior.n_chains(); ++k) {
    auto out = open_out(chain_csv_path(dir, k));
    write_chain_csv(out, posterior, k);
  }
  {
    auto out = open_out(dir / "diagnostics.json");
    write_diagnostics_json(out, report);
  }
  {
    auto out = open_out(dir / "residuals.csv");
    write_residuals_csv(out, report.diagnostics.residuals);
  }
  {
    auto out = open_out(dir / "geweke.csv");
    out << "node,chain,first_kept,z\n" << std::setprecision(17);
    for (std::size_t j = 0; j < posterior.n_params(); ++j) {
      for (std::size_t k = 0; k < posterior.n_chains(); ++k) {
        for (const auto& g : geweke_plot(posterior.column(k, j))) {
          out << posterior.names[j] << ',' << k + 1 << ',' << g.first_kept << ',' << g.z << '\n';
        }
      }
    }
  }
  if (posterior.n_chains() >= 2) {
    auto out = open_out(dir / "bgr.csv");
    out << "node,iterations,r\n" << std::setprecision(17);
    for (std::size_t j = 0; j < posterior.n_params(); ++j) {
      std::vector<std::vector<double>> cols;
      for (std::size_t k = 0; k < posterior.n_chains(); ++k) cols.push_back(posterior.column(k, j));
      const std::vector<std::span<const double>> spans(cols.begin(), cols.end());
      for (const auto& g : gelman_rubin_plot(spans)) {
        out << posterior.names[j] << ',' << g.iterations << ',' << g.r << '\n';
      }
    }
  }
  {
    json run;
    run["model"] = model_to_json(model.spec());
    if (!dataset_path.empty()) run["data"] = fs::absolute(dataset_path).lexically_normal().string();
    auto out = open_out(dir / "run.json");
    out << run.dump(2) << '\n';
  }
}

FitReport cmd_fit(const RunConfig& config) {
  if (config.models.empty()) throw std::invalid_argument("fit: no model given");
  require_enough_draws(config.sampler);
  const Dataset data = load_dataset(config.dataset);
  auto run = fit_model(config.models.front(), data, config);
  write_fit_artifacts(config.output_dir, run.model, run.posterior, run.report, config.dataset);
  return std::move(run.report);
}

std::vector<ComparisonRow> cmd_compare(const RunConfig& config) {
  if (config.models.size() < 2) {
    throw std::invalid_argument("compare needs at least two models, got " +
                                std::to_string(config.models.size()));
  }
  require_enough_draws(config.sampler);
  const Dataset data = load_dataset(config.dataset);
  fs::create_directories(config.output_dir);

  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    const auto& spec = config.models[i];
    ComparisonRow row;
    row.label = std::string(family_label(spec.family));
    try {
      auto run = fit_model(spec, data, config);
      const auto dir = config.output_dir / (std::to_string(i + 1) + "_" + row.label);
      write_fit_artifacts(dir, run.model, run.posterior, run.report, config.dataset);
      row.dic = run.report.dic;
      row.deviance = run.report.deviance;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  sort_by_dic(rows);
  {
    auto out = open_out(config.output_dir / "comparison.csv");
    write_comparison_csv(out, rows);
  }
  {
    auto out = open_out(config.output_dir / "comparison.txt");
    write_comparison_text(out, rows);
  }
  return rows;
}

Dataset cmd_simulate(const SimulationSpec& spec, std::uint64_t seed) {
  if (spec.rows == 0) throw std::invalid_argument("simulate: rows must be >= 1");
  if (spec.trials < 1) throw std::invalid_argument("simulate: trials must be >= 1");
  std::vector<std::string> names;
  for (const auto& [name, levels] : spec.covariates) {
    if (levels.empty()) throw std::invalid_argument("simulate: covariate '" + name + "' has no levels");
    names.push_back(name);
  }

  // Full factorial over the levels, first covariate slowest, cycled if rows
  // exceeds the number of cells.
  Dataset design(names);
  std::vector<double> row(names.size());
  for (std::size_t r = 0; r < spec.rows; ++r) {
    std::size_t rest = r;
    for (std::size_t j = names.size(); j-- > 0;) {
      const auto& levels = spec.covariates[j].second;
      row[j] = levels[rest % levels.size()];
      rest /= levels.size();
    }
    design.add_row(0, spec.trials, row);
  }

  const RegressionModel model(spec.model, design);
  const auto params = model.linear_predictors(spec.parameters);
  Rng rng(seed);
  Dataset out(names);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const auto& op = params[r];
    std::int64_t y = 0;
    if (spec.model.family == Family::Binomial) {
      y = std::binomial_distribution<std::int64_t>(spec.trials, op.mu_b)(rng);
    } else {
      const TiltedBetaParams mix(TiltedParams(op.mu_t), BetaMeanDisp(op.mu_b, op.phi), op.theta);
      y = sample_tbb(TiltedBetaBinomialParams(mix, spec.trials), rng);
    }
    for (std::size_t j = 0; j < names.size(); ++j) row[j] = design.covariate(j, r);
    out.add_row(y, spec.trials, row);
  }
  return out;
}

FitReport cmd_diagnose(const RunConfig& config) {
  fs::path dataset = config.dataset;
  const ModelSpec spec =
      config.models.empty() ? model_from_run_file(config.output_dir, dataset) : config.models.front();
  if (dataset.empty()) throw std::invalid_argument("diagnose: no dataset given");
  const Dataset data = load_dataset(dataset);
  require_covariates(spec, data);
  const RegressionModel model(spec, data);

  PosteriorSample posterior = read_chain_csvs(config.output_dir);
  if (posterior.names != model.parameter_names()) {
    throw InputError("chain columns do not match the parameters of " + describe_model(spec));
  }
  const std::size_t rows = posterior.retained_per_chain();
  for (std::size_t k = 0; k < posterior.n_chains(); ++k) {
    auto& c = posterior.chains[k];
    if (c.deviance.size() == rows) continue;
    c.deviance.clear();
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> theta(posterior.n_params());
      for (std::size_t j = 0; j < theta.size(); ++j) theta[j] = posterior.draw(k, r, j);
      c.deviance.push_back(-2.0 * model.log_likelihood(theta));
    }
  }
  auto report = summarize_fit(model, posterior);
  write_fit_artifacts(config.output_dir, model, posterior, report, dataset);
  return report;
}

CheckReport cmd_check() { return run_self_check(); }

RunConfig resolve_run_config(const RunOverrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (!o.data.empty()) cfg.dataset = o.data;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.sampler.seed = *o.seed;
  if (o.chains) cfg.sampler.chains = *o.chains;
  if (o.iterations) cfg.sampler.iterations = *o.iterations;
  if (o.burn_in) cfg.sampler.burn_in = *o.burn_in;
  if (o.thin) cfg.sampler.thin = *o.thin;
  cfg.sampler.validate();
  return cfg;
}

void select_families(RunConfig& cfg, const std::vector<std::string>& families) {
  if (families.empty()) return;
  std::vector<Family> wanted;
  for (const auto& f : families) wanted.push_back(parse_family(f));
  if (cfg.models.empty()) {
    if (cfg.dataset.empty()) throw std::invalid_argument("a dataset is required to build default models");
    const Dataset data = load_dataset(cfg.dataset);
    for (Family f : wanted) cfg.models.push_back(default_model(f, data));
    return;
  }
  std::vector<ModelSpec> kept;
  for (Family f : wanted) {
    bool found = false;
    for (const auto& m : cfg.models) {
      if (m.family == f) {
        kept.push_back(m);
        found = true;
      }
    }
    if (!found) {
      throw std::invalid_argument("family " + std::string(family_label(f)) +
                                  " is not among the configured models");
    }
  }
  cfg.models = std::move(kept);
}

}  // namespace tiltedbb
