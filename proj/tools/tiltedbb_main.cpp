// Command-line front end: fit, compare, simulate, diagnose, check.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "tiltedbb/commands.hpp"
#include "tiltedbb/dataset_io.hpp"

namespace fs = std::filesystem;
using namespace tiltedbb;

namespace {

using Flags = RunOverrides;

void add_common(CLI::App* cmd, Flags& f, bool sampler, bool data, bool family) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (simulate: CSV file)");
  if (data) cmd->add_option("--data", f.data, "CSV with columns y, n and covariates");
  if (family) {
    cmd->add_option("--family", f.families, "Bin, BB, BRB or TBB (comma separated for compare)")
        ->delimiter(',');
  }
  cmd->add_option("--seed", f.seed, "random seed");
  if (sampler) {
    cmd->add_option("--chains", f.chains, "number of chains")->check(CLI::PositiveNumber);
    cmd->add_option("--iters", f.iterations, "iterations per chain, burn-in included")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--burnin", f.burn_in, "burn-in iterations");
    cmd->add_option("--thin", f.thin, "keep every k-th draw")->check(CLI::PositiveNumber);
  }
}

void require_data(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw std::invalid_argument("--data (or \"data\" in the config) is required");
}

int run_fit(const Flags& f) {
  RunConfig cfg = resolve_run_config(f);
  require_data(cfg);
  select_families(cfg, f.families);
  if (cfg.models.empty()) throw std::invalid_argument("fit: give --family or models in --config");
  if (cfg.models.size() > 1) {
    std::cerr << "note: fitting the first of " << cfg.models.size() << " configured models\n";
  }
  const FitReport report = cmd_fit(cfg);
  write_summary_text(std::cout, report);
  std::cout << "\nwrote results to " << cfg.output_dir.string() << '\n';
  return 0;
}

int run_compare(const Flags& f) {
  RunConfig cfg = resolve_run_config(f);
  require_data(cfg);
  select_families(cfg, f.families);
  const auto rows = cmd_compare(cfg);
  write_comparison_text(std::cout, rows);
  std::cout << "\nwrote results to " << cfg.output_dir.string() << '\n';
  for (const auto& r : rows) {
    if (r.failed) return 1;
  }
  return 0;
}

int run_simulate(const Flags& f) {
  const RunConfig cfg = resolve_run_config(f);
  if (!cfg.simulation) throw std::invalid_argument("simulate: the config needs a \"simulate\" section");
  const Dataset data = cmd_simulate(*cfg.simulation, cfg.sampler.seed);
  fs::path target = f.out.empty() ? fs::path("simulated.csv") : f.out;
  if (fs::is_directory(target)) target /= "simulated.csv";
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream out(target);
  if (!out) throw std::runtime_error("cannot write '" + target.string() + "'");
  write_dataset(out, data);
  std::cout << "wrote " << data.size() << " rows to " << target.string() << '\n';
  return 0;
}

int run_diagnose(const Flags& f) {
  RunConfig cfg = resolve_run_config(f);
  if (!f.families.empty() && !cfg.dataset.empty()) select_families(cfg, f.families);
  const FitReport report = cmd_diagnose(cfg);
  write_summary_text(std::cout, report);
  return 0;
}

int run_check() {
  const CheckReport report = cmd_check();
  write_check_report(std::cout, report);
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian tilted beta binomial regression"};
  app.require_subcommand(1);
  Flags flags;

  auto* fit = app.add_subcommand("fit", "fit one model and write summaries and chains");
  add_common(fit, flags, true, true, true);
  auto* compare = app.add_subcommand("compare", "fit several models and rank them by DIC");
  add_common(compare, flags, true, true, true);
  auto* simulate = app.add_subcommand("simulate", "draw a synthetic dataset from a config");
  add_common(simulate, flags, false, false, false);
  auto* diag = app.add_subcommand("diagnose", "recompute diagnostics from saved chains");
  add_common(diag, flags, false, true, true);
  app.add_subcommand("check", "verify closed forms against numerical oracles");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) return run_fit(flags);
    if (*compare) return run_compare(flags);
    if (*simulate) return run_simulate(flags);
    if (*diag) return run_diagnose(flags);
    return run_check();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
