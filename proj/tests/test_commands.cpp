#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "seeds_fixture.hpp"
#include "tiltedbb/commands.hpp"
#include "tiltedbb/dataset_io.hpp"

using namespace tiltedbb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tiltedbb_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig quick_config(const fs::path& out, std::size_t chains = 2) {
  RunConfig cfg;
  cfg.dataset = fixture::source_path("data/seeds.csv");
  cfg.output_dir = out;
  cfg.sampler.iterations = 3000;
  cfg.sampler.burn_in = 500;
  cfg.sampler.thin = 5;
  cfg.sampler.chains = chains;
  cfg.sampler.seed = 11;
  return cfg;
}

}  // namespace

TEST_SUITE("commands") {
  TEST_CASE("fit writes the full artifact set") {
    const auto out = scratch("fit");
    auto cfg = quick_config(out);
    cfg.models = {fixture::seeds_model(Family::TiltedBetaBinomial)};
    const auto report = cmd_fit(cfg);
    CHECK(report.parameters.size() == 7);
    for (const auto& p : report.parameters) {
      CHECK(p.q025 <= p.median);
      CHECK(p.median <= p.q975);
    }
    for (const char* f : {"summary.txt", "summary.csv", "chains_1.csv", "chains_2.csv",
                          "diagnostics.json", "residuals.csv", "geweke.csv", "bgr.csv", "run.json"}) {
      CAPTURE(f);
      CHECK(fs::exists(out / f));
    }
    const auto summary = slurp(out / "summary.txt");
    for (const char* row : {"c1", "c2", "c3", "a1", "a2", "b1", "mu_t", "deviance"}) {
      CHECK(summary.find(std::string("\n") + row) != std::string::npos);
    }
    const auto diag = nlohmann::json::parse(slurp(out / "diagnostics.json"));
    CHECK(diag["parameters"].size() == 7);
    CHECK(diag["r_hat_omitted_reason"].is_null());
    CHECK(diag["residuals"].size() == 21);
    // Persisted numbers keep full precision.
    const auto csv = slurp(out / "summary.csv");
    std::istringstream lines(csv);
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    const auto mean_field = first.substr(first.find(',', first.find(',') + 1) + 1);
    CHECK(mean_field.substr(0, mean_field.find(',')).size() >= 16);
  }

  TEST_CASE("one chain omits BGR with a reason") {
    const auto out = scratch("fit1");
    auto cfg = quick_config(out, 1);
    cfg.models = {fixture::seeds_model(Family::BetaBinomial)};
    const auto report = cmd_fit(cfg);
    REQUIRE(report.diagnostics.r_hat_omitted_reason.has_value());
    CHECK(slurp(out / "summary.txt").find("BGR R: omitted") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "bgr.csv"));
    const auto diag = nlohmann::json::parse(slurp(out / "diagnostics.json"));
    CHECK(diag["r_hat_omitted_reason"].is_string());
  }

  TEST_CASE("same seed gives identical files") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    auto cfg = quick_config(a);
    cfg.models = {fixture::seeds_model(Family::BetaRectangularBinomial)};
    cmd_fit(cfg);
    cfg.output_dir = b;
    cmd_fit(cfg);
    for (const char* f : {"summary.txt", "summary.csv", "chains_1.csv", "chains_2.csv",
                          "diagnostics.json", "residuals.csv", "run.json"}) {
      CAPTURE(f);
      CHECK(slurp(a / f) == slurp(b / f));
    }
  }

  TEST_CASE("too few retained draws is rejected before sampling") {
    auto cfg = quick_config(scratch("few"));
    cfg.sampler.iterations = 600;
    cfg.models = {fixture::seeds_model(Family::Binomial)};
    CHECK_THROWS_AS(cmd_fit(cfg), std::invalid_argument);
    cfg.models = {parse_model_spec(R"({"family":"Bin","mu_b":["1","dose"]})")};
    cfg.sampler.iterations = 3000;
    CHECK_THROWS_AS(cmd_fit(cfg), std::invalid_argument);
  }

  TEST_CASE("compare") {
    const auto out = scratch("compare");
    auto cfg = quick_config(out);
    cfg.models = {fixture::seeds_model(Family::Binomial)};
    CHECK_THROWS_AS(cmd_compare(cfg), std::invalid_argument);

    cfg.models = {fixture::seeds_model(Family::BetaBinomial), fixture::seeds_model(Family::BetaBinomial)};
    auto rows = cmd_compare(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].dic.dic == rows[1].dic.dic);
    CHECK(rows[0].deviance.mean == rows[1].deviance.mean);
    CHECK(fs::exists(out / "comparison.csv"));
    CHECK(fs::exists(out / "1_BB" / "summary.txt"));
    CHECK(fs::exists(out / "2_BB" / "chains_1.csv"));

    // A model that cannot be fitted becomes a failed row; the rest still run.
    cfg.models = {fixture::seeds_model(Family::Binomial),
                  parse_model_spec(R"({"family":"BB","mu_b":["1","missing"],"phi":["1"]})")};
    rows = cmd_compare(cfg);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].failed);
    CHECK(rows[1].failed);
    CHECK(rows[1].error.find("missing") != std::string::npos);
    CHECK(slurp(out / "comparison.csv").find("failed") != std::string::npos);
  }

  TEST_CASE("simulate") {
    SimulationSpec sim;
    sim.rows = 37;
    sim.trials = 25;
    sim.covariates = {{"x1", {0, 1}}, {"x2", {0, 1, 2}}};
    sim.model = parse_model_spec(R"({"family":"TBB","mu_b":["1","x1"],"phi":["1","x2"],"theta":["1"],"mu_t":"free"})");
    sim.parameters.beta = {-0.4, 0.9};
    sim.parameters.gamma = {1.0, 0.3};
    sim.parameters.delta = {-1.0};
    sim.parameters.mu_t = 0.6;
    const auto a = cmd_simulate(sim, 5);
    const auto b = cmd_simulate(sim, 5);
    CHECK(a.size() == 37);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.y(i) == b.y(i));
      CHECK(a.trials(i) == 25);
    }
    // Full factorial, first covariate slowest.
    CHECK(a.covariate(0, 0) == 0.0);
    CHECK(a.covariate(1, 1) == 1.0);
    CHECK(a.covariate(0, 3) == 1.0);
    CHECK(a.covariate(0, 6) == 0.0);

    std::ostringstream out;
    write_dataset(out, a);
    std::istringstream in(out.str());
    const auto back = read_dataset(in, "sim");
    CHECK(back.size() == a.size());
    CHECK(back.y(10) == a.y(10));

    sim.parameters.beta.pop_back();
    CHECK_THROWS(cmd_simulate(sim, 5));
  }

  TEST_CASE("diagnose from saved chains") {
    const auto out = scratch("diag");
    auto cfg = quick_config(out);
    cfg.models = {fixture::seeds_model(Family::BetaBinomial)};
    const auto fitted = cmd_fit(cfg);
    const auto before = slurp(out / "diagnostics.json");

    RunConfig again;
    again.output_dir = out;
    const auto report = cmd_diagnose(again);
    CHECK(report.dic.dic == doctest::Approx(fitted.dic.dic).epsilon(1e-12));
    CHECK(report.parameters.size() == fitted.parameters.size());
    CHECK(report.diagnostics.parameters[0].geweke_z == fitted.diagnostics.parameters[0].geweke_z);

    RunConfig wrong = again;
    wrong.models = {fixture::seeds_model(Family::Binomial)};
    wrong.dataset = cfg.dataset;
    CHECK_THROWS_AS(cmd_diagnose(wrong), InputError);
  }

  TEST_CASE("check command") {
    CHECK(cmd_check().all_passed());
  }

  TEST_CASE("model descriptions") {
    CHECK(describe_model(fixture::seeds_model(Family::TiltedBetaBinomial)) ==
          "TBB mu_b[1,x1+1,x2+1] phi[1,x2+1] theta[1] mu_t free");
    const auto d = default_model(Family::BetaRectangularBinomial, fixture::seeds());
    CHECK(d.mu_b_terms == std::vector<std::string>{"1", "x1", "x2"});
    CHECK(d.phi_terms == std::vector<std::string>{"1"});
    CHECK(d.theta_terms == std::vector<std::string>{"1"});
  }
}
