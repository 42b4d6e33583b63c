// Python module: distribution functions, the self-check, and the fit,
// compare, simulate and diagnose commands. Results come back as plain
// dicts and lists so they need no extra wrapper types.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <fstream>

#include "tiltedbb/commands.hpp"
#include "tiltedbb/dataset_io.hpp"
#include "tiltedbb/distributions.hpp"

namespace py = pybind11;
using namespace tiltedbb;

namespace {

TiltedBetaParams mixture(double mu_t, double mu_b, double phi, double theta) {
  return TiltedBetaParams(TiltedParams(mu_t), BetaMeanDisp(mu_b, phi), theta);
}

TiltedBetaBinomialParams tbb(std::int64_t n, double mu_t, double mu_b, double phi, double theta) {
  return TiltedBetaBinomialParams(mixture(mu_t, mu_b, phi, theta), n);
}

py::object optional_double(const std::optional<double>& v) {
  return v ? py::object(py::float_(*v)) : py::object(py::none());
}

py::dict to_dict(const DevianceSummary& d) {
  py::dict out;
  out["mean"] = d.mean;
  out["sd"] = d.sd;
  out["q025"] = d.q025;
  out["median"] = d.median;
  out["q975"] = d.q975;
  return out;
}

py::dict to_dict(const DicResult& d) {
  py::dict out;
  out["dic"] = d.dic;
  out["p_d"] = d.p_d;
  out["d_bar"] = d.d_bar;
  out["d_hat"] = d.d_hat;
  return out;
}

py::dict to_dict(const FitReport& r) {
  py::list params;
  for (std::size_t k = 0; k < r.parameters.size(); ++k) {
    const auto& p = r.parameters[k];
    const auto& d = r.diagnostics.parameters[k];
    py::dict e;
    e["name"] = p.name;
    e["term"] = p.term;
    e["mean"] = p.mean;
    e["sd"] = p.sd;
    e["q025"] = p.q025;
    e["median"] = p.median;
    e["q975"] = p.q975;
    e["mc_error"] = p.mc_error.batch_means;
    e["geweke_z"] = d.geweke_z;
    e["r_hat"] = optional_double(d.r_hat);
    params.append(e);
  }
  py::list residuals;
  for (const auto& res : r.diagnostics.residuals) {
    py::dict e;
    e["y"] = res.y;
    e["n"] = res.trials;
    e["fitted_mean"] = res.fitted_mean;
    e["fitted_variance"] = res.fitted_variance;
    e["residual"] = res.residual;
    residuals.append(e);
  }
  py::dict out;
  out["model"] = r.model_label;
  out["parameters"] = params;
  out["deviance"] = to_dict(r.deviance);
  out["dic"] = to_dict(r.dic);
  out["residuals"] = residuals;
  out["chains"] = r.chains;
  out["retained_per_chain"] = r.retained_per_chain;
  if (r.diagnostics.r_hat_omitted_reason) {
    out["r_hat_omitted_reason"] = *r.diagnostics.r_hat_omitted_reason;
  } else {
    out["r_hat_omitted_reason"] = py::none();
  }
  return out;
}

RunOverrides overrides(std::optional<std::string> config, std::optional<std::string> data,
                       std::optional<std::string> out, std::vector<std::string> family,
                       std::optional<std::uint64_t> seed, std::optional<std::size_t> chains,
                       std::optional<std::size_t> iterations, std::optional<std::size_t> burn_in,
                       std::optional<std::size_t> thin) {
  RunOverrides o;
  if (config) o.config = *config;
  if (data) o.data = *data;
  if (out) o.out = *out;
  o.families = std::move(family);
  o.seed = seed;
  o.chains = chains;
  o.iterations = iterations;
  o.burn_in = burn_in;
  o.thin = thin;
  return o;
}

#define RUN_ARGS                                                                             \
  py::kw_only(), py::arg("config") = py::none(), py::arg("data") = py::none(),               \
      py::arg("out") = py::none(), py::arg("family") = std::vector<std::string>{},           \
      py::arg("seed") = py::none(), py::arg("chains") = py::none(),                          \
      py::arg("iterations") = py::none(), py::arg("burn_in") = py::none(),                   \
      py::arg("thin") = py::none()

}  // namespace

PYBIND11_MODULE(tiltedbb, m) {
  m.doc() = "Tilted beta binomial distributions and Bayesian regression";

  m.def("tilted_pdf", [](double y, double mu_t) { return tilted_pdf(y, TiltedParams(mu_t)); },
        py::arg("y"), py::arg("mu_t"));
  m.def("tilted_moment", [](int n, double mu_t) { return tilted_moment(n, TiltedParams(mu_t)); },
        py::arg("n"), py::arg("mu_t"));
  m.def("tilted_beta_pdf",
        [](double y, double mu_t, double mu_b, double phi, double theta) {
          return tilted_beta_pdf(y, mixture(mu_t, mu_b, phi, theta));
        },
        py::arg("y"), py::arg("mu_t"), py::arg("mu_b"), py::arg("phi"), py::arg("theta"));
  m.def("tilted_beta_mean",
        [](double mu_t, double mu_b, double phi, double theta) {
          return tilted_beta_mean(mixture(mu_t, mu_b, phi, theta));
        },
        py::arg("mu_t"), py::arg("mu_b"), py::arg("phi"), py::arg("theta"));
  m.def("tilted_beta_variance",
        [](double mu_t, double mu_b, double phi, double theta) {
          return tilted_beta_variance(mixture(mu_t, mu_b, phi, theta));
        },
        py::arg("mu_t"), py::arg("mu_b"), py::arg("phi"), py::arg("theta"));
  m.def("bb_log_pmf",
        [](std::int64_t y, std::int64_t n, double mu_b, double phi) {
          return beta_binomial_log_pmf(y, n, BetaMeanDisp(mu_b, phi));
        },
        py::arg("y"), py::arg("n"), py::arg("mu_b"), py::arg("phi"));
  m.def("brb_log_pmf",
        [](std::int64_t y, std::int64_t n, double mu_b, double phi, double theta) {
          return brb_log_pmf(y, n, BetaMeanDisp(mu_b, phi), theta);
        },
        py::arg("y"), py::arg("n"), py::arg("mu_b"), py::arg("phi"), py::arg("theta"));
  m.def("tbb_log_pmf",
        [](std::int64_t y, std::int64_t n, double mu_t, double mu_b, double phi, double theta) {
          return tbb_log_pmf(y, tbb(n, mu_t, mu_b, phi, theta));
        },
        py::arg("y"), py::arg("n"), py::arg("mu_t"), py::arg("mu_b"), py::arg("phi"),
        py::arg("theta"));
  m.def("tbb_pmf",
        [](std::int64_t y, std::int64_t n, double mu_t, double mu_b, double phi, double theta) {
          return std::exp(tbb_log_pmf(y, tbb(n, mu_t, mu_b, phi, theta)));
        },
        py::arg("y"), py::arg("n"), py::arg("mu_t"), py::arg("mu_b"), py::arg("phi"),
        py::arg("theta"));
  m.def("tbb_mean",
        [](std::int64_t n, double mu_t, double mu_b, double phi, double theta) {
          return tbb_mean(tbb(n, mu_t, mu_b, phi, theta));
        },
        py::arg("n"), py::arg("mu_t"), py::arg("mu_b"), py::arg("phi"), py::arg("theta"));
  m.def("tbb_variance",
        [](std::int64_t n, double mu_t, double mu_b, double phi, double theta) {
          return tbb_variance(tbb(n, mu_t, mu_b, phi, theta));
        },
        py::arg("n"), py::arg("mu_t"), py::arg("mu_b"), py::arg("phi"), py::arg("theta"));
  m.def("sample_tbb",
        [](std::size_t size, std::int64_t n, double mu_t, double mu_b, double phi, double theta,
           std::uint64_t seed) {
          const auto p = tbb(n, mu_t, mu_b, phi, theta);
          Rng rng(seed);
          std::vector<std::int64_t> draws(size);
          for (auto& d : draws) d = sample_tbb(p, rng);
          return draws;
        },
        py::arg("size"), py::arg("n"), py::arg("mu_t"), py::arg("mu_b"), py::arg("phi"),
        py::arg("theta"), py::arg("seed") = 0);

  m.def("self_check", [] {
    const CheckReport report = cmd_check();
    py::list checks;
    for (const auto& c : report.checks) {
      py::dict e;
      e["name"] = c.name;
      e["passed"] = c.passed;
      e["cases"] = c.cases;
      e["worst_error"] = c.worst_error;
      e["tolerance"] = c.tolerance;
      e["detail"] = c.detail;
      checks.append(e);
    }
    py::dict out;
    out["all_passed"] = report.all_passed();
    out["grid_size"] = report.grid_size;
    out["checks"] = checks;
    return out;
  });

  m.def("fit",
        [](std::optional<std::string> config, std::optional<std::string> data,
           std::optional<std::string> out, std::vector<std::string> family,
           std::optional<std::uint64_t> seed, std::optional<std::size_t> chains,
           std::optional<std::size_t> iterations, std::optional<std::size_t> burn_in,
           std::optional<std::size_t> thin) {
          RunConfig cfg = resolve_run_config(overrides(config, data, out, family, seed, chains,
                                                       iterations, burn_in, thin));
          select_families(cfg, family);
          FitReport report;
          {
            py::gil_scoped_release release;
            report = cmd_fit(cfg);
          }
          return to_dict(report);
        },
        RUN_ARGS, "Fit the first configured model and write its artifacts to `out`.");

  m.def("compare",
        [](std::optional<std::string> config, std::optional<std::string> data,
           std::optional<std::string> out, std::vector<std::string> family,
           std::optional<std::uint64_t> seed, std::optional<std::size_t> chains,
           std::optional<std::size_t> iterations, std::optional<std::size_t> burn_in,
           std::optional<std::size_t> thin) {
          RunConfig cfg = resolve_run_config(overrides(config, data, out, family, seed, chains,
                                                       iterations, burn_in, thin));
          select_families(cfg, family);
          std::vector<ComparisonRow> rows;
          {
            py::gil_scoped_release release;
            rows = cmd_compare(cfg);
          }
          py::list result;
          for (const auto& r : rows) {
            py::dict e;
            e["model"] = r.label;
            e["failed"] = r.failed;
            e["error"] = r.error;
            e["dic"] = to_dict(r.dic);
            e["deviance"] = to_dict(r.deviance);
            result.append(e);
          }
          return result;
        },
        RUN_ARGS, "Fit every configured model and rank them by DIC (best first).");

  m.def("diagnose",
        [](std::string out, std::optional<std::string> data, std::vector<std::string> family) {
          RunOverrides o;
          o.out = out;
          if (data) o.data = *data;
          RunConfig cfg = resolve_run_config(o);
          if (!family.empty() && !cfg.dataset.empty()) select_families(cfg, family);
          return to_dict(cmd_diagnose(cfg));
        },
        py::arg("out"), py::kw_only(), py::arg("data") = py::none(),
        py::arg("family") = std::vector<std::string>{},
        "Recompute summaries and diagnostics from the chains saved in `out`.");

  m.def("simulate",
        [](std::string config, std::optional<std::string> out, std::optional<std::uint64_t> seed) {
          RunOverrides o;
          o.config = config;
          o.seed = seed;
          const RunConfig cfg = resolve_run_config(o);
          if (!cfg.simulation) throw std::invalid_argument("the config needs a \"simulate\" section");
          const Dataset data = cmd_simulate(*cfg.simulation, cfg.sampler.seed);
          if (out) {
            std::ofstream file(*out);
            if (!file) throw std::runtime_error("cannot write '" + *out + "'");
            write_dataset(file, data);
          }
          py::dict columns;
          std::vector<std::int64_t> y(data.size()), n(data.size());
          for (std::size_t i = 0; i < data.size(); ++i) {
            y[i] = data.y(i);
            n[i] = data.trials(i);
          }
          columns["y"] = y;
          columns["n"] = n;
          for (std::size_t c = 0; c < data.covariate_names().size(); ++c) {
            std::vector<double> col(data.size());
            for (std::size_t i = 0; i < data.size(); ++i) col[i] = data.covariate(c, i);
            columns[py::str(data.covariate_names()[c])] = col;
          }
          return columns;
        },
        py::arg("config"), py::kw_only(), py::arg("out") = py::none(), py::arg("seed") = py::none(),
        "Draw a synthetic dataset from the config's \"simulate\" section.");

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
}
