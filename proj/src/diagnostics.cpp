#include "tiltedbb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tiltedbb {

namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Unbiased sample variance.
double variance_of(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

void check_fractions(double first_frac, double last_frac) {
  if (!(first_frac > 0.0 && last_frac > 0.0 && first_frac < 1.0 && last_frac < 1.0)) {
    throw std::invalid_argument("Geweke window fractions must lie in (0, 1)");
  }
  if (first_frac + last_frac > 1.0) {
    throw std::invalid_argument("Geweke windows overlap: first_frac + last_frac > 1");
  }
}

}  // namespace

double spectral_variance_of_mean(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 2) throw std::invalid_argument("spectral variance needs at least two draws");
  const double mu = mean_of(draws);
  const auto lag_max = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(0.5 * std::sqrt(static_cast<double>(n)))));
  auto autocov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += (draws[i] - mu) * (draws[i + k] - mu);
    return s / static_cast<double>(n);
  };
  double spectrum = autocov(0);
  for (std::size_t k = 1; k <= lag_max && k < n; ++k) {
    const double weight = 1.0 - static_cast<double>(k) / static_cast<double>(lag_max + 1);
    spectrum += 2.0 * weight * autocov(k);
  }
  return std::max(spectrum, 0.0) / static_cast<double>(n);
}

double geweke_z(std::span<const double> chain, double first_frac, double last_frac) {
  check_fractions(first_frac, last_frac);
  const std::size_t n = chain.size();
  if (n < 100) throw std::invalid_argument("Geweke diagnostic needs at least 100 draws");
  const auto n_a = static_cast<std::size_t>(std::floor(first_frac * static_cast<double>(n)));
  const auto n_b = static_cast<std::size_t>(std::floor(last_frac * static_cast<double>(n)));
  const auto a = chain.subspan(0, n_a);
  const auto b = chain.subspan(n - n_b, n_b);
  const double diff = mean_of(a) - mean_of(b);
  const double se2 = spectral_variance_of_mean(a) + spectral_variance_of_mean(b);
  if (diff == 0.0) return 0.0;
  if (se2 <= 0.0) return std::copysign(std::numeric_limits<double>::infinity(), diff);
  return diff / std::sqrt(se2);
}

std::vector<GewekePoint> geweke_plot(std::span<const double> chain, std::size_t segments,
                                     double first_frac, double last_frac) {
  check_fractions(first_frac, last_frac);
  if (segments < 1) throw std::invalid_argument("geweke_plot needs at least one segment");
  std::vector<GewekePoint> out;
  const std::size_t half = chain.size() / 2;
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t start = half * s / segments;
    const auto rest = chain.subspan(start);
    if (rest.size() < 100) break;
    out.push_back({start, geweke_z(rest, first_frac, last_frac)});
  }
  return out;
}

double gelman_rubin_r(const std::vector<std::span<const double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("Gelman-Rubin R needs at least two chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("Gelman-Rubin R needs chains of equal length");
  }
  if (n < 10) throw std::invalid_argument("Gelman-Rubin R needs chains of length >= 10");
  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(n);

  std::vector<double> means;
  double within = 0.0;
  for (const auto& c : chains) {
    const double mu = mean_of(c);
    means.push_back(mu);
    within += variance_of(c, mu);
  }
  within /= m;
  const double grand = mean_of(means);
  double between = 0.0;  // B/n
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between /= (m - 1.0);

  const double within_n = (nd - 1.0) / nd * within;
  const double excess = (m + 1.0) / m * between;
  if (excess == 0.0) return 1.0;
  if (within_n <= 0.0) return std::numeric_limits<double>::infinity();
  return (within_n + excess) / within_n;
}

std::vector<GelmanRubinPoint> gelman_rubin_plot(const std::vector<std::span<const double>>& chains,
                                                std::size_t points) {
  if (chains.size() < 2 || points < 1) return {};
  const std::size_t n = chains.front().size();
  std::vector<GelmanRubinPoint> out;
  for (std::size_t p = 1; p <= points; ++p) {
    const std::size_t upto = n * p / points;
    const std::size_t from = upto / 2;
    if (upto - from < 10) continue;
    std::vector<std::span<const double>> window;
    for (const auto& c : chains) window.push_back(c.subspan(from, upto - from));
    out.push_back({upto, gelman_rubin_r(window)});
  }
  return out;
}

McError mc_error(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 30) throw std::invalid_argument("MC error needs at least 30 draws");
  McError out;
  const double mu = mean_of(chain);
  out.naive = std::sqrt(variance_of(chain, mu) / static_cast<double>(n));

  constexpr std::size_t kBatches = 30;
  const std::size_t size = n / kBatches;
  std::vector<double> batch_means(kBatches);
  for (std::size_t b = 0; b < kBatches; ++b) {
    batch_means[b] = mean_of(chain.subspan(b * size, size));
  }
  const double bm = mean_of(batch_means);
  out.batch_means = std::sqrt(variance_of(batch_means, bm) / static_cast<double>(kBatches));
  return out;
}

std::vector<double> autocorrelation(std::span<const double> chain, std::size_t max_lag) {
  const std::size_t n = chain.size();
  if (n < 2 || 2 * max_lag >= n) {
    throw std::invalid_argument("autocorrelation needs max_lag < length/2");
  }
  const double mu = mean_of(chain);
  std::vector<double> acf(max_lag + 1, 0.0);
  double c0 = 0.0;
  for (double v : chain) c0 += (v - mu) * (v - mu);
  acf[0] = 1.0;
  if (c0 == 0.0) return acf;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += (chain[i] - mu) * (chain[i + k] - mu);
    acf[k] = s / c0;
  }
  return acf;
}

std::vector<PearsonResidual> pearson_residuals(const RegressionModel& model,
                                               const PosteriorSample& posterior) {
  const Dataset& data = model.data();
  const std::size_t n_obs = data.size();
  std::vector<double> mean_sum(n_obs, 0.0);
  std::vector<double> var_sum(n_obs, 0.0);
  std::size_t draws = 0;
  const std::size_t p = posterior.n_params();
  if (p != model.n_params()) {
    throw std::invalid_argument("posterior does not match the model's parameter layout");
  }
  for (const auto& chain : posterior.chains) {
    const std::size_t rows = chain.draws.size() / p;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::span<const double> x(chain.draws.data() + r * p, p);
      for (std::size_t i = 0; i < n_obs; ++i) {
        const auto [mu, var] = model.observation_moments(i, model.observation_params(i, x));
        mean_sum[i] += mu;
        var_sum[i] += var;
      }
      ++draws;
    }
  }
  if (draws == 0) throw std::invalid_argument("posterior sample holds no draws");

  std::vector<PearsonResidual> out(n_obs);
  for (std::size_t i = 0; i < n_obs; ++i) {
    auto& r = out[i];
    r.index = i;
    r.y = data.y(i);
    r.trials = data.trials(i);
    r.fitted_mean = mean_sum[i] / static_cast<double>(draws);
    r.fitted_variance = var_sum[i] / static_cast<double>(draws);
    if (r.fitted_variance > 0.0) {
      r.residual = (static_cast<double>(r.y) - r.fitted_mean) / std::sqrt(r.fitted_variance);
    } else {
      r.flagged = true;
      r.residual = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

const ParameterDiagnostics& DiagnosticsReport::parameter(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no diagnostics for parameter '" + std::string(name) + "'");
}

DiagnosticsReport diagnose(const RegressionModel& model, const PosteriorSample& posterior,
                           std::size_t max_lag) {
  DiagnosticsReport report;
  const std::size_t n = posterior.retained_per_chain();
  const std::size_t lags = std::min(max_lag, n > 2 ? (n - 1) / 2 : 0);
  if (posterior.n_chains() < 2) {
    report.r_hat_omitted_reason =
        "Brooks-Gelman-Rubin R needs at least two chains; this run has " +
        std::to_string(posterior.n_chains());
  }
  for (std::size_t j = 0; j < posterior.n_params(); ++j) {
    ParameterDiagnostics d;
    d.name = posterior.names[j];
    std::vector<std::vector<double>> columns;
    for (std::size_t k = 0; k < posterior.n_chains(); ++k) {
      columns.push_back(posterior.column(k, j));
    }
    for (const auto& c : columns) d.geweke_z_by_chain.push_back(geweke_z(c));
    d.geweke_z = d.geweke_z_by_chain.front();
    if (!report.r_hat_omitted_reason) {
      std::vector<std::span<const double>> spans(columns.begin(), columns.end());
      d.r_hat = gelman_rubin_r(spans);
    }
    d.mc_error = mc_error(posterior.pooled_column(j));
    if (lags > 0) d.autocorrelation = autocorrelation(columns.front(), lags);
    report.parameters.push_back(std::move(d));
  }
  report.residuals = pearson_residuals(model, posterior);
  return report;
}

}  // namespace tiltedbb
