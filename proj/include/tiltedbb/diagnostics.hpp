#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiltedbb/mcmc.hpp"
#include "tiltedbb/regression.hpp"

namespace tiltedbb {

/// Spectral density at frequency zero divided by n, i.e. the variance of the
/// sample mean, from a Bartlett lag window truncated at floor(0.5*sqrt(n)).
double spectral_variance_of_mean(std::span<const double> draws);

/// Geweke Z comparing the first `first_frac` and last `last_frac` of a chain.
/// Needs at least 100 draws; the two windows may not overlap.
double geweke_z(std::span<const double> chain, double first_frac = 0.1, double last_frac = 0.5);

struct GewekePoint {
  std::size_t first_kept = 0;  // draws discarded from the start
  double z = 0.0;
};

/// Geweke-Brooks plot data: Z recomputed after discarding increasing leading
/// portions, up to half the chain.
std::vector<GewekePoint> geweke_plot(std::span<const double> chain, std::size_t segments = 20,
                                     double first_frac = 0.1, double last_frac = 0.5);

/// Potential scale reduction R = V/W with V = W' + (m+1)/m * B/n and
/// W' = (n-1)/n * W, for m chains of n draws. Equals 1 when the chains agree
/// exactly and is never below 1.
double gelman_rubin_r(const std::vector<std::span<const double>>& chains);

struct GelmanRubinPoint {
  std::size_t iterations = 0;  // leading draws used; R on their second half
  double r = 1.0;
};

std::vector<GelmanRubinPoint> gelman_rubin_plot(const std::vector<std::span<const double>>& chains,
                                                std::size_t points = 50);

struct McError {
  double naive = 0.0;        // sd / sqrt(N)
  double batch_means = 0.0;  // 30 batches
};

McError mc_error(std::span<const double> chain);

/// Biased sample autocorrelation at lags 0..max_lag (entry k is lag k).
std::vector<double> autocorrelation(std::span<const double> chain, std::size_t max_lag);

struct PearsonResidual {
  std::size_t index = 0;
  std::int64_t y = 0;
  std::int64_t trials = 0;
  double fitted_mean = 0.0;
  double fitted_variance = 0.0;
  double residual = 0.0;
  bool flagged = false;  // zero fitted variance; residual is NaN
};

/// (y_i - E_i)/sqrt(V_i) with E_i, V_i the posterior means of the per-draw
/// observation mean and variance (mean of moments, not moments at the mean).
std::vector<PearsonResidual> pearson_residuals(const RegressionModel& model,
                                               const PosteriorSample& posterior);

struct ParameterDiagnostics {
  std::string name;
  double geweke_z = 0.0;                  // first chain
  std::vector<double> geweke_z_by_chain;  // every chain
  std::optional<double> r_hat;
  McError mc_error;
  std::vector<double> autocorrelation;  // first chain
};

struct DiagnosticsReport {
  std::vector<ParameterDiagnostics> parameters;
  std::optional<std::string> r_hat_omitted_reason;
  std::vector<PearsonResidual> residuals;

  const ParameterDiagnostics& parameter(std::string_view name) const;
};

DiagnosticsReport diagnose(const RegressionModel& model, const PosteriorSample& posterior,
                           std::size_t max_lag = 50);

}  // namespace tiltedbb
