#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tiltedbb/mcmc.hpp"
#include "tiltedbb/regression.hpp"

namespace tiltedbb {

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
  double d_bar = 0.0;
  double d_hat = 0.0;
};

/// DIC = D_bar + p_D with p_D = D_bar - D(theta_bar); theta_bar is the
/// coordinatewise posterior mean of the stacked parameters on the sampling
/// scale. Throws std::runtime_error if D(theta_bar) is not finite.
DicResult dic(const PosteriorSample& posterior, const RegressionModel& model);

struct DevianceSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double median = 0.0;
};

/// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::span<const double> values, double prob);

DevianceSummary deviance_summary(std::span<const double> trace);
DevianceSummary deviance_summary(const PosteriorSample& posterior);

struct ComparisonRow {
  std::string label;
  DicResult dic;
  DevianceSummary deviance;
  bool failed = false;
  std::string error;
};

/// Successful rows by ascending DIC, failed rows last.
void sort_by_dic(std::vector<ComparisonRow>& rows);

void write_comparison_text(std::ostream& os, const std::vector<ComparisonRow>& rows);
void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows);

}  // namespace tiltedbb
