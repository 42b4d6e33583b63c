#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "tiltedbb/distributions.hpp"

namespace tiltedbb {

/// The closed forms under test, swappable so a harness can plant a bug and
/// confirm the suite notices.
struct ClosedForms {
  std::function<double(double, const TiltedParams&)> tilted_pdf;
  std::function<double(int, const TiltedParams&)> tilted_moment;
  std::function<double(const TiltedParams&)> tilted_variance;
  std::function<double(double, const TiltedBetaParams&)> tilted_beta_pdf;
  std::function<double(const TiltedBetaParams&)> tilted_beta_mean;
  std::function<double(const TiltedBetaParams&)> tilted_beta_variance;
  std::function<double(std::int64_t, std::int64_t, const BetaMeanDisp&)> beta_binomial_log_pmf;
  std::function<double(std::int64_t, const TiltedBetaBinomialParams&)> tbb_log_pmf;
  std::function<double(std::int64_t, std::int64_t, const BetaMeanDisp&, double)> brb_log_pmf;
  std::function<double(const TiltedBetaBinomialParams&)> tbb_mean;
  std::function<double(const TiltedBetaBinomialParams&)> tbb_variance;
};

ClosedForms library_closed_forms();

struct CheckResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  double worst_error = 0.0;
  double tolerance = 0.0;
  std::string detail;  // worst case, or the exception text
};

struct CheckReport {
  std::vector<CheckResult> checks;
  std::size_t grid_size = 0;

  bool all_passed() const;
};

/// Normalisation, moment, reduction and compound-pmf checks of every closed
/// form against the quadrature and summation oracles over a 36-point grid
/// (mu_t near both bounds and at 1/2, theta in {0, eps, 1-eps, 1}, phi in
/// {0.1, 1, 100}). Continuous-density normalisation uses phi in {1, 10, 100}:
/// smaller dispersions leave more than 1e-10 of mass within one ulp of 1.
CheckReport run_self_check(const ClosedForms& forms = library_closed_forms());

void write_check_report(std::ostream& os, const CheckReport& report);

}  // namespace tiltedbb
