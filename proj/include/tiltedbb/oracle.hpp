#pragma once

// Brute-force reference engines for checking the closed forms in
// distributions.hpp. Nothing here calls into that header: densities are
// re-derived inline in shape form so a transcription bug cannot hide on both
// sides of a comparison.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "tiltedbb/distributions.hpp"  // Rng only

namespace tiltedbb::oracle {

/// A point of (0,1) carried with its complement and both logs, each computed
/// to full relative precision (1 - y is not recovered by subtraction).
struct UnitPoint {
  double y;
  double one_minus_y;
  double log_y;
  double log1m_y;
};

using Integrand = std::function<double(const UnitPoint&)>;
/// Returns log f(y); -inf encodes a zero integrand. f must be nonnegative.
using LogIntegrand = std::function<double(const UnitPoint&)>;

struct QuadratureResult {
  double value = 0.0;
  double estimated_error = 0.0;
  std::size_t panels_used = 0;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::size_t kMaxPanels = std::size_t{1} << 20;

/// Adaptive composite Simpson after the double-exponential substitution
/// y = 1 / (1 + exp(-pi/2 sinh t)), which flattens algebraic endpoint
/// singularities such as the y^(a-1) factor of a beta kernel with a < 1.
/// Throws QuadratureError when the panel cap is hit before `tol` is met.
QuadratureResult integrate_unit_interval_log(const LogIntegrand& log_f, double tol);

/// Same for a signed integrand. Nodes whose y rounds onto 0 or 1 are skipped;
/// their transformed weight is below 1e-15.
QuadratureResult integrate_unit_interval(const Integrand& f, double tol);

struct SummationResult {
  double value = 0.0;
  double mass = 0.0;
  /// false when the pmf mass is outside [1 - 1e-8, 1 + 1e-8]
  bool mass_ok = true;
};

/// sum_{y=0}^{m} y^order * exp(log_pmf(y)), order in {1, 2}.
SummationResult pmf_moment_by_summation(const std::function<double(std::int64_t)>& log_pmf,
                                        std::int64_t trials, int order);

/// sum_{y=0}^{m} exp(log_pmf(y)).
double pmf_mass_by_summation(const std::function<double(std::int64_t)>& log_pmf,
                             std::int64_t trials);

/// int_0^1 Bin(y | m, p) g(p) dp for a mixing log-density g.
QuadratureResult mixed_binomial_pmf_by_quadrature(std::int64_t y, std::int64_t trials,
                                                  const LogIntegrand& mixing_log_pdf,
                                                  double tol = 1e-13);

// Independent mixing densities, shape-form beta computed inline.
LogIntegrand tilted_log_density(double mu_t);
LogIntegrand beta_log_density(double mu_b, double phi);
LogIntegrand tilted_beta_log_density(double mu_t, double mu_b, double phi, double theta);

struct MonteCarloMoments {
  double mean = 0.0;
  double variance = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

MonteCarloMoments monte_carlo_moments(const std::function<double(Rng&)>& draw, std::size_t n,
                                      Rng& rng);

}  // namespace tiltedbb::oracle
