#pragma once

#include <cstdint>
#include <random>

namespace tiltedbb {

/// Random stream used by every sampler in the library. Callers own it.
using Rng = std::mt19937_64;

/// Mean of the tilted (linear) density on (0,1). Admissible range is [1/3, 2/3];
/// outside it the density goes negative near one endpoint.
class TiltedParams {
 public:
  explicit TiltedParams(double mu_t);

  double mu_t() const { return mu_t_; }
  /// Slope-carrying coefficient 3(2*mu_t - 1), in [-1, 1].
  double slope() const { return 3.0 * (2.0 * mu_t_ - 1.0); }

  static constexpr double kLower = 1.0 / 3.0;
  static constexpr double kUpper = 2.0 / 3.0;

 private:
  double mu_t_;
};

/// Beta distribution in mean/dispersion form: shapes mu*phi and (1-mu)*phi.
class BetaMeanDisp {
 public:
  BetaMeanDisp(double mu_b, double phi);

  double mu_b() const { return mu_b_; }
  double phi() const { return phi_; }
  double shape_a() const { return mu_b_ * phi_; }
  double shape_b() const { return (1.0 - mu_b_) * phi_; }
  double variance() const { return mu_b_ * (1.0 - mu_b_) / (1.0 + phi_); }

 private:
  double mu_b_;
  double phi_;
};

/// theta * tilted + (1 - theta) * beta.
class TiltedBetaParams {
 public:
  TiltedBetaParams(TiltedParams tilted, BetaMeanDisp beta, double theta);

  const TiltedParams& tilted() const { return tilted_; }
  const BetaMeanDisp& beta() const { return beta_; }
  double theta() const { return theta_; }

 private:
  TiltedParams tilted_;
  BetaMeanDisp beta_;
  double theta_;
};

class TiltedBetaBinomialParams {
 public:
  TiltedBetaBinomialParams(TiltedBetaParams mix, std::int64_t trials);

  const TiltedBetaParams& mix() const { return mix_; }
  std::int64_t trials() const { return trials_; }

 private:
  TiltedBetaParams mix_;
  std::int64_t trials_;
};

// Special functions shared by the pmfs.

/// log(n!) from a table for small n, lgamma beyond.
double log_factorial(std::int64_t n);
double log_choose(std::int64_t n, std::int64_t k);
/// log(exp(a) + exp(b)); exact passthrough when either side is -inf.
double log_sum_exp(double a, double b);

// Tilted distribution.

double tilted_pdf(double y, const TiltedParams& p);
/// E(Y^n), n >= 1.
double tilted_moment(int n, const TiltedParams& p);
double tilted_variance(const TiltedParams& p);

// Beta pieces.

double beta_pdf(double y, const BetaMeanDisp& p);
double beta_binomial_log_pmf(std::int64_t y, std::int64_t trials, const BetaMeanDisp& p);

// Tilted beta (continuous mixture).

double tilted_beta_pdf(double y, const TiltedBetaParams& p);
double tilted_beta_mean(const TiltedBetaParams& p);
/// theta*V_t + (1-theta)*V_b + theta*(1-theta)*(mu_t - mu_b)^2.
double tilted_beta_variance(const TiltedBetaParams& p);

// Tilted beta binomial and its beta-rectangular special case.

/// Log mass of the tilted component alone: log of
/// 2*C(m,y)*[(y(6mu_t-3) + m(2-3mu_t) + 1)/(m+2)]*B(y+1, m-y+1).
double tilted_binomial_log_pmf(std::int64_t y, std::int64_t trials, const TiltedParams& p);
double tbb_log_pmf(std::int64_t y, const TiltedBetaBinomialParams& p);
double brb_log_pmf(std::int64_t y, std::int64_t trials, const BetaMeanDisp& p_beta, double theta);
double tbb_mean(const TiltedBetaBinomialParams& p);
double tbb_variance(const TiltedBetaBinomialParams& p);

double binomial_log_pmf(std::int64_t y, std::int64_t trials, double prob);

// Exact samplers.

/// Inverse-CDF draw; strictly inside (0,1).
double sample_tilted(const TiltedParams& p, Rng& rng);
double sample_beta(const BetaMeanDisp& p, Rng& rng);
double sample_tilted_beta(const TiltedBetaParams& p, Rng& rng);
std::int64_t sample_tbb(const TiltedBetaBinomialParams& p, Rng& rng);

}  // namespace tiltedbb
