#include "tiltedbb/distributions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tiltedbb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void domain_fail(const char* what, double value) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (got " << value << ")";
  throw std::domain_error(os.str());
}

void check_unit_open(double y, const char* fn) {
  if (!(y > 0.0 && y < 1.0)) {
    domain_fail(fn, y);
  }
}

void check_count(std::int64_t y, std::int64_t trials) {
  if (trials < 1) {
    domain_fail("number of trials must be >= 1", static_cast<double>(trials));
  }
  if (y < 0 || y > trials) {
    domain_fail("count must lie in [0, trials]", static_cast<double>(y));
  }
}

constexpr std::size_t kFactorialTableSize = 1 << 14;

const std::array<double, kFactorialTableSize>& factorial_table() {
  static const auto table = [] {
    std::array<double, kFactorialTableSize> t{};
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    }
    return t;
  }();
  return table;
}

// sum_{j<k} log(a + j) = log Gamma(a + k) - log Gamma(a)
double log_rising(double a, std::int64_t k) {
  double s = 0.0;
  for (std::int64_t j = 0; j < k; ++j) {
    s += std::log(a + static_cast<double>(j));
  }
  return s;
}

// Rising-factorial sums keep full precision when the shapes dwarf the
// counts; lgamma differences lose ~|lgamma(a)|*eps there.
constexpr std::int64_t kRisingSumTrials = 256;
constexpr double kLgammaSafeShape = 1.0e3;
constexpr std::int64_t kRisingSumCap = 1 << 20;

double log_beta_ratio(double a, double b, std::int64_t y, std::int64_t trials) {
  const bool use_sums =
      trials <= kRisingSumTrials || (a + b > kLgammaSafeShape && trials <= kRisingSumCap);
  if (use_sums) {
    return log_rising(a, y) + log_rising(b, trials - y) - log_rising(a + b, trials);
  }
  const double yd = static_cast<double>(y);
  const double md = static_cast<double>(trials);
  return std::lgamma(yd + a) + std::lgamma(md - yd + b) - std::lgamma(md + a + b) -
         std::lgamma(a) - std::lgamma(b) + std::lgamma(a + b);
}

}  // namespace

TiltedParams::TiltedParams(double mu_t) : mu_t_(mu_t) {
  if (!(mu_t >= kLower && mu_t <= kUpper)) {
    domain_fail("tilted mean must lie in [1/3, 2/3]", mu_t);
  }
}

BetaMeanDisp::BetaMeanDisp(double mu_b, double phi) : mu_b_(mu_b), phi_(phi) {
  if (!(mu_b > 0.0 && mu_b < 1.0)) {
    domain_fail("beta mean must lie in (0, 1)", mu_b);
  }
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    domain_fail("beta dispersion must be positive and finite", phi);
  }
}

TiltedBetaParams::TiltedBetaParams(TiltedParams tilted, BetaMeanDisp beta, double theta)
    : tilted_(tilted), beta_(beta), theta_(theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    domain_fail("mixture weight must lie in [0, 1]", theta);
  }
}

TiltedBetaBinomialParams::TiltedBetaBinomialParams(TiltedBetaParams mix, std::int64_t trials)
    : mix_(mix), trials_(trials) {
  if (trials < 1) {
    domain_fail("number of trials must be >= 1", static_cast<double>(trials));
  }
}

double log_factorial(std::int64_t n) {
  if (n < 0) {
    domain_fail("log_factorial of negative integer", static_cast<double>(n));
  }
  const auto& table = factorial_table();
  if (static_cast<std::size_t>(n) < table.size()) {
    return table[static_cast<std::size_t>(n)];
  }
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_choose(std::int64_t n, std::int64_t k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

double tilted_pdf(double y, const TiltedParams& p) {
  check_unit_open(y, "tilted_pdf: y must lie in (0, 1)");
  return p.slope() * (2.0 * y - 1.0) + 1.0;
}

double tilted_moment(int n, const TiltedParams& p) {
  if (n < 1) {
    domain_fail("tilted_moment: order must be >= 1", n);
  }
  const double nd = n;
  return (3.0 * nd * (2.0 * p.mu_t() - 1.0) + nd + 2.0) / ((nd + 1.0) * (nd + 2.0));
}

double tilted_variance(const TiltedParams& p) {
  return p.mu_t() * (1.0 - p.mu_t()) - 1.0 / 6.0;
}

double beta_pdf(double y, const BetaMeanDisp& p) {
  check_unit_open(y, "beta_pdf: y must lie in (0, 1)");
  const double a = p.shape_a();
  const double b = p.shape_b();
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  return std::exp(log_norm + (a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y));
}

double beta_binomial_log_pmf(std::int64_t y, std::int64_t trials, const BetaMeanDisp& p) {
  check_count(y, trials);
  return log_choose(trials, y) + log_beta_ratio(p.shape_a(), p.shape_b(), y, trials);
}

double tilted_beta_pdf(double y, const TiltedBetaParams& p) {
  check_unit_open(y, "tilted_beta_pdf: y must lie in (0, 1)");
  const double theta = p.theta();
  double value = 0.0;
  if (theta > 0.0) value += theta * tilted_pdf(y, p.tilted());
  if (theta < 1.0) value += (1.0 - theta) * beta_pdf(y, p.beta());
  return value;
}

double tilted_beta_mean(const TiltedBetaParams& p) {
  const double theta = p.theta();
  return theta * p.tilted().mu_t() + (1.0 - theta) * p.beta().mu_b();
}

double tilted_beta_variance(const TiltedBetaParams& p) {
  const double theta = p.theta();
  const double gap = p.tilted().mu_t() - p.beta().mu_b();
  return theta * tilted_variance(p.tilted()) + (1.0 - theta) * p.beta().variance() +
         theta * (1.0 - theta) * gap * gap;
}

double tilted_binomial_log_pmf(std::int64_t y, std::int64_t trials, const TiltedParams& p) {
  check_count(y, trials);
  // C(m,y) * B(y+1, m-y+1) == 1/(m+1)
  const double yd = static_cast<double>(y);
  const double md = static_cast<double>(trials);
  const double mu = p.mu_t();
  const double bracket = yd * (6.0 * mu - 3.0) + md * (2.0 - 3.0 * mu) + 1.0;
  return std::log(2.0 * bracket) - std::log((md + 1.0) * (md + 2.0));
}

double tbb_log_pmf(std::int64_t y, const TiltedBetaBinomialParams& p) {
  const std::int64_t trials = p.trials();
  check_count(y, trials);
  const double theta = p.mix().theta();
  const double log_w_tilted = theta > 0.0 ? std::log(theta) : kNegInf;
  const double log_w_beta = theta < 1.0 ? std::log1p(-theta) : kNegInf;
  const double tilted_part =
      log_w_tilted == kNegInf ? kNegInf
                              : log_w_tilted + tilted_binomial_log_pmf(y, trials, p.mix().tilted());
  const double beta_part =
      log_w_beta == kNegInf ? kNegInf
                            : log_w_beta + beta_binomial_log_pmf(y, trials, p.mix().beta());
  return log_sum_exp(tilted_part, beta_part);
}

double brb_log_pmf(std::int64_t y, std::int64_t trials, const BetaMeanDisp& p_beta, double theta) {
  const TiltedBetaBinomialParams params(TiltedBetaParams(TiltedParams(0.5), p_beta, theta), trials);
  return tbb_log_pmf(y, params);
}

double tbb_mean(const TiltedBetaBinomialParams& p) {
  return static_cast<double>(p.trials()) * tilted_beta_mean(p.mix());
}

double tbb_variance(const TiltedBetaBinomialParams& p) {
  const double m = static_cast<double>(p.trials());
  const double mean_p = tilted_beta_mean(p.mix());
  return m * ((m - 1.0) * tilted_beta_variance(p.mix()) + mean_p * (1.0 - mean_p));
}

double binomial_log_pmf(std::int64_t y, std::int64_t trials, double prob) {
  check_count(y, trials);
  if (!(prob >= 0.0 && prob <= 1.0)) {
    domain_fail("binomial probability must lie in [0, 1]", prob);
  }
  const double yd = static_cast<double>(y);
  const double fd = static_cast<double>(trials - y);
  const double success = y == 0 ? 0.0 : yd * std::log(prob);
  const double failure = y == trials ? 0.0 : fd * std::log1p(-prob);
  return log_choose(trials, y) + success + failure;
}

double sample_tilted(const TiltedParams& p, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double a = p.slope();
  for (;;) {
    const double u = unif(rng);
    if (u <= 0.0) continue;
    // Root of a*y^2 + (1-a)*y - u = 0 in the cancellation-free form.
    const double y = 2.0 * u / ((1.0 - a) + std::sqrt((1.0 - a) * (1.0 - a) + 4.0 * a * u));
    if (y > 0.0 && y < 1.0) return y;
  }
}

double sample_beta(const BetaMeanDisp& p, Rng& rng) {
  std::gamma_distribution<double> ga(p.shape_a(), 1.0);
  std::gamma_distribution<double> gb(p.shape_b(), 1.0);
  const double x = ga(rng);
  const double z = gb(rng);
  if (x + z > 0.0) return x / (x + z);
  // Both gammas underflowed (tiny shapes): the mass sits at the endpoints.
  std::bernoulli_distribution endpoint(p.mu_b());
  return endpoint(rng) ? 1.0 : 0.0;
}

double sample_tilted_beta(const TiltedBetaParams& p, Rng& rng) {
  std::bernoulli_distribution pick_tilted(p.theta());
  return pick_tilted(rng) ? sample_tilted(p.tilted(), rng) : sample_beta(p.beta(), rng);
}

std::int64_t sample_tbb(const TiltedBetaBinomialParams& p, Rng& rng) {
  const double prob = sample_tilted_beta(p.mix(), rng);
  std::binomial_distribution<std::int64_t> bin(p.trials(), prob);
  return bin(rng);
}

}  // namespace tiltedbb
