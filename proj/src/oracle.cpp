#include "tiltedbb/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace tiltedbb::oracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfPi = std::numbers::pi / 2.0;
// t range of the substitution; at |t| = 12 the endpoint distance is exp(-1.3e5).
constexpr double kTMax = 12.0;
constexpr std::size_t kInitialPanels = 64;

UnitPoint unit_point(double t) {
  const double z = kHalfPi * std::sinh(t);
  UnitPoint p{};
  if (z >= 0.0) {
    const double e = std::exp(-z);
    p.y = 1.0 / (1.0 + e);
    p.one_minus_y = e / (1.0 + e);
    p.log_y = -std::log1p(e);
    p.log1m_y = -z - std::log1p(e);
  } else {
    const double e = std::exp(z);
    p.y = e / (1.0 + e);
    p.one_minus_y = 1.0 / (1.0 + e);
    p.log_y = z - std::log1p(e);
    p.log1m_y = -std::log1p(e);
  }
  return p;
}

// log dy/dt
double log_jacobian(double t, const UnitPoint& p) {
  return p.log_y + p.log1m_y + std::log(kHalfPi * std::cosh(t));
}

struct Panel {
  double a, b;
  double fa, fm, fb;
  double whole;
};

template <typename Transformed>
QuadratureResult adaptive_simpson(const Transformed& g, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("quadrature tolerance must be positive");
  }
  const double span = 2.0 * kTMax;
  std::vector<Panel> stack;
  stack.reserve(256);
  const double h0 = span / static_cast<double>(kInitialPanels);
  double left_value = g(-kTMax);
  for (std::size_t i = 0; i < kInitialPanels; ++i) {
    const double a = -kTMax + h0 * static_cast<double>(i);
    const double b = i + 1 == kInitialPanels ? kTMax : a + h0;
    const double m = 0.5 * (a + b);
    const double fm = g(m);
    const double fb = g(b);
    stack.push_back({a, b, left_value, fm, fb, (b - a) / 6.0 * (left_value + 4.0 * fm + fb)});
    left_value = fb;
  }

  QuadratureResult out;
  std::size_t live = stack.size();
  // Sum accepted panels in a fixed order so results are reproducible.
  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m);
    const double rm = 0.5 * (m + p.b);
    const double flm = g(lm);
    const double frm = g(rm);
    const double left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    const double right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    const double refined = left + right;
    const double diff = refined - p.whole;
    const double local_tol = tol * (p.b - p.a) / span;
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(refined);
    if (std::abs(diff) <= 15.0 * std::max(local_tol, floor) || (p.b - p.a) < 1e-12) {
      out.value += refined + diff / 15.0;
      out.estimated_error += std::abs(diff) / 15.0;
      ++out.panels_used;
      continue;
    }
    ++live;
    if (live > kMaxPanels) {
      std::ostringstream os;
      os << "quadrature did not reach tolerance " << tol << " within " << kMaxPanels
         << " panels";
      throw QuadratureError(os.str());
    }
    stack.push_back({m, p.b, p.fm, frm, p.fb, right});
    stack.push_back({p.a, m, p.fa, flm, p.fm, left});
  }
  return out;
}

double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

QuadratureResult integrate_unit_interval_log(const LogIntegrand& log_f, double tol) {
  auto g = [&](double t) {
    const UnitPoint p = unit_point(t);
    const double lf = log_f(p);
    if (lf == kNegInf) return 0.0;
    return std::exp(lf + log_jacobian(t, p));
  };
  return adaptive_simpson(g, tol);
}

QuadratureResult integrate_unit_interval(const Integrand& f, double tol) {
  auto g = [&](double t) {
    const UnitPoint p = unit_point(t);
    if (!(p.y > 0.0 && p.y < 1.0)) return 0.0;
    const double jac = std::exp(log_jacobian(t, p));
    if (jac == 0.0) return 0.0;
    return f(p) * jac;
  };
  return adaptive_simpson(g, tol);
}

SummationResult pmf_moment_by_summation(const std::function<double(std::int64_t)>& log_pmf,
                                        std::int64_t trials, int order) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("pmf_moment_by_summation: order must be 1 or 2");
  }
  SummationResult out;
  for (std::int64_t y = 0; y <= trials; ++y) {
    const double mass = std::exp(log_pmf(y));
    const double yd = static_cast<double>(y);
    out.mass += mass;
    out.value += (order == 1 ? yd : yd * yd) * mass;
  }
  out.mass_ok = std::abs(out.mass - 1.0) <= 1e-8;
  return out;
}

double pmf_mass_by_summation(const std::function<double(std::int64_t)>& log_pmf,
                             std::int64_t trials) {
  double mass = 0.0;
  for (std::int64_t y = 0; y <= trials; ++y) {
    mass += std::exp(log_pmf(y));
  }
  return mass;
}

QuadratureResult mixed_binomial_pmf_by_quadrature(std::int64_t y, std::int64_t trials,
                                                  const LogIntegrand& mixing_log_pdf,
                                                  double tol) {
  if (trials < 1 || y < 0 || y > trials) {
    throw std::invalid_argument("mixed_binomial_pmf_by_quadrature: need 0 <= y <= m, m >= 1");
  }
  const double yd = static_cast<double>(y);
  const double fd = static_cast<double>(trials - y);
  const double log_coef = std::lgamma(static_cast<double>(trials) + 1.0) -
                          std::lgamma(yd + 1.0) - std::lgamma(fd + 1.0);
  auto integrand = [&](const UnitPoint& p) {
    const double lg = mixing_log_pdf(p);
    if (lg == kNegInf) return kNegInf;
    return log_coef + yd * p.log_y + fd * p.log1m_y + lg;
  };
  return integrate_unit_interval_log(integrand, tol);
}

LogIntegrand tilted_log_density(double mu_t) {
  return [mu_t](const UnitPoint& p) {
    const double value = 3.0 * (2.0 * mu_t - 1.0) * (p.y - p.one_minus_y) + 1.0;
    return value > 0.0 ? std::log(value) : kNegInf;
  };
}

LogIntegrand beta_log_density(double mu_b, double phi) {
  const double alpha = mu_b * phi;
  const double beta = (1.0 - mu_b) * phi;
  const double log_norm = -lbeta(alpha, beta);
  return [=](const UnitPoint& p) {
    return log_norm + (alpha - 1.0) * p.log_y + (beta - 1.0) * p.log1m_y;
  };
}

LogIntegrand tilted_beta_log_density(double mu_t, double mu_b, double phi, double theta) {
  auto tilted = tilted_log_density(mu_t);
  auto beta = beta_log_density(mu_b, phi);
  return [=](const UnitPoint& p) {
    const double a = theta > 0.0 ? std::log(theta) + tilted(p) : kNegInf;
    const double b = theta < 1.0 ? std::log(1.0 - theta) + beta(p) : kNegInf;
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  };
}

MonteCarloMoments monte_carlo_moments(const std::function<double(Rng&)>& draw, std::size_t n,
                                      Rng& rng) {
  if (n < 2) {
    throw std::invalid_argument("monte_carlo_moments needs at least two draws");
  }
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = draw(rng);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  MonteCarloMoments out;
  out.mean = mean;
  out.variance = m2 / static_cast<double>(n - 1);
  out.standard_error = std::sqrt(out.variance / static_cast<double>(n));
  out.draws = n;
  return out;
}

}  // namespace tiltedbb::oracle
