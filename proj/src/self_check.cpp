#include "tiltedbb/self_check.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tiltedbb/oracle.hpp"

namespace tiltedbb {

namespace {

constexpr double kEps = 1e-4;
constexpr std::int64_t kTrials = 12;
constexpr double kQuadTol = 1e-13;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct GridPoint {
  double mu_t;
  double theta;
  double phi;
  double mu_b;

  TiltedBetaParams mix() const {
    return TiltedBetaParams(TiltedParams(mu_t), BetaMeanDisp(mu_b, phi), theta);
  }
  TiltedBetaBinomialParams tbb(std::int64_t m = kTrials) const { return {mix(), m}; }
  std::string str() const {
    std::ostringstream os;
    os << std::setprecision(6) << "mu_t=" << mu_t << " theta=" << theta << " phi=" << phi
       << " mu_b=" << mu_b;
    return os.str();
  }
};

std::vector<GridPoint> make_grid(std::initializer_list<double> phis) {
  std::vector<GridPoint> grid;
  for (double mu_t : {TiltedParams::kLower + kEps, 0.5, TiltedParams::kUpper - kEps}) {
    for (double theta : {0.0, kEps, 1.0 - kEps, 1.0}) {
      for (double phi : phis) grid.push_back({mu_t, theta, phi, 0.3});
    }
  }
  return grid;
}

class Accumulator {
 public:
  Accumulator(std::string name, double tolerance) {
    result_.name = std::move(name);
    result_.tolerance = tolerance;
    result_.passed = true;
  }

  void record(double error, const std::string& where) {
    ++result_.cases;
    if (!(error <= result_.worst_error) || result_.cases == 1) {
      if (!(error <= result_.worst_error)) {
        result_.worst_error = error;
        result_.detail = where;
      } else if (result_.detail.empty()) {
        result_.detail = where;
      }
    }
    if (!(error <= result_.tolerance)) result_.passed = false;
  }

  template <typename Body>
  CheckResult run(Body&& body) && {
    try {
      body(*this);
    } catch (const std::exception& e) {
      result_.passed = false;
      result_.detail = std::string("exception: ") + e.what();
    }
    return std::move(result_);
  }

 private:
  CheckResult result_;
};

double integrate(const oracle::Integrand& f) {
  return oracle::integrate_unit_interval(f, kQuadTol).value;
}

double integrate_log(const oracle::LogIntegrand& f) {
  return oracle::integrate_unit_interval_log(f, kQuadTol).value;
}

}  // namespace

ClosedForms library_closed_forms() {
  ClosedForms f;
  f.tilted_pdf = [](double y, const TiltedParams& p) { return tilted_pdf(y, p); };
  f.tilted_moment = [](int n, const TiltedParams& p) { return tilted_moment(n, p); };
  f.tilted_variance = [](const TiltedParams& p) { return tilted_variance(p); };
  f.tilted_beta_pdf = [](double y, const TiltedBetaParams& p) { return tilted_beta_pdf(y, p); };
  f.tilted_beta_mean = [](const TiltedBetaParams& p) { return tilted_beta_mean(p); };
  f.tilted_beta_variance = [](const TiltedBetaParams& p) { return tilted_beta_variance(p); };
  f.beta_binomial_log_pmf = [](std::int64_t y, std::int64_t m, const BetaMeanDisp& p) {
    return beta_binomial_log_pmf(y, m, p);
  };
  f.tbb_log_pmf = [](std::int64_t y, const TiltedBetaBinomialParams& p) {
    return tbb_log_pmf(y, p);
  };
  f.brb_log_pmf = [](std::int64_t y, std::int64_t m, const BetaMeanDisp& p, double theta) {
    return brb_log_pmf(y, m, p, theta);
  };
  f.tbb_mean = [](const TiltedBetaBinomialParams& p) { return tbb_mean(p); };
  f.tbb_variance = [](const TiltedBetaBinomialParams& p) { return tbb_variance(p); };
  return f;
}

bool CheckReport::all_passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

CheckReport run_self_check(const ClosedForms& forms) {
  CheckReport report;
  const auto grid = make_grid({0.1, 1.0, 100.0});
  const auto pdf_grid = make_grid({1.0, 10.0, 100.0});
  report.grid_size = grid.size();
  auto& out = report.checks;

  out.push_back(Accumulator("tilted pdf integrates to 1", 1e-10).run([&](Accumulator& acc) {
    for (double mu_t : {TiltedParams::kLower, TiltedParams::kLower + kEps, 0.45, 0.5,
                        TiltedParams::kUpper - kEps, TiltedParams::kUpper}) {
      const TiltedParams p(mu_t);
      const double mass = integrate([&](const oracle::UnitPoint& u) {
        return forms.tilted_pdf(u.y, p);
      });
      acc.record(std::abs(mass - 1.0), "mu_t=" + std::to_string(mu_t));
    }
  }));

  out.push_back(Accumulator("tilted moments and variance vs quadrature", 1e-10)
                    .run([&](Accumulator& acc) {
    for (double mu_t : {TiltedParams::kLower, 0.45, 0.5, TiltedParams::kUpper}) {
      const TiltedParams p(mu_t);
      const auto density = oracle::tilted_log_density(mu_t);
      for (int n = 1; n <= 4; ++n) {
        const double q = integrate_log([&](const oracle::UnitPoint& u) {
          return n * u.log_y + density(u);
        });
        acc.record(std::abs(forms.tilted_moment(n, p) - q),
                   "n=" + std::to_string(n) + " mu_t=" + std::to_string(mu_t));
      }
      const double mean = integrate_log([&](const oracle::UnitPoint& u) {
        return u.log_y + density(u);
      });
      const double var = integrate_log([&](const oracle::UnitPoint& u) {
        const double d = u.y - mean;
        return d == 0.0 ? kNegInf : 2.0 * std::log(std::abs(d)) + density(u);
      });
      acc.record(std::abs(forms.tilted_variance(p) - var), "variance mu_t=" + std::to_string(mu_t));
    }
  }));

  out.push_back(Accumulator("tilted beta pdf integrates to 1", 1e-10).run([&](Accumulator& acc) {
    for (const auto& g : pdf_grid) {
      const auto mix = g.mix();
      const double mass = integrate([&](const oracle::UnitPoint& u) {
        return forms.tilted_beta_pdf(u.y, mix);
      });
      acc.record(std::abs(mass - 1.0), g.str());
    }
  }));

  out.push_back(Accumulator("tilted beta mean and variance vs quadrature", 1e-9)
                    .run([&](Accumulator& acc) {
    for (const auto& g : grid) {
      const auto density = oracle::tilted_beta_log_density(g.mu_t, g.mu_b, g.phi, g.theta);
      const double mean = integrate_log([&](const oracle::UnitPoint& u) {
        return u.log_y + density(u);
      });
      const double var = integrate_log([&](const oracle::UnitPoint& u) {
        const double d = u.y - mean;
        return d == 0.0 ? kNegInf : 2.0 * std::log(std::abs(d)) + density(u);
      });
      const auto mix = g.mix();
      acc.record(std::abs(forms.tilted_beta_mean(mix) - mean), "mean " + g.str());
      acc.record(std::abs(forms.tilted_beta_variance(mix) - var), "variance " + g.str());
    }
  }));

  out.push_back(Accumulator("BB, TBB and BRB pmfs sum to 1", 1e-10).run([&](Accumulator& acc) {
    for (const auto& g : grid) {
      const auto tbb = g.tbb();
      const BetaMeanDisp beta(g.mu_b, g.phi);
      const double bb_mass = oracle::pmf_mass_by_summation(
          [&](std::int64_t y) { return forms.beta_binomial_log_pmf(y, kTrials, beta); }, kTrials);
      const double tbb_mass = oracle::pmf_mass_by_summation(
          [&](std::int64_t y) { return forms.tbb_log_pmf(y, tbb); }, kTrials);
      const double brb_mass = oracle::pmf_mass_by_summation(
          [&](std::int64_t y) { return forms.brb_log_pmf(y, kTrials, beta, g.theta); }, kTrials);
      acc.record(std::abs(bb_mass - 1.0), "BB " + g.str());
      acc.record(std::abs(tbb_mass - 1.0), "TBB " + g.str());
      acc.record(std::abs(brb_mass - 1.0), "BRB " + g.str());
    }
  }));

  out.push_back(Accumulator("TBB mean and variance vs pmf summation", 1e-9)
                    .run([&](Accumulator& acc) {
    for (const auto& g : grid) {
      const auto tbb = g.tbb();
      auto log_pmf = [&](std::int64_t y) { return forms.tbb_log_pmf(y, tbb); };
      const auto first = oracle::pmf_moment_by_summation(log_pmf, kTrials, 1);
      const auto second = oracle::pmf_moment_by_summation(log_pmf, kTrials, 2);
      acc.record(std::abs(forms.tbb_mean(tbb) - first.value), "mean " + g.str());
      acc.record(std::abs(forms.tbb_variance(tbb) - (second.value - first.value * first.value)),
                 "variance " + g.str());
    }
  }));

  out.push_back(Accumulator("reductions TBB(theta=0)=BB, TBB(mu_t=1/2)=BRB, BRB(theta=0)=BB",
                            1e-13)
                    .run([&](Accumulator& acc) {
    for (const auto& g : grid) {
      const BetaMeanDisp beta(g.mu_b, g.phi);
      const TiltedBetaBinomialParams no_tilt(
          TiltedBetaParams(TiltedParams(g.mu_t), beta, 0.0), kTrials);
      const TiltedBetaBinomialParams flat(TiltedBetaParams(TiltedParams(0.5), beta, g.theta),
                                          kTrials);
      for (std::int64_t y = 0; y <= kTrials; ++y) {
        const double bb = std::exp(forms.beta_binomial_log_pmf(y, kTrials, beta));
        acc.record(std::abs(std::exp(forms.tbb_log_pmf(y, no_tilt)) - bb), "TBB/BB " + g.str());
        acc.record(std::abs(std::exp(forms.tbb_log_pmf(y, flat)) -
                            std::exp(forms.brb_log_pmf(y, kTrials, beta, g.theta))),
                   "TBB/BRB " + g.str());
        acc.record(std::abs(std::exp(forms.brb_log_pmf(y, kTrials, beta, 0.0)) - bb),
                   "BRB/BB " + g.str());
      }
    }
  }));

  out.push_back(Accumulator("TBB pmf vs compound-binomial quadrature", 1e-9)
                    .run([&](Accumulator& acc) {
    for (const auto& g : grid) {
      const auto tbb = g.tbb();
      const auto mixing = oracle::tilted_beta_log_density(g.mu_t, g.mu_b, g.phi, g.theta);
      for (std::int64_t y = 0; y <= kTrials; ++y) {
        const double q = oracle::mixed_binomial_pmf_by_quadrature(y, kTrials, mixing).value;
        acc.record(std::abs(std::exp(forms.tbb_log_pmf(y, tbb)) - q),
                   "y=" + std::to_string(y) + " " + g.str());
      }
    }
  }));

  out.push_back(Accumulator("TBB variance never below plug-in binomial", 1e-12)
                    .run([&](Accumulator& acc) {
    for (const auto& g : grid) {
      const auto tbb = g.tbb();
      const auto first = oracle::pmf_moment_by_summation(
          [&](std::int64_t y) { return forms.tbb_log_pmf(y, tbb); }, kTrials, 1);
      const double p = first.value / static_cast<double>(kTrials);
      const double binomial = static_cast<double>(kTrials) * p * (1.0 - p);
      acc.record(std::max(0.0, binomial - forms.tbb_variance(tbb)), g.str());
    }
  }));

  return report;
}

void write_check_report(std::ostream& os, const CheckReport& report) {
  os << "parameter grid: " << report.grid_size << " combinations\n";
  for (const auto& c : report.checks) {
    os << (c.passed ? "PASS  " : "FAIL  ") << c.name << "  [" << c.cases
       << " cases, worst error " << std::scientific << std::setprecision(2) << c.worst_error
       << " <= " << c.tolerance << "]";
    os.unsetf(std::ios::floatfield);
    if (!c.passed && !c.detail.empty()) os << "\n      worst case: " << c.detail;
    os << '\n';
  }
  os << (report.all_passed() ? "all checks passed\n" : "some checks FAILED\n");
}

}  // namespace tiltedbb
