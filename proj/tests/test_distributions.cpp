#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "property.hpp"
#include "tiltedbb/distributions.hpp"
#include "tiltedbb/oracle.hpp"

using namespace tiltedbb;
using doctest::Approx;

namespace {

TiltedBetaBinomialParams tbb(double mu_t, double mu_b, double phi, double theta, std::int64_t m) {
  return {TiltedBetaParams(TiltedParams(mu_t), BetaMeanDisp(mu_b, phi), theta), m};
}

double quad_log(const oracle::LogIntegrand& f) {
  return oracle::integrate_unit_interval_log(f, 1e-13).value;
}

}  // namespace

TEST_SUITE("distributions") {
  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(TiltedParams(0.3), std::domain_error);
    CHECK_THROWS_AS(TiltedParams(0.7), std::domain_error);
    CHECK_NOTHROW(TiltedParams(1.0 / 3.0));
    CHECK_NOTHROW(TiltedParams(2.0 / 3.0));
    CHECK_THROWS_AS(BetaMeanDisp(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(BetaMeanDisp(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(BetaMeanDisp(0.5, 0.0), std::domain_error);
    CHECK_THROWS_AS(BetaMeanDisp(0.5, std::nan("")), std::domain_error);
    CHECK_THROWS_AS(TiltedBetaParams(TiltedParams(0.5), BetaMeanDisp(0.5, 1), 1.5),
                    std::domain_error);
    CHECK_THROWS_AS(tbb(0.5, 0.5, 1, 0.5, 0), std::domain_error);
  }

  TEST_CASE("tilted pdf") {
    CHECK(tilted_pdf(0.5, TiltedParams(0.5)) == 1.0);
    CHECK(tilted_pdf(1e-12, TiltedParams(1.0 / 3.0)) == Approx(2.0).epsilon(1e-10));
    CHECK_THROWS_AS(tilted_pdf(0.0, TiltedParams(0.5)), std::domain_error);
    CHECK_THROWS_AS(tilted_pdf(1.0, TiltedParams(0.5)), std::domain_error);
    for (double mu_t : {1.0 / 3.0, 0.45, 2.0 / 3.0}) {
      CAPTURE(mu_t);
      const TiltedParams p(mu_t);
      const auto r = oracle::integrate_unit_interval(
          [&](const oracle::UnitPoint& u) { return tilted_pdf(u.y, p); }, 1e-12);
      CHECK(std::abs(r.value - 1.0) <= 1e-10);
    }
  }

  TEST_CASE("tilted moments and variance") {
    CHECK(tilted_moment(1, TiltedParams(0.45)) == Approx(0.45).epsilon(1e-15));
    CHECK(tilted_moment(2, TiltedParams(0.5)) == Approx(1.0 / 3.0).epsilon(1e-15));
    const auto dens = oracle::tilted_log_density(2.0 / 3.0);
    const double q3 = quad_log([&](const oracle::UnitPoint& u) { return 3 * u.log_y + dens(u); });
    CHECK(std::abs(tilted_moment(3, TiltedParams(2.0 / 3.0)) - q3) <= 1e-10);
    CHECK(tilted_variance(TiltedParams(0.5)) == Approx(1.0 / 12.0).epsilon(1e-15));
    CHECK(tilted_variance(TiltedParams(1.0 / 3.0)) == Approx(1.0 / 18.0).epsilon(1e-14));
    CHECK(tilted_variance(TiltedParams(2.0 / 3.0)) == Approx(1.0 / 18.0).epsilon(1e-14));
    // 1/18 also by quadrature of the central second moment at the lower bound.
    const auto lo = oracle::tilted_log_density(1.0 / 3.0);
    const double v = quad_log([&](const oracle::UnitPoint& u) {
      const double d = u.y - 1.0 / 3.0;
      return d == 0.0 ? -INFINITY : 2 * std::log(std::abs(d)) + lo(u);
    });
    CHECK(std::abs(v - 1.0 / 18.0) <= 1e-10);
  }

  TEST_CASE("beta binomial pmf") {
    CHECK(beta_binomial_log_pmf(0, 1, BetaMeanDisp(0.3, 2)) == Approx(std::log(0.7)).epsilon(1e-14));
    double mass = 0.0;
    for (int y = 0; y <= 25; ++y) mass += std::exp(beta_binomial_log_pmf(y, 25, BetaMeanDisp(0.2, 5)));
    CHECK(std::abs(mass - 1.0) <= 1e-12);
    const double q = oracle::mixed_binomial_pmf_by_quadrature(3, 10, oracle::beta_log_density(0.4, 3)).value;
    CHECK(std::abs(std::exp(beta_binomial_log_pmf(3, 10, BetaMeanDisp(0.4, 3))) - q) <= 1e-9);
    CHECK_THROWS_AS(beta_binomial_log_pmf(11, 10, BetaMeanDisp(0.4, 3)), std::domain_error);
    CHECK_THROWS_AS(beta_binomial_log_pmf(-1, 10, BetaMeanDisp(0.4, 3)), std::domain_error);
  }

  TEST_CASE("beta binomial stays accurate at extreme dispersion") {
    // phi -> infinity approaches the binomial; lgamma differences would lose
    // every digit here.
    for (double phi : {1e6, 1e8, 1e12}) {
      CAPTURE(phi);
      for (int y = 0; y <= 10; ++y) {
        const double bb = beta_binomial_log_pmf(y, 10, BetaMeanDisp(0.3, phi));
        CHECK(bb == Approx(binomial_log_pmf(y, 10, 0.3)).epsilon(1e-9 + 50.0 / phi));
      }
    }
    // Large trial counts go through the log-gamma path; mass must still be 1.
    double mass = 0.0;
    for (int y = 0; y <= 5000; ++y) mass += std::exp(beta_binomial_log_pmf(y, 5000, BetaMeanDisp(0.4, 7)));
    CHECK(std::abs(mass - 1.0) <= 1e-10);
  }

  TEST_CASE("tilted beta pdf and moments") {
    const BetaMeanDisp beta(0.3, 4);
    for (double y : {0.01, 0.2, 0.5, 0.93}) {
      CHECK(tilted_beta_pdf(y, TiltedBetaParams(TiltedParams(0.6), beta, 0.0)) == beta_pdf(y, beta));
      CHECK(tilted_beta_pdf(y, TiltedBetaParams(TiltedParams(0.5), beta, 1.0)) == Approx(1.0));
    }
    const TiltedBetaParams p(TiltedParams(0.6), BetaMeanDisp(0.3, 4), 0.25);
    const auto mass = oracle::integrate_unit_interval(
        [&](const oracle::UnitPoint& u) { return tilted_beta_pdf(u.y, p); }, 1e-12);
    CHECK(std::abs(mass.value - 1.0) <= 1e-10);

    const TiltedBetaParams q(TiltedParams(0.6), BetaMeanDisp(0.2, 3), 0.5);
    const auto dens = oracle::tilted_beta_log_density(0.6, 0.2, 3, 0.5);
    const double mean = quad_log([&](const oracle::UnitPoint& u) { return u.log_y + dens(u); });
    const double var = quad_log([&](const oracle::UnitPoint& u) {
      const double d = u.y - mean;
      return d == 0.0 ? -INFINITY : 2 * std::log(std::abs(d)) + dens(u);
    });
    CHECK(std::abs(tilted_beta_mean(q) - mean) <= 1e-10);
    CHECK(std::abs(tilted_beta_variance(q) - var) <= 1e-10);
    // The (mu_t + mu_b)^2 cross term would be off by theta(1-theta)*4*mu_t*mu_b.
    const double wrong = 0.5 * tilted_variance(TiltedParams(0.6)) +
                         0.5 * BetaMeanDisp(0.2, 3).variance() + 0.25 * 0.8 * 0.8;
    CHECK(std::abs(wrong - var) > 0.1);

    CHECK(tilted_beta_mean(TiltedBetaParams(TiltedParams(0.6), beta, 1.0)) == 0.6);
    CHECK(tilted_beta_mean(TiltedBetaParams(TiltedParams(0.6), beta, 0.0)) == 0.3);
    CHECK(tilted_beta_variance(TiltedBetaParams(TiltedParams(0.6), beta, 0.0)) ==
          Approx(0.3 * 0.7 / 5.0).epsilon(1e-15));
    CHECK(tilted_beta_variance(TiltedBetaParams(TiltedParams(0.5), beta, 1.0)) ==
          Approx(1.0 / 12.0).epsilon(1e-15));
  }

  TEST_CASE("tilted beta binomial pmf") {
    for (int y = 0; y <= 15; ++y) {
      CHECK(tbb_log_pmf(y, tbb(0.6, 0.35, 2, 0.0, 15)) ==
            beta_binomial_log_pmf(y, 15, BetaMeanDisp(0.35, 2)));
    }
    CHECK(tbb_log_pmf(0, tbb(0.5, 0.7, 3, 1.0, 1)) == Approx(std::log(0.5)).epsilon(1e-15));
    double mass = 0.0;
    for (int y = 0; y <= 20; ++y) mass += std::exp(tbb_log_pmf(y, tbb(0.4, 0.6, 5, 0.3, 20)));
    CHECK(std::abs(mass - 1.0) <= 1e-11);
    CHECK_THROWS_AS(tbb_log_pmf(21, tbb(0.4, 0.6, 5, 0.3, 20)), std::domain_error);
    for (int y = 0; y <= 8; ++y) {
      const double q = oracle::mixed_binomial_pmf_by_quadrature(
                           y, 8, oracle::tilted_beta_log_density(0.55, 0.35, 2.5, 0.4))
                           .value;
      CHECK(std::abs(std::exp(tbb_log_pmf(y, tbb(0.55, 0.35, 2.5, 0.4, 8))) - q) <= 1e-9);
    }
  }

  TEST_CASE("beta rectangular binomial pmf") {
    proptest::for_all(200, 11, [](proptest::Rng& rng, std::size_t) {
      const std::int64_t m = proptest::integer(rng, 1, 60);
      const std::int64_t y = proptest::integer(rng, 0, m);
      const double mu_b = proptest::uniform(rng, 0.01, 0.99);
      const double phi = std::exp(proptest::uniform(rng, -3, 8));
      const double theta = proptest::uniform(rng, 0, 1);
      CHECK(brb_log_pmf(y, m, BetaMeanDisp(mu_b, phi), theta) ==
            tbb_log_pmf(y, tbb(0.5, mu_b, phi, theta, m)));
    });
    for (int y = 0; y <= 4; ++y) {
      CHECK(std::exp(brb_log_pmf(y, 4, BetaMeanDisp(0.2, 3), 1.0)) == Approx(0.2).epsilon(1e-14));
    }
    double mass = 0.0;
    for (int y = 0; y <= 12; ++y) mass += std::exp(brb_log_pmf(y, 12, BetaMeanDisp(0.25, 8), 0.6));
    CHECK(std::abs(mass - 1.0) <= 1e-11);
  }

  TEST_CASE("tilted beta binomial moments") {
    CHECK(tbb_mean(tbb(0.5, 0.2, 3, 0.3, 10)) == Approx(2.9).epsilon(1e-14));
    CHECK(tbb_mean(tbb(0.5, 0.2, 3, 0.0, 10)) == Approx(2.0).epsilon(1e-14));
    const auto one = tbb(0.45, 0.2, 3, 0.3, 1);
    CHECK(tbb_mean(one) == Approx(tilted_beta_mean(one.mix())).epsilon(1e-15));
    const double e = tilted_beta_mean(one.mix());
    CHECK(tbb_variance(one) == Approx(e * (1 - e)).epsilon(1e-15));
    CHECK(std::abs(tbb_variance(tbb(0.5, 0.3, 1e8, 0.0, 10)) - 2.1) <= 1e-4);

    const auto p = tbb(0.4, 0.6, 5, 0.3, 20);
    auto lp = [&](std::int64_t y) { return tbb_log_pmf(y, p); };
    const auto m1 = oracle::pmf_moment_by_summation(lp, 20, 1);
    const auto m2 = oracle::pmf_moment_by_summation(lp, 20, 2);
    CHECK(std::abs(tbb_mean(p) - m1.value) <= 1e-9);
    CHECK(std::abs(tbb_variance(p) - (m2.value - m1.value * m1.value)) <= 1e-9);

    // Monte Carlo: mean of (m=10, theta=0.3, mu_t=0.5, mu_b=0.2) is 2.9.
    Rng rng(99);
    const auto mc = oracle::monte_carlo_moments(
        [&](Rng& r) { return static_cast<double>(sample_tbb(tbb(0.5, 0.2, 3, 0.3, 10), r)); },
        1'000'000, rng);
    CHECK(std::abs(mc.mean - 2.9) <= 3 * mc.standard_error);
  }

  TEST_CASE("property: pmfs are probabilities, overdispersed, and reduce correctly") {
    proptest::for_all(300, 2024, [](proptest::Rng& rng, std::size_t) {
      const std::int64_t m = proptest::integer(rng, 1, 80);
      const double mu_t = proptest::uniform(rng, 1.0 / 3.0, 2.0 / 3.0);
      const double mu_b = proptest::uniform(rng, 0.02, 0.98);
      const double phi = std::exp(proptest::uniform(rng, -2.3, 6.9));
      const double theta = proptest::uniform(rng, 0, 1);
      const auto p = tbb(mu_t, mu_b, phi, theta, m);
      double mass = 0.0;
      for (std::int64_t y = 0; y <= m; ++y) {
        const double pr = std::exp(tbb_log_pmf(y, p));
        CHECK(pr >= 0.0);
        CHECK(pr <= 1.0);
        mass += pr;
        CHECK(std::abs(std::exp(tbb_log_pmf(y, tbb(mu_t, mu_b, phi, 0.0, m))) -
                       std::exp(beta_binomial_log_pmf(y, m, BetaMeanDisp(mu_b, phi)))) <= 1e-13);
      }
      CHECK(std::abs(mass - 1.0) <= 1e-10);
      const double e = tilted_beta_mean(p.mix());
      CHECK(tbb_variance(p) >= m * e * (1 - e) - 1e-12);
      CHECK(tilted_pdf(proptest::uniform(rng, 1e-9, 1 - 1e-9), TiltedParams(mu_t)) >= 0.0);
    });
  }

  TEST_CASE("sample_tilted") {
    Rng rng(5);
    // Kolmogorov-Smirnov against U(0,1) at mu_t = 1/2.
    std::vector<double> u(100000);
    for (auto& v : u) v = sample_tilted(TiltedParams(0.5), rng);
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double n = static_cast<double>(u.size());
      d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
    }
    CHECK(d < 1.36 / std::sqrt(100000.0));

    const TiltedParams p(0.4);
    double lo = 1.0, hi = 0.0;
    const auto mc = oracle::monte_carlo_moments(
        [&](Rng& r) {
          const double y = sample_tilted(p, r);
          lo = std::min(lo, y);
          hi = std::max(hi, y);
          return y;
        },
        1'000'000, rng);
    CHECK(std::abs(mc.mean - 0.4) <= 3 * std::sqrt(tilted_variance(p) / 1e6));
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    for (double mu_t : {1.0 / 3.0, 2.0 / 3.0}) {
      for (int i = 0; i < 10000; ++i) {
        const double y = sample_tilted(TiltedParams(mu_t), rng);
        REQUIRE(y > 0.0);
        REQUIRE(y < 1.0);
      }
    }
  }

  TEST_CASE("sample_beta and sample_tilted_beta moments") {
    Rng rng(8);
    const BetaMeanDisp b(0.3, 4);
    const auto mc = oracle::monte_carlo_moments([&](Rng& r) { return sample_beta(b, r); }, 200000, rng);
    CHECK(std::abs(mc.mean - 0.3) <= 3 * mc.standard_error);
    CHECK(mc.variance == Approx(b.variance()).epsilon(0.02));
    const TiltedBetaParams p(TiltedParams(0.6), BetaMeanDisp(0.2, 3), 0.5);
    const auto mt = oracle::monte_carlo_moments([&](Rng& r) { return sample_tilted_beta(p, r); },
                                                200000, rng);
    CHECK(std::abs(mt.mean - tilted_beta_mean(p)) <= 3 * mt.standard_error);
    CHECK(mt.variance == Approx(tilted_beta_variance(p)).epsilon(0.02));
  }

  TEST_CASE("sample_tbb empirical pmf") {
    const auto p = tbb(0.45, 0.3, 4, 0.2, 10);
    Rng rng(17);
    std::vector<double> counts(11, 0.0);
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
      const auto y = sample_tbb(p, rng);
      REQUIRE(y >= 0);
      REQUIRE(y <= 10);
      counts[static_cast<std::size_t>(y)] += 1.0;
    }
    for (int y = 0; y <= 10; ++y) {
      const double pr = std::exp(tbb_log_pmf(y, p));
      CHECK(std::abs(counts[y] / n - pr) < 4 * std::sqrt(pr * (1 - pr) / n));
    }
    const auto big = tbb(0.5, 0.3, 1e9, 0.0, 50);
    const auto mc = oracle::monte_carlo_moments(
        [&](Rng& r) { return static_cast<double>(sample_tbb(big, r)); }, 100000, rng);
    CHECK(std::abs(mc.mean - 15.0) <= 3 * mc.standard_error);
    for (int i = 0; i < 1000; ++i) {
      const auto y = sample_tbb(tbb(0.6, 0.3, 2, 0.5, 1), rng);
      REQUIRE((y == 0 || y == 1));
    }
  }

  TEST_CASE("samplers are deterministic for a fixed seed") {
    Rng a(123), b(123);
    const auto p = tbb(0.6, 0.3, 2, 0.5, 30);
    for (int i = 0; i < 100; ++i) CHECK(sample_tbb(p, a) == sample_tbb(p, b));
  }
}
