#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "property.hpp"
#include "seeds_fixture.hpp"
#include "tiltedbb/diagnostics.hpp"

using namespace tiltedbb;
using doctest::Approx;

namespace {

std::vector<double> normal_chain(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> d(mean, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<double> ar1(std::size_t n, double rho, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  double x = d(rng) / std::sqrt(1 - rho * rho);
  for (auto& out : v) {
    x = rho * x + d(rng);
    out = x;
  }
  return v;
}

using Spans = std::vector<std::span<const double>>;

// A posterior with every draw fixed at `theta`, for residual tests.
PosteriorSample point_posterior(const RegressionModel& m, const std::vector<double>& theta,
                                std::size_t rows = 40) {
  PosteriorSample p;
  p.names = m.parameter_names();
  ChainResult c;
  for (std::size_t r = 0; r < rows; ++r) c.draws.insert(c.draws.end(), theta.begin(), theta.end());
  c.deviance.assign(rows, -2.0 * m.log_likelihood(theta));
  p.chains.push_back(c);
  return p;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("geweke") {
    CHECK(geweke_z(std::vector<double>(500, 3.0)) == 0.0);
    CHECK_THROWS(geweke_z(std::vector<double>(99, 0.0)));
    CHECK_THROWS(geweke_z(normal_chain(500, 1), 0.6, 0.5));

    // Coverage of the nominal 95% band on iid chains. With 2000 replications
    // the binomial standard error is about 0.005, so a calibrated statistic
    // lands well inside [0.935, 0.965].
    int inside = 0;
    const int reps = 2000;
    for (int rep = 0; rep < reps; ++rep) {
      inside += std::abs(geweke_z(normal_chain(10000, 1000 + rep))) < 1.96;
    }
    const double coverage = static_cast<double>(inside) / reps;
    CHECK(coverage >= 0.935);
    CHECK(coverage <= 0.965);

    auto shifted = normal_chain(2000, 7);
    for (std::size_t i = 1000; i < shifted.size(); ++i) shifted[i] += 5.0;
    CHECK(std::abs(geweke_z(shifted)) > 10.0);

    // Swapping the window roles (equal fractions) flips the sign.
    const auto c = normal_chain(1000, 9);
    const std::vector<double> rev(c.rbegin(), c.rend());
    CHECK(geweke_z(rev, 0.3, 0.3) == Approx(-geweke_z(c, 0.3, 0.3)).epsilon(1e-12));

    const auto plot = geweke_plot(c, 10);
    CHECK(plot.size() == 10);
    CHECK(plot.front().first_kept == 0);
    CHECK(plot.front().z == Approx(geweke_z(c)));
  }

  TEST_CASE("gelman rubin") {
    const auto a = normal_chain(1000, 1);
    CHECK(gelman_rubin_r(Spans{a, a}) == 1.0);
    CHECK(gelman_rubin_r(Spans{a, a, a}) == 1.0);
    const auto b = normal_chain(10000, 2), c = normal_chain(10000, 3);
    const double r = gelman_rubin_r(Spans{b, c});
    CHECK(r < 1.05);
    CHECK(r >= 1.0 - 1e-9);
    const auto far = normal_chain(1000, 4, 10.0);
    CHECK(gelman_rubin_r(Spans{a, far}) > 2.0);
    CHECK_THROWS(gelman_rubin_r(Spans{a}));
    CHECK_THROWS(gelman_rubin_r(Spans{a, b}));

    proptest::for_all(50, 5, [&](proptest::Rng& rng, std::size_t) {
      const double scale = std::exp(proptest::uniform(rng, -3, 3));
      const double shift = proptest::uniform(rng, -100, 100);
      auto x = normal_chain(300, rng()), y = normal_chain(300, rng(), 0.2);
      const double before = gelman_rubin_r(Spans{x, y});
      CHECK(before >= 1.0 - 1e-9);
      for (auto* v : {&x, &y}) {
        for (double& e : *v) e = scale * e + shift;
      }
      CHECK(gelman_rubin_r(Spans{x, y}) == Approx(before).epsilon(1e-9));
    });

    const auto plot = gelman_rubin_plot(Spans{b, c}, 20);
    CHECK(plot.size() == 20);
    CHECK(plot.back().iterations == 10000);
  }

  TEST_CASE("mc error") {
    const auto a = normal_chain(10000, 11);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    double ss = 0.0;
    for (double x : a) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (a.size() - 1));
    CHECK(mc_error(a).naive == Approx(sd / 100.0).epsilon(1e-12));
    CHECK(mc_error(std::vector<double>(100, 2.0)).naive == 0.0);
    CHECK(mc_error(std::vector<double>(100, 2.0)).batch_means == 0.0);
    CHECK_THROWS(mc_error(std::vector<double>(29, 1.0)));

    const auto b = normal_chain(20000, 11);
    const double ratio = mc_error(std::span<const double>(b).first(10000)).naive / mc_error(b).naive;
    CHECK(ratio == Approx(std::sqrt(2.0)).epsilon(0.05));

    const auto corr = ar1(30000, 0.9, 12);
    CHECK(mc_error(corr).batch_means > mc_error(corr).naive);

    // Reported scale: sd 3.543 over 27000 retained draws.
    CHECK(3.543 / std::sqrt(27000.0) == Approx(0.0216).epsilon(0.01));
  }

  TEST_CASE("autocorrelation") {
    const auto a = normal_chain(10000, 21);
    const auto acf = autocorrelation(a, 20);
    CHECK(acf.size() == 21);
    CHECK(acf[0] == 1.0);
    for (std::size_t k = 1; k < acf.size(); ++k) CHECK(std::abs(acf[k]) < 3.0 / 100.0);
    CHECK(autocorrelation(ar1(100000, 0.9, 22), 5)[1] == Approx(0.9).epsilon(0.02 / 0.9));
    CHECK_THROWS(autocorrelation(a, 5000));
  }

  TEST_CASE("pearson residuals") {
    // A binomial observation exactly at its fitted mean has residual 0.
    Dataset one;
    one.add_row(5, 10, {});
    ModelSpec bin;
    bin.family = Family::Binomial;
    bin.mu_b_terms = {"1"};
    const RegressionModel m1(bin, one);
    const auto r1 = pearson_residuals(m1, point_posterior(m1, {0.0}));
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].residual == Approx(0.0));
    CHECK(r1[0].fitted_variance == Approx(2.5));

    CHECK_FALSE(r1[0].flagged);

    // Symmetric data around 1/2 with an intercept at 0: residuals cancel.
    Dataset sym;
    for (int y : {2, 8, 3, 7, 5}) sym.add_row(y, 10, {});
    ModelSpec bb = bin;
    bb.family = Family::BetaBinomial;
    bb.phi_terms = {"1"};
    const RegressionModel ms(bb, sym);
    const auto rs = pearson_residuals(ms, point_posterior(ms, {0.0, 1.0}));
    double sum = 0.0;
    for (const auto& r : rs) sum += r.residual;
    CHECK(std::abs(sum) < 1e-12);

    // Row permutation moves residuals with their observations.
    const auto data = fixture::seeds();
    const RegressionModel m(fixture::seeds_model(Family::TiltedBetaBinomial), data);
    const auto theta = fixture::published_tbb_means().stacked();
    const auto base = pearson_residuals(m, point_posterior(m, theta));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    const RegressionModel mp(m.spec(), data.permuted(order));
    const auto perm = pearson_residuals(mp, point_posterior(mp, theta));
    for (std::size_t i = 0; i < order.size(); ++i) {
      CHECK(perm[i].residual == Approx(base[order[i]].residual).epsilon(1e-12));
      CHECK(perm[i].index == i);
    }
  }

  TEST_CASE("residuals use the posterior mean of the moments") {
    Dataset d;
    d.add_row(3, 10, {});
    ModelSpec bin;
    bin.family = Family::Binomial;
    bin.mu_b_terms = {"1"};
    const RegressionModel m(bin, d);
    PosteriorSample p;
    p.names = m.parameter_names();
    ChainResult c;
    // Draws at logit 0.2 and 0.8 alternately.
    for (int r = 0; r < 40; ++r) {
      c.draws.push_back(r % 2 ? std::log(0.8 / 0.2) : std::log(0.2 / 0.8));
      c.deviance.push_back(0.0);
    }
    p.chains.push_back(c);
    const auto res = pearson_residuals(m, p);
    // E = 5, V = mean(10*0.2*0.8, 10*0.8*0.2) = 1.6, not 10*0.5*0.5 = 2.5.
    CHECK(res[0].fitted_mean == Approx(5.0));
    CHECK(res[0].fitted_variance == Approx(1.6));
    CHECK(res[0].residual == Approx(-2.0 / std::sqrt(1.6)));
  }

  TEST_CASE("diagnose report") {
    const auto data = fixture::seeds();
    const RegressionModel m(fixture::seeds_model(Family::Binomial), data);
    SamplerConfig cfg;
    cfg.iterations = 3000;
    cfg.burn_in = 500;
    cfg.thin = 5;
    cfg.chains = 1;
    const auto single = diagnose(m, run_chains(m, PriorSpec{}, cfg));
    REQUIRE(single.r_hat_omitted_reason.has_value());
    CHECK_FALSE(single.parameter("c1").r_hat.has_value());
    CHECK(single.residuals.size() == 21);
    cfg.chains = 3;
    const auto multi = diagnose(m, run_chains(m, PriorSpec{}, cfg));
    CHECK_FALSE(multi.r_hat_omitted_reason.has_value());
    for (const auto& p : multi.parameters) {
      REQUIRE(p.r_hat.has_value());
      CHECK(*p.r_hat >= 1.0 - 1e-9);
      CHECK(p.geweke_z_by_chain.size() == 3);
      CHECK(p.autocorrelation.front() == 1.0);
    }
  }
}
