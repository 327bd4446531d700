#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "twincf/error.hpp"
#include "twincf/rng.hpp"
#include "twincf/stats.hpp"

using namespace twincf;

namespace {

std::vector<double> draws(std::size_t n, std::uint32_t stream, double shift = 0.0, bool discrete = false) {
  NoiseStream s({77, stream, 0});
  std::vector<double> v(n);
  for (auto& x : v) x = discrete ? static_cast<double>(s.below(5)) : s.normal() + shift;
  return v;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("kolmogorov distribution") {
    CHECK(kolmogorov_quantile(0.05) == doctest::Approx(1.35810).epsilon(1e-5));
    CHECK(kolmogorov_quantile(0.01) == doctest::Approx(1.62762).epsilon(1e-5));
    for (double x : {0.3, 0.59, 0.61, 1.0, 2.0}) CHECK(kolmogorov_cdf(x) + kolmogorov_sf(x) == doctest::Approx(1.0));
    CHECK(kolmogorov_sf(1.35810) == doctest::Approx(0.05).epsilon(1e-4));
    CHECK_THROWS_AS(kolmogorov_quantile(0.0), DomainError);
  }

  TEST_CASE("ks statistic against the ecdf oracle, with ties") {
    for (std::uint32_t k = 0; k < 50; ++k) {
      const bool ties = k % 2 == 0;
      const auto x = draws(5 + k % 17, 2 * k, 0.0, ties), y = draws(3 + k % 23, 2 * k + 1, 0.3, ties);
      CHECK(ks_statistic(x, y) == oracle::ks(x, y));
      CHECK(ks_statistic_bruteforce(x, y) == oracle::ks(x, y));
    }
  }

  TEST_CASE("ks test decision and p-value") {
    const auto x = draws(500, 1), y = draws(500, 2, 0.5);
    const auto r = ks_two_sample(x, y, 0.05);
    CHECK(r.rejects());
    CHECK(r.p_value < 1e-6);
    CHECK(r.critical_value == doctest::Approx(1.35810 * std::sqrt(2.0 / 500)).epsilon(1e-4));
    const auto same = ks_two_sample(x, x, 0.05);
    CHECK(same.statistic == 0.0);
    CHECK_FALSE(same.rejects());
  }

  TEST_CASE("energy distance") {
    const auto x = draws(300, 3), y = draws(200, 4, 1.0);
    double xy = 0, xx = 0, yy = 0;
    for (double a : x)
      for (double b : y) xy += std::abs(a - b);
    for (double a : x)
      for (double b : x) xx += std::abs(a - b);
    for (double a : y)
      for (double b : y) yy += std::abs(a - b);
    const double ref = 2 * xy / (x.size() * y.size()) - xx / (x.size() * x.size()) - yy / (y.size() * y.size());
    CHECK(energy_distance(x, y) == doctest::Approx(ref).epsilon(1e-10));
    CHECK(energy_distance_bruteforce(x, y, Exec::serial) == energy_distance_bruteforce(x, y, Exec::parallel));
    CHECK(std::abs(energy_distance(x, x)) < 1e-12);
    const auto t = energy_test(x, y, 199, 1);
    CHECK(t.p_value == doctest::Approx(1.0 / 200));
  }

  TEST_CASE("anderson-darling") {
    const auto x = draws(80, 5), y = draws(90, 6);
    const auto a = anderson_darling_two_sample(x, y, 199, 3, Exec::serial);
    const auto b = anderson_darling_two_sample(x, y, 199, 3, Exec::parallel);
    CHECK(a.statistic == b.statistic);
    CHECK(a.p_value == b.p_value);
    CHECK(a.p_value > 0.01);
    const auto z = draws(90, 7, 1.0);
    CHECK(anderson_darling_two_sample(x, z, 199, 3).p_value == doctest::Approx(1.0 / 200));
    const auto t1 = draws(60, 8, 0, true), t2 = draws(60, 9, 0, true);
    CHECK(std::isfinite(anderson_darling_statistic(t1, t2)));
  }

  TEST_CASE("conditional mmd separates shifted conditionals") {
    PairedSample a{1, {}, {}}, b{1, {}, {}};
    NoiseStream s({4, 0, 0});
    for (int i = 0; i < 150; ++i) {
      const double xa = s.uniform(), xb = s.uniform();
      a.x.push_back(xa);
      a.y.push_back(xa + 0.3 * s.normal());
      b.x.push_back(xb);
      b.y.push_back(xb + 0.3 * s.normal() + (xb > 0.5 ? 1.0 : 0.0));
    }
    const auto r = conditional_mmd_test(a, b, MedianBandwidth{}, 99, 1);
    CHECK(r.p_value <= 0.02);
    CHECK(conditional_mmd(a, a, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("calibration regression against closed-form OLS") {
    const auto x = draws(200, 10), e = draws(200, 11);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.5 + 0.7 * x[i] + 0.2 * e[i];
    const auto fit = calibration_regression(x, y);
    const auto [b0, b1] = oracle::ols(x, y);
    CHECK(std::abs(fit.beta0 - b0) < 1e-10);
    CHECK(std::abs(fit.beta1 - b1) < 1e-10);
    double mse = 0;
    for (std::size_t i = 0; i < y.size(); ++i) mse += (y[i] - x[i]) * (y[i] - x[i]);
    CHECK(fit.rmspe == doctest::Approx(std::sqrt(mse / y.size())));

    std::vector<double> exact(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) exact[i] = 2 * x[i] + 3;
    const auto f2 = calibration_regression(x, exact);
    CHECK(f2.beta0 == doctest::Approx(3.0));
    CHECK(f2.beta1 == doctest::Approx(2.0));
    CHECK(f2.residual_sd < 1e-10);
    const std::vector<double> flat(5, 1.0);
    CHECK_THROWS_AS(calibration_regression(flat, flat), DomainError);
  }

  TEST_CASE("interval coverage by stratum") {
    const std::vector<Interval> iv{{0, 1}, {0, 1}, {0, 1}, {0, 1}};
    const std::vector<double> y{0.5, 2.0, 0.1, -1.0};
    const std::vector<int> s{0, 0, 1, 1};
    const auto c = interval_coverage(iv, y, s);
    CHECK(c.rate == 0.5);
    REQUIRE(c.per_stratum.size() == 2);
    CHECK(c.per_stratum[0] == 0.5);
  }

  TEST_CASE("bootstrap se of a mean") {
    const auto x = draws(400, 12);
    auto est = [&](std::span<const std::size_t> idx) {
      double s = 0;
      for (auto i : idx) s += x[i];
      return s / idx.size();
    };
    const double se = bootstrap_se(x.size(), est, 400, 1);
    CHECK(se == doctest::Approx(std::sqrt(oracle::var(x) / x.size())).epsilon(0.12));
    CHECK(bootstrap_se(x.size(), est, 50, 1, Exec::serial) == bootstrap_se(x.size(), est, 50, 1, Exec::parallel));
    auto bad = [](std::span<const std::size_t>) -> double { throw Error("boom"); };
    CHECK_THROWS_WITH(bootstrap_se(10, bad, 5, 1), doctest::Contains("resample"));
  }

  TEST_CASE("fisher z") {
    const auto r = fisher_z_test(0.5, 0.3, 103);
    const double z = (std::atanh(0.5) - std::atanh(0.3)) * std::sqrt(100.0);
    CHECK(r.statistic == doctest::Approx(z).epsilon(1e-12));
    CHECK(r.statistic == doctest::Approx(2.398).epsilon(0.001 / 2.398));
    CHECK(r.rejects());
    CHECK_THROWS(fisher_z_test(0.5, 0.3, 3));
  }

  TEST_CASE("correlations and ranks") {
    const std::vector<double> x{1, 2, 2, 4}, y{10, 20, 30, 40};
    CHECK(ranks(x) == std::vector<double>{1, 2.5, 2.5, 4});
    CHECK(pearson_correlation(y, y) == doctest::Approx(1.0));
    CHECK(spearman_correlation(x, y) == doctest::Approx(pearson_correlation(ranks(x), ranks(y))));
    CHECK(two_sided_normal_p(1.959963985) == doctest::Approx(0.05).epsilon(1e-6));
  }
}
