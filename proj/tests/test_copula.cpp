#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "twincf/copula.hpp"
#include "twincf/error.hpp"
#include "twincf/marginal.hpp"
#include "twincf/normal.hpp"
#include "twincf/stats.hpp"

using namespace twincf;

TEST_SUITE("marginal") {
  TEST_CASE("normal quantile and cdf invert") {
    const auto m = MarginalLaw::normal(6, 2);
    for (double u : {0.001, 0.1, 0.5, 0.9, 0.999}) CHECK(m.cdf(m.quantile(u)) == doctest::Approx(u).epsilon(1e-12));
    CHECK(m.cdf(6.0) == doctest::Approx(0.5));
    CHECK(m.cdf(8.0) == doctest::Approx(oracle::phi_cdf(1.0)).epsilon(1e-14));
    CHECK(m.variance() == 4.0);
  }

  TEST_CASE("lognormal moments") {
    const auto m = MarginalLaw::lognormal(0.5, 0.4);
    CHECK(m.mean() == doctest::Approx(std::exp(0.5 + 0.08)));
    CHECK(m.quantile(0.5) == doctest::Approx(std::exp(0.5)));
  }

  TEST_CASE("bernoulli quantile") {
    const auto m = MarginalLaw::bernoulli(0.3);
    CHECK(m.quantile(0.69) == 0.0);
    CHECK(m.quantile(0.71) == 1.0);
    CHECK(m.mean() == doctest::Approx(0.3));
  }

  TEST_CASE("covariate-dependent location") {
    const auto m = MarginalLaw::normal(1, 1, {2.0, -1.0});
    const std::vector<double> x{1.0, 3.0};
    CHECK(m.location_at(x) == doctest::Approx(0.0));
  }

  TEST_CASE("ks_shifted hits the requested distance") {
    for (double eps : {0.05, 0.1, 0.2}) {
      const auto m = MarginalLaw::normal(5, 2);
      const auto s = m.ks_shifted(eps, +1, 10.0);
      // KS between two normals with equal sd is attained at the midpoint.
      const double mid = 0.5 * (m.location + s.location);
      CHECK(std::abs(m.cdf(mid) - s.cdf(mid)) == doctest::Approx(eps).epsilon(1e-9));
    }
  }

  TEST_CASE("invalid parameters are rejected with the field name") {
    CHECK_THROWS_WITH_AS(MarginalLaw::normal(0, -1).validate("treated", 0), doctest::Contains("treated"), SpecError);
    CHECK_THROWS_AS(MarginalLaw::bernoulli(1.5).validate("control", 0), SpecError);
    CHECK_NOTHROW(MarginalLaw::normal(0, 0).validate("treated", 0));
  }
}

TEST_SUITE("copula") {
  TEST_CASE("bivariate normal cdf against quadrature") {
    for (double rho : {-0.9, -0.5, 0.0, 0.3, 0.9}) {
      for (auto [h, k] : {std::pair{0.0, 0.0}, {1.0, -0.5}, {-1.5, 2.0}, {0.3, 0.7}}) {
        CHECK(bivariate_normal_cdf(h, k, rho) == doctest::Approx(oracle::bvn(h, k, rho)).epsilon(1e-6));
      }
    }
    CHECK(bivariate_normal_cdf(0, 0, 0.5) == doctest::Approx(0.25 + std::asin(0.5) / (2 * M_PI)).epsilon(1e-13));
  }

  TEST_CASE("frechet extremes") {
    CHECK(copula_cdf(CopulaSpec::comonotone(), 0.3, 0.6) == doctest::Approx(0.3));
    CHECK(copula_cdf(CopulaSpec::countermonotone(), 0.3, 0.6) == doctest::Approx(0.0));
    CHECK(copula_cdf(CopulaSpec::countermonotone(), 0.7, 0.6) == doctest::Approx(0.3));
    CHECK(copula_cdf(CopulaSpec::independence(), 0.3, 0.6) == doctest::Approx(0.18));
  }

  TEST_CASE("every family lies between W and M") {
    const std::vector<CopulaSpec> fams{CopulaSpec::gaussian(0.7), CopulaSpec::gaussian(-0.7), CopulaSpec::frank(5),
                                       CopulaSpec::frank(-5), CopulaSpec::clayton(2)};
    for (const auto& c : fams)
      for (double u = 0.05; u < 1; u += 0.1)
        for (double v = 0.05; v < 1; v += 0.1) {
          const double cuv = copula_cdf(c, u, v);
          CHECK(cuv >= std::max(u + v - 1, 0.0) - 1e-12);
          CHECK(cuv <= std::min(u, v) + 1e-12);
        }
  }

  TEST_CASE("sampled pairs reproduce the Spearman rho") {
    for (const auto& c : {CopulaSpec::gaussian(0.6), CopulaSpec::frank(4.0), CopulaSpec::clayton(2.0)}) {
      NoiseStream s({11, 0, 0});
      std::vector<double> u(40000), v(40000);
      for (std::size_t i = 0; i < u.size(); ++i) {
        const auto d = sample_pair(c, s);
        u[i] = d.u;
        v[i] = d.v;
      }
      const double rs = spearman_correlation(u, v);
      double expect = 0.0;
      if (auto r = spearman_rho(c)) {
        expect = *r;
      } else {
        // rho_s = 12 * int C - 3 with the closed-form Clayton CDF.
        const int g = 400;
        double acc = 0.0;
        for (int i = 0; i < g; ++i)
          for (int j = 0; j < g; ++j) {
            const double a = (i + 0.5) / g, b = (j + 0.5) / g;
            acc += std::pow(std::pow(a, -2.0) + std::pow(b, -2.0) - 1.0, -0.5);
          }
        expect = 12.0 * acc / (g * g) - 3.0;
      }
      CHECK(rs == doctest::Approx(expect).epsilon(0.03));
    }
  }

  TEST_CASE("first uniform is shared across families") {
    NoiseStream a({5, 1, 1}), b({5, 1, 1});
    CHECK(sample_pair(CopulaSpec::gaussian(0.9), a).u == doctest::Approx(sample_pair(CopulaSpec::clayton(1.0), b).u));
  }

  TEST_CASE("parameter domains") {
    CHECK_THROWS_AS(CopulaSpec::gaussian(1.0).validate(), DomainError);
    CHECK_THROWS_AS(CopulaSpec::clayton(-1.0).validate(), DomainError);
    CHECK_THROWS_AS(CopulaSpec::frank(0.0).validate(), DomainError);
    CHECK_THROWS_AS(copula_family_from_string("gumbel"), Error);
  }
}
