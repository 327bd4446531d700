#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "twincf/error.hpp"
#include "twincf/sensitivity.hpp"

using namespace twincf;

namespace {

const ArmLaws kExample{MarginalLaw::normal(6, 2), MarginalLaw::normal(5, 2)};

}  // namespace

TEST_SUITE("sensitivity") {
  TEST_CASE("frechet variance bounds") {
    const auto b = fh_var_bounds(2, 2);
    CHECK(b.lower == 0.0);
    CHECK(b.upper == 16.0);
    const auto c = fh_var_bounds(3, 1);
    CHECK(c.lower == 4.0);
    CHECK(c.upper == 16.0);
  }

  TEST_CASE("frechet benefit bounds") {
    auto q1 = [](double u) { return kExample.treated.quantile(u); };
    auto q0 = [](double u) { return kExample.control.quantile(u); };
    const auto b = fh_pbenefit_bounds(q1, q0);
    CHECK(b.lower == doctest::Approx(oracle::phi_cdf(0.25)).epsilon(1e-3));
    CHECK(b.upper == doctest::Approx(1.0));
    auto bad = [](double u) { return -u; };
    CHECK_THROWS_AS(fh_pbenefit_bounds(bad, q0), ArgumentError);
  }

  TEST_CASE("theta functionals") {
    const std::vector<double> tau{-1, 0, 1, 2};
    CHECK(Theta{Functional::ate}.evaluate(tau) == 0.5);
    CHECK(Theta{Functional::pbenefit}.evaluate(tau) == 0.5);
    CHECK(Theta{Functional::pharm}.evaluate(tau) == 0.25);
    CHECK(Theta{Functional::g_tau_at_t, 0.0}.evaluate(tau) == 0.5);
    CHECK(Theta{Functional::var_tau}.evaluate(tau) == doctest::Approx(oracle::var(tau)));
    CHECK(functional_from_string(to_string(Functional::var_tau)) == Functional::var_tau);
  }

  TEST_CASE("sensitivity curve shapes") {
    const auto grid = default_rho_grid();
    REQUIRE(grid.size() == 10);
    const auto ate = sensitivity_curve(kExample, CopulaFamily::gaussian, grid, {Functional::ate}, 20000, 1);
    CHECK(ate.copula_robust());
    CHECK(ate.range() < 1e-9);
    const auto var = sensitivity_curve(kExample, CopulaFamily::gaussian, grid, {Functional::var_tau}, 20000, 1);
    CHECK_FALSE(var.copula_robust());
    for (std::size_t j = 0; j < grid.size(); ++j) CHECK(var.values[j] == doctest::Approx(8 - 8 * grid[j]).epsilon(0.05));
    const auto s = sensitivity_curve(kExample, CopulaFamily::gaussian, grid, {Functional::var_tau}, 2000, 3, std::nullopt, Exec::serial);
    const auto p = sensitivity_curve(kExample, CopulaFamily::gaussian, grid, {Functional::var_tau}, 2000, 3, std::nullopt, Exec::parallel);
    CHECK(s.values == p.values);
    const std::vector<double> unsorted{0.5, 0.1};
    CHECK_THROWS(sensitivity_curve(kExample, CopulaFamily::gaussian, unsorted, {Functional::ate}, 100, 1));
    std::ostringstream os;
    write_curve_csv(os, ate);
    CHECK(os.str().rfind("parameter,value\n", 0) == 0);
  }

  TEST_CASE("frank pbenefit is monotone in the parameter") {
    const std::vector<double> grid{-10, -5, -1, 1, 5, 10};
    const auto c = sensitivity_curve(kExample, CopulaFamily::frank, grid, {Functional::pbenefit}, 20000, 2);
    for (std::size_t j = 1; j < grid.size(); ++j) CHECK(c.values[j] >= c.values[j - 1] - 3 * c.mc_se[j]);
  }

  TEST_CASE("constrained bounds") {
    const auto pqd = constrained_bounds(kExample, Constraint::pqd, {Functional::var_tau});
    CHECK(pqd.lower == doctest::Approx(0.0));
    CHECK(pqd.upper == doctest::Approx(8.0));
    const auto ri = constrained_bounds(kExample, Constraint::rank_invariance, {Functional::var_tau});
    CHECK(ri.lower == doctest::Approx(ri.upper));
    CHECK(ri.lower < 1e-6);
    const auto pb = constrained_bounds(kExample, Constraint::pqd, {Functional::pbenefit});
    CHECK(pb.lower == doctest::Approx(oracle::phi_cdf(1 / std::sqrt(8.0))).epsilon(0.01));
    CHECK(pb.upper == doctest::Approx(1.0));
    const ArmLaws harmful{MarginalLaw::normal(0, 1), MarginalLaw::normal(1, 1)};
    const auto mono = constrained_bounds(harmful, Constraint::monotone, {Functional::ate});
    CHECK(mono.infeasible.has_value());
  }

  TEST_CASE("concordance discrepancy") {
    const Matrix a{{1, 0.5}, {0.5, 1}}, b{{1, 0.2}, {0.2, 1}};
    CHECK(concordance_discrepancy(a, b) == doctest::Approx(std::sqrt(2 * 0.09)));
    const Matrix bad{{1, 0.5}, {0.4, 1}};
    CHECK_THROWS(concordance_discrepancy(a, bad));
  }

  TEST_CASE("copula posterior") {
    const auto [grid, prior] = uniform_rho_prior(0.0, 1.0, 200);
    auto psi = [](double rho) { return 8 - 8 * rho; };
    const std::vector<ProxyEvidence> ev{{0.6, 500}};
    const auto post = copula_posterior(grid, prior, ev, psi);
    CHECK(post.median == doctest::Approx(0.6).epsilon(0.03));
    CHECK(post.credible_lo < psi(post.median));
    CHECK(psi(post.median) < post.credible_hi);
    const std::vector<ProxyEvidence> huge{{0.6, 1000000}};
    const auto tight = copula_posterior(grid, prior, huge, psi);
    CHECK(tight.credible_hi - tight.credible_lo <= 8.0 * 2.0 / 200 + 1e-9);
    const std::vector<double> zeros(grid.size(), 0.0);
    CHECK_THROWS_AS(copula_posterior(grid, zeros, ev, psi), ArgumentError);
  }

  TEST_CASE("hierarchy check") {
    CHECK(hierarchy_check(1, {0.5, 2}, {0, 3}, {0, 4}).holds);
    const auto v = hierarchy_check(1, {0.5, 2}, {0, 5}, {0, 4});
    CHECK_FALSE(v.holds);
    CHECK(*v.violated == "constrained in frechet");
    CHECK(*hierarchy_check(3, {0.5, 2}, {0, 3}, {0, 4}).violated == "point in bayes");
  }
}
