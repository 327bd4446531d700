#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "twincf/error.hpp"
#include "twincf/model.hpp"
#include "twincf/stats.hpp"
#include "twincf/summary.hpp"

using namespace twincf;

namespace {

WorldSpec normal_pair(double rho) {
  WorldSpec w;
  w.strata.push_back({{MarginalLaw::normal(6, 2), MarginalLaw::normal(5, 2)}, 0.5});
  w.copula = CopulaSpec::gaussian(rho);
  return w;
}

WorldSpec two_strata() {
  WorldSpec w;
  w.covariates.push_back({CovariateRule::Kind::uniform, 0.0, 1.0});
  w.strata_bins.push_back({0, {0.5}});
  w.strata.push_back({{MarginalLaw::normal(2, 1), MarginalLaw::normal(1, 1)}, 0.3});
  w.strata.push_back({{MarginalLaw::normal(4, 1, {1.0}), MarginalLaw::normal(1, 1)}, 0.7});
  w.copula = CopulaSpec::frank(3.0);
  w.rct_fraction = 0.2;
  return w;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("example world arm means") {
    const auto ws = generate_world(normal_pair(0.9), 10000, 1);
    std::vector<double> y1, y0;
    for (const auto& u : ws.data.units) (u.treatment ? y1 : y0).push_back(u.observed_outcome);
    CHECK(std::abs(oracle::mean(y1) - 6.0) < 0.06);
    CHECK(std::abs(oracle::mean(y0) - 5.0) < 0.06);
    CHECK(std::abs(ws.truth.ate() - 1.0) < 0.03);
    CHECK(std::abs(oracle::var(ws.truth.tau()) - 0.8) < 0.05);
  }

  TEST_CASE("generation is deterministic and exec-independent") {
    const auto a = generate_world(two_strata(), 3000, 9, Exec::serial);
    const auto b = generate_world(two_strata(), 3000, 9, Exec::parallel);
    REQUIRE(a.data.size() == b.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      CHECK(a.data.units[i].observed_outcome == b.data.units[i].observed_outcome);
      CHECK(a.data.units[i].treatment == b.data.units[i].treatment);
      CHECK(a.truth.y0[i] == b.truth.y0[i]);
    }
    CHECK(a.data.rct_subset == b.data.rct_subset);
    const auto c = generate_world(two_strata(), 3000, 10);
    CHECK(c.data.units[0].observed_outcome != a.data.units[0].observed_outcome);
  }

  TEST_CASE("strata and rct subset") {
    const auto ws = generate_world(two_strata(), 4000, 3);
    ws.data.validate();
    REQUIRE(ws.data.strata);
    CHECK(ws.data.strata_count() == 2);
    for (std::size_t i = 0; i < ws.data.size(); ++i)
      CHECK(ws.data.stratum_of(i) == (ws.data.units[i].covariates[0] > 0.5 ? 1 : 0));
    REQUIRE(ws.data.rct_subset);
    const double frac = static_cast<double>(ws.data.rct_subset->size()) / ws.data.size();
    CHECK(std::abs(frac - 0.2) < 0.03);
  }

  TEST_CASE("simulate_twins serial and parallel are bitwise identical") {
    const auto ws = generate_world(two_strata(), 2000, 4);
    for (auto kind : {SimulatorKind::oracle, SimulatorKind::independent_coupling}) {
      auto sim = SimulatorSpec::oracle_of(two_strata());
      sim.kind = kind;
      const auto a = simulate_twins(sim, ws.data, 7, 5, Exec::serial);
      const auto b = simulate_twins(sim, ws.data, 7, 5, Exec::parallel);
      CHECK(a.y1 == b.y1);
      CHECK(a.y0 == b.y0);
    }
  }

  TEST_CASE("oracle twins reproduce the copula") {
    const auto ws = generate_world(normal_pair(0.9), 5000, 2);
    const auto d = simulate_twins(SimulatorSpec::oracle_of(normal_pair(0.9)), ws.data, 4, 6);
    CHECK(std::abs(oracle::var(d.tau()) - 0.8) < 0.05);
    CHECK(d.coupling == Coupling::shared_noise);
    auto ind = SimulatorSpec::oracle_of(normal_pair(0.9));
    ind.kind = SimulatorKind::independent_coupling;
    const auto e = simulate_twins(ind, ws.data, 4, 6);
    CHECK(std::abs(oracle::var(e.tau()) - 8.0) < 0.4);
    CHECK(e.coupling == Coupling::independent_noise);
  }

  TEST_CASE("perturbed simulator moves one arm by the requested KS distance") {
    auto sim = SimulatorSpec::oracle_of(normal_pair(0.0));
    sim.kind = SimulatorKind::perturbed;
    sim.perturbation = Perturbation{0.1, PerturbArm::treated};
    const ArmLaws laws = sim.effective_laws(0, std::nullopt);
    CHECK(laws.control.location == 5.0);
    const double mid = 0.5 * (6.0 + laws.treated.location);
    CHECK(std::abs(laws.treated.cdf(mid) - MarginalLaw::normal(6, 2).cdf(mid)) == doctest::Approx(0.1));
  }

  TEST_CASE("structural and sequential share noise across arms") {
    Dataset data;
    data.units.push_back({"a", {}, 1, 0.0});
    data.units.push_back({"b", {}, 0, 0.0});
    SimulatorSpec s;
    s.kind = SimulatorKind::structural;
    StructuralParts p;
    p.m_treat = 1.0;
    p.m_sd = 0.5;
    p.y_treat = 1.0;
    p.y_mediator = 1.0;
    p.y_sd = 1.0;
    s.structural = p;
    const auto d = simulate_twins(s, data, 3, 1);
    for (double t : d.tau()) CHECK(t == doctest::Approx(2.0));

    SimulatorSpec q;
    q.kind = SimulatorKind::sequential;
    q.sequential = SequentialParts{3, 0.0, 1.0, 0.5, 0.0, 1.0, {}};
    const auto e = simulate_twins(q, data, 3, 1);
    for (double t : e.tau()) CHECK(t == doctest::Approx(1.5));
  }

  TEST_CASE("dispersion calibration finds the true scale") {
    const auto ws = generate_world(normal_pair(0.0), 4000, 8);
    auto sim = SimulatorSpec::oracle_of(normal_pair(0.0));
    sim.dispersion_scale = 1.0;
    const std::vector<double> grid{0.5, 0.75, 1.0, 1.25, 1.5};
    const auto cal = calibrate_dispersion(sim, ws.data, grid, 10, 1);
    CHECK(cal.best_scale == 1.0);
    CHECK(cal.objective.size() == grid.size());
  }

  TEST_CASE("dataset invariants") {
    Dataset d;
    d.units.push_back({"a", {}, 1, 1.0});
    d.units.push_back({"a", {}, 0, 1.0});
    CHECK_THROWS_AS(d.validate(), SpecError);
    d.units[1].unit_id = "b";
    d.units[1].treatment = 2;
    CHECK_THROWS_AS(d.validate(), SpecError);
    d.units[1].treatment = 0;
    d.outcome_bounds = OutcomeBounds{0.0, 0.5};
    CHECK_THROWS_AS(d.validate(), SpecError);
    d.outcome_bounds.reset();
    CHECK_NOTHROW(d.validate());
  }

  TEST_CASE("simulator without marginals for a stratum names the units") {
    const auto ws = generate_world(two_strata(), 50, 1);
    auto sim = SimulatorSpec::oracle_of(two_strata());
    sim.marginals.pop_back();
    CHECK_THROWS_WITH_AS(simulate_twins(sim, ws.data, 1, 1), doctest::Contains("unit(s)"), SpecError);
  }

  TEST_CASE("summary helpers") {
    const std::vector<double> v{3, 1, 2, 4};
    CHECK(mean(v) == 2.5);
    CHECK(sample_variance(v) == doctest::Approx(oracle::var(v)));
    const auto s = sorted_copy(v);
    CHECK(sorted_quantile(s, 0.5) == 2.5);
    CHECK(sorted_quantile(s, 0.0) == 1.0);
    CHECK(sorted_quantile(s, 1.0) == 4.0);
  }
}
