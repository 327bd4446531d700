#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "twincf/error.hpp"
#include "twincf/estimands.hpp"
#include "twincf/model.hpp"

using namespace twincf;

namespace {

/// Draws with R replicates from explicit (y1, y0) rows, unit-major.
TwinDraws make_draws(const std::vector<std::pair<double, double>>& rows, std::size_t R) {
  TwinDraws d;
  d.replicates = R;
  for (std::size_t i = 0; i < rows.size() / R; ++i) d.unit_ids.push_back("u" + std::to_string(i + 1));
  for (const auto& [a, b] : rows) {
    d.y1.push_back(a);
    d.y0.push_back(b);
  }
  return d;
}

Dataset data_for(const TwinDraws& d, const std::vector<int>& treat) {
  Dataset data;
  for (std::size_t i = 0; i < d.units(); ++i) data.units.push_back({d.unit_ids[i], {static_cast<double>(i)}, treat[i], 0.0});
  data.p = 1;
  return data;
}

WorldSpec example_spec(double rho) {
  WorldSpec w;
  w.strata.push_back({{MarginalLaw::normal(6, 2), MarginalLaw::normal(5, 2)}, 0.5});
  w.copula = CopulaSpec::gaussian(rho);
  return w;
}

WorldSample example_world(double rho, std::size_t n, std::uint64_t seed) {
  return generate_world(example_spec(rho), n, seed);
}

}  // namespace

TEST_SUITE("estimands") {
  TEST_CASE("ate, att, atu") {
    const auto d = make_draws({{3, 1}, {5, 1}, {2, 2}, {4, 2}, {1, 0}, {1, 0}}, 2);
    const auto data = data_for(d, {1, 0, 1});
    CHECK(*ate(d).value == doctest::Approx((2 + 4 + 0 + 2 + 1 + 1) / 6.0));
    CHECK(*att_atu(d, data, Subpopulation::treated).value == doctest::Approx((3.0 + 1.0) / 2));
    CHECK(*att_atu(d, data, Subpopulation::untreated).value == doctest::Approx(1.0));
    Dataset shuffled = data;
    std::swap(shuffled.units[0], shuffled.units[1]);
    CHECK_THROWS_AS(att_atu(d, shuffled, Subpopulation::treated), ArgumentError);
  }

  TEST_CASE("stratified cate reports missing strata") {
    const auto d = make_draws({{1, 0}, {3, 0}, {5, 0}}, 1);
    auto data = data_for(d, {1, 0, 1});
    data.strata = StrataPartition::from_labels({0, 0, 2});
    // stratum 1 is empty, which Dataset::validate rejects; cate still reports it as missing
    const auto r = cate(d, data);
    REQUIRE(r.curve.size() == 3);
    CHECK(*r.curve[0].y == 2.0);
    CHECK_FALSE(r.curve[1].y.has_value());
    CHECK(*r.curve[2].y == 5.0);
  }

  TEST_CASE("kernel cate tracks a linear effect") {
    std::vector<std::pair<double, double>> rows;
    for (int i = 0; i < 400; ++i) rows.push_back({0.01 * i, 0.0});
    const auto d = make_draws(rows, 1);
    auto data = data_for(d, std::vector<int>(400, 1));
    for (int i = 0; i < 400; ++i) data.units[i].covariates[0] = 0.01 * i;
    CateOptions o;
    o.mode = CateMode::kernel;
    o.bandwidth = 0.1;
    o.grid = {1.0, 2.0};
    const auto r = cate(d, data, o);
    CHECK(*r.curve[0].y == doctest::Approx(1.0).epsilon(0.01));
    CHECK(*r.curve[1].y == doctest::Approx(2.0).epsilon(0.01));
  }

  TEST_CASE("qte uses per-arm quantiles") {
    std::vector<std::pair<double, double>> rows;
    for (int i = 1; i <= 101; ++i) rows.push_back({i + 10.0, 102.0 - i});
    const auto d = make_draws(rows, 1);
    const std::vector<double> q{0.1, 0.5, 0.9};
    const auto r = qte(d, q);
    for (const auto& p : r.curve) CHECK(*p.y == doctest::Approx(10.0));
  }

  TEST_CASE("gates groups are ordered") {
    std::vector<std::pair<double, double>> rows;
    for (int i = 0; i < 100; ++i) rows.push_back({static_cast<double>((i * 37) % 100), 0.0});
    const auto r = gates(make_draws(rows, 1), 4);
    REQUIRE(r.curve.size() == 4);
    CHECK(*r.curve[0].y == doctest::Approx(12.0));
    CHECK(*r.curve[3].y == doctest::Approx(87.0));
  }

  TEST_CASE("ite summary") {
    const std::vector<double> tau{-1, 0, 0, 1, 2};
    const auto s = ite_summary(tau);
    CHECK(s.variance == doctest::Approx(oracle::var(tau)));
    CHECK(s.cdf(0.0) == 0.6);
    CHECK(s.cdf(-2.0) == 0.0);
    std::vector<double> bimodal;
    NoiseStream n({1, 0, 0});
    for (int i = 0; i < 2000; ++i) bimodal.push_back((i % 2 ? 4.0 : -4.0) + n.normal());
    CHECK(kde_mode_count(bimodal) == 2);
    CHECK(kde_mode_count(std::vector<double>(10, 1.0)) == 1);
  }

  TEST_CASE("normal-pair individual quantities under two couplings") {
    const auto ws = example_world(0.9, 50000, 1);
    const auto a = simulate_twins(SimulatorSpec::oracle_of(example_spec(0.9)), ws.data, 1, 2);
    const auto bh = prob_benefit_harm(a);
    CHECK(bh.plus == doctest::Approx(oracle::phi_cdf(1 / std::sqrt(0.8))).epsilon(0.01));
    CHECK(bh.plus + bh.minus + static_cast<double>(bh.n_equal) / bh.n == doctest::Approx(1.0));
    const auto vb = frechet_bounds_from_draws(a, "ite_variance");
    CHECK(vb.lower < 0.05);
    CHECK(vb.upper == doctest::Approx(16.0).epsilon(0.03));
    const auto pb = frechet_bounds_from_draws(a, "pbenefit");
    CHECK(pb.lower == doctest::Approx(0.5987).epsilon(0.01));
    CHECK(pb.upper == doctest::Approx(1.0).epsilon(0.005));
  }

  TEST_CASE("probability of causation") {
    const auto d = make_draws({{1, 0}, {1, 1}, {0, 0}, {1, 0}}, 1);
    const auto pc = prob_causation(d);
    CHECK(pc.value == doctest::Approx(2.0 / 3));
    CHECK(pc.lower <= pc.value);
    CHECK(pc.value <= pc.upper);
    CHECK_THROWS_AS(prob_causation(make_draws({{0, 0}, {0, 1}}, 1)), UndefinedEstimandError);
    CHECK_THROWS(prob_causation(make_draws({{0.5, 0}}, 1)));
  }

  TEST_CASE("mediation decomposition") {
    Dataset data;
    for (int i = 0; i < 20; ++i) data.units.push_back({"u" + std::to_string(i), {}, i % 2, 0.0});
    SimulatorSpec s;
    s.kind = SimulatorKind::structural;
    StructuralParts p;
    p.m_treat = 1.0;
    p.y_treat = 1.0;
    p.y_mediator = 1.0;
    s.structural = p;
    const auto r = mediation(s, data, 5, 1);
    CHECK(r.nde == 1.0);
    CHECK(r.nie == 1.0);
    CHECK(r.ate == 2.0);
    p.m_sd = 1.0;
    p.y_sd = 1.0;
    p.y_interaction = 0.5;
    s.structural = p;
    const auto q = mediation(s, data, 50, 2, 0.0);
    CHECK(std::abs(q.nde + q.nie - q.ate) < 1e-12);
    REQUIRE(q.cde.has_value());
    CHECK(*q.cde == doctest::Approx(1.0));
  }

  TEST_CASE("sequential regimes") {
    Dataset data;
    for (int i = 0; i < 10; ++i) data.units.push_back({"u" + std::to_string(i), {}, 0, 0.0});
    SimulatorSpec s;
    s.kind = SimulatorKind::sequential;
    s.sequential = SequentialParts{3, 0.0, 1.0, 1.0, 0.0, 0.5, {}};
    const std::vector<std::vector<int>> regimes{{0, 0, 0}, {1, 0, 0}, {1, 1, 1}};
    const auto r = sequential(s, data, regimes, 4, 1);
    CHECK(r.values[1] - r.values[0] == doctest::Approx(1.0));
    CHECK(r.values[2] - r.values[0] == doctest::Approx(3.0));
    CHECK(r.argmax == 2);
    REQUIRE(r.tau_curve.size() == 3);
    CHECK(r.tau_curve[0] == doctest::Approx(1.0));
    CHECK(r.tau_curve[2] == doctest::Approx(3.0));
    CHECK_THROWS(sequential(s, data, {{1, 1}}, 4, 1));
  }

  TEST_CASE("rmst difference of a shifted sample") {
    std::vector<std::pair<double, double>> rows;
    NoiseStream n({2, 0, 0});
    for (int i = 0; i < 500; ++i) {
      const double t = 1.0 + 3.0 * n.uniform();
      rows.push_back({t + 0.5, t});
    }
    const auto r = survival(make_draws(rows, 1), 10.0);
    CHECK(r.delta == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.s1.front() >= r.s1.back());
  }

  TEST_CASE("catalog") {
    const auto ws = example_world(0.5, 2000, 3);
    const auto d = simulate_twins(SimulatorSpec::oracle_of(example_spec(0.5)), ws.data, 3, 4);
    const auto all = estimate_catalog(d, ws.data, {});
    CHECK(all.size() == estimand_catalog().size() - 1);  // pc needs binary draws
    for (const auto& e : all) {
      CHECK(e.copula_dependent == is_copula_dependent(e.name));
      if (e.copula_dependent) {
        CHECK(e.bounds.has_value());
        CHECK(e.csi.has_value());
      } else {
        CHECK_FALSE(e.bounds.has_value());
      }
    }
    const std::vector<std::string> bad{"ate", "nope"};
    CHECK_THROWS_WITH(estimate_catalog(d, ws.data, bad), doctest::Contains("catalog: ate"));
    CHECK(draws_only_csi(d, ws.data, 1) > 0.05);
  }
}
