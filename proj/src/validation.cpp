#include "twincf/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "twincf/error.hpp"
#include "twincf/estimands.hpp"
#include "twincf/io.hpp"
#include "twincf/normal.hpp"
#include "twincf/summary.hpp"

namespace twincf {

void LevelConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw SpecError("alpha", "must lie in (0,1)");
  if (!(eps0_bar >= 0.0 && eps0_bar <= 1.0)) throw SpecError("eps0_bar", "must lie in [0,1]");
  if (!(eps1_bar >= 0.0 && eps1_bar <= 1.0)) throw SpecError("eps1_bar", "must lie in [0,1]");
  if (!(interval_level > 0.0 && interval_level < 1.0)) throw SpecError("interval_level", "must lie in (0,1)");
  if (bootstrap_B < 2) throw SpecError("bootstrap_B", "must be at least 2");
  if (placebo_arm && *placebo_arm != 0 && *placebo_arm != 1) throw SpecError("placebo_arm", "must be 0 or 1");
  for (const auto& [a, b] : monotonicity_pairs)
    if ((a != 0 && a != 1) || (b != 0 && b != 1)) throw SpecError("monotonicity_pairs", "arms must be 0 or 1");
}

std::string to_string(RowOutcome o) {
  switch (o) {
    case RowOutcome::pass: return "pass";
    case RowOutcome::fail: return "fail";
    case RowOutcome::report_only: return "report only";
    case RowOutcome::skipped: return "skipped";
  }
  return "report only";
}

namespace {

const char* arm_name(int d) { return d == 1 ? "treated" : "control"; }

RowOutcome verdict(bool ok) { return ok ? RowOutcome::pass : RowOutcome::fail; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Index of each dataset unit within the draws; throws listing missing units.
std::vector<std::size_t> align(const TwinDraws& draws, const Dataset& data) {
  draws.validate();
  std::vector<std::size_t> idx(data.size());
  bool same_order = draws.units() == data.size();
  for (std::size_t i = 0; same_order && i < data.size(); ++i) same_order = draws.unit_ids[i] == data.units[i].unit_id;
  if (same_order) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
  }
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t j = 0; j < draws.units(); ++j) pos.emplace(draws.unit_ids[j], j);
  std::string missing;
  std::size_t n_missing = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto it = pos.find(data.units[i].unit_id);
    if (it == pos.end()) {
      if (n_missing++ < 20) missing += (missing.empty() ? "" : ", ") + data.units[i].unit_id;
      continue;
    }
    idx[i] = it->second;
  }
  if (n_missing > 0)
    throw ArgumentError("no simulated draws for " + std::to_string(n_missing) + " unit(s): " + missing);
  return idx;
}

struct ArmSamples {
  std::vector<double> obs;
  std::vector<double> sim;
};

ArmSamples arm_samples(const TwinDraws& draws, const Dataset& data, const std::vector<std::size_t>& map, int d,
                       std::optional<int> stratum = std::nullopt) {
  ArmSamples s;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.units[i].treatment != d) continue;
    if (stratum && data.stratum_of(i) != *stratum) continue;
    s.obs.push_back(data.units[i].observed_outcome);
    for (std::size_t r = 0; r < draws.replicates; ++r) s.sim.push_back(draws.arm_at(d, map[i], r));
  }
  return s;
}

}  // namespace

// ---- Level 0 --------------------------------------------------------------

Level0Result level0(const TwinDraws& draws, const Dataset& data, const LevelConfig& config) {
  config.validate();
  const auto map = align(draws, data);
  Level0Result res;
  for (int d = 1; d >= 0; --d) {
    const ArmSamples s = arm_samples(draws, data, map, d);
    if (s.obs.empty())
      throw CannotValidateError(std::string("level 0: no observed ") + arm_name(d) + " units");
    res.ks[d] = ks_two_sample(s.sim, s.obs, config.alpha / 2.0);
    res.energy[d] = energy_distance(s.sim, s.obs);
    if (config.energy_permutations > 0)
      res.energy_test[d] = energy_test(s.sim, s.obs, config.energy_permutations, config.seed + 17 * d, config.exec);
    if (config.ad_permutations > 0)
      res.ad[d] = anderson_darling_two_sample(s.sim, s.obs, config.ad_permutations, config.seed + 31 * d, config.exec);
  }
  res.eps0 = std::max(res.ks[0].statistic, res.ks[1].statistic);
  res.rejected = res.ks[0].rejects() || res.ks[1].rejects();
  res.within_tolerance = res.eps0 <= config.eps0_bar;
  res.passed = !res.rejected && res.within_tolerance;
  for (int d = 1; d >= 0; --d) {
    const auto& t = res.ks[d];
    res.rows.push_back({0, std::string("Marginal KS (") + arm_name(d) + ")", d == 1 ? "T1(0)" : "T0(0)", t.statistic,
                        "KS critical at alpha/2 = " + fmt(t.critical_value), t.critical_value, verdict(!t.rejects()),
                        "p = " + fmt(t.p_value) + ", n_obs = " + std::to_string(t.n_y) + ", n_sim = " + std::to_string(t.n_x)});
  }
  res.rows.push_back({0, "Marginal tolerance", "eps0", res.eps0, "eps0_bar = " + fmt(config.eps0_bar), config.eps0_bar,
                      verdict(res.within_tolerance), ""});
  for (int d = 1; d >= 0; --d) {
    std::string note;
    if (res.energy_test[d]) note = "permutation p = " + fmt(res.energy_test[d]->p_value);
    res.rows.push_back({0, std::string("Energy distance (") + arm_name(d) + ")", "E", res.energy[d], "report only",
                        std::nullopt, RowOutcome::report_only, note});
  }
  for (int d = 1; d >= 0; --d) {
    if (!res.ad[d]) continue;
    res.rows.push_back({0, std::string("Anderson-Darling (") + arm_name(d) + ")", "A2", res.ad[d]->statistic,
                        "report only", std::nullopt, RowOutcome::report_only,
                        "permutation p = " + fmt(res.ad[d]->p_value)});
  }
  return res;
}

// ---- Level 1 --------------------------------------------------------------

Level1Result level1(const TwinDraws& draws, const Dataset& data, const LevelConfig& config) {
  config.validate();
  const auto map = align(draws, data);
  const int K = data.strata_count();
  Level1Result res;
  std::vector<std::pair<int, int>> tested;
  std::vector<std::size_t> counts(2 * static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < data.size(); ++i) ++counts[2 * static_cast<std::size_t>(data.stratum_of(i)) + data.units[i].treatment];
  for (int k = 0; k < K; ++k) {
    for (int d = 1; d >= 0; --d) {
      const std::size_t n = counts[2 * static_cast<std::size_t>(k) + d];
      if (n < config.min_stratum_n) {
        res.excluded.push_back("stratum " + std::to_string(k) + ", arm " + std::to_string(d) + " (n = " + std::to_string(n) + ")");
        continue;
      }
      tested.emplace_back(k, d);
    }
  }
  if (tested.empty())
    throw CannotValidateError("level 1: every (stratum, arm) cell has fewer than " +
                              std::to_string(config.min_stratum_n) + " observed units");
  res.cell_alpha = config.alpha / static_cast<double>(tested.size());
  res.cells.resize(tested.size());
  for (std::size_t c = 0; c < tested.size(); ++c) {
    const auto [k, d] = tested[c];
    const ArmSamples s = arm_samples(draws, data, map, d, k);
    StratumCell& cell = res.cells[c];
    cell.stratum = k;
    cell.arm = d;
    cell.n_obs = s.obs.size();
    cell.n_sim = s.sim.size();
    cell.ks = ks_two_sample(s.sim, s.obs, res.cell_alpha);
    cell.rejects = cell.ks.rejects();
  }
  res.eps1 = 0.0;
  bool any_reject = false;
  for (const auto& cell : res.cells) {
    res.eps1 = std::max(res.eps1, cell.ks.statistic);
    any_reject = any_reject || cell.rejects;
    res.rows.push_back({1, "Conditional KS (stratum " + std::to_string(cell.stratum) + ", " + arm_name(cell.arm) + ")",
                        "T" + std::to_string(cell.arm) + "," + std::to_string(cell.stratum) + "(1)", cell.ks.statistic,
                        "KS critical at alpha/" + std::to_string(tested.size()) + " = " + fmt(cell.ks.critical_value),
                        cell.ks.critical_value, verdict(!cell.rejects), "p = " + fmt(cell.ks.p_value)});
  }
  std::string note;
  if (!res.excluded.empty()) {
    note = "excluded: ";
    for (std::size_t j = 0; j < res.excluded.size(); ++j) note += (j ? "; " : "") + res.excluded[j];
  }
  res.rows.push_back({1, "Conditional KS (max)", "eps1", res.eps1, "eps1_bar = " + fmt(config.eps1_bar), config.eps1_bar,
                      verdict(res.eps1 <= config.eps1_bar), note});
  res.passed = !any_reject && res.eps1 <= config.eps1_bar;

  if (config.cmmd && data.p > 0) {
    for (int d = 1; d >= 0; --d) {
      PairedSample a, b;
      a.dim = b.dim = data.p;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.units[i].treatment != d) continue;
        const auto& x = data.units[i].covariates;
        a.x.insert(a.x.end(), x.begin(), x.end());
        a.y.push_back(draws.arm_at(d, map[i], 0));
        b.x.insert(b.x.end(), x.begin(), x.end());
        b.y.push_back(data.units[i].observed_outcome);
      }
      if (a.size() < 2) continue;
      res.cmmd[d] = conditional_mmd_test(a, b, MedianBandwidth{}, config.cmmd_permutations, config.seed + 7 * d, config.exec);
      res.rows.push_back({1, std::string("Conditional MMD (") + arm_name(d) + ")", "CMMD^2", res.cmmd[d]->statistic,
                          "report only", std::nullopt, RowOutcome::report_only,
                          "permutation p = " + fmt(res.cmmd[d]->p_value)});
    }
  }
  return res;
}

// ---- Level 2 --------------------------------------------------------------

Level2Result level2(const TwinDraws& draws, const Dataset& data, const LevelConfig& config) {
  config.validate();
  const auto map = align(draws, data);
  const std::size_t n = data.size();
  const std::size_t R = draws.replicates;
  std::vector<double> predicted(n), observed(n);
  for (std::size_t i = 0; i < n; ++i) {
    predicted[i] = draws.arm_at(data.units[i].treatment, map[i], 0);
    observed[i] = data.units[i].observed_outcome;
  }
  Level2Result res;
  res.fit = calibration_regression(predicted, observed);

  const double tail = 0.5 * (1.0 - config.interval_level);
  res.order_l = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(tail * static_cast<double>(R + 1))));
  const bool can_cover = R >= 20 && 2 * res.order_l < R + 1;
  bool coverage_ok = true;
  if (can_cover) {
    std::vector<Interval> iv(n);
    std::vector<double> buf(R);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < R; ++r) buf[r] = draws.arm_at(data.units[i].treatment, map[i], r);
      std::sort(buf.begin(), buf.end());
      iv[i] = {buf[res.order_l - 1], buf[R - res.order_l]};
    }
    std::vector<int> strata;
    if (data.strata) strata = data.stratum_labels();
    const auto cov = interval_coverage(iv, observed, strata);
    res.coverage = cov.rate;
    res.per_stratum_coverage = cov.per_stratum;
    res.expected_coverage = static_cast<double>(R + 1 - 2 * res.order_l) / static_cast<double>(R + 1);
    const double p = res.expected_coverage;
    const double z = (cov.rate - p) / std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    res.coverage_z = z;
    coverage_ok = std::abs(z) <= normal_quantile(1.0 - config.alpha / 2.0);
  }

  const double slope_gap = std::abs(res.fit.beta1 - 1.0);
  res.rows.push_back({2, "RMSPE", "RMSPE", res.fit.rmspe,
                      config.rmspe_max ? "<= " + fmt(*config.rmspe_max) : "domain-specific", config.rmspe_max,
                      config.rmspe_max ? verdict(res.fit.rmspe <= *config.rmspe_max) : RowOutcome::report_only,
                      "MAPE = " + fmt(res.fit.mape)});
  res.rows.push_back({2, "Calibration slope", "beta1", res.fit.beta1,
                      config.slope_tolerance ? "|beta1 - 1| <= " + fmt(*config.slope_tolerance) : "approx 1",
                      config.slope_tolerance,
                      config.slope_tolerance ? verdict(slope_gap <= *config.slope_tolerance) : RowOutcome::report_only,
                      "se = " + fmt(res.fit.se1)});
  res.rows.push_back({2, "Calibration intercept", "beta0", res.fit.beta0, "approx 0", std::nullopt, RowOutcome::report_only,
                      "se = " + fmt(res.fit.se0)});
  if (can_cover) {
    res.rows.push_back({2, "Interval coverage", "coverage", res.coverage, "exact binomial z-test vs " + fmt(res.expected_coverage),
                        res.expected_coverage, verdict(coverage_ok), "z = " + fmt(*res.coverage_z)});
  } else {
    res.rows.push_back({2, "Interval coverage", "coverage", std::nullopt, "needs R >= 20", std::nullopt, RowOutcome::skipped,
                        "skipped: R = " + std::to_string(R)});
  }
  res.passed = coverage_ok && (!config.rmspe_max || res.fit.rmspe <= *config.rmspe_max) &&
               (!config.slope_tolerance || slope_gap <= *config.slope_tolerance);
  return res;
}

// ---- Level 3 --------------------------------------------------------------

Level3Result level3(const TwinDraws& draws, const Dataset& data, const LevelConfig& config) {
  config.validate();
  Level3Result res;
  if (!data.rct_subset) {
    res.skipped = true;
    res.reason = "skipped: no RCT subset";
    res.rows.push_back({3, "ATE discrepancy", "T(3)", std::nullopt, "z-test", std::nullopt, RowOutcome::skipped, res.reason});
    return res;
  }
  const auto map = align(draws, data);
  const auto ut_all = draws.unit_mean_tau();
  std::vector<std::size_t> r1, r0;
  for (std::size_t i : data.rct_indices()) (data.units[i].treatment == 1 ? r1 : r0).push_back(i);
  if (r1.empty() || r0.empty()) throw CannotValidateError("level 3: RCT subset lacks an arm");
  res.n_rct = r1.size() + r0.size();

  auto statistic = [&](std::span<const std::size_t> idx, std::size_t n1) {
    double sim = 0.0, y1 = 0.0, y0 = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      sim += ut_all[map[i]];
      (k < n1 ? y1 : y0) += data.units[i].observed_outcome;
    }
    const double ate_sim = sim / static_cast<double>(idx.size());
    const double ate_rct = y1 / static_cast<double>(n1) - y0 / static_cast<double>(idx.size() - n1);
    return std::pair{ate_sim, ate_rct};
  };
  std::vector<std::size_t> all = r1;
  all.insert(all.end(), r0.begin(), r0.end());
  const auto [as, ar] = statistic(all, r1.size());
  res.ate_sim = as;
  res.ate_rct = ar;
  res.t3 = as - ar;
  const std::vector<std::vector<std::size_t>> groups{r1, r0};
  const std::size_t n1 = r1.size();
  res.se = bootstrap_se(
      std::span<const std::vector<std::size_t>>(groups),
      [&](std::span<const std::size_t> idx) {
        const auto [s, r] = statistic(idx, n1);
        return s - r;
      },
      config.bootstrap_B, config.seed, config.exec);
  if (res.se > 0.0) res.z = res.t3 / res.se;
  else res.z = res.t3 == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), res.t3);
  const double crit = normal_quantile(1.0 - config.alpha / 2.0);
  res.passed = std::abs(res.z) <= crit;

  const int K = data.strata_count();
  for (int k = 0; k < K; ++k) {
    double sim = 0.0, y1 = 0.0, y0 = 0.0;
    std::size_t n = 0, c1 = 0, c0 = 0;
    for (std::size_t i : all) {
      if (data.stratum_of(i) != k) continue;
      sim += ut_all[map[i]];
      ++n;
      if (data.units[i].treatment == 1) { y1 += data.units[i].observed_outcome; ++c1; }
      else { y0 += data.units[i].observed_outcome; ++c0; }
    }
    if (n == 0) continue;
    CatePair p{k, sim / static_cast<double>(n), std::nullopt};
    if (c1 > 0 && c0 > 0) p.rct = y1 / static_cast<double>(c1) - y0 / static_cast<double>(c0);
    res.cate_pairs.push_back(p);
  }
  res.rows.push_back({3, "ATE discrepancy", "T(3)", res.t3, "|Z| <= " + fmt(crit), crit, verdict(res.passed),
                      "Z = " + fmt(res.z) + ", se = " + fmt(res.se) + ", n_R = " + std::to_string(res.n_rct)});
  return res;
}

// ---- Level 4 --------------------------------------------------------------

namespace {

bool reruns_with_marginals(const SimulatorSpec& sim) {
  return sim.kind != SimulatorKind::structural && sim.kind != SimulatorKind::sequential && !sim.marginals.empty();
}

}  // namespace

PlaceboResult placebo_test(const SimulatorSpec& sim, const Dataset& data, int arm, std::size_t replicates,
                           const LevelConfig& config) {
  if (!reruns_with_marginals(sim)) throw ArgumentError("placebo test needs a simulator with per-stratum marginals");
  SimulatorSpec p;
  p.kind = SimulatorKind::independent_coupling;
  for (std::size_t k = 0; k < sim.marginals.size(); ++k) {
    const ArmLaws eff = sim.effective_laws(k, data.outcome_bounds);
    p.marginals.push_back({eff.arm(arm), eff.arm(arm)});
  }
  const TwinDraws d = simulate_twins(p, data, replicates, derive_seed(config.seed, "placebo"), config.exec);
  const auto ut = d.unit_mean_tau();
  PlaceboResult r;
  r.effect = mean(ut);
  r.se = ut.size() >= 2 ? sample_sd(ut) / std::sqrt(static_cast<double>(ut.size())) : 0.0;
  r.z = r.se > 0.0 ? r.effect / r.se : 0.0;
  r.p_value = two_sided_normal_p(r.z);
  r.rejects = std::abs(r.z) > normal_quantile(1.0 - config.alpha / 2.0);
  return r;
}

Level4Result level4(const TwinDraws& draws, const Dataset& data, const SimulatorSpec* sim, const LevelConfig& config) {
  config.validate();
  align(draws, data);
  Level4Result res;
  if (sim && reruns_with_marginals(*sim)) {
    SimulatorSpec ind = *sim;
    ind.kind = SimulatorKind::independent_coupling;
    const TwinDraws di = simulate_twins(ind, data, draws.replicates, config.seed, config.exec);
    res.csi = ks_statistic(draws.tau(), di.tau());
    res.csi_method = "rerun";
  } else {
    res.csi = draws_only_csi(draws, data, config.seed);
    res.csi_method = "permutation";
  }
  res.var_bounds = frechet_bounds_from_draws(draws, "ite_variance");
  res.pbenefit_bounds = frechet_bounds_from_draws(draws, "pbenefit");
  for (const auto& [d1, d2] : config.monotonicity_pairs) {
    std::size_t v = 0;
    for (std::size_t j = 0; j < draws.size(); ++j) {
      const double a = d1 == 1 ? draws.y1[j] : draws.y0[j];
      const double b = d2 == 1 ? draws.y1[j] : draws.y0[j];
      v += a > b;
    }
    res.monotonicity.push_back({d1, d2, static_cast<double>(v) / static_cast<double>(draws.size())});
  }
  if (config.placebo_arm && sim && reruns_with_marginals(*sim))
    res.placebo = placebo_test(*sim, data, *config.placebo_arm, draws.replicates, config);

  res.rows.push_back({4, "Copula sensitivity", "CSI", res.csi, "report only", std::nullopt, RowOutcome::report_only,
                      "independent coupling by " + res.csi_method});
  res.rows.push_back({4, "ITE variance bounds", "[(s1-s0)^2, (s1+s0)^2]", res.var_bounds.lower, "report only",
                      std::nullopt, RowOutcome::report_only,
                      "[" + fmt(res.var_bounds.lower) + ", " + fmt(res.var_bounds.upper) + "]"});
  res.rows.push_back({4, "P(tau > 0) bounds", "[pi+ W, pi+ M]", res.pbenefit_bounds.lower, "report only", std::nullopt,
                      RowOutcome::report_only,
                      "[" + fmt(res.pbenefit_bounds.lower) + ", " + fmt(res.pbenefit_bounds.upper) + "]"});
  for (const auto& m : res.monotonicity)
    res.rows.push_back({4, "Monotonicity violation (" + std::to_string(m.d1) + " vs " + std::to_string(m.d2) + ")", "v",
                        m.violation_rate, "report only", std::nullopt, RowOutcome::report_only, ""});
  if (res.placebo)
    res.rows.push_back({4, "Placebo effect", "mean tau", res.placebo->effect, "report only", std::nullopt,
                        RowOutcome::report_only,
                        "z = " + fmt(res.placebo->z) + (res.placebo->rejects ? " (rejects zero)" : " (consistent with zero)")});
  return res;
}

// ---- Protocol -------------------------------------------------------------

bool Scorecard::passed() const {
  if (stopped) return false;
  return std::none_of(rows.begin(), rows.end(), [](const ScoreRow& r) { return r.outcome == RowOutcome::fail; });
}

std::vector<std::string> licensed_estimands(bool level0_pass, bool level1_pass) {
  if (!level0_pass) return {};
  if (!level1_pass) return {"ate"};
  return {"ate", "att", "atu", "cate", "qte"};
}

Scorecard run_protocol(const TwinDraws& draws, const Dataset& data, const SimulatorSpec* sim, const LevelConfig& config) {
  config.validate();
  Scorecard sc;
  sc.alpha = config.alpha;
  sc.eps0_bar = config.eps0_bar;
  sc.eps1_bar = config.eps1_bar;
  sc.seed = config.seed;
  sc.config_hash = config_hash(config);
  sc.n_units = data.size();
  sc.replicates = draws.replicates;
  sc.coupling = to_string(draws.coupling);
  for (const auto& name : estimand_catalog())
    if (is_copula_dependent(name)) sc.never_licensed.push_back(name);

  auto append = [&sc](const std::vector<ScoreRow>& rows) { sc.rows.insert(sc.rows.end(), rows.begin(), rows.end()); };

  sc.l0 = level0(draws, data, config);
  append(sc.l0->rows);
  sc.eps0 = sc.l0->eps0;
  if (!sc.l0->passed) {
    sc.stopped = true;
    sc.stop_reason = sc.l0->within_tolerance ? "STOP at Level 0: marginal KS test rejects"
                                             : "STOP at Level 0: eps0 = " + fmt(sc.eps0) + " exceeds eps0_bar = " +
                                                   fmt(config.eps0_bar);
    return sc;
  }
  sc.l1 = level1(draws, data, config);
  append(sc.l1->rows);
  sc.eps1 = sc.l1->eps1;
  sc.licensed = licensed_estimands(true, sc.l1->passed);
  sc.l2 = level2(draws, data, config);
  append(sc.l2->rows);
  sc.l3 = level3(draws, data, config);
  append(sc.l3->rows);
  sc.l4 = level4(draws, data, sim, config);
  append(sc.l4->rows);
  return sc;
}

// ---- Transport --------------------------------------------------------------

TransportReport transport_diagnostics(const TwinDraws& draws, const Dataset& data, const LevelConfig& config,
                                      std::pair<double, double> delta, std::optional<std::pair<int, int>> equivalent_strata) {
  config.validate();
  if (!(delta.first >= 0.0 && delta.second >= 0.0)) throw ArgumentError("transport: delta penalties must be >= 0");
  for (int d = 0; d < 2; ++d)
    if (data.arm_indices(d).empty())
      throw CannotValidateError(std::string("transport: no observed ") + arm_name(d) + " units");
  const auto l1 = level1(draws, data, config);
  TransportReport rep;
  for (const auto& c : l1.cells) (c.arm == 1 ? rep.eps_treated : rep.eps_control) =
      std::max(c.arm == 1 ? rep.eps_treated : rep.eps_control, c.ks.statistic);
  rep.discrepancy = std::abs(rep.eps_treated - rep.eps_control);
  rep.delta_treated = delta.first;
  rep.delta_control = delta.second;
  if (data.outcome_bounds) {
    const double w = data.outcome_bounds->width();
    rep.widened_bound = (rep.eps_treated + delta.first) * w + (rep.eps_control + delta.second) * w;
  }
  if (data.rct_subset) rep.t3 = level3(draws, data, config).t3;
  if (equivalent_strata) {
    const auto [a, b] = *equivalent_strata;
    const int K = data.strata_count();
    if (a < 0 || b < 0 || a >= K || b >= K || a == b) throw ArgumentError("transport: invalid equivalent strata");
    const auto map = align(draws, data);
    TransportReport::Placebo p;
    p.stratum_a = a;
    p.stratum_b = b;
    double band_a = 0.0, band_b = 0.0;
    for (int d = 0; d < 2; ++d) {
      const auto sa = arm_samples(draws, data, map, d, a);
      const auto sb = arm_samples(draws, data, map, d, b);
      if (sa.obs.empty() || sb.obs.empty()) continue;
      const auto ta = ks_two_sample(sa.sim, sa.obs, config.alpha);
      const auto tb = ks_two_sample(sb.sim, sb.obs, config.alpha);
      p.eps_a = std::max(p.eps_a, ta.statistic);
      p.eps_b = std::max(p.eps_b, tb.statistic);
      band_a = std::max(band_a, ta.critical_value);
      band_b = std::max(band_b, tb.critical_value);
    }
    p.difference = std::abs(p.eps_a - p.eps_b);
    p.band = std::max(band_a, band_b);
    p.differential = p.difference > p.band;
    rep.placebo = p;
  }
  return rep;
}

// ---- Sample size --------------------------------------------------------------

std::size_t sample_size(int level, const SampleSizeParams& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw DomainError("sample_size: alpha must lie in (0,1)");
  if (!(p.power > 0.0 && p.power < 1.0)) throw DomainError("sample_size: power must lie in (0,1)");
  const double zb = normal_quantile(p.power);
  double n = 0.0;
  switch (level) {
    case 0:
    case 1: {
      if (p.epsilon == 0.0) throw DomainError("sample_size: epsilon = 0 needs infinite n");
      if (!(p.epsilon > 0.0 && p.epsilon <= 1.0)) throw DomainError("sample_size: epsilon must lie in (0,1]");
      if (level == 1 && p.strata < 1) throw DomainError("sample_size: strata must be >= 1");
      const double a = level == 0 ? p.alpha : p.alpha / (2.0 * p.strata);
      const double c = kolmogorov_quantile(a) + zb;
      n = c * c / (2.0 * p.epsilon * p.epsilon);
      break;
    }
    case 3: {
      if (p.delta == 0.0) throw DomainError("sample_size: delta = 0 needs infinite n");
      if (!(p.sigma_y > 0.0)) throw DomainError("sample_size: sigma_y must be positive");
      const double c = normal_quantile(1.0 - p.alpha / 2.0) + zb;
      n = 4.0 * p.sigma_y * p.sigma_y * c * c / (p.delta * p.delta);
      break;
    }
    default: throw ArgumentError("sample_size: level must be 0, 1 or 3");
  }
  return static_cast<std::size_t>(std::ceil(n - 1e-9));
}

}  // namespace twincf
