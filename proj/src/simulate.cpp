#include <algorithm>
#include <cmath>
#include <limits>

#include "twincf/error.hpp"
#include "twincf/model.hpp"
#include "twincf/summary.hpp"

namespace twincf {
namespace {

constexpr std::uint32_t kIndependentArmTag = 0x80000000u;

double clamp_to(const std::optional<OutcomeBounds>& b, double y) { return b ? b->clamp(y) : y; }

}  // namespace

WorldSample generate_world(const WorldSpec& spec, std::size_t n, std::uint64_t seed, Exec exec) {
  spec.validate();
  if (n < 1) throw SpecError("n", "must be >= 1");

  const std::uint64_t key = derive_seed(seed, "world");
  const StrataPartition bins = StrataPartition::from_bins(spec.strata_bins);
  const std::size_t p = spec.covariates.size();

  WorldSample out;
  Dataset& data = out.data;
  data.p = p;
  data.outcome_bounds = spec.outcome_bounds;
  data.units.resize(n);
  out.truth.y1.resize(n);
  out.truth.y0.resize(n);
  std::vector<int> labels(n, 0);
  std::vector<char> in_rct(n, 0);

  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::int64_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    Unit& unit = data.units[i];
    unit.unit_id = "u" + std::to_string(i + 1);
    NoiseStream aux({key, static_cast<std::uint32_t>(i), 1});
    unit.covariates.resize(p);
    for (std::size_t j = 0; j < p; ++j) unit.covariates[j] = spec.covariates[j].sample(aux);
    const int k = bins.stratum_of(i, unit.covariates);
    labels[i] = k;
    const WorldStratum& stratum = spec.strata[static_cast<std::size_t>(k)];
    const bool rct = aux.uniform() < spec.rct_fraction;
    in_rct[i] = rct ? 1 : 0;
    const double prob = rct ? 0.5 : stratum.assignment_prob;
    unit.treatment = aux.uniform() < prob ? 1 : 0;

    NoiseStream outcome({key, static_cast<std::uint32_t>(i), 0});
    const CopulaDraw draw = sample_pair(spec.copula, outcome);
    const double y1 = clamp_to(spec.outcome_bounds,
                               stratum.laws.treated.from_uniform(draw.u, draw.zu, unit.covariates));
    const double y0 = clamp_to(spec.outcome_bounds,
                               stratum.laws.control.from_uniform(draw.v, draw.zv, unit.covariates));
    out.truth.y1[i] = y1;
    out.truth.y0[i] = y0;
    unit.observed_outcome = unit.treatment == 1 ? y1 : y0;
  }

  if (spec.strata_count() > 1) data.strata = StrataPartition::from_labels(labels);
  if (spec.rct_fraction > 0.0) {
    std::set<std::string> ids;
    bool treated = false;
    bool control = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_rct[i]) continue;
      ids.insert(data.units[i].unit_id);
      (data.units[i].treatment == 1 ? treated : control) = true;
    }
    if (treated && control) data.rct_subset = std::move(ids);
  }
  return out;
}

TwinDraws simulate_twins(const SimulatorSpec& sim, const Dataset& data, std::size_t replicates,
                         std::uint64_t seed, Exec exec) {
  sim.validate();
  if (replicates < 1) throw ArgumentError("simulate_twins: R must be >= 1");
  const std::size_t n = data.size();
  const std::vector<int> strata = data.stratum_labels();

  const bool marginal_kind =
      sim.kind != SimulatorKind::structural && sim.kind != SimulatorKind::sequential;
  std::vector<ArmLaws> laws;
  if (marginal_kind) {
    std::string missing;
    std::size_t missing_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<std::size_t>(strata[i]) >= sim.marginals.size()) {
        if (missing_count++ < 20) missing += (missing.empty() ? "" : ", ") + data.units[i].unit_id;
      }
    }
    if (missing_count > 0) {
      throw SpecError("strata", "simulator has no marginals for the stratum of " +
                                    std::to_string(missing_count) + " unit(s): " + missing);
    }
    for (std::size_t k = 0; k < sim.marginals.size(); ++k) {
      laws.push_back(sim.effective_laws(k, data.outcome_bounds));
    }
  }

  TwinDraws out;
  out.replicates = replicates;
  out.coupling = sim.kind == SimulatorKind::independent_coupling ? Coupling::independent_noise
                                                                  : Coupling::shared_noise;
  out.unit_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.unit_ids[i] = data.units[i].unit_id;
  out.y1.resize(n * replicates);
  out.y0.resize(n * replicates);

  const std::uint64_t key = derive_seed(seed, "simulate");
  const auto& bounds = data.outcome_bounds;
  const auto count = static_cast<std::int64_t>(n);

#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::int64_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& x = data.units[i].covariates;
    std::vector<double> z;
    std::vector<double> path;
    std::vector<int> always;
    std::vector<int> never;
    if (sim.kind == SimulatorKind::sequential) {
      const auto h = static_cast<std::size_t>(sim.sequential->horizon);
      z.resize(h + 1);
      path.resize(h);
      always.assign(h, 1);
      never.assign(h, 0);
    }
    for (std::size_t r = 0; r < replicates; ++r) {
      const std::size_t slot = i * replicates + r;
      const NoiseRecord rec{key, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(r)};
      double y1 = 0.0;
      double y0 = 0.0;
      switch (sim.kind) {
        case SimulatorKind::structural: {
          NoiseStream s(rec);
          const double zm = s.normal();
          const double zy = s.normal();
          const auto& st = *sim.structural;
          y1 = st.outcome(x, 1, st.mediator(x, 1, zm), zy);
          y0 = st.outcome(x, 0, st.mediator(x, 0, zm), zy);
          break;
        }
        case SimulatorKind::sequential: {
          NoiseStream s(rec);
          for (double& zt : z) zt = s.normal();
          sim.sequential->roll(x, always, z, path);
          y1 = path.back();
          sim.sequential->roll(x, never, z, path);
          y0 = path.back();
          break;
        }
        case SimulatorKind::independent_coupling: {
          const ArmLaws& lw = laws[static_cast<std::size_t>(strata[i])];
          NoiseStream s1(rec);
          NoiseStream s0({key, rec.stream_id, rec.replicate_id | kIndependentArmTag});
          y1 = lw.treated.from_uniform(s1.uniform(), std::nullopt, x);
          y0 = lw.control.from_uniform(s0.uniform(), std::nullopt, x);
          break;
        }
        default: {
          const ArmLaws& lw = laws[static_cast<std::size_t>(strata[i])];
          NoiseStream s(rec);
          const CopulaDraw d = sample_pair(sim.copula, s);
          y1 = lw.treated.from_uniform(d.u, d.zu, x);
          y0 = lw.control.from_uniform(d.v, d.zv, x);
          break;
        }
      }
      out.y1[slot] = clamp_to(bounds, y1);
      out.y0[slot] = clamp_to(bounds, y0);
    }
  }
  return out;
}

DispersionCalibration calibrate_dispersion(const SimulatorSpec& sim, const Dataset& data,
                                           std::span<const double> grid, std::size_t replicates,
                                           std::uint64_t seed, Exec exec) {
  if (grid.empty()) throw ArgumentError("calibrate_dispersion: grid must be nonempty");
  for (const double g : grid) {
    if (!(g > 0.0)) throw ArgumentError("calibrate_dispersion: grid values must be > 0");
  }
  const int K = data.strata_count();
  // cells[d][k] -> unit indices
  std::vector<std::vector<std::vector<std::size_t>>> cells(2, std::vector<std::vector<std::size_t>>(K));
  for (std::size_t i = 0; i < data.size(); ++i) {
    cells[static_cast<std::size_t>(data.units[i].treatment)][static_cast<std::size_t>(data.stratum_of(i))]
        .push_back(i);
  }
  DispersionCalibration result;
  std::vector<std::pair<int, int>> used;
  std::vector<double> observed_var;
  for (int d = 0; d < 2; ++d) {
    for (int k = 0; k < K; ++k) {
      const auto& idx = cells[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)];
      if (idx.size() < 2) {
        ++result.excluded_cells;
        continue;
      }
      std::vector<double> y;
      for (const auto i : idx) y.push_back(data.units[i].observed_outcome);
      used.emplace_back(d, k);
      observed_var.push_back(sample_variance(y));
    }
  }
  if (used.empty()) throw CalibrationError("no (arm, stratum) cell has >= 2 observed units");

  double best = std::numeric_limits<double>::infinity();
  bool any_nondegenerate = false;
  for (const double g : grid) {
    SimulatorSpec s = sim;
    s.dispersion_scale = g;
    const TwinDraws draws = simulate_twins(s, data, replicates, seed, exec);
    double objective = 0.0;
    bool degenerate = true;
    for (std::size_t c = 0; c < used.size(); ++c) {
      const auto [d, k] = used[c];
      std::vector<double> y;
      for (const auto i : cells[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)]) {
        for (std::size_t r = 0; r < replicates; ++r) y.push_back(draws.arm_at(d, i, r));
      }
      const double v = sample_variance(y);
      if (v > 0.0) degenerate = false;
      objective += (v - observed_var[c]) * (v - observed_var[c]);
    }
    result.objective.push_back(objective);
    if (!degenerate) any_nondegenerate = true;
    if (!degenerate && objective < best) {
      best = objective;
      result.best_scale = g;
    }
  }
  if (!any_nondegenerate) {
    throw CalibrationError("every grid point produced degenerate simulated variance");
  }
  return result;
}

}  // namespace twincf
