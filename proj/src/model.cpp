#include "twincf/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "twincf/error.hpp"
#include "twincf/summary.hpp"

namespace twincf {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (const double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (const double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double sample_sd(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ArgumentError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

double OutcomeBounds::clamp(double y) const noexcept { return std::clamp(y, lower, upper); }

std::size_t AxisBins::bin_of(double x) const noexcept {
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
}

StrataPartition StrataPartition::from_labels(std::vector<int> labels) {
  StrataPartition p;
  int k = 0;
  for (const int l : labels) {
    if (l < 0) throw SpecError("stratum", "labels must be >= 0");
    k = std::max(k, l + 1);
  }
  p.labels_ = std::move(labels);
  p.count_ = std::max(k, 1);
  return p;
}

StrataPartition StrataPartition::from_bins(std::vector<AxisBins> axes) {
  StrataPartition p;
  int k = 1;
  for (const auto& a : axes) {
    if (!std::is_sorted(a.edges.begin(), a.edges.end()) ||
        std::adjacent_find(a.edges.begin(), a.edges.end()) != a.edges.end()) {
      throw SpecError("strata.edges", "edges must be strictly increasing");
    }
    k *= static_cast<int>(a.bin_count());
  }
  p.axes_ = std::move(axes);
  p.count_ = k;
  return p;
}

int StrataPartition::stratum_of(std::size_t unit_index, std::span<const double> covariates) const {
  if (!labels_.empty()) {
    if (unit_index >= labels_.size()) throw ArgumentError("stratum label missing for unit");
    return labels_[unit_index];
  }
  std::size_t idx = 0;
  for (const auto& a : axes_) {
    if (a.coordinate >= covariates.size()) throw ArgumentError("stratum axis beyond covariates");
    idx = idx * a.bin_count() + a.bin_of(covariates[a.coordinate]);
  }
  return static_cast<int>(idx);
}

int Dataset::strata_count() const { return strata ? strata->count() : 1; }

int Dataset::stratum_of(std::size_t i) const {
  if (!strata) return 0;
  return strata->stratum_of(i, units[i].covariates);
}

std::vector<int> Dataset::stratum_labels() const {
  std::vector<int> out(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) out[i] = stratum_of(i);
  return out;
}

std::vector<std::size_t> Dataset::arm_indices(int d) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].treatment == d) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::rct_indices() const {
  std::vector<std::size_t> out;
  if (!rct_subset) return out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (rct_subset->count(units[i].unit_id)) out.push_back(i);
  }
  return out;
}

void Dataset::validate() const {
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const Unit& u = units[i];
    if (!ids.insert(u.unit_id).second) throw SpecError("unit_id", "duplicate id '" + u.unit_id + "'");
    if (u.covariates.size() != p) {
      throw SpecError("covariates", "unit '" + u.unit_id + "' has " +
                                        std::to_string(u.covariates.size()) +
                                        " covariates, expected " + std::to_string(p));
    }
    if (u.treatment != 0 && u.treatment != 1) {
      throw SpecError("d", "unit '" + u.unit_id + "' has treatment outside {0,1}");
    }
    if (!std::isfinite(u.observed_outcome)) {
      throw SpecError("y_obs", "unit '" + u.unit_id + "' has a non-finite outcome");
    }
    if (outcome_bounds && !outcome_bounds->contains(u.observed_outcome)) {
      throw SpecError("y_obs", "unit '" + u.unit_id + "' outcome outside declared bounds");
    }
  }
  if (outcome_bounds && !(outcome_bounds->lower < outcome_bounds->upper)) {
    throw SpecError("outcome_bounds", "lower must be < upper");
  }
  if (strata) {
    if (strata->uses_labels() && strata->labels().size() != units.size()) {
      throw SpecError("stratum", "label count does not match unit count");
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(strata->count()), 0);
    for (std::size_t i = 0; i < units.size(); ++i) ++counts[static_cast<std::size_t>(stratum_of(i))];
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (counts[k] == 0) throw SpecError("strata", "stratum " + std::to_string(k) + " is empty");
    }
  }
  if (rct_subset) {
    bool treated = false;
    bool control = false;
    for (const auto& id : *rct_subset) {
      if (!ids.count(id)) throw SpecError("rct_subset", "unknown unit '" + id + "'");
    }
    for (const auto i : rct_indices()) (units[i].treatment == 1 ? treated : control) = true;
    if (!treated || !control) throw SpecError("rct_subset", "must contain treated and control units");
  }
}

std::string to_string(Coupling c) {
  return c == Coupling::shared_noise ? "shared_noise" : "independent_noise";
}

Coupling coupling_from_string(const std::string& s) {
  if (s == "shared_noise") return Coupling::shared_noise;
  if (s == "independent_noise") return Coupling::independent_noise;
  throw SpecError("coupling", "unknown coupling '" + s + "'");
}

std::vector<double> TwinDraws::unit_mean_tau() const {
  std::vector<double> out(units(), 0.0);
  for (std::size_t i = 0; i < units(); ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) s += y1_at(i, r) - y0_at(i, r);
    out[i] = s / static_cast<double>(replicates);
  }
  return out;
}

std::vector<double> TwinDraws::tau() const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < size(); ++j) out[j] = y1[j] - y0[j];
  return out;
}

void TwinDraws::validate() const {
  if (replicates < 1) throw SpecError("replicate", "R must be >= 1");
  if (y1.size() != units() * replicates || y0.size() != y1.size()) {
    throw SpecError("draws", "every unit must carry exactly R replicates");
  }
}

double CovariateRule::sample(NoiseStream& stream) const {
  switch (kind) {
    case Kind::uniform: return a + (b - a) * stream.uniform();
    case Kind::normal: return a + b * stream.normal();
    case Kind::bernoulli: return stream.uniform() < a ? 1.0 : 0.0;
  }
  return 0.0;
}

std::size_t WorldSpec::strata_count() const {
  std::size_t k = 1;
  for (const auto& a : strata_bins) k *= a.bin_count();
  return k;
}

void WorldSpec::validate() const {
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    const auto& c = covariates[j];
    const std::string f = "covariates[" + std::to_string(j) + "]";
    if (c.kind == CovariateRule::Kind::uniform && !(c.a < c.b)) throw SpecError(f, "uniform needs lo < hi");
    if (c.kind == CovariateRule::Kind::normal && !(c.b > 0)) throw SpecError(f, "normal needs sd > 0");
    if (c.kind == CovariateRule::Kind::bernoulli && !(c.a >= 0 && c.a <= 1)) {
      throw SpecError(f, "bernoulli needs p in [0,1]");
    }
  }
  for (const auto& a : strata_bins) {
    if (a.coordinate >= covariates.size()) throw SpecError("strata.coordinate", "beyond covariate dimension");
  }
  (void)StrataPartition::from_bins(strata_bins);
  if (strata.size() != strata_count()) {
    throw SpecError("strata", "expected " + std::to_string(strata_count()) + " strata entries, got " +
                                  std::to_string(strata.size()));
  }
  for (std::size_t k = 0; k < strata.size(); ++k) {
    const std::string f = "strata[" + std::to_string(k) + "]";
    const double pk = strata[k].assignment_prob;
    if (!(pk > 0.0 && pk < 1.0)) throw SpecError(f + ".assignment_prob", "must lie in (0,1)");
    strata[k].laws.treated.validate(f + ".treated", covariates.size());
    strata[k].laws.control.validate(f + ".control", covariates.size());
  }
  try {
    copula.validate();
  } catch (const DomainError& e) {
    throw SpecError("copula.parameter", e.what());
  }
  if (outcome_bounds && !(outcome_bounds->lower < outcome_bounds->upper)) {
    throw SpecError("outcome_bounds", "lower must be < upper");
  }
  if (!(rct_fraction >= 0.0 && rct_fraction <= 1.0)) throw SpecError("rct_fraction", "must lie in [0,1]");
}

std::vector<double> HiddenTruth::tau() const {
  std::vector<double> out(y1.size());
  for (std::size_t i = 0; i < y1.size(); ++i) out[i] = y1[i] - y0[i];
  return out;
}

double HiddenTruth::ate() const { return mean(tau()); }

std::string to_string(SimulatorKind k) {
  switch (k) {
    case SimulatorKind::oracle: return "oracle";
    case SimulatorKind::perturbed: return "perturbed";
    case SimulatorKind::miscoupled: return "miscoupled";
    case SimulatorKind::independent_coupling: return "independent_coupling";
    case SimulatorKind::structural: return "structural";
    case SimulatorKind::sequential: return "sequential";
  }
  return "unknown";
}

SimulatorKind simulator_kind_from_string(const std::string& s) {
  for (const auto k : {SimulatorKind::oracle, SimulatorKind::perturbed, SimulatorKind::miscoupled,
                       SimulatorKind::independent_coupling, SimulatorKind::structural,
                       SimulatorKind::sequential}) {
    if (to_string(k) == s) return k;
  }
  throw SpecError("kind", "unknown simulator kind '" + s + "'");
}

double StructuralParts::mediator(std::span<const double> x, int d, double z_m) const {
  double m = m_intercept + m_treat * d + m_sd * z_m;
  for (std::size_t j = 0; j < std::min(m_coef.size(), x.size()); ++j) m += m_coef[j] * x[j];
  return m;
}

double StructuralParts::outcome(std::span<const double> x, int d, double m, double z_y) const {
  double y = y_intercept + y_treat * d + y_mediator * m + y_interaction * d * m + y_sd * z_y;
  for (std::size_t j = 0; j < std::min(y_coef.size(), x.size()); ++j) y += y_coef[j] * x[j];
  return y;
}

void SequentialParts::roll(std::span<const double> x, std::span<const int> regime,
                           std::span<const double> z, std::span<double> path) const {
  double s = baseline + noise_sd * z[0];
  for (std::size_t j = 0; j < std::min(coef.size(), x.size()); ++j) s += coef[j] * x[j];
  for (int t = 0; t < horizon; ++t) {
    const double g = regime[static_cast<std::size_t>(t)];
    s = persistence * s + g * (effect + effect_state * s) + noise_sd * z[static_cast<std::size_t>(t) + 1];
    path[static_cast<std::size_t>(t)] = s;
  }
}

void SimulatorSpec::validate() const {
  if (!(dispersion_scale > 0.0) || !std::isfinite(dispersion_scale)) {
    throw SpecError("dispersion_scale", "must be > 0");
  }
  if (perturbation && !(perturbation->epsilon >= 0.0 && perturbation->epsilon < 1.0)) {
    throw SpecError("perturbation.epsilon", "must lie in [0,1)");
  }
  if (structural.has_value() != (kind == SimulatorKind::structural)) {
    throw SpecError("structural", "present iff kind = structural");
  }
  if (sequential.has_value() != (kind == SimulatorKind::sequential)) {
    throw SpecError("sequential", "present iff kind = sequential");
  }
  if (sequential && sequential->horizon < 1) throw SpecError("sequential.horizon", "must be >= 1");
  if (kind == SimulatorKind::structural || kind == SimulatorKind::sequential) return;
  if (marginals.empty()) throw SpecError("marginals", "at least one stratum of marginals required");
  for (std::size_t k = 0; k < marginals.size(); ++k) {
    const std::string f = "marginals[" + std::to_string(k) + "]";
    marginals[k].treated.validate(f + ".treated", marginals[k].treated.coef.size());
    marginals[k].control.validate(f + ".control", marginals[k].control.coef.size());
  }
  try {
    copula.validate();
  } catch (const DomainError& e) {
    throw SpecError("copula.parameter", e.what());
  }
}

ArmLaws SimulatorSpec::effective_laws(std::size_t stratum,
                                      const std::optional<OutcomeBounds>& bounds) const {
  ArmLaws laws = marginals.at(stratum);
  laws.treated = laws.treated.with_dispersion(dispersion_scale);
  laws.control = laws.control.with_dispersion(dispersion_scale);
  if (perturbation && perturbation->epsilon > 0.0) {
    const double width = bounds ? bounds->width() : 1.0;
    const double eps = perturbation->epsilon;
    switch (perturbation->arm) {
      case PerturbArm::treated: laws.treated = laws.treated.ks_shifted(eps, +1, width); break;
      case PerturbArm::control: laws.control = laws.control.ks_shifted(eps, +1, width); break;
      case PerturbArm::both:
        laws.treated = laws.treated.ks_shifted(eps, +1, width);
        laws.control = laws.control.ks_shifted(eps, -1, width);
        break;
    }
  }
  return laws;
}

SimulatorSpec SimulatorSpec::oracle_of(const WorldSpec& world) {
  SimulatorSpec sim;
  sim.kind = SimulatorKind::oracle;
  sim.copula = world.copula;
  for (const auto& s : world.strata) sim.marginals.push_back(s.laws);
  return sim;
}

}  // namespace twincf
