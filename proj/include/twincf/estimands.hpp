#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twincf/exec.hpp"
#include "twincf/model.hpp"
#include "twincf/sensitivity.hpp"

namespace twincf {

enum class Fidelity { marginal, joint, structural, sequential };
std::string to_string(Fidelity f);

struct CurvePoint {
  double x = 0.0;
  std::optional<double> y;  // nullopt: not estimable (e.g. empty stratum)
};

struct EstimandResult {
  std::string name;
  std::optional<double> value;
  std::vector<CurvePoint> curve;
  Fidelity fidelity_required = Fidelity::marginal;
  bool copula_dependent = false;
  std::optional<double> mc_se;
  std::optional<BoundsResult> bounds;
  std::optional<double> csi;
  std::map<std::string, double> extras;
};

/// Names accepted by `estimate_catalog`, in report order.
const std::vector<std::string>& estimand_catalog();
/// True for the individual-level quantities and the GATES ranking.
bool is_copula_dependent(const std::string& name);

// ---- Family I/II ----------------------------------------------------------

EstimandResult ate(const TwinDraws& draws);

enum class Subpopulation { treated, untreated };
/// Mean tau-hat over the observed treated (ATT) or untreated (ATU) units.
EstimandResult att_atu(const TwinDraws& draws, const Dataset& data, Subpopulation which);

enum class CateMode { stratified, kernel };
struct CateOptions {
  CateMode mode = CateMode::stratified;
  std::optional<double> bandwidth;  // kernel mode; rule of thumb when unset
  std::size_t coordinate = 0;       // kernel mode covariate axis
  std::vector<double> grid;         // kernel mode evaluation points; 21 points over the range when empty
};
EstimandResult cate(const TwinDraws& draws, const Dataset& data, const CateOptions& options = {});

/// Difference of per-arm empirical (type 7) quantiles of all draws.
EstimandResult qte(const TwinDraws& draws, std::span<const double> q_grid);

/// Units sorted by replicate-averaged tau-hat and cut into J groups.
EstimandResult gates(const TwinDraws& draws, std::size_t groups);

// ---- Family III -----------------------------------------------------------

struct ITESummary {
  std::vector<double> sorted_tau;
  double variance = 0.0;
  double skewness = 0.0;
  int mode_count = 1;

  /// G(t) = #(tau <= t) / n.
  double cdf(double t) const;
  /// Up to `points` (t, G(t)) pairs at evenly spaced order statistics.
  std::vector<CurvePoint> cdf_curve(std::size_t points = 101) const;
};

ITESummary ite_summary(std::span<const double> tau);
ITESummary ite_summary(const TwinDraws& draws);

/// Gaussian-kernel density mode count on a 512-point grid (Silverman
/// bandwidth); 1 for a degenerate sample.
int kde_mode_count(std::span<const double> xs);

struct BenefitHarm {
  double plus = 0.0;
  double minus = 0.0;
  std::size_t n_plus = 0;
  std::size_t n_minus = 0;
  std::size_t n_equal = 0;
  std::size_t n = 0;
};
BenefitHarm prob_benefit_harm(const TwinDraws& draws, double threshold = 0.0);

struct CausationResult {
  double value = 0.0;
  double lower = 0.0;  // bounds from the two marginal rates alone
  double upper = 1.0;
  bool consistent = true;
};
CausationResult prob_causation(const TwinDraws& draws);

/// Frechet bounds for a copula-dependent catalog entry, from the pooled
/// per-arm draws.
BoundsResult frechet_bounds_from_draws(const TwinDraws& draws, const std::string& estimand);

/// CSI from draws alone: tau under the draws' own pairing against tau after
/// permuting y0 among units of the same stratum.
double draws_only_csi(const TwinDraws& draws, const Dataset& data, std::uint64_t seed);

// ---- Family IV/V ----------------------------------------------------------

struct MediationResult {
  double nde = 0.0;
  double nie = 0.0;
  double ate = 0.0;
  std::optional<double> cde;
  double mc_se = 0.0;
};

/// Cross-world composition with one mediator draw and one outcome draw per
/// (unit, replicate), on the same streams as `simulate_twins`.
MediationResult mediation(const SimulatorSpec& sim, const Dataset& data, std::size_t replicates,
                          std::uint64_t seed, std::optional<double> m_star = std::nullopt,
                          Exec exec = Exec::parallel);

struct SequentialResult {
  std::vector<std::vector<int>> regimes;
  std::vector<double> values;
  std::vector<double> mc_se;
  std::size_t argmax = 0;
  /// Mean s_t(always) - s_t(never), t = 1..T.
  std::vector<double> tau_curve;
};

SequentialResult sequential(const SimulatorSpec& sim, const Dataset& data,
                            const std::vector<std::vector<int>>& regimes, std::size_t replicates,
                            std::uint64_t seed, Exec exec = Exec::parallel);

struct SurvivalResult {
  std::vector<double> grid;
  std::vector<double> s1;
  std::vector<double> s0;
  double rmst1 = 0.0;
  double rmst0 = 0.0;
  double delta = 0.0;
  double mc_se = 0.0;
};

/// Empirical survivor curves of y1 / y0 read as event times, and the exact
/// RMST difference up to t_star.
SurvivalResult survival(const TwinDraws& draws, double t_star, std::size_t grid_points = 101);

// ---- Catalog --------------------------------------------------------------

struct CatalogOptions {
  std::vector<double> q_grid{0.1, 0.25, 0.5, 0.75, 0.9};
  std::size_t gates_groups = 5;
  CateOptions cate;
  std::uint64_t seed = 0;
  /// When set, CSI is taken from a re-run under independent coupling.
  std::optional<double> csi;
};

/// Runs the named estimands (the whole catalog when empty). Every
/// copula-dependent entry carries its Frechet bounds and the CSI.
std::vector<EstimandResult> estimate_catalog(const TwinDraws& draws, const Dataset& data,
                                             std::span<const std::string> names,
                                             const CatalogOptions& options = {});

}  // namespace twincf
