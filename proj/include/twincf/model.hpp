#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "twincf/copula.hpp"
#include "twincf/exec.hpp"
#include "twincf/marginal.hpp"

namespace twincf {

struct Unit {
  std::string unit_id;
  std::vector<double> covariates;
  int treatment = 0;
  double observed_outcome = 0.0;
};

struct OutcomeBounds {
  double lower = 0.0;
  double upper = 1.0;
  double width() const noexcept { return upper - lower; }
  bool contains(double y) const noexcept { return y >= lower && y <= upper; }
  double clamp(double y) const noexcept;
};

/// Half-open bins (edges[j-1], edges[j]] over one covariate coordinate.
struct AxisBins {
  std::size_t coordinate = 0;
  std::vector<double> edges;  // strictly increasing interior edges
  std::size_t bin_count() const noexcept { return edges.size() + 1; }
  std::size_t bin_of(double x) const noexcept;
};

/// Maps each unit to one of K strata, either by explicit per-unit labels or
/// by a product of axis-aligned bins (mixed-radix index, first axis slowest).
class StrataPartition {
 public:
  static StrataPartition from_labels(std::vector<int> labels);
  static StrataPartition from_bins(std::vector<AxisBins> axes);

  bool uses_labels() const noexcept { return !labels_.empty() || axes_.empty(); }
  int count() const noexcept { return count_; }
  int stratum_of(std::size_t unit_index, std::span<const double> covariates) const;
  const std::vector<AxisBins>& axes() const noexcept { return axes_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

 private:
  std::vector<int> labels_;
  std::vector<AxisBins> axes_;
  int count_ = 1;
};

struct Dataset {
  std::vector<Unit> units;
  std::size_t p = 0;
  std::optional<OutcomeBounds> outcome_bounds;
  std::optional<StrataPartition> strata;
  std::optional<std::set<std::string>> rct_subset;

  std::size_t size() const noexcept { return units.size(); }
  /// Throws SpecError on a broken invariant (duplicate ids, wrong covariate
  /// length, treatment outside {0,1}, out-of-bounds outcomes, bad RCT set,
  /// empty strata).
  void validate() const;
  int strata_count() const;
  int stratum_of(std::size_t i) const;
  std::vector<int> stratum_labels() const;
  std::vector<std::size_t> arm_indices(int d) const;
  std::vector<std::size_t> rct_indices() const;
};

enum class Coupling { shared_noise, independent_noise };
std::string to_string(Coupling c);
Coupling coupling_from_string(const std::string& s);

/// Paired simulated potential outcomes, unit-major: index i*R + r.
struct TwinDraws {
  std::vector<std::string> unit_ids;
  std::size_t replicates = 1;
  std::vector<double> y1;
  std::vector<double> y0;
  Coupling coupling = Coupling::shared_noise;

  std::size_t units() const noexcept { return unit_ids.size(); }
  std::size_t size() const noexcept { return y1.size(); }
  double y1_at(std::size_t i, std::size_t r) const { return y1[i * replicates + r]; }
  double y0_at(std::size_t i, std::size_t r) const { return y0[i * replicates + r]; }
  double arm_at(int d, std::size_t i, std::size_t r) const { return d == 1 ? y1_at(i, r) : y0_at(i, r); }
  /// Per-unit mean of tau-hat over replicates.
  std::vector<double> unit_mean_tau() const;
  std::vector<double> tau() const;
  void validate() const;
};

struct CovariateRule {
  enum class Kind { uniform, normal, bernoulli };
  Kind kind = Kind::uniform;
  double a = 0.0;  // uniform lower / normal mean / bernoulli p
  double b = 1.0;  // uniform upper / normal sd
  double sample(NoiseStream& stream) const;
};

struct ArmLaws {
  MarginalLaw treated;
  MarginalLaw control;
  const MarginalLaw& arm(int d) const { return d == 1 ? treated : control; }
};

struct WorldStratum {
  ArmLaws laws;
  double assignment_prob = 0.5;
};

/// Ground-truth generator used as the test oracle.
struct WorldSpec {
  std::vector<CovariateRule> covariates;
  std::vector<AxisBins> strata_bins;  // empty -> one stratum
  std::vector<WorldStratum> strata;
  CopulaSpec copula = CopulaSpec::independence();
  std::optional<OutcomeBounds> outcome_bounds;
  /// Fraction of units flagged as randomized (assignment 1/2 regardless of
  /// stratum); they form the dataset's rct_subset.
  double rct_fraction = 0.0;

  void validate() const;
  std::size_t strata_count() const;
};

/// True potential outcomes, kept apart from the Dataset.
struct HiddenTruth {
  std::vector<double> y1;
  std::vector<double> y0;
  std::vector<double> tau() const;
  double ate() const;
};

struct WorldSample {
  Dataset data;
  HiddenTruth truth;
};

enum class SimulatorKind { oracle, perturbed, miscoupled, independent_coupling, structural, sequential };
std::string to_string(SimulatorKind k);
SimulatorKind simulator_kind_from_string(const std::string& s);

enum class PerturbArm { treated, control, both };

struct Perturbation {
  double epsilon = 0.0;
  PerturbArm arm = PerturbArm::treated;
};

/// Linear mediator and outcome laws sharing one noise draw per unit:
///   M = m0 + m_d*d + m_x.x + m_sd*z_m
///   Y = y0 + y_d*d + y_m*M + y_dm*d*M + y_x.x + y_sd*z_y
struct StructuralParts {
  double m_intercept = 0.0, m_treat = 0.0, m_sd = 0.0;
  std::vector<double> m_coef;
  double y_intercept = 0.0, y_treat = 0.0, y_mediator = 0.0, y_interaction = 0.0, y_sd = 0.0;
  std::vector<double> y_coef;

  double mediator(std::span<const double> x, int d, double z_m) const;
  double outcome(std::span<const double> x, int d, double m, double z_y) const;
};

/// Roll-forward dynamics over `horizon` periods:
///   s_0 = baseline + coef.x + sd*z_0
///   s_t = persistence*s_{t-1} + g_t*(effect + effect_state*s_{t-1}) + sd*z_t
/// The terminal outcome is s_T.
struct SequentialParts {
  int horizon = 1;
  double baseline = 0.0;
  double persistence = 1.0;
  double effect = 0.0;
  double effect_state = 0.0;
  double noise_sd = 0.0;
  std::vector<double> coef;

  /// Writes s_1..s_T into `path` (size horizon) given a treatment sequence.
  void roll(std::span<const double> x, std::span<const int> regime, std::span<const double> z,
            std::span<double> path) const;
};

struct SimulatorSpec {
  SimulatorKind kind = SimulatorKind::oracle;
  std::vector<ArmLaws> marginals;  // per stratum
  CopulaSpec copula = CopulaSpec::independence();
  std::optional<Perturbation> perturbation;
  double dispersion_scale = 1.0;
  std::optional<StructuralParts> structural;
  std::optional<SequentialParts> sequential;

  void validate() const;
  /// Marginals as actually sampled: perturbation and dispersion applied.
  ArmLaws effective_laws(std::size_t stratum, const std::optional<OutcomeBounds>& bounds) const;

  /// A simulator that reproduces the world's marginals and copula.
  static SimulatorSpec oracle_of(const WorldSpec& world);
};

WorldSample generate_world(const WorldSpec& spec, std::size_t n, std::uint64_t seed,
                           Exec exec = Exec::parallel);

TwinDraws simulate_twins(const SimulatorSpec& sim, const Dataset& data, std::size_t replicates,
                         std::uint64_t seed, Exec exec = Exec::parallel);

struct DispersionCalibration {
  double best_scale = 1.0;
  std::vector<double> objective;  // aligned with the grid
  std::size_t excluded_cells = 0;  // (arm, stratum) cells with < 2 observed units
};

/// Grid search for the dispersion multiplier minimising the summed squared
/// gap between simulated and observed per-(arm, stratum) variances.
DispersionCalibration calibrate_dispersion(const SimulatorSpec& sim, const Dataset& data,
                                           std::span<const double> grid,
                                           std::size_t replicates = 20,
                                           std::uint64_t seed = 0,
                                           Exec exec = Exec::parallel);

}  // namespace twincf
