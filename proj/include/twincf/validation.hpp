#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twincf/exec.hpp"
#include "twincf/model.hpp"
#include "twincf/sensitivity.hpp"
#include "twincf/stats.hpp"

namespace twincf {

struct LevelConfig {
  double alpha = 0.05;
  double eps0_bar = 0.1;
  double eps1_bar = 0.1;
  std::size_t min_stratum_n = 50;
  std::size_t bootstrap_B = 200;
  std::size_t ad_permutations = 999;     // 0 skips the AD permutation p-value
  std::size_t energy_permutations = 0;   // 0 reports the distance only
  bool cmmd = false;
  std::size_t cmmd_permutations = 199;
  double interval_level = 0.90;
  std::optional<double> slope_tolerance;  // |beta1 - 1| <= tol turns the slope row into pass/fail
  std::optional<double> rmspe_max;
  std::optional<int> placebo_arm;         // arm whose law fills both placebo slots
  std::vector<std::pair<int, int>> monotonicity_pairs;  // (d1, d2): expect Y(d1) <= Y(d2)
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;

  void validate() const;
};

enum class RowOutcome { pass, fail, report_only, skipped };
std::string to_string(RowOutcome o);

struct ScoreRow {
  int level = 0;
  std::string test;
  std::string statistic;
  std::optional<double> value;
  std::string threshold;  // display form
  std::optional<double> threshold_value;
  RowOutcome outcome = RowOutcome::report_only;
  std::string note;
};

struct Level0Result {
  std::array<TestResult, 2> ks;  // indexed by arm
  std::array<double, 2> energy{};
  std::array<std::optional<TestResult>, 2> energy_test;
  std::array<std::optional<TestResult>, 2> ad;
  double eps0 = 0.0;
  bool rejected = false;
  bool within_tolerance = true;
  bool passed = true;
  std::vector<ScoreRow> rows;
};

struct StratumCell {
  int stratum = 0;
  int arm = 0;
  std::size_t n_obs = 0;
  std::size_t n_sim = 0;
  TestResult ks;
  bool rejects = false;
};

struct Level1Result {
  std::vector<StratumCell> cells;
  std::vector<std::string> excluded;  // "stratum k, arm d (n = ...)"
  double eps1 = 0.0;
  double cell_alpha = 0.0;            // alpha / number of tested cells
  std::array<std::optional<TestResult>, 2> cmmd;
  bool passed = true;
  std::vector<ScoreRow> rows;
};

struct Level2Result {
  CalibrationFit fit;
  std::optional<double> coverage;
  double expected_coverage = 0.0;
  std::optional<double> coverage_z;
  std::size_t order_l = 0;
  std::vector<double> per_stratum_coverage;
  bool passed = true;
  std::vector<ScoreRow> rows;
};

struct CatePair {
  int stratum = 0;
  double sim = 0.0;
  std::optional<double> rct;
};

struct Level3Result {
  bool skipped = false;
  std::string reason;
  double ate_sim = 0.0;
  double ate_rct = 0.0;
  double t3 = 0.0;
  double se = 0.0;
  double z = 0.0;
  std::size_t n_rct = 0;
  std::vector<CatePair> cate_pairs;
  bool passed = true;
  std::vector<ScoreRow> rows;
};

struct PlaceboResult {
  double effect = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool rejects = false;
};

struct MonotonicityResult {
  int d1 = 0;
  int d2 = 1;
  double violation_rate = 0.0;
};

struct Level4Result {
  double csi = 0.0;
  std::string csi_method;  // "rerun" or "permutation"
  BoundsResult var_bounds;
  BoundsResult pbenefit_bounds;
  std::vector<MonotonicityResult> monotonicity;
  std::optional<PlaceboResult> placebo;
  std::vector<ScoreRow> rows;
};

/// Per-arm KS of simulated draws (units observed in that arm, all
/// replicates) against observed outcomes, each at alpha/2.
Level0Result level0(const TwinDraws& draws, const Dataset& data, const LevelConfig& config);
Level1Result level1(const TwinDraws& draws, const Dataset& data, const LevelConfig& config);
Level2Result level2(const TwinDraws& draws, const Dataset& data, const LevelConfig& config);
Level3Result level3(const TwinDraws& draws, const Dataset& data, const LevelConfig& config);
/// `sim` may be null: CSI then falls back to within-stratum permutation of
/// y0 and the placebo test is skipped.
Level4Result level4(const TwinDraws& draws, const Dataset& data, const SimulatorSpec* sim,
                    const LevelConfig& config);

/// Placebo z-test: both slots drawn from one arm's law with independent noise.
PlaceboResult placebo_test(const SimulatorSpec& sim, const Dataset& data, int arm, std::size_t replicates,
                           const LevelConfig& config);

struct Scorecard {
  double alpha = 0.05;
  double eps0_bar = 0.1;
  double eps1_bar = 0.1;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t n_units = 0;
  std::size_t replicates = 0;
  std::string coupling;

  std::optional<Level0Result> l0;
  std::optional<Level1Result> l1;
  std::optional<Level2Result> l2;
  std::optional<Level3Result> l3;
  std::optional<Level4Result> l4;
  std::vector<ScoreRow> rows;

  double eps0 = 0.0;
  std::optional<double> eps1;
  std::vector<std::string> licensed;
  std::vector<std::string> never_licensed;
  bool stopped = false;
  std::string stop_reason;

  bool complete() const noexcept { return !stopped; }
  /// True when every pass/fail row passes and the protocol ran to the end.
  bool passed() const;
};

/// Estimands licensed by a pass pattern: {ate} after Level 0, the marginal
/// family after Levels 0 and 1. Copula-dependent entries never appear.
std::vector<std::string> licensed_estimands(bool level0_pass, bool level1_pass);

Scorecard run_protocol(const TwinDraws& draws, const Dataset& data, const SimulatorSpec* sim,
                       const LevelConfig& config);

struct TransportReport {
  double eps_treated = 0.0;
  double eps_control = 0.0;
  double discrepancy = 0.0;
  std::optional<double> t3;
  double delta_treated = 0.0;
  double delta_control = 0.0;
  std::optional<double> widened_bound;  // needs outcome bounds
  struct Placebo {
    int stratum_a = 0;
    int stratum_b = 0;
    double eps_a = 0.0;
    double eps_b = 0.0;
    double difference = 0.0;
    double band = 0.0;
    bool differential = false;
  };
  std::optional<Placebo> placebo;
};

TransportReport transport_diagnostics(const TwinDraws& draws, const Dataset& data, const LevelConfig& config,
                                      std::pair<double, double> delta,
                                      std::optional<std::pair<int, int>> equivalent_strata = std::nullopt);

struct SampleSizeParams {
  double epsilon = 0.0;   // levels 0, 1 (KS units)
  double alpha = 0.05;
  double power = 0.8;
  int strata = 1;         // level 1
  double delta = 0.0;     // level 3 ATE discrepancy
  double sigma_y = 1.0;   // level 3 outcome sd
};

std::size_t sample_size(int level, const SampleSizeParams& params);

}  // namespace twincf
