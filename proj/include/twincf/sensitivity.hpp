#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twincf/copula.hpp"
#include "twincf/exec.hpp"
#include "twincf/model.hpp"

namespace twincf {

enum class BoundsRegime { frechet, pqd_constrained, monotone_constrained, rank_invariant };
std::string to_string(BoundsRegime r);

struct BoundsResult {
  std::string estimand;
  double lower = 0.0;
  double upper = 0.0;
  BoundsRegime regime = BoundsRegime::frechet;
  std::vector<std::string> attaining_copulas;
  /// Set when the constraint cannot hold for the given marginals; the
  /// interval is then meaningless.
  std::optional<std::string> infeasible;

  bool contains(double v, double tol = 0.0) const noexcept { return v >= lower - tol && v <= upper + tol; }
};

/// Var(tau) under the Frechet extremes: [(s1-s0)^2, (s1+s0)^2].
BoundsResult fh_var_bounds(double sigma1, double sigma0);

using QuantileFunction = std::function<double(double)>;

/// pi_+ under the comonotone and countermonotone couplings by midpoint
/// quadrature on grid_n points; lower = min, upper = max of the two.
BoundsResult fh_pbenefit_bounds(const QuantileFunction& q1, const QuantileFunction& q0,
                                std::size_t grid_n = 10000);

// ---- Sensitivity curves ---------------------------------------------------

enum class Functional { ate, var_tau, pbenefit, pharm, g_tau_at_t };
std::string to_string(Functional f);
Functional functional_from_string(const std::string& s);

struct Theta {
  Functional functional = Functional::ate;
  double t = 0.0;  // threshold for g_tau_at_t

  /// Evaluates the functional on a sample of tau values.
  double evaluate(std::span<const double> tau) const;
  /// Monte Carlo standard error of `evaluate` on an iid sample.
  double standard_error(std::span<const double> tau) const;
};

struct SensitivityCurve {
  CopulaFamily family = CopulaFamily::gaussian;
  Theta theta;
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> mc_se;
  double reference_parameter = 0.0;
  /// KS distance between the tau law at the reference parameter and under
  /// independence.
  double csi = 0.0;
  double range() const;
  /// Range within 3 Monte Carlo standard errors.
  bool copula_robust() const;
};

/// The grid -0.9, -0.7, ..., 0.9.
std::vector<double> default_rho_grid();

/// psi_theta at each copula parameter. Each arm is represented by mc_n
/// quantile-stratified points (x-free laws); copula draws re-pair them by
/// rank, using the same noise for every grid point.
SensitivityCurve sensitivity_curve(const ArmLaws& marginals, CopulaFamily family, std::span<const double> grid,
                                   Theta theta, std::size_t mc_n, std::uint64_t seed,
                                   std::optional<double> reference_parameter = std::nullopt,
                                   Exec exec = Exec::parallel);

/// Tau sample under one copula with the rank coupling used by the curves.
std::vector<double> coupled_tau_sample(const ArmLaws& marginals, const CopulaSpec& copula, std::size_t mc_n,
                                       std::uint64_t seed, Exec exec = Exec::parallel);

void write_curve_csv(std::ostream& os, const SensitivityCurve& curve);

// ---- Constrained bounds ---------------------------------------------------

enum class Constraint { pqd, monotone, rank_invariance };
std::string to_string(Constraint c);
Constraint constraint_from_string(const std::string& s);

struct ConstraintOptions {
  std::size_t grid_n = 10000;        // quadrature points
  std::size_t mc_n = 20000;          // Monte Carlo pairs per coupling
  std::size_t rho_points = 41;       // Gaussian rho grid over [0, 1)
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

BoundsResult constrained_bounds(const ArmLaws& marginals, Constraint constraint, Theta theta,
                                const ConstraintOptions& options = {});

// ---- Proxy-joint checks ---------------------------------------------------

using Matrix = std::vector<std::vector<double>>;

/// Frobenius norm of R_sim - R_obs.
double concordance_discrepancy(const Matrix& r_sim, const Matrix& r_obs);

struct ProxyEvidence {
  double rho_obs = 0.0;
  std::size_t n_cross = 0;
};

struct CopulaPosterior {
  std::vector<double> grid;       // Gaussian rho values
  std::vector<double> prior;      // normalised
  std::vector<double> posterior;  // normalised
  std::vector<ProxyEvidence> evidence;
  double mode = 0.0;
  double median = 0.0;
  double credible_lo = 0.0;  // for psi
  double credible_hi = 0.0;
  double gamma = 0.95;
};

/// Grid posterior over the Gaussian copula parameter; each piece of
/// evidence contributes a normal likelihood in Fisher-z space with variance
/// 1/(n_cross - 3). The credible interval is for psi(rho), equal-tailed.
CopulaPosterior copula_posterior(std::span<const double> grid, std::span<const double> prior_density,
                                 std::span<const ProxyEvidence> evidence,
                                 const std::function<double(double)>& psi, double gamma = 0.95);

/// Evenly spaced interior points of (lo, hi) with a flat density.
std::pair<std::vector<double>, std::vector<double>> uniform_rho_prior(double lo, double hi, std::size_t points);

struct HierarchyVerdict {
  bool holds = true;
  /// First failing inclusion: "point in bayes", "bayes in constrained",
  /// "constrained in frechet".
  std::optional<std::string> violated;
};

HierarchyVerdict hierarchy_check(double point, std::pair<double, double> bayes,
                                 std::pair<double, double> constrained, std::pair<double, double> frechet,
                                 double tol = 1e-9);

}  // namespace twincf
