#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace twincf {

enum class MarginalFamily { normal, lognormal, bernoulli };

std::string to_string(MarginalFamily family);
MarginalFamily marginal_family_from_string(const std::string& name);

/// One arm's outcome law within a stratum. The location (mean for normal,
/// log-mean for lognormal) may depend linearly on the covariates through
/// `coef`; spread is constant. A normal law with sd = 0 is a point mass.
struct MarginalLaw {
  MarginalFamily family = MarginalFamily::normal;
  double location = 0.0;  // mean, or meanlog for lognormal
  double scale = 1.0;     // sd, or sdlog for lognormal
  double p = 0.5;         // Bernoulli success probability
  std::vector<double> coef;

  static MarginalLaw normal(double mean, double sd, std::vector<double> coef = {});
  static MarginalLaw lognormal(double meanlog, double sdlog, std::vector<double> coef = {});
  static MarginalLaw bernoulli(double p);

  /// Throws SpecError naming `field` when parameters are illegal.
  void validate(const std::string& field, std::size_t covariate_dim) const;

  double location_at(std::span<const double> x) const;

  /// Maps a copula uniform to an outcome. When the normal score of `u` is
  /// already known it is passed in `z` to skip the round trip through Phi.
  double from_uniform(double u, std::optional<double> z, std::span<const double> x,
                      double dispersion = 1.0) const;

  double cdf(double y, std::span<const double> x = {}) const;
  double quantile(double u, std::span<const double> x = {}) const;
  double mean(std::span<const double> x = {}) const;
  double variance(std::span<const double> x = {}) const;

  /// Returns a copy shifted in location so that the KS distance to `*this`
  /// is exactly `epsilon` (sign +1 shifts up, -1 down). `fallback_width`
  /// is used for point masses, where any shift has KS distance 1.
  MarginalLaw ks_shifted(double epsilon, int sign, double fallback_width) const;

  MarginalLaw with_dispersion(double factor) const;
};

}  // namespace twincf
