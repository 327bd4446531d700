#pragma once

#include <optional>
#include <string>

#include "twincf/rng.hpp"

namespace twincf {

enum class CopulaFamily { gaussian, frank, clayton, independence, comonotone, countermonotone };

std::string to_string(CopulaFamily family);
CopulaFamily copula_family_from_string(const std::string& name);

/// A bivariate copula. Gaussian takes rho in (-1,1), Frank alpha != 0,
/// Clayton theta > 0; the other families carry no parameter.
struct CopulaSpec {
  CopulaFamily family = CopulaFamily::independence;
  double parameter = 0.0;

  static CopulaSpec gaussian(double rho) { return {CopulaFamily::gaussian, rho}; }
  static CopulaSpec frank(double alpha) { return {CopulaFamily::frank, alpha}; }
  static CopulaSpec clayton(double theta) { return {CopulaFamily::clayton, theta}; }
  static CopulaSpec independence() { return {CopulaFamily::independence, 0.0}; }
  static CopulaSpec comonotone() { return {CopulaFamily::comonotone, 0.0}; }
  static CopulaSpec countermonotone() { return {CopulaFamily::countermonotone, 0.0}; }

  bool parametric() const noexcept;
  /// Throws DomainError when the parameter is outside the family's range.
  void validate() const;
  std::string label() const;

  friend bool operator==(const CopulaSpec&, const CopulaSpec&) = default;
};

/// One draw from a copula. For the Gaussian family the normal scores are
/// kept so Gaussian-score marginals avoid a Phi / Phi^-1 round trip.
struct CopulaDraw {
  double u = 0.0;
  double v = 0.0;
  std::optional<double> zu;
  std::optional<double> zv;
};

/// C(u, v). Exact Frechet formulas at |rho| -> 1.
double copula_cdf(const CopulaSpec& spec, double u, double v);

/// Draws (u, v) from `spec` using the stream. Gaussian via the Cholesky
/// factor of the 2x2 correlation matrix; Frank and Clayton by inverting the
/// conditional distribution of v given u. The first uniform of the stream is
/// always u, so arm-1 values coincide across couplings sharing a stream.
CopulaDraw sample_pair(const CopulaSpec& spec, NoiseStream& stream);
CopulaDraw sample_pair(const CopulaSpec& spec, const NoiseRecord& noise);

/// Phi_2(h, k; rho) = P(X <= h, Y <= k) for standard bivariate normals,
/// Genz's double-precision adaptation of Drezner-Wesolowsky.
double bivariate_normal_cdf(double h, double k, double rho);

/// Spearman's rho of the copula where a closed form exists (Gaussian,
/// Frank via Debye functions, the Frechet extremes, independence).
std::optional<double> spearman_rho(const CopulaSpec& spec);

}  // namespace twincf
