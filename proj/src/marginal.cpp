#include "twincf/marginal.hpp"

#include <algorithm>
#include <cmath>

#include "twincf/error.hpp"
#include "twincf/normal.hpp"

namespace twincf {

std::string to_string(MarginalFamily family) {
  switch (family) {
    case MarginalFamily::normal: return "normal";
    case MarginalFamily::lognormal: return "lognormal";
    case MarginalFamily::bernoulli: return "bernoulli";
  }
  return "unknown";
}

MarginalFamily marginal_family_from_string(const std::string& name) {
  if (name == "normal") return MarginalFamily::normal;
  if (name == "lognormal") return MarginalFamily::lognormal;
  if (name == "bernoulli") return MarginalFamily::bernoulli;
  throw SpecError("family", "unknown marginal family '" + name + "'");
}

MarginalLaw MarginalLaw::normal(double mean, double sd, std::vector<double> coef) {
  MarginalLaw m;
  m.family = MarginalFamily::normal;
  m.location = mean;
  m.scale = sd;
  m.coef = std::move(coef);
  return m;
}

MarginalLaw MarginalLaw::lognormal(double meanlog, double sdlog, std::vector<double> coef) {
  MarginalLaw m;
  m.family = MarginalFamily::lognormal;
  m.location = meanlog;
  m.scale = sdlog;
  m.coef = std::move(coef);
  return m;
}

MarginalLaw MarginalLaw::bernoulli(double p) {
  MarginalLaw m;
  m.family = MarginalFamily::bernoulli;
  m.p = p;
  return m;
}

void MarginalLaw::validate(const std::string& field, std::size_t covariate_dim) const {
  switch (family) {
    case MarginalFamily::normal:
      if (!(scale >= 0.0) || !std::isfinite(scale)) throw SpecError(field + ".sd", "must be >= 0");
      break;
    case MarginalFamily::lognormal:
      if (!(scale > 0.0) || !std::isfinite(scale)) throw SpecError(field + ".sdlog", "must be > 0");
      break;
    case MarginalFamily::bernoulli:
      if (!(p >= 0.0 && p <= 1.0)) throw SpecError(field + ".p", "must lie in [0,1]");
      if (!coef.empty()) throw SpecError(field + ".coef", "not supported for bernoulli");
      break;
  }
  if (!std::isfinite(location)) throw SpecError(field + ".location", "must be finite");
  if (!coef.empty() && coef.size() != covariate_dim) {
    throw SpecError(field + ".coef", "length " + std::to_string(coef.size()) +
                                         " does not match covariate dimension " +
                                         std::to_string(covariate_dim));
  }
}

double MarginalLaw::location_at(std::span<const double> x) const {
  double loc = location;
  const std::size_t k = std::min(coef.size(), x.size());
  for (std::size_t j = 0; j < k; ++j) loc += coef[j] * x[j];
  return loc;
}

double MarginalLaw::from_uniform(double u, std::optional<double> z, std::span<const double> x,
                                 double dispersion) const {
  switch (family) {
    case MarginalFamily::normal: {
      const double s = scale * dispersion;
      if (s == 0.0) return location_at(x);
      return location_at(x) + s * (z ? *z : normal_quantile(u));
    }
    case MarginalFamily::lognormal:
      return std::exp(location_at(x) + scale * dispersion * (z ? *z : normal_quantile(u)));
    case MarginalFamily::bernoulli:
      return u > 1.0 - p ? 1.0 : 0.0;
  }
  return 0.0;
}

double MarginalLaw::cdf(double y, std::span<const double> x) const {
  switch (family) {
    case MarginalFamily::normal: {
      const double loc = location_at(x);
      if (scale == 0.0) return y >= loc ? 1.0 : 0.0;
      return normal_cdf((y - loc) / scale);
    }
    case MarginalFamily::lognormal:
      if (y <= 0.0) return 0.0;
      return normal_cdf((std::log(y) - location_at(x)) / scale);
    case MarginalFamily::bernoulli:
      if (y < 0.0) return 0.0;
      return y < 1.0 ? 1.0 - p : 1.0;
  }
  return 0.0;
}

double MarginalLaw::quantile(double u, std::span<const double> x) const {
  return from_uniform(u, std::nullopt, x);
}

double MarginalLaw::mean(std::span<const double> x) const {
  switch (family) {
    case MarginalFamily::normal: return location_at(x);
    case MarginalFamily::lognormal: return std::exp(location_at(x) + 0.5 * scale * scale);
    case MarginalFamily::bernoulli: return p;
  }
  return 0.0;
}

double MarginalLaw::variance(std::span<const double> x) const {
  switch (family) {
    case MarginalFamily::normal: return scale * scale;
    case MarginalFamily::lognormal: {
      const double s2 = scale * scale;
      return std::expm1(s2) * std::exp(2.0 * location_at(x) + s2);
    }
    case MarginalFamily::bernoulli: return p * (1.0 - p);
  }
  return 0.0;
}

MarginalLaw MarginalLaw::ks_shifted(double epsilon, int sign, double fallback_width) const {
  MarginalLaw out = *this;
  if (epsilon <= 0.0) return out;
  switch (family) {
    case MarginalFamily::normal:
    case MarginalFamily::lognormal:
      // For a location family with symmetric unimodal density the KS
      // distance of a shift s is 2*Phi(s/(2*sd)) - 1.
      if (scale == 0.0) {
        out.location += sign * epsilon * fallback_width;
      } else {
        out.location += sign * 2.0 * scale * normal_quantile(0.5 * (1.0 + epsilon));
      }
      break;
    case MarginalFamily::bernoulli:
      out.p = std::clamp(p + sign * epsilon, 0.0, 1.0);
      break;
  }
  return out;
}

MarginalLaw MarginalLaw::with_dispersion(double factor) const {
  MarginalLaw out = *this;
  if (family != MarginalFamily::bernoulli) out.scale *= factor;
  return out;
}

}  // namespace twincf
