#include "twincf/copula.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

#include "twincf/error.hpp"
#include "twincf/normal.hpp"

namespace twincf {
namespace {

constexpr double kRhoFrechetCutoff = 1e-12;

// Gauss-Legendre half-rules used by the bivariate normal integral.
constexpr std::array<double, 3> kW6 = {0.1713244923791705, 0.3607615730481384,
                                       0.4679139345726904};
constexpr std::array<double, 3> kX6 = {0.9324695142031522, 0.6612093864662647,
                                       0.2386191860831970};
constexpr std::array<double, 6> kW12 = {0.04717533638651177, 0.1069393259953183,
                                        0.1600783285433464,  0.2031674267230659,
                                        0.2334925365383547,  0.2491470458134029};
constexpr std::array<double, 6> kX12 = {0.9815606342467191, 0.9041172563704750,
                                        0.7699026741943050, 0.5873179542866171,
                                        0.3678314989981802, 0.1252334085114692};
constexpr std::array<double, 10> kW20 = {
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
    0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183821,
    0.1491729864726037,  0.1527533871307259};
constexpr std::array<double, 10> kX20 = {
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259, 0.8391169718222188,
    0.7463319064601508, 0.6360536807265150, 0.5108670019508271, 0.3737060887154196,
    0.2277858511416451, 0.07652652113349733};

// Upper orthant probability P(X > dh, Y > dk).
double bvnu(double dh, double dk, double r) {
  if (std::isinf(dh) && dh > 0) return 0.0;
  if (std::isinf(dk) && dk > 0) return 0.0;
  if (std::isinf(dh)) return std::isinf(dk) ? 1.0 : normal_cdf(-dk);
  if (std::isinf(dk)) return normal_cdf(-dh);
  if (r == 0.0) return normal_cdf(-dh) * normal_cdf(-dk);

  const double tp = 2.0 * std::numbers::pi;
  double h = dh;
  double k = dk;
  double hk = h * k;

  const double* w = nullptr;
  const double* x = nullptr;
  std::size_t ng = 0;
  if (std::abs(r) < 0.3) {
    w = kW6.data(); x = kX6.data(); ng = kW6.size();
  } else if (std::abs(r) < 0.75) {
    w = kW12.data(); x = kX12.data(); ng = kW12.size();
  } else {
    w = kW20.data(); x = kX20.data(); ng = kW20.size();
  }

  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    for (std::size_t i = 0; i < ng; ++i) {
      for (const double xi : {1.0 - x[i], 1.0 + x[i]}) {
        const double sn = std::sin(asr * xi);
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return std::clamp(bvn * asr / tp + normal_cdf(-h) * normal_cdf(-k), 0.0, 1.0);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = 1.0 - r * r;
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    double asr = -(bs / as + hk) / 2.0;
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    if (asr > -100.0) {
      bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    }
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(tp) * normal_cdf(-b / a);
      bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a /= 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < ng; ++i) {
      for (const double xi : {1.0 - x[i], 1.0 + x[i]}) {
        const double xs = (a * xi) * (a * xi);
        asr = -(bs / xs + hk) / 2.0;
        if (asr <= -100.0) continue;
        const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
        const double rs = std::sqrt(1.0 - xs);
        const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
        sum += w[i] * std::exp(asr) * (sp - ep);
      }
    }
    bvn = (a * sum - bvn) / tp;
  }
  if (r > 0.0) {
    bvn += normal_cdf(-std::max(h, k));
  } else if (h >= k) {
    bvn = -bvn;
  } else {
    const double l = h < 0.0 ? normal_cdf(k) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-k);
    bvn = l - bvn;
  }
  return std::clamp(bvn, 0.0, 1.0);
}

// Debye function D_k(x) = k/x^k * int_0^x t^k/(e^t - 1) dt, x > 0, by
// composite Simpson on a fine grid (smooth integrand).
double debye(int order, double x) {
  const int n = 2000;
  const double h = x / n;
  auto f = [order](double t) {
    if (t == 0.0) return order == 1 ? 1.0 : 0.0;
    return std::pow(t, order) / std::expm1(t);
  };
  double s = f(0.0) + f(x);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return order / std::pow(x, order) * s * h / 3.0;
}

}  // namespace

std::string to_string(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::gaussian: return "gaussian";
    case CopulaFamily::frank: return "frank";
    case CopulaFamily::clayton: return "clayton";
    case CopulaFamily::independence: return "independence";
    case CopulaFamily::comonotone: return "comonotone";
    case CopulaFamily::countermonotone: return "countermonotone";
  }
  return "unknown";
}

CopulaFamily copula_family_from_string(const std::string& name) {
  std::string s;
  for (const char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "gaussian") return CopulaFamily::gaussian;
  if (s == "frank") return CopulaFamily::frank;
  if (s == "clayton") return CopulaFamily::clayton;
  if (s == "independence") return CopulaFamily::independence;
  if (s == "comonotone") return CopulaFamily::comonotone;
  if (s == "countermonotone") return CopulaFamily::countermonotone;
  throw SpecError("copula.family", "unknown copula family '" + name + "'");
}

bool CopulaSpec::parametric() const noexcept {
  return family == CopulaFamily::gaussian || family == CopulaFamily::frank ||
         family == CopulaFamily::clayton;
}

void CopulaSpec::validate() const {
  switch (family) {
    case CopulaFamily::gaussian:
      if (!(parameter > -1.0 && parameter < 1.0)) {
        throw DomainError("gaussian copula requires rho in (-1,1), got " + std::to_string(parameter));
      }
      break;
    case CopulaFamily::frank:
      if (!(parameter != 0.0) || !std::isfinite(parameter)) {
        throw DomainError("frank copula requires alpha != 0");
      }
      break;
    case CopulaFamily::clayton:
      if (!(parameter > 0.0) || !std::isfinite(parameter)) {
        throw DomainError("clayton copula requires theta > 0");
      }
      break;
    default:
      break;
  }
}

std::string CopulaSpec::label() const {
  if (!parametric()) return to_string(family);
  return to_string(family) + "(" + std::to_string(parameter) + ")";
}

double bivariate_normal_cdf(double h, double k, double rho) {
  if (rho >= 1.0 - kRhoFrechetCutoff) return normal_cdf(std::min(h, k));
  if (rho <= -1.0 + kRhoFrechetCutoff) return std::max(normal_cdf(h) + normal_cdf(k) - 1.0, 0.0);
  return bvnu(-h, -k, rho);
}

double copula_cdf(const CopulaSpec& spec, double u, double v) {
  spec.validate();
  if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
    throw ArgumentError("copula_cdf: arguments must lie in [0,1]");
  }
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  switch (spec.family) {
    case CopulaFamily::independence: return u * v;
    case CopulaFamily::comonotone: return std::min(u, v);
    case CopulaFamily::countermonotone: return std::max(u + v - 1.0, 0.0);
    case CopulaFamily::gaussian: {
      const double rho = spec.parameter;
      if (rho >= 1.0 - kRhoFrechetCutoff) return std::min(u, v);
      if (rho <= -1.0 + kRhoFrechetCutoff) return std::max(u + v - 1.0, 0.0);
      return bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), rho);
    }
    case CopulaFamily::frank: {
      const double a = spec.parameter;
      const double num = std::expm1(-a * u) * std::expm1(-a * v);
      return -std::log1p(num / std::expm1(-a)) / a;
    }
    case CopulaFamily::clayton: {
      const double t = spec.parameter;
      const double s = std::pow(u, -t) + std::pow(v, -t) - 1.0;
      return std::pow(s, -1.0 / t);
    }
  }
  return 0.0;
}

CopulaDraw sample_pair(const CopulaSpec& spec, NoiseStream& stream) {
  CopulaDraw d;
  d.u = stream.uniform();
  switch (spec.family) {
    case CopulaFamily::independence:
      d.v = stream.uniform();
      break;
    case CopulaFamily::comonotone:
      d.v = d.u;
      break;
    case CopulaFamily::countermonotone:
      d.v = 1.0 - d.u;
      break;
    case CopulaFamily::gaussian: {
      const double rho = spec.parameter;
      const double z1 = normal_quantile(d.u);
      const double z2 = normal_quantile(stream.uniform());
      const double w = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
      d.zu = z1;
      d.zv = w;
      d.v = normal_cdf(w);
      break;
    }
    case CopulaFamily::frank: {
      // v = C^{-1}(t | u), the inverse of dC/du.
      const double a = spec.parameter;
      const double t = stream.uniform();
      const double eau = std::exp(-a * d.u);
      const double num = t * std::expm1(-a);
      const double den = t + (1.0 - t) * eau;
      d.v = -std::log1p(num / den) / a;
      break;
    }
    case CopulaFamily::clayton: {
      const double th = spec.parameter;
      const double t = stream.uniform();
      const double inner = std::pow(d.u, -th) * (std::pow(t, -th / (1.0 + th)) - 1.0) + 1.0;
      d.v = std::pow(inner, -1.0 / th);
      break;
    }
  }
  d.v = std::clamp(d.v, 0.0, 1.0);
  return d;
}

CopulaDraw sample_pair(const CopulaSpec& spec, const NoiseRecord& noise) {
  spec.validate();
  NoiseStream stream(noise);
  return sample_pair(spec, stream);
}

std::optional<double> spearman_rho(const CopulaSpec& spec) {
  switch (spec.family) {
    case CopulaFamily::independence: return 0.0;
    case CopulaFamily::comonotone: return 1.0;
    case CopulaFamily::countermonotone: return -1.0;
    case CopulaFamily::gaussian: return 6.0 / std::numbers::pi * std::asin(spec.parameter / 2.0);
    case CopulaFamily::frank: {
      const double a = spec.parameter;
      // Debye identity holds for a > 0; Frank is radially symmetric in sign.
      const double x = std::abs(a);
      const double r = 1.0 - 12.0 / x * (debye(1, x) - debye(2, x));
      return a > 0 ? r : -r;
    }
    case CopulaFamily::clayton: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace twincf
