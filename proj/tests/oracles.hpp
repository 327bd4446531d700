#pragma once
// Reference computations kept independent of the library code under test.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace oracle {

inline double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double ecdf(std::span<const double> xs, double t) {
  return static_cast<double>(std::count_if(xs.begin(), xs.end(), [t](double v) { return v <= t; })) / xs.size();
}

/// sup_t |F_x(t) - F_y(t)| evaluated at every sample point, on integer
/// counts so the only rounding is the final division.
inline double ks(std::span<const double> xs, std::span<const double> ys) {
  const long n = static_cast<long>(xs.size()), m = static_cast<long>(ys.size());
  long best = 0;
  auto at = [&](double t) {
    const long cx = std::count_if(xs.begin(), xs.end(), [t](double v) { return v <= t; });
    const long cy = std::count_if(ys.begin(), ys.end(), [t](double v) { return v <= t; });
    best = std::max(best, std::abs(cx * m - cy * n));
  };
  for (double t : xs) at(t);
  for (double t : ys) at(t);
  return static_cast<double>(best) / static_cast<double>(n * m);
}

inline double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

inline double var(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

/// Closed-form simple OLS: (intercept, slope).
inline std::pair<double, double> ols(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double b = sxy / sxx;
  return {my - b * mx, b};
}

/// P(X <= h, Y <= k) for a standard bivariate normal, by 1-D quadrature of
/// Phi((k - rho x)/sqrt(1-rho^2)) phi(x) over x <= h.
inline double bvn(double h, double k, double rho) {
  const int n = 20000;
  const double lo = -9.0, hi = std::min(h, 9.0);
  if (hi <= lo) return 0.0;
  const double dx = (hi - lo) / n, s = std::sqrt(1.0 - rho * rho);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * dx;
    acc += std::exp(-0.5 * x * x) * phi_cdf((k - rho * x) / s);
  }
  return acc * dx / std::sqrt(2.0 * M_PI);
}

}  // namespace oracle
