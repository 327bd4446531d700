#pragma once

namespace twincf {

double normal_cdf(double z) noexcept;
/// Standard normal quantile; p in (0,1), returns +/-inf at the endpoints.
double normal_quantile(double p) noexcept;
double normal_pdf(double z) noexcept;

}  // namespace twincf
