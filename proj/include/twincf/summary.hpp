#pragma once

#include <span>
#include <vector>

namespace twincf {

double mean(std::span<const double> xs);
/// Sample variance with n-1 denominator; 0 for fewer than two values.
double sample_variance(std::span<const double> xs);
double sample_sd(std::span<const double> xs);
/// Type-7 (linear interpolation) quantile of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);
std::vector<double> sorted_copy(std::span<const double> xs);

}  // namespace twincf
