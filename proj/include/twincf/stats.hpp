#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "twincf/exec.hpp"

namespace twincf {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double critical_value = 0.0;
  std::size_t n_x = 0;
  std::size_t n_y = 0;
  std::string method;

  /// Rejects at the level the critical value was computed for.
  bool rejects() const noexcept { return statistic > critical_value; }
};

// ---- Kolmogorov-Smirnov ---------------------------------------------------

/// Kolmogorov limiting CDF K(x) = 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_cdf(double x);
/// 1 - K(x), evaluated without cancellation in the upper tail.
double kolmogorov_sf(double x);
/// c_alpha with K(c_alpha) = 1 - alpha.
double kolmogorov_quantile(double alpha);

/// sup_y |F_x(y) - F_y(y)| over pooled order statistics (right-continuous),
/// exact: the maximal integer gap |i*m - j*n| divided by n*m.
double ks_statistic(std::span<const double> xs, std::span<const double> ys);
/// O(n*m) reference evaluating both CDFs at every pooled point.
double ks_statistic_bruteforce(std::span<const double> xs, std::span<const double> ys);

/// Two-sample KS with the asymptotic Kolmogorov p-value and the critical
/// value c_alpha * sqrt((n+m)/(n*m)).
TestResult ks_two_sample(std::span<const double> xs, std::span<const double> ys, double alpha = 0.05);

// ---- Energy distance ------------------------------------------------------

/// 2E|X-Y| - E|X-X'| - E|Y-Y'| as a V-statistic (all pairs), computed from
/// sorted prefix sums in O((n+m) log(n+m)).
double energy_distance(std::span<const double> xs, std::span<const double> ys);
/// Same quantity by explicit pair sums; OpenMP over rows.
double energy_distance_bruteforce(std::span<const double> xs, std::span<const double> ys,
                                  Exec exec = Exec::parallel);
TestResult energy_test(std::span<const double> xs, std::span<const double> ys,
                       std::size_t permutations, std::uint64_t seed, Exec exec = Exec::parallel);

// ---- Anderson-Darling -----------------------------------------------------

/// Two-sample Anderson-Darling statistic (Scholz-Stephens midrank form,
/// valid with ties).
double anderson_darling_statistic(std::span<const double> xs, std::span<const double> ys);
/// Permutation p-value with `permutations` relabelings (>= 999 recommended).
TestResult anderson_darling_two_sample(std::span<const double> xs, std::span<const double> ys,
                                       std::size_t permutations = 999, std::uint64_t seed = 0,
                                       Exec exec = Exec::parallel);

// ---- Conditional MMD ------------------------------------------------------

/// Points (x_i, y_i) with x_i of length `dim`, stored row-major.
struct PairedSample {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::size_t size() const noexcept { return y.size(); }
};

struct MedianBandwidth {};
using Bandwidth = std::variant<double, MedianBandwidth>;

/// Median pairwise Euclidean distance over the pooled (x, y) points.
double median_heuristic_bandwidth(const PairedSample& a, const PairedSample& b);

/// Squared MMD (V-statistic) between the joint laws of (x, y) under a
/// product Gaussian kernel with common bandwidth.
double conditional_mmd(const PairedSample& a, const PairedSample& b, Bandwidth bandwidth,
                       Exec exec = Exec::parallel);
TestResult conditional_mmd_test(const PairedSample& a, const PairedSample& b, Bandwidth bandwidth,
                                std::size_t permutations, std::uint64_t seed,
                                Exec exec = Exec::parallel);

// ---- Calibration ----------------------------------------------------------

struct CalibrationFit {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double se0 = 0.0;
  double se1 = 0.0;
  double rmspe = 0.0;  // sqrt(mean(e^2)), e = observed - predicted
  double mape = 0.0;   // mean |e|
  double residual_sd = 0.0;  // OLS residual standard deviation
  std::size_t n = 0;
};

/// OLS of observed on predicted plus prediction-error summaries.
CalibrationFit calibration_regression(std::span<const double> predicted,
                                      std::span<const double> observed);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct CoverageResult {
  double rate = 0.0;
  std::vector<double> per_stratum;  // empty when no labels supplied; NaN for empty strata
};

CoverageResult interval_coverage(std::span<const Interval> intervals, std::span<const double> observed,
                                 std::span<const int> strata = {});

// ---- Resampling -----------------------------------------------------------

/// Estimator over a resample, given as indices into the original units.
using ResampleEstimator = std::function<double(std::span<const std::size_t>)>;

/// Nonparametric bootstrap standard error (sd over B resamples, n-1).
/// A throwing estimator is rethrown as Error naming the resample index.
double bootstrap_se(std::size_t n, const ResampleEstimator& estimator, std::size_t B,
                    std::uint64_t seed, Exec exec = Exec::parallel);
/// Stratified variant: each group is resampled within itself; the indices
/// passed on are concatenated in group order.
double bootstrap_se(std::span<const std::vector<std::size_t>> groups, const ResampleEstimator& estimator,
                    std::size_t B, std::uint64_t seed, Exec exec = Exec::parallel);

// ---- Correlation ----------------------------------------------------------

TestResult fisher_z_test(double rho_sim, double rho_obs, std::size_t n_cross, double alpha = 0.05);
double pearson_correlation(std::span<const double> xs, std::span<const double> ys);
double spearman_correlation(std::span<const double> xs, std::span<const double> ys);
/// Average ranks (1-based, ties share the mean rank).
std::vector<double> ranks(std::span<const double> xs);

/// Two-sided normal p-value 2*(1 - Phi(|z|)).
double two_sided_normal_p(double z);

}  // namespace twincf
