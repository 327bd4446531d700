#include "twincf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <numeric>

#include "twincf/error.hpp"
#include "twincf/normal.hpp"
#include "twincf/rng.hpp"
#include "twincf/summary.hpp"

namespace twincf {

namespace {

void require_nonempty(std::span<const double> xs, std::span<const double> ys, const char* who) {
  if (xs.empty() || ys.empty()) throw ArgumentError(std::string(who) + ": empty sample");
}

void require_finite(std::span<const double> xs, const char* who) {
  for (double v : xs)
    if (!std::isfinite(v)) throw ArgumentError(std::string(who) + ": non-finite value");
}

// Fisher-Yates shuffle of `labels` driven by one noise stream.
template <class T>
void shuffle_with(std::vector<T>& labels, NoiseStream& stream) {
  for (std::size_t i = labels.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(stream.below(i));
    std::swap(labels[i - 1], labels[j]);
  }
}

// Runs `stat(b)` for b in [0, B) and returns the permutation p-value
// (1 + #{stat_b >= observed}) / (B + 1).
template <class F>
double permutation_p(double observed, std::size_t B, Exec exec, F&& stat) {
  if (B == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values(B);
  const auto nb = static_cast<std::ptrdiff_t>(B);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t b = 0; b < nb; ++b) values[b] = stat(static_cast<std::size_t>(b));
  const double tol = 1e-12 * std::max(1.0, std::abs(observed));
  std::size_t at_least = 0;
  for (double v : values)
    if (v >= observed - tol) ++at_least;
  return static_cast<double>(1 + at_least) / static_cast<double>(B + 1);
}

}  // namespace

// ---- Kolmogorov -----------------------------------------------------------

double kolmogorov_cdf(double x) {
  if (!(x > 0.0)) return 0.0;
  if (x < 0.6) {
    // Jacobi theta form converges quickly for small x.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int k = 1; k < 50; ++k) {
      const double t = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi2 / (8.0 * x * x));
      s += t;
      if (t < 1e-300) break;
    }
    return std::sqrt(2.0 * std::numbers::pi) / x * s;
  }
  return 1.0 - kolmogorov_sf(x);
}

double kolmogorov_sf(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 0.6) return 1.0 - kolmogorov_cdf(x);
  double s = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double t = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? t : -t);
    if (t < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double kolmogorov_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("kolmogorov_quantile: alpha must lie in (0,1)");
  double lo = 1e-3, hi = 10.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_sf(mid) > alpha) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// ---- KS -------------------------------------------------------------------

double ks_statistic(std::span<const double> xs, std::span<const double> ys) {
  require_nonempty(xs, ys, "ks_statistic");
  require_finite(xs, "ks_statistic");
  require_finite(ys, "ks_statistic");
  auto a = sorted_copy(xs);
  auto b = sorted_copy(ys);
  const auto n = static_cast<std::int64_t>(a.size());
  const auto m = static_cast<std::int64_t>(b.size());
  std::int64_t i = 0, j = 0, best = 0;
  while (i < n || j < m) {
    double v;
    if (j >= m || (i < n && a[i] <= b[j])) v = a[i]; else v = b[j];
    while (i < n && a[i] <= v) ++i;
    while (j < m && b[j] <= v) ++j;
    best = std::max(best, std::abs(i * m - j * n));
  }
  return static_cast<double>(best) / (static_cast<double>(n) * static_cast<double>(m));
}

double ks_statistic_bruteforce(std::span<const double> xs, std::span<const double> ys) {
  require_nonempty(xs, ys, "ks_statistic_bruteforce");
  const auto n = static_cast<std::int64_t>(xs.size());
  const auto m = static_cast<std::int64_t>(ys.size());
  std::int64_t best = 0;
  auto probe = [&](double v) {
    std::int64_t cx = 0, cy = 0;
    for (double x : xs) cx += (x <= v);
    for (double y : ys) cy += (y <= v);
    best = std::max(best, std::abs(cx * m - cy * n));
  };
  for (double v : xs) probe(v);
  for (double v : ys) probe(v);
  return static_cast<double>(best) / (static_cast<double>(n) * static_cast<double>(m));
}

TestResult ks_two_sample(std::span<const double> xs, std::span<const double> ys, double alpha) {
  TestResult r;
  r.method = "ks";
  r.statistic = ks_statistic(xs, ys);
  r.n_x = xs.size();
  r.n_y = ys.size();
  const double n = static_cast<double>(r.n_x), m = static_cast<double>(r.n_y);
  const double scale = std::sqrt(n * m / (n + m));
  r.p_value = kolmogorov_sf(scale * r.statistic);
  r.critical_value = kolmogorov_quantile(alpha) / scale;
  return r;
}

// ---- Energy distance ------------------------------------------------------

namespace {

// sum_{i,j} |x_i - x_j| for a sorted sample.
double within_sum(std::span<const double> s) {
  const double n = static_cast<double>(s.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) acc += s[k] * (2.0 * static_cast<double>(k + 1) - n - 1.0);
  return 2.0 * acc;
}

// sum_{i,j} |x_i - y_j| for sorted samples.
double cross_sum(std::span<const double> a, std::span<const double> b) {
  const double total_b = std::accumulate(b.begin(), b.end(), 0.0);
  const double m = static_cast<double>(b.size());
  double below_sum = 0.0, acc = 0.0;
  std::size_t j = 0;
  for (double x : a) {
    while (j < b.size() && b[j] <= x) below_sum += b[j++];
    const double c = static_cast<double>(j);
    acc += x * c - below_sum + (total_b - below_sum) - x * (m - c);
  }
  return acc;
}

double energy_sorted(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  return 2.0 * cross_sum(a, b) / (n * m) - within_sum(a) / (n * n) - within_sum(b) / (m * m);
}

}  // namespace

double energy_distance(std::span<const double> xs, std::span<const double> ys) {
  require_nonempty(xs, ys, "energy_distance");
  require_finite(xs, "energy_distance");
  require_finite(ys, "energy_distance");
  auto a = sorted_copy(xs);
  auto b = sorted_copy(ys);
  return energy_sorted(a, b);
}

double energy_distance_bruteforce(std::span<const double> xs, std::span<const double> ys, Exec exec) {
  require_nonempty(xs, ys, "energy_distance_bruteforce");
  const std::size_t n = xs.size(), m = ys.size();
  std::vector<double> rows_xy(n), rows_xx(n), rows_yy(m);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    double s1 = 0.0, s2 = 0.0;
    for (double y : ys) s1 += std::abs(xs[i] - y);
    for (double x : xs) s2 += std::abs(xs[i] - x);
    rows_xy[i] = s1;
    rows_xx[i] = s2;
  }
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(m); ++j) {
    double s = 0.0;
    for (double y : ys) s += std::abs(ys[j] - y);
    rows_yy[j] = s;
  }
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  const double sxy = std::accumulate(rows_xy.begin(), rows_xy.end(), 0.0);
  const double sxx = std::accumulate(rows_xx.begin(), rows_xx.end(), 0.0);
  const double syy = std::accumulate(rows_yy.begin(), rows_yy.end(), 0.0);
  return 2.0 * sxy / (dn * dm) - sxx / (dn * dn) - syy / (dm * dm);
}

TestResult energy_test(std::span<const double> xs, std::span<const double> ys, std::size_t permutations,
                       std::uint64_t seed, Exec exec) {
  TestResult r;
  r.method = "energy";
  r.statistic = energy_distance(xs, ys);
  r.n_x = xs.size();
  r.n_y = ys.size();
  std::vector<double> pooled(xs.begin(), xs.end());
  pooled.insert(pooled.end(), ys.begin(), ys.end());
  const std::uint64_t key = derive_seed(seed, "perm-energy");
  const std::size_t n = xs.size();
  r.p_value = permutation_p(r.statistic, permutations, exec, [&](std::size_t b) {
    std::vector<double> z = pooled;
    NoiseStream stream({key, static_cast<std::uint32_t>(b), 0});
    shuffle_with(z, stream);
    std::sort(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(z.begin() + static_cast<std::ptrdiff_t>(n), z.end());
    return energy_sorted(std::span<const double>(z).first(n), std::span<const double>(z).subspan(n));
  });
  r.critical_value = std::numeric_limits<double>::quiet_NaN();
  return r;
}

// ---- Anderson-Darling -----------------------------------------------------

namespace {

// Pooled sorted sample grouped by distinct value; AD statistic for a 0/1
// labelling of the pooled order (label 0 = first sample).
struct AdLayout {
  std::vector<std::size_t> group_begin;  // size L + 1
  std::vector<double> bj;                // midrank positions B_j
  std::size_t n0 = 0, n1 = 0;

  double statistic(const std::vector<unsigned char>& labels) const {
    const double N = static_cast<double>(n0 + n1);
    const double dn0 = static_cast<double>(n0), dn1 = static_cast<double>(n1);
    double acc0 = 0.0, acc1 = 0.0;
    double below0 = 0.0;
    const std::size_t L = group_begin.size() - 1;
    for (std::size_t g = 0; g < L; ++g) {
      double f0 = 0.0;
      for (std::size_t k = group_begin[g]; k < group_begin[g + 1]; ++k) f0 += (labels[k] == 0);
      const double lj = static_cast<double>(group_begin[g + 1] - group_begin[g]);
      const double B = bj[g];
      const double denom = B * (N - B) - N * lj / 4.0;
      const double m0 = below0 + f0 / 2.0;
      const double m1 = B - m0;
      below0 += f0;
      if (denom <= 0.0) continue;
      const double w = lj / N / denom;
      acc0 += w * (N * m0 - B * dn0) * (N * m0 - B * dn0);
      acc1 += w * (N * m1 - B * dn1) * (N * m1 - B * dn1);
    }
    return (acc0 / dn0 + acc1 / dn1) * (N - 1.0) / N;
  }
};

AdLayout ad_layout(std::span<const double> xs, std::span<const double> ys,
                   std::vector<unsigned char>& labels) {
  std::vector<std::pair<double, unsigned char>> pooled;
  pooled.reserve(xs.size() + ys.size());
  for (double v : xs) pooled.emplace_back(v, 0);
  for (double v : ys) pooled.emplace_back(v, 1);
  std::sort(pooled.begin(), pooled.end());
  AdLayout lay;
  lay.n0 = xs.size();
  lay.n1 = ys.size();
  labels.resize(pooled.size());
  for (std::size_t k = 0; k < pooled.size(); ++k) {
    labels[k] = pooled[k].second;
    if (k == 0 || pooled[k].first != pooled[k - 1].first) lay.group_begin.push_back(k);
  }
  lay.group_begin.push_back(pooled.size());
  for (std::size_t g = 0; g + 1 < lay.group_begin.size(); ++g) {
    const double left = static_cast<double>(lay.group_begin[g]);
    const double lj = static_cast<double>(lay.group_begin[g + 1] - lay.group_begin[g]);
    lay.bj.push_back(left + lj / 2.0);
  }
  return lay;
}

}  // namespace

double anderson_darling_statistic(std::span<const double> xs, std::span<const double> ys) {
  require_nonempty(xs, ys, "anderson_darling");
  require_finite(xs, "anderson_darling");
  require_finite(ys, "anderson_darling");
  std::vector<unsigned char> labels;
  return ad_layout(xs, ys, labels).statistic(labels);
}

TestResult anderson_darling_two_sample(std::span<const double> xs, std::span<const double> ys,
                                       std::size_t permutations, std::uint64_t seed, Exec exec) {
  require_nonempty(xs, ys, "anderson_darling");
  require_finite(xs, "anderson_darling");
  require_finite(ys, "anderson_darling");
  std::vector<unsigned char> labels;
  const AdLayout lay = ad_layout(xs, ys, labels);
  TestResult r;
  r.method = "anderson_darling";
  r.statistic = lay.statistic(labels);
  r.n_x = xs.size();
  r.n_y = ys.size();
  const std::uint64_t key = derive_seed(seed, "perm-ad");
  r.p_value = permutation_p(r.statistic, permutations, exec, [&](std::size_t b) {
    std::vector<unsigned char> l = labels;
    NoiseStream stream({key, static_cast<std::uint32_t>(b), 0});
    shuffle_with(l, stream);
    return lay.statistic(l);
  });
  r.critical_value = std::numeric_limits<double>::quiet_NaN();
  return r;
}

// ---- Conditional MMD ------------------------------------------------------

namespace {

void check_paired(const PairedSample& s, const char* who) {
  if (s.size() == 0) throw ArgumentError(std::string(who) + ": empty sample");
  if (s.x.size() != s.dim * s.size()) throw ArgumentError(std::string(who) + ": covariate matrix size mismatch");
}

struct PooledPoints {
  std::size_t width = 0;  // dim + 1
  std::vector<double> data;
  std::size_t size() const { return data.size() / width; }
  double sqdist(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (std::size_t c = 0; c < width; ++c) {
      const double d = data[i * width + c] - data[j * width + c];
      s += d * d;
    }
    return s;
  }
};

PooledPoints pool(const PairedSample& a, const PairedSample& b) {
  if (a.dim != b.dim) throw ArgumentError("conditional_mmd: covariate dimensions differ");
  PooledPoints p;
  p.width = a.dim + 1;
  for (const PairedSample* s : {&a, &b}) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      for (std::size_t c = 0; c < s->dim; ++c) p.data.push_back(s->x[i * s->dim + c]);
      p.data.push_back(s->y[i]);
    }
  }
  return p;
}

double resolve_bandwidth(const Bandwidth& bw, const PairedSample& a, const PairedSample& b) {
  if (const double* h = std::get_if<double>(&bw)) {
    if (!(*h > 0.0) || !std::isfinite(*h)) throw DomainError("conditional_mmd: bandwidth must be positive");
    return *h;
  }
  const double h = median_heuristic_bandwidth(a, b);
  return h > 0.0 ? h : 1.0;
}

// Kernel matrix K (lower triangle incl. diagonal, full storage) over pooled points.
std::vector<double> kernel_matrix(const PooledPoints& p, double h, Exec exec) {
  const std::size_t N = p.size();
  std::vector<double> K(N * N);
  const double inv = 1.0 / (2.0 * h * h);
#pragma omp parallel for schedule(dynamic, 16) if (exec == Exec::parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i)
    for (std::size_t j = 0; j <= static_cast<std::size_t>(i); ++j) {
      const double k = std::exp(-p.sqdist(i, j) * inv);
      K[i * N + j] = k;
      K[j * N + i] = k;
    }
  return K;
}

// MMD^2 for a labelling (0 = first sample) of the pooled points.
double mmd_from_kernel(const std::vector<double>& K, std::size_t N, const std::vector<unsigned char>& labels,
                       std::size_t n0) {
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double* row = &K[i * N];
    for (std::size_t j = 0; j < N; ++j) {
      const int li = labels[i], lj = labels[j];
      if (li == 0 && lj == 0) saa += row[j];
      else if (li == 1 && lj == 1) sbb += row[j];
      else sab += row[j];
    }
  }
  const double n = static_cast<double>(n0), m = static_cast<double>(N - n0);
  return saa / (n * n) + sbb / (m * m) - sab / (n * m);
}

}  // namespace

double median_heuristic_bandwidth(const PairedSample& a, const PairedSample& b) {
  check_paired(a, "median_heuristic_bandwidth");
  check_paired(b, "median_heuristic_bandwidth");
  const PooledPoints p = pool(a, b);
  const std::size_t N = p.size();
  std::vector<double> d;
  d.reserve(N * (N - 1) / 2);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < i; ++j) d.push_back(std::sqrt(p.sqdist(i, j)));
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

double conditional_mmd(const PairedSample& a, const PairedSample& b, Bandwidth bandwidth, Exec exec) {
  check_paired(a, "conditional_mmd");
  check_paired(b, "conditional_mmd");
  const double h = resolve_bandwidth(bandwidth, a, b);
  const PooledPoints p = pool(a, b);
  const auto K = kernel_matrix(p, h, exec);
  std::vector<unsigned char> labels(p.size(), 1);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(a.size()), 0);
  return mmd_from_kernel(K, p.size(), labels, a.size());
}

TestResult conditional_mmd_test(const PairedSample& a, const PairedSample& b, Bandwidth bandwidth,
                                std::size_t permutations, std::uint64_t seed, Exec exec) {
  check_paired(a, "conditional_mmd");
  check_paired(b, "conditional_mmd");
  const double h = resolve_bandwidth(bandwidth, a, b);
  const PooledPoints p = pool(a, b);
  const std::size_t N = p.size();
  const auto K = kernel_matrix(p, h, exec);
  std::vector<unsigned char> labels(N, 1);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(a.size()), 0);
  TestResult r;
  r.method = "cmmd";
  r.statistic = mmd_from_kernel(K, N, labels, a.size());
  r.n_x = a.size();
  r.n_y = b.size();
  const std::uint64_t key = derive_seed(seed, "perm-cmmd");
  r.p_value = permutation_p(r.statistic, permutations, exec, [&](std::size_t bidx) {
    std::vector<unsigned char> l = labels;
    NoiseStream stream({key, static_cast<std::uint32_t>(bidx), 0});
    shuffle_with(l, stream);
    return mmd_from_kernel(K, N, l, a.size());
  });
  r.critical_value = std::numeric_limits<double>::quiet_NaN();
  return r;
}

// ---- Calibration ----------------------------------------------------------

CalibrationFit calibration_regression(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw ArgumentError("calibration_regression: length mismatch");
  if (predicted.size() < 3) throw ArgumentError("calibration_regression: need at least 3 points");
  require_finite(predicted, "calibration_regression");
  require_finite(observed, "calibration_regression");
  CalibrationFit f;
  f.n = predicted.size();
  const double n = static_cast<double>(f.n);
  const double mx = mean(predicted), my = mean(observed);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (predicted[i] - mx) * (predicted[i] - mx);
    sxy += (predicted[i] - mx) * (observed[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("calibration_regression: predictions have zero variance");
  f.beta1 = sxy / sxx;
  f.beta0 = my - f.beta1 * mx;
  double rss = 0.0, se2 = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double fit = f.beta0 + f.beta1 * predicted[i];
    rss += (observed[i] - fit) * (observed[i] - fit);
    const double e = observed[i] - predicted[i];
    se2 += e * e;
    ae += std::abs(e);
  }
  const double s2 = rss / (n - 2.0);
  f.residual_sd = std::sqrt(s2);
  f.se1 = std::sqrt(s2 / sxx);
  f.se0 = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  f.rmspe = std::sqrt(se2 / n);
  f.mape = ae / n;
  return f;
}

CoverageResult interval_coverage(std::span<const Interval> intervals, std::span<const double> observed,
                                 std::span<const int> strata) {
  if (intervals.size() != observed.size()) throw ArgumentError("interval_coverage: length mismatch");
  if (!strata.empty() && strata.size() != observed.size())
    throw ArgumentError("interval_coverage: strata length mismatch");
  if (observed.empty()) throw ArgumentError("interval_coverage: no units");
  CoverageResult r;
  int K = 0;
  for (int s : strata) {
    if (s < 0) throw ArgumentError("interval_coverage: negative stratum label");
    K = std::max(K, s + 1);
  }
  std::vector<double> hit(K, 0.0), cnt(K, 0.0);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const Interval& iv = intervals[i];
    if (!(iv.lo <= iv.hi)) throw ArgumentError("interval_coverage: interval " + std::to_string(i) + " has lo > hi");
    const bool in = observed[i] >= iv.lo && observed[i] <= iv.hi;
    covered += in;
    if (!strata.empty()) {
      hit[strata[i]] += in;
      cnt[strata[i]] += 1.0;
    }
  }
  r.rate = static_cast<double>(covered) / static_cast<double>(observed.size());
  for (int k = 0; k < K; ++k)
    r.per_stratum.push_back(cnt[k] > 0 ? hit[k] / cnt[k] : std::numeric_limits<double>::quiet_NaN());
  return r;
}

// ---- Bootstrap ------------------------------------------------------------

double bootstrap_se(std::size_t n, const ResampleEstimator& estimator, std::size_t B, std::uint64_t seed,
                    Exec exec) {
  std::vector<std::vector<std::size_t>> one(1);
  one[0].resize(n);
  std::iota(one[0].begin(), one[0].end(), std::size_t{0});
  return bootstrap_se(std::span<const std::vector<std::size_t>>(one), estimator, B, seed, exec);
}

double bootstrap_se(std::span<const std::vector<std::size_t>> groups, const ResampleEstimator& estimator,
                    std::size_t B, std::uint64_t seed, Exec exec) {
  if (B < 2) throw ArgumentError("bootstrap_se: need at least 2 resamples");
  std::size_t total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw ArgumentError("bootstrap_se: empty resampling group");
    total += g.size();
  }
  if (total == 0) throw ArgumentError("bootstrap_se: no units");
  const std::uint64_t key = derive_seed(seed, "bootstrap");
  std::vector<double> values(B);
  std::vector<std::exception_ptr> errors(B);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(B); ++b) {
    try {
      NoiseStream stream({key, static_cast<std::uint32_t>(b), 0});
      std::vector<std::size_t> idx;
      idx.reserve(total);
      for (const auto& g : groups)
        for (std::size_t k = 0; k < g.size(); ++k) idx.push_back(g[stream.below(g.size())]);
      values[b] = estimator(idx);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (std::size_t b = 0; b < B; ++b) {
    if (!errors[b]) continue;
    try {
      std::rethrow_exception(errors[b]);
    } catch (const std::exception& e) {
      throw Error("bootstrap_se: estimator failed on resample " + std::to_string(b) + ": " + e.what());
    }
  }
  return sample_sd(values);
}

// ---- Correlation ----------------------------------------------------------

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

TestResult fisher_z_test(double rho_sim, double rho_obs, std::size_t n_cross, double alpha) {
  if (n_cross < 4) throw ArgumentError("fisher_z_test: n_cross must be at least 4");
  for (double r : {rho_sim, rho_obs})
    if (!(r > -1.0 && r < 1.0)) throw DomainError("fisher_z_test: correlation must lie in (-1,1)");
  TestResult t;
  t.method = "fisher_z";
  t.statistic = (std::atanh(rho_sim) - std::atanh(rho_obs)) * std::sqrt(static_cast<double>(n_cross) - 3.0);
  t.p_value = two_sided_normal_p(t.statistic);
  t.critical_value = normal_quantile(1.0 - alpha / 2.0);
  t.n_x = n_cross;
  t.n_y = n_cross;
  return t;
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ArgumentError("pearson_correlation: need paired samples of size >= 2");
  const double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0 && syy > 0.0)) throw DomainError("pearson_correlation: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double spearman_correlation(std::span<const double> xs, std::span<const double> ys) {
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  return pearson_correlation(rx, ry);
}

}  // namespace twincf
