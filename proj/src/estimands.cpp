#include "twincf/estimands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twincf/error.hpp"
#include "twincf/rng.hpp"
#include "twincf/stats.hpp"
#include "twincf/summary.hpp"

namespace twincf {

std::string to_string(Fidelity f) {
  switch (f) {
    case Fidelity::marginal: return "marginal";
    case Fidelity::joint: return "joint";
    case Fidelity::structural: return "structural";
    case Fidelity::sequential: return "sequential";
  }
  return "marginal";
}

const std::vector<std::string>& estimand_catalog() {
  static const std::vector<std::string> names{"ate",      "att",      "atu",   "cate", "qte", "gates",
                                              "ite_variance", "g_tau", "pbenefit", "pharm", "pc"};
  return names;
}

bool is_copula_dependent(const std::string& name) {
  return name == "gates" || name == "ite_variance" || name == "g_tau" || name == "pbenefit" ||
         name == "pharm" || name == "pc";
}

namespace {

void require_nonempty(const TwinDraws& d) {
  d.validate();
  if (d.units() == 0) throw ArgumentError("estimand: draws are empty");
}

void require_aligned(const TwinDraws& d, const Dataset& data) {
  if (d.units() != data.size()) throw ArgumentError("estimand: draws and dataset have different unit counts");
  for (std::size_t i = 0; i < d.units(); ++i)
    if (d.unit_ids[i] != data.units[i].unit_id)
      throw ArgumentError("estimand: draws unit '" + d.unit_ids[i] + "' does not match dataset unit '" +
                          data.units[i].unit_id + "' at position " + std::to_string(i));
}

double se_of_mean(std::span<const double> xs) {
  return xs.size() < 2 ? 0.0 : sample_sd(xs) / std::sqrt(static_cast<double>(xs.size()));
}

EstimandResult subset_mean(const std::string& name, const std::vector<double>& unit_tau,
                           const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw UndefinedEstimandError(name + ": subpopulation is empty");
  std::vector<double> v;
  v.reserve(idx.size());
  for (std::size_t i : idx) v.push_back(unit_tau[i]);
  EstimandResult r;
  r.name = name;
  r.value = mean(v);
  r.mc_se = se_of_mean(v);
  return r;
}

}  // namespace

EstimandResult ate(const TwinDraws& draws) {
  require_nonempty(draws);
  EstimandResult r;
  r.name = "ate";
  r.value = mean(draws.tau());
  const auto ut = draws.unit_mean_tau();
  r.mc_se = ut.size() >= 2 ? se_of_mean(ut) : se_of_mean(draws.tau());
  return r;
}

EstimandResult att_atu(const TwinDraws& draws, const Dataset& data, Subpopulation which) {
  require_nonempty(draws);
  require_aligned(draws, data);
  const auto ut = draws.unit_mean_tau();
  return subset_mean(which == Subpopulation::treated ? "att" : "atu", ut,
                     data.arm_indices(which == Subpopulation::treated ? 1 : 0));
}

EstimandResult cate(const TwinDraws& draws, const Dataset& data, const CateOptions& options) {
  require_nonempty(draws);
  require_aligned(draws, data);
  const auto ut = draws.unit_mean_tau();
  EstimandResult r;
  r.name = "cate";
  if (options.mode == CateMode::stratified) {
    const int K = data.strata_count();
    std::vector<std::vector<double>> by(K);
    for (std::size_t i = 0; i < data.size(); ++i) by[data.stratum_of(i)].push_back(ut[i]);
    double worst_se = 0.0;
    for (int k = 0; k < K; ++k) {
      CurvePoint p{static_cast<double>(k), std::nullopt};
      if (!by[k].empty()) {
        p.y = mean(by[k]);
        const double se = se_of_mean(by[k]);
        r.extras["mc_se_" + std::to_string(k)] = se;
        worst_se = std::max(worst_se, se);
      }
      r.curve.push_back(p);
    }
    r.mc_se = worst_se;
    return r;
  }
  if (options.coordinate >= data.p) throw ArgumentError("cate: kernel coordinate outside covariate range");
  std::vector<double> x(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) x[i] = data.units[i].covariates[options.coordinate];
  double h;
  if (options.bandwidth) {
    h = *options.bandwidth;
    if (!(h > 0.0)) throw ArgumentError("cate: bandwidth must be positive");
  } else {
    const double sd = sample_sd(x);
    h = 1.06 * (sd > 0.0 ? sd : 1.0) * std::pow(static_cast<double>(x.size()), -0.2);
  }
  std::vector<double> grid = options.grid;
  if (grid.empty()) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    for (int j = 0; j <= 20; ++j) grid.push_back(*lo + (*hi - *lo) * j / 20.0);
  }
  for (double g : grid) {
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = std::exp(-0.5 * (x[i] - g) * (x[i] - g) / (h * h));
      sw += w;
      swy += w * ut[i];
    }
    r.curve.push_back({g, sw > 1e-300 ? std::optional<double>(swy / sw) : std::nullopt});
  }
  r.extras["bandwidth"] = h;
  return r;
}

EstimandResult qte(const TwinDraws& draws, std::span<const double> q_grid) {
  require_nonempty(draws);
  for (double q : q_grid)
    if (!(q > 0.0 && q < 1.0)) throw ArgumentError("qte: quantile levels must lie in (0,1)");
  const auto s1 = sorted_copy(draws.y1);
  const auto s0 = sorted_copy(draws.y0);
  EstimandResult r;
  r.name = "qte";
  for (double q : q_grid) r.curve.push_back({q, sorted_quantile(s1, q) - sorted_quantile(s0, q)});
  return r;
}

EstimandResult gates(const TwinDraws& draws, std::size_t groups) {
  require_nonempty(draws);
  const std::size_t N = draws.units();
  if (groups < 1) throw ArgumentError("gates: need at least one group");
  if (groups > N) throw ArgumentError("gates: more groups than units");
  const auto ut = draws.unit_mean_tau();
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ut[a] < ut[b]; });
  EstimandResult r;
  r.name = "gates";
  r.copula_dependent = true;
  r.fidelity_required = Fidelity::joint;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t lo = g * N / groups, hi = (g + 1) * N / groups;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += ut[order[k]];
    r.curve.push_back({static_cast<double>(g + 1), s / static_cast<double>(hi - lo)});
  }
  return r;
}

// ---- ITE distribution ---------------------------------------------------

double ITESummary::cdf(double t) const {
  if (sorted_tau.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_tau.begin(), sorted_tau.end(), t);
  return static_cast<double>(it - sorted_tau.begin()) / static_cast<double>(sorted_tau.size());
}

std::vector<CurvePoint> ITESummary::cdf_curve(std::size_t points) const {
  std::vector<CurvePoint> c;
  if (sorted_tau.empty() || points == 0) return c;
  const std::size_t n = sorted_tau.size();
  const std::size_t m = std::min(points, n);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t k = m == 1 ? n - 1 : j * (n - 1) / (m - 1);
    const double t = sorted_tau[k];
    c.push_back({t, cdf(t)});
  }
  return c;
}

int kde_mode_count(std::span<const double> xs) {
  if (xs.size() < 2) return 1;
  const double sd = sample_sd(xs);
  if (!(sd > 0.0)) return 1;
  auto s = sorted_copy(xs);
  const double iqr = sorted_quantile(s, 0.75) - sorted_quantile(s, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double h = 0.9 * spread * std::pow(static_cast<double>(xs.size()), -0.2);
  constexpr int G = 512;
  const double lo = s.front() - 3.0 * h, hi = s.back() + 3.0 * h;
  std::vector<double> dens(G, 0.0);
  // Bin then smooth: kernel sums over bin counts keep this O(G^2).
  std::vector<double> counts(G, 0.0);
  const double step = (hi - lo) / (G - 1);
  for (double v : s) {
    const auto b = static_cast<std::size_t>(std::clamp((v - lo) / step + 0.5, 0.0, static_cast<double>(G - 1)));
    counts[b] += 1.0;
  }
  for (int g = 0; g < G; ++g) {
    const double x = lo + g * step;
    double acc = 0.0;
    for (int b = 0; b < G; ++b) {
      if (counts[b] == 0.0) continue;
      const double z = (x - (lo + b * step)) / h;
      acc += counts[b] * std::exp(-0.5 * z * z);
    }
    dens[g] = acc;
  }
  int modes = 0;
  const double tol = 1e-9 * *std::max_element(dens.begin(), dens.end());
  for (int g = 1; g + 1 < G; ++g)
    if (dens[g] > dens[g - 1] + tol && dens[g] >= dens[g + 1]) ++modes;
  return std::max(modes, 1);
}

ITESummary ite_summary(std::span<const double> tau) {
  if (tau.empty()) throw ArgumentError("ite_summary: empty tau sample");
  ITESummary s;
  s.sorted_tau = sorted_copy(tau);
  s.variance = sample_variance(tau);
  const double m = mean(tau);
  double m2 = 0.0, m3 = 0.0;
  for (double v : tau) {
    m2 += (v - m) * (v - m);
    m3 += (v - m) * (v - m) * (v - m);
  }
  const double n = static_cast<double>(tau.size());
  m2 /= n;
  m3 /= n;
  s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  s.mode_count = kde_mode_count(tau);
  return s;
}

ITESummary ite_summary(const TwinDraws& draws) {
  require_nonempty(draws);
  return ite_summary(draws.tau());
}

BenefitHarm prob_benefit_harm(const TwinDraws& draws, double threshold) {
  require_nonempty(draws);
  BenefitHarm b;
  b.n = draws.size();
  for (std::size_t j = 0; j < b.n; ++j) {
    const double t = draws.y1[j] - draws.y0[j];
    if (t > threshold) ++b.n_plus;
    else if (t < threshold) ++b.n_minus;
    else ++b.n_equal;
  }
  b.plus = static_cast<double>(b.n_plus) / static_cast<double>(b.n);
  b.minus = static_cast<double>(b.n_minus) / static_cast<double>(b.n);
  return b;
}

CausationResult prob_causation(const TwinDraws& draws) {
  require_nonempty(draws);
  std::size_t y1_one = 0, y0_one = 0, caused = 0;
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const double a = draws.y1[j], b = draws.y0[j];
    if ((a != 0.0 && a != 1.0) || (b != 0.0 && b != 1.0))
      throw ArgumentError("prob_causation: draws must be binary (0/1)");
    y1_one += a == 1.0;
    y0_one += b == 1.0;
    caused += (a == 1.0 && b == 0.0);
  }
  if (y1_one == 0) throw UndefinedEstimandError("prob_causation: no draws with y1 = 1");
  const double n = static_cast<double>(draws.size());
  const double p1 = static_cast<double>(y1_one) / n, p0 = static_cast<double>(y0_one) / n;
  CausationResult r;
  r.value = static_cast<double>(caused) / static_cast<double>(y1_one);
  r.lower = std::max(0.0, p1 - p0) / p1;
  r.upper = std::min(p1, 1.0 - p0) / p1;
  r.consistent = r.value >= r.lower - 1e-12 && r.value <= r.upper + 1e-12;
  return r;
}

BoundsResult frechet_bounds_from_draws(const TwinDraws& draws, const std::string& estimand) {
  require_nonempty(draws);
  const auto s1 = sorted_copy(draws.y1);
  const auto s0 = sorted_copy(draws.y0);
  auto empirical_q = [](const std::vector<double>& s) {
    return [&s](double u) {
      const auto n = static_cast<double>(s.size());
      const auto k = static_cast<std::size_t>(std::clamp(std::ceil(u * n) - 1.0, 0.0, n - 1.0));
      return s[k];
    };
  };
  if (estimand == "ite_variance") return fh_var_bounds(sample_sd(draws.y1), sample_sd(draws.y0));
  if (estimand == "pbenefit") return fh_pbenefit_bounds(empirical_q(s1), empirical_q(s0));
  if (estimand == "pharm") {
    auto b = fh_pbenefit_bounds(empirical_q(s0), empirical_q(s1));
    b.estimand = "pharm";
    return b;
  }
  if (estimand == "g_tau") {
    auto b = fh_pbenefit_bounds(empirical_q(s1), empirical_q(s0));
    BoundsResult g = b;
    g.estimand = "g_tau";
    g.lower = 1.0 - b.upper;
    g.upper = 1.0 - b.lower;
    std::reverse(g.attaining_copulas.begin(), g.attaining_copulas.end());
    return g;
  }
  if (estimand == "pc") {
    const auto pc = prob_causation(draws);
    BoundsResult b;
    b.estimand = "pc";
    b.lower = pc.lower;
    b.upper = pc.upper;
    b.attaining_copulas = {"countermonotone", "comonotone"};
    return b;
  }
  if (estimand == "gates") {
    // Extremes of the top-minus-bottom spread: comonotone and countermonotone re-pairings.
    BoundsResult b;
    b.estimand = "gates";
    auto spread = [&](bool counter) {
      std::vector<double> t(s1.size());
      for (std::size_t k = 0; k < s1.size(); ++k) t[k] = s1[k] - (counter ? s0[s0.size() - 1 - k] : s0[k]);
      const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
      return *hi - *lo;
    };
    const double a = spread(false), c = spread(true);
    b.lower = std::min(a, c);
    b.upper = std::max(a, c);
    b.attaining_copulas = {"comonotone", "countermonotone"};
    return b;
  }
  throw ArgumentError("frechet_bounds_from_draws: no bounds for '" + estimand + "'");
}

double draws_only_csi(const TwinDraws& draws, const Dataset& data, std::uint64_t seed) {
  require_nonempty(draws);
  require_aligned(draws, data);
  const int K = data.strata_count();
  std::vector<std::vector<std::size_t>> slots(K);
  for (std::size_t i = 0; i < draws.units(); ++i)
    for (std::size_t r = 0; r < draws.replicates; ++r) slots[data.stratum_of(i)].push_back(i * draws.replicates + r);
  std::vector<double> y0 = draws.y0;
  NoiseStream stream({derive_seed(seed, "csi-permute"), 0, 0});
  for (auto& s : slots) {
    for (std::size_t k = s.size(); k > 1; --k) {
      const std::size_t j = static_cast<std::size_t>(stream.below(k));
      std::swap(y0[s[k - 1]], y0[s[j]]);
    }
  }
  std::vector<double> tau_ind(draws.size());
  for (std::size_t j = 0; j < draws.size(); ++j) tau_ind[j] = draws.y1[j] - y0[j];
  return ks_statistic(draws.tau(), tau_ind);
}

// ---- Mediation and sequential -------------------------------------------

MediationResult mediation(const SimulatorSpec& sim, const Dataset& data, std::size_t replicates,
                          std::uint64_t seed, std::optional<double> m_star, Exec exec) {
  if (sim.kind != SimulatorKind::structural || !sim.structural)
    throw ArgumentError("mediation: simulator kind must be structural");
  if (replicates < 1) throw ArgumentError("mediation: R must be >= 1");
  const auto& st = *sim.structural;
  const std::size_t n = data.size();
  const std::size_t total = n * replicates;
  std::vector<double> nde(total), nie(total), te(total), cde(m_star ? total : 0);
  const std::uint64_t key = derive_seed(seed, "simulate");
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& x = data.units[i].covariates;
    for (std::size_t r = 0; r < replicates; ++r) {
      NoiseStream s({key, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(r)});
      const double zm = s.normal();
      const double zy = s.normal();
      const double m1 = st.mediator(x, 1, zm), m0 = st.mediator(x, 0, zm);
      const double y11 = st.outcome(x, 1, m1, zy);
      const double y10 = st.outcome(x, 1, m0, zy);
      const double y00 = st.outcome(x, 0, m0, zy);
      const std::size_t slot = i * replicates + r;
      nde[slot] = y10 - y00;
      nie[slot] = y11 - y10;
      te[slot] = y11 - y00;
      if (m_star) cde[slot] = st.outcome(x, 1, *m_star, zy) - st.outcome(x, 0, *m_star, zy);
    }
  }
  MediationResult out;
  out.nde = mean(nde);
  out.nie = mean(nie);
  out.ate = mean(te);
  if (m_star) out.cde = mean(cde);
  out.mc_se = se_of_mean(te);
  return out;
}

SequentialResult sequential(const SimulatorSpec& sim, const Dataset& data,
                            const std::vector<std::vector<int>>& regimes, std::size_t replicates,
                            std::uint64_t seed, Exec exec) {
  if (sim.kind != SimulatorKind::sequential || !sim.sequential)
    throw ArgumentError("sequential: simulator kind must be sequential");
  if (replicates < 1) throw ArgumentError("sequential: R must be >= 1");
  const auto& sq = *sim.sequential;
  if (sq.horizon < 1) throw ArgumentError("sequential: horizon must be >= 1");
  const auto T = static_cast<std::size_t>(sq.horizon);
  if (regimes.empty()) throw ArgumentError("sequential: no regimes supplied");
  for (std::size_t g = 0; g < regimes.size(); ++g) {
    if (regimes[g].size() != T)
      throw ArgumentError("sequential: regime " + std::to_string(g) + " has length " +
                          std::to_string(regimes[g].size()) + ", horizon is " + std::to_string(T));
    for (int a : regimes[g])
      if (a != 0 && a != 1) throw ArgumentError("sequential: regime entries must be 0 or 1");
  }
  const std::size_t n = data.size();
  const std::size_t total = n * replicates;
  const std::size_t G = regimes.size();
  std::vector<double> terminal(G * total);
  std::vector<double> gap(T * total);
  const std::uint64_t key = derive_seed(seed, "simulate");
  const std::vector<int> always(T, 1), never(T, 0);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& x = data.units[i].covariates;
    std::vector<double> z(T + 1), path(T), path0(T);
    for (std::size_t r = 0; r < replicates; ++r) {
      NoiseStream s({key, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(r)});
      for (double& zt : z) zt = s.normal();
      const std::size_t slot = i * replicates + r;
      for (std::size_t g = 0; g < G; ++g) {
        sq.roll(x, regimes[g], z, path);
        terminal[g * total + slot] = path.back();
      }
      sq.roll(x, always, z, path);
      sq.roll(x, never, z, path0);
      for (std::size_t t = 0; t < T; ++t) gap[t * total + slot] = path[t] - path0[t];
    }
  }
  SequentialResult out;
  out.regimes = regimes;
  for (std::size_t g = 0; g < G; ++g) {
    std::span<const double> v(terminal.data() + g * total, total);
    out.values.push_back(mean(v));
    out.mc_se.push_back(se_of_mean(v));
  }
  out.argmax = static_cast<std::size_t>(std::max_element(out.values.begin(), out.values.end()) - out.values.begin());
  for (std::size_t t = 0; t < T; ++t) out.tau_curve.push_back(mean(std::span<const double>(gap.data() + t * total, total)));
  return out;
}

SurvivalResult survival(const TwinDraws& draws, double t_star, std::size_t grid_points) {
  require_nonempty(draws);
  if (!(t_star > 0.0)) throw ArgumentError("survival: t_star must be positive");
  for (std::size_t j = 0; j < draws.size(); ++j)
    if (draws.y1[j] < 0.0 || draws.y0[j] < 0.0)
      throw ArgumentError("survival: negative event time at draw " + std::to_string(j));
  const auto s1 = sorted_copy(draws.y1);
  const auto s0 = sorted_copy(draws.y0);
  const double n = static_cast<double>(draws.size());
  auto surv = [n](const std::vector<double>& s, double t) {
    const auto it = std::upper_bound(s.begin(), s.end(), t);
    return static_cast<double>(s.end() - it) / n;
  };
  SurvivalResult r;
  const std::size_t G = std::max<std::size_t>(grid_points, 2);
  for (std::size_t g = 0; g < G; ++g) {
    const double t = t_star * static_cast<double>(g) / static_cast<double>(G - 1);
    r.grid.push_back(t);
    r.s1.push_back(surv(s1, t));
    r.s0.push_back(surv(s0, t));
  }
  // The integral of an empirical survivor function up to t* is the mean of min(T, t*).
  std::vector<double> diff(draws.size());
  double a = 0.0, b = 0.0;
  for (std::size_t j = 0; j < draws.size(); ++j) {
    const double c1 = std::min(draws.y1[j], t_star), c0 = std::min(draws.y0[j], t_star);
    a += c1;
    b += c0;
    diff[j] = c1 - c0;
  }
  r.rmst1 = a / n;
  r.rmst0 = b / n;
  r.delta = mean(diff);
  r.mc_se = se_of_mean(diff);
  return r;
}

// ---- Catalog --------------------------------------------------------------

std::vector<EstimandResult> estimate_catalog(const TwinDraws& draws, const Dataset& data,
                                             std::span<const std::string> names, const CatalogOptions& options) {
  require_nonempty(draws);
  require_aligned(draws, data);
  std::vector<std::string> wanted(names.begin(), names.end());
  const bool full = wanted.empty();
  if (full) wanted = estimand_catalog();
  for (const auto& w : wanted) {
    if (std::find(estimand_catalog().begin(), estimand_catalog().end(), w) == estimand_catalog().end()) {
      std::string list;
      for (const auto& c : estimand_catalog()) list += (list.empty() ? "" : ", ") + c;
      throw ArgumentError("unknown estimand '" + w + "'; catalog: " + list);
    }
  }
  const bool binary = std::all_of(draws.y1.begin(), draws.y1.end(), [](double v) { return v == 0.0 || v == 1.0; }) &&
                      std::all_of(draws.y0.begin(), draws.y0.end(), [](double v) { return v == 0.0 || v == 1.0; });
  std::optional<double> csi = options.csi;
  std::optional<ITESummary> ite;
  std::optional<BenefitHarm> bh;
  std::vector<EstimandResult> out;
  for (const auto& w : wanted) {
    EstimandResult r;
    if (w == "ate") r = ate(draws);
    else if (w == "att") r = att_atu(draws, data, Subpopulation::treated);
    else if (w == "atu") r = att_atu(draws, data, Subpopulation::untreated);
    else if (w == "cate") {
      CateOptions co = options.cate;
      if (co.mode == CateMode::stratified && !data.strata && data.p > 0) co.mode = CateMode::kernel;
      if (co.mode == CateMode::kernel && data.p == 0) co.mode = CateMode::stratified;
      r = cate(draws, data, co);
    } else if (w == "qte") r = qte(draws, options.q_grid);
    else if (w == "gates") r = gates(draws, std::min(options.gates_groups, draws.units()));
    else {
      if (!ite) ite = ite_summary(draws);
      if (!bh) bh = prob_benefit_harm(draws);
      r.name = w;
      r.fidelity_required = Fidelity::joint;
      const double n = static_cast<double>(bh->n);
      if (w == "ite_variance") {
        r.value = ite->variance;
        r.mc_se = Theta{Functional::var_tau}.standard_error(ite->sorted_tau);
        r.extras["skewness"] = ite->skewness;
        r.extras["mode_count"] = ite->mode_count;
        r.curve = ite->cdf_curve();
      } else if (w == "g_tau") {
        r.value = ite->cdf(0.0);
        r.mc_se = std::sqrt(*r.value * (1.0 - *r.value) / n);
      } else if (w == "pbenefit") {
        r.value = bh->plus;
        r.mc_se = std::sqrt(bh->plus * (1.0 - bh->plus) / n);
      } else if (w == "pharm") {
        r.value = bh->minus;
        r.mc_se = std::sqrt(bh->minus * (1.0 - bh->minus) / n);
      } else if (w == "pc") {
        if (!binary) {
          if (full) continue;
          throw ArgumentError("pc: draws must be binary (0/1)");
        }
        const auto pc = prob_causation(draws);
        r.value = pc.value;
        r.extras["consistent_with_marginal_bounds"] = pc.consistent ? 1.0 : 0.0;
      }
    }
    r.copula_dependent = is_copula_dependent(w);
    if (r.copula_dependent) {
      r.fidelity_required = Fidelity::joint;
      r.bounds = frechet_bounds_from_draws(draws, w);
      if (!csi) csi = draws_only_csi(draws, data, options.seed);
      r.csi = csi;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace twincf
