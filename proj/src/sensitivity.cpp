#include "twincf/sensitivity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "twincf/error.hpp"
#include "twincf/normal.hpp"
#include "twincf/rng.hpp"
#include "twincf/stats.hpp"
#include "twincf/summary.hpp"

namespace twincf {

std::string to_string(BoundsRegime r) {
  switch (r) {
    case BoundsRegime::frechet: return "frechet";
    case BoundsRegime::pqd_constrained: return "pqd_constrained";
    case BoundsRegime::monotone_constrained: return "monotone_constrained";
    case BoundsRegime::rank_invariant: return "rank_invariant";
  }
  return "frechet";
}

std::string to_string(Functional f) {
  switch (f) {
    case Functional::ate: return "ate";
    case Functional::var_tau: return "var_tau";
    case Functional::pbenefit: return "pbenefit";
    case Functional::pharm: return "pharm";
    case Functional::g_tau_at_t: return "g_tau_at_t";
  }
  return "ate";
}

Functional functional_from_string(const std::string& s) {
  for (Functional f : {Functional::ate, Functional::var_tau, Functional::pbenefit, Functional::pharm,
                       Functional::g_tau_at_t})
    if (to_string(f) == s) return f;
  throw ArgumentError("unknown functional '" + s + "' (expected ate, var_tau, pbenefit, pharm, g_tau_at_t)");
}

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::pqd: return "pqd";
    case Constraint::monotone: return "monotone";
    case Constraint::rank_invariance: return "rank_invariance";
  }
  return "pqd";
}

Constraint constraint_from_string(const std::string& s) {
  for (Constraint c : {Constraint::pqd, Constraint::monotone, Constraint::rank_invariance})
    if (to_string(c) == s) return c;
  throw ArgumentError("unknown constraint '" + s + "' (expected pqd, monotone, rank_invariance)");
}

BoundsResult fh_var_bounds(double sigma1, double sigma0) {
  if (!(sigma1 >= 0.0) || !(sigma0 >= 0.0)) throw DomainError("fh_var_bounds: standard deviations must be >= 0");
  BoundsResult b;
  b.estimand = "var_tau";
  b.lower = (sigma1 - sigma0) * (sigma1 - sigma0);
  b.upper = (sigma1 + sigma0) * (sigma1 + sigma0);
  b.attaining_copulas = {"comonotone", "countermonotone"};
  return b;
}

BoundsResult fh_pbenefit_bounds(const QuantileFunction& q1, const QuantileFunction& q0, std::size_t grid_n) {
  if (grid_n < 1) throw ArgumentError("fh_pbenefit_bounds: grid_n must be positive");
  std::vector<double> a(grid_n), b(grid_n);
  for (std::size_t k = 0; k < grid_n; ++k) {
    const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(grid_n);
    a[k] = q1(u);
    b[k] = q0(u);
    if (k > 0 && (a[k] < a[k - 1] || b[k] < b[k - 1]))
      throw ArgumentError("fh_pbenefit_bounds: quantile function is not monotone near u = " + std::to_string(u));
  }
  std::size_t comono = 0, counter = 0;
  for (std::size_t k = 0; k < grid_n; ++k) {
    comono += a[k] > b[k];
    counter += a[k] > b[grid_n - 1 - k];
  }
  const double pm = static_cast<double>(comono) / static_cast<double>(grid_n);
  const double pw = static_cast<double>(counter) / static_cast<double>(grid_n);
  BoundsResult r;
  r.estimand = "pbenefit";
  r.lower = std::min(pm, pw);
  r.upper = std::max(pm, pw);
  r.attaining_copulas = pm <= pw ? std::vector<std::string>{"comonotone", "countermonotone"}
                                 : std::vector<std::string>{"countermonotone", "comonotone"};
  return r;
}

// ---- Theta ----------------------------------------------------------------

double Theta::evaluate(std::span<const double> tau) const {
  if (tau.empty()) throw ArgumentError("theta: empty tau sample");
  const double n = static_cast<double>(tau.size());
  switch (functional) {
    case Functional::ate: return mean(tau);
    case Functional::var_tau: return sample_variance(tau);
    case Functional::pbenefit: return static_cast<double>(std::count_if(tau.begin(), tau.end(), [](double v) { return v > 0.0; })) / n;
    case Functional::pharm: return static_cast<double>(std::count_if(tau.begin(), tau.end(), [](double v) { return v < 0.0; })) / n;
    case Functional::g_tau_at_t: {
      const double thr = t;
      return static_cast<double>(std::count_if(tau.begin(), tau.end(), [thr](double v) { return v <= thr; })) / n;
    }
  }
  return 0.0;
}

double Theta::standard_error(std::span<const double> tau) const {
  const double n = static_cast<double>(tau.size());
  if (tau.size() < 2) return 0.0;
  switch (functional) {
    case Functional::ate: return sample_sd(tau) / std::sqrt(n);
    case Functional::var_tau: {
      const double m = mean(tau);
      double m2 = 0.0, m4 = 0.0;
      for (double v : tau) {
        const double d2 = (v - m) * (v - m);
        m2 += d2;
        m4 += d2 * d2;
      }
      m2 /= n;
      m4 /= n;
      return std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
    }
    default: {
      const double p = evaluate(tau);
      return std::sqrt(p * (1.0 - p) / n);
    }
  }
}

// ---- Rank-coupled sampling -------------------------------------------------

namespace {

std::vector<double> stratified_quantiles(const MarginalLaw& law, std::size_t n) {
  std::vector<double> q(n);
  for (std::size_t k = 0; k < n; ++k) q[k] = law.quantile((static_cast<double>(k) + 0.5) / static_cast<double>(n));
  return q;
}

std::vector<std::size_t> rank_positions(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<std::size_t> pos(xs.size());
  for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = r;
  return pos;
}

struct RankCoupler {
  std::vector<double> y1;
  std::vector<double> y0;

  std::vector<double> tau(const CopulaSpec& copula, std::uint64_t key, Exec exec) const {
    const std::size_t n = y1.size();
    std::vector<double> u(n), v(n);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
      const CopulaDraw d = sample_pair(copula, NoiseRecord{key, static_cast<std::uint32_t>(k), 0});
      u[k] = d.u;
      v[k] = d.v;
    }
    const auto ru = rank_positions(u);
    const auto rv = rank_positions(v);
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = y1[ru[k]] - y0[rv[k]];
    return t;
  }
};

RankCoupler make_coupler(const ArmLaws& m, std::size_t mc_n) {
  if (mc_n < 2) throw ArgumentError("sensitivity: mc_n must be at least 2");
  return {stratified_quantiles(m.treated, mc_n), stratified_quantiles(m.control, mc_n)};
}

}  // namespace

std::vector<double> coupled_tau_sample(const ArmLaws& marginals, const CopulaSpec& copula, std::size_t mc_n,
                                       std::uint64_t seed, Exec exec) {
  copula.validate();
  return make_coupler(marginals, mc_n).tau(copula, derive_seed(seed, "sensitivity"), exec);
}

std::vector<double> default_rho_grid() {
  std::vector<double> g;
  for (int k = -9; k <= 9; k += 2) g.push_back(k / 10.0);
  return g;
}

double SensitivityCurve::range() const {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

bool SensitivityCurve::copula_robust() const {
  const double se = mc_se.empty() ? 0.0 : *std::max_element(mc_se.begin(), mc_se.end());
  return range() <= 3.0 * se + 1e-12;
}

SensitivityCurve sensitivity_curve(const ArmLaws& marginals, CopulaFamily family, std::span<const double> grid,
                                   Theta theta, std::size_t mc_n, std::uint64_t seed,
                                   std::optional<double> reference_parameter, Exec exec) {
  if (grid.empty()) throw ArgumentError("sensitivity_curve: empty grid");
  for (std::size_t j = 1; j < grid.size(); ++j)
    if (!(grid[j] > grid[j - 1])) throw ArgumentError("sensitivity_curve: grid must be strictly increasing");
  for (double g : grid) {
    const CopulaSpec spec{family, g};
    if (!spec.parametric()) throw ArgumentError("sensitivity_curve: family " + to_string(family) + " has no parameter");
    spec.validate();
  }
  SensitivityCurve c;
  c.family = family;
  c.theta = theta;
  c.grid.assign(grid.begin(), grid.end());
  const RankCoupler coupler = make_coupler(marginals, mc_n);
  const std::uint64_t key = derive_seed(seed, "sensitivity");
  for (double g : grid) {
    const auto tau = coupler.tau(CopulaSpec{family, g}, key, exec);
    c.values.push_back(theta.evaluate(tau));
    c.mc_se.push_back(theta.standard_error(tau));
  }
  c.reference_parameter = reference_parameter.value_or(grid.back());
  const CopulaSpec ref{family, c.reference_parameter};
  ref.validate();
  const auto tau_ref = coupler.tau(ref, key, exec);
  const auto tau_ind = coupler.tau(CopulaSpec::independence(), key, exec);
  c.csi = ks_statistic(tau_ref, tau_ind);
  return c;
}

void write_curve_csv(std::ostream& os, const SensitivityCurve& curve) {
  os << "parameter,value\n";
  auto put = [&os](double v) {
    char buf[32];
    os.write(buf, std::to_chars(buf, buf + sizeof buf, v).ptr - buf);
  };
  for (std::size_t j = 0; j < curve.grid.size(); ++j) {
    put(curve.grid[j]);
    os << ',';
    put(curve.values[j]);
    os << '\n';
  }
}

// ---- Constrained bounds ---------------------------------------------------

namespace {

bool both_normal(const ArmLaws& m) {
  return m.treated.family == MarginalFamily::normal && m.control.family == MarginalFamily::normal;
}

// Theta under a Gaussian copula; exact for normal-normal, otherwise the
// rank-coupled Monte Carlo value. rho == 1 means comonotone.
double psi_gaussian(const ArmLaws& m, double rho, const Theta& theta, const ConstraintOptions& opt) {
  if (both_normal(m)) {
    const double mu = m.treated.location - m.control.location;
    const double s1 = m.treated.scale, s0 = m.control.scale;
    const double var = std::max(0.0, s1 * s1 + s0 * s0 - 2.0 * rho * s1 * s0);
    const double sd = std::sqrt(var);
    auto prob_le = [&](double t) { return sd == 0.0 ? (mu <= t ? 1.0 : 0.0) : normal_cdf((t - mu) / sd); };
    auto prob_lt = [&](double t) { return sd == 0.0 ? (mu < t ? 1.0 : 0.0) : normal_cdf((t - mu) / sd); };
    switch (theta.functional) {
      case Functional::ate: return mu;
      case Functional::var_tau: return var;
      case Functional::pbenefit: return 1.0 - prob_le(0.0);
      case Functional::pharm: return prob_lt(0.0);
      case Functional::g_tau_at_t: return prob_le(theta.t);
    }
  }
  const CopulaSpec spec = rho >= 1.0 ? CopulaSpec::comonotone() : CopulaSpec::gaussian(rho);
  const auto tau = coupled_tau_sample(m, spec, opt.mc_n, opt.seed, opt.exec);
  return theta.evaluate(tau);
}

std::vector<double> comonotone_tau_grid(const ArmLaws& m, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    t[k] = m.treated.quantile(u) - m.control.quantile(u);
  }
  return t;
}

double theta_on_grid(const Theta& theta, const std::vector<double>& t) {
  if (theta.functional == Functional::var_tau) {
    const double mu = mean(t);
    double s = 0.0;
    for (double v : t) s += (v - mu) * (v - mu);
    return s / static_cast<double>(t.size());
  }
  return theta.evaluate(t);
}

std::vector<double> pqd_rhos(const ConstraintOptions& opt) {
  std::vector<double> r;
  const std::size_t k = std::max<std::size_t>(opt.rho_points, 2);
  for (std::size_t j = 0; j < k; ++j) r.push_back(static_cast<double>(j) / static_cast<double>(k));
  return r;
}

}  // namespace

BoundsResult constrained_bounds(const ArmLaws& marginals, Constraint constraint, Theta theta,
                                const ConstraintOptions& options) {
  marginals.treated.validate("treated", 0);
  marginals.control.validate("control", 0);
  BoundsResult b;
  b.estimand = to_string(theta.functional);
  const double s1 = std::sqrt(marginals.treated.variance());
  const double s0 = std::sqrt(marginals.control.variance());

  switch (constraint) {
    case Constraint::rank_invariance: {
      b.regime = BoundsRegime::rank_invariant;
      b.attaining_copulas = {"comonotone"};
      double v;
      if (both_normal(marginals)) {
        v = psi_gaussian(marginals, 1.0, theta, options);
      } else {
        v = theta_on_grid(theta, comonotone_tau_grid(marginals, options.grid_n));
      }
      b.lower = b.upper = v;
      return b;
    }
    case Constraint::pqd: {
      b.regime = BoundsRegime::pqd_constrained;
      if (theta.functional == Functional::var_tau) {
        b.lower = (s1 - s0) * (s1 - s0);
        b.upper = s1 * s1 + s0 * s0;
        b.attaining_copulas = {"comonotone", "independence"};
        return b;
      }
      if (theta.functional == Functional::ate) {
        b.lower = b.upper = marginals.treated.mean() - marginals.control.mean();
        b.attaining_copulas = {"any"};
        return b;
      }
      std::vector<double> vals;
      for (double rho : pqd_rhos(options)) vals.push_back(psi_gaussian(marginals, rho, theta, options));
      vals.push_back(both_normal(marginals) ? psi_gaussian(marginals, 1.0, theta, options)
                                            : theta_on_grid(theta, comonotone_tau_grid(marginals, options.grid_n)));
      const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
      b.lower = *lo;
      b.upper = *hi;
      b.attaining_copulas = {"gaussian(rho>=0)", "comonotone"};
      return b;
    }
    case Constraint::monotone: {
      b.regime = BoundsRegime::monotone_constrained;
      // Y(1) >= Y(0) is attainable iff the treated quantiles dominate.
      const auto co = comonotone_tau_grid(marginals, options.grid_n);
      if (std::any_of(co.begin(), co.end(), [](double t) { return t < 0.0; })) {
        b.infeasible = "treated quantiles fall below control quantiles; no coupling has Y(1) >= Y(0)";
        b.lower = std::numeric_limits<double>::quiet_NaN();
        b.upper = std::numeric_limits<double>::quiet_NaN();
        return b;
      }
      std::vector<double> vals{theta_on_grid(theta, co)};
      b.attaining_copulas = {"comonotone"};
      for (double rho : pqd_rhos(options)) {
        const auto tau = coupled_tau_sample(marginals, CopulaSpec::gaussian(rho), options.mc_n, options.seed, options.exec);
        if (std::any_of(tau.begin(), tau.end(), [](double t) { return t < 0.0; })) continue;
        vals.push_back(theta.evaluate(tau));
        b.attaining_copulas.push_back("gaussian(" + std::to_string(rho) + ")");
      }
      const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
      b.lower = *lo;
      b.upper = *hi;
      return b;
    }
  }
  return b;
}

// ---- Proxy-joint checks ---------------------------------------------------

double concordance_discrepancy(const Matrix& r_sim, const Matrix& r_obs) {
  const std::size_t d = r_sim.size();
  if (r_obs.size() != d) throw ArgumentError("concordance_discrepancy: dimension mismatch");
  for (const Matrix* m : {&r_sim, &r_obs}) {
    for (std::size_t i = 0; i < d; ++i) {
      if ((*m)[i].size() != d) throw ArgumentError("concordance_discrepancy: matrix is not square");
      if (std::abs((*m)[i][i] - 1.0) > 1e-12) throw ArgumentError("concordance_discrepancy: diagonal must be 1");
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (std::abs((*m)[i][j] - (*m)[j][i]) > 1e-12) throw ArgumentError("concordance_discrepancy: matrix not symmetric");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s += (r_sim[i][j] - r_obs[i][j]) * (r_sim[i][j] - r_obs[i][j]);
  return std::sqrt(s);
}

std::pair<std::vector<double>, std::vector<double>> uniform_rho_prior(double lo, double hi, std::size_t points) {
  if (!(lo < hi) || lo < -1.0 || hi > 1.0 || points == 0) throw ArgumentError("uniform_rho_prior: need -1 <= lo < hi <= 1");
  std::vector<double> g(points), p(points, 1.0);
  for (std::size_t j = 0; j < points; ++j)
    g[j] = lo + (static_cast<double>(j) + 0.5) * (hi - lo) / static_cast<double>(points);
  return {g, p};
}

namespace {

// Smallest value whose cumulative weight reaches q; values sorted ascending.
double weighted_quantile(const std::vector<std::pair<double, double>>& sorted, double q) {
  double acc = 0.0;
  for (const auto& [v, w] : sorted) {
    acc += w;
    if (acc >= q - 1e-12) return v;
  }
  return sorted.back().first;
}

}  // namespace

CopulaPosterior copula_posterior(std::span<const double> grid, std::span<const double> prior_density,
                                 std::span<const ProxyEvidence> evidence,
                                 const std::function<double(double)>& psi, double gamma) {
  if (grid.empty() || grid.size() != prior_density.size())
    throw ArgumentError("copula_posterior: grid and prior must be nonempty and aligned");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ArgumentError("copula_posterior: gamma must lie in (0,1)");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!(grid[j] > -1.0 && grid[j] < 1.0)) throw DomainError("copula_posterior: grid must lie in (-1,1)");
    if (j > 0 && !(grid[j] > grid[j - 1])) throw ArgumentError("copula_posterior: grid must be increasing");
    if (prior_density[j] < 0.0) throw ArgumentError("copula_posterior: negative prior density");
  }
  for (const auto& e : evidence) {
    if (!(e.rho_obs > -1.0 && e.rho_obs < 1.0)) throw DomainError("copula_posterior: evidence correlation must lie in (-1,1)");
    if (e.n_cross < 4) throw ArgumentError("copula_posterior: n_cross must be at least 4");
  }
  const double prior_sum = std::accumulate(prior_density.begin(), prior_density.end(), 0.0);
  if (!(prior_sum > 0.0)) throw ArgumentError("copula_posterior: prior is zero everywhere");

  CopulaPosterior post;
  post.grid.assign(grid.begin(), grid.end());
  post.evidence.assign(evidence.begin(), evidence.end());
  post.gamma = gamma;
  for (double p : prior_density) post.prior.push_back(p / prior_sum);

  std::vector<double> loglik(grid.size(), 0.0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double z = std::atanh(grid[j]);
    for (const auto& e : evidence) {
      const double d = std::atanh(e.rho_obs) - z;
      loglik[j] -= 0.5 * d * d * (static_cast<double>(e.n_cross) - 3.0);
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (post.prior[j] > 0.0) best = std::max(best, loglik[j]);
  post.posterior.resize(grid.size());
  double total = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    post.posterior[j] = post.prior[j] > 0.0 ? post.prior[j] * std::exp(loglik[j] - best) : 0.0;
    total += post.posterior[j];
  }
  for (double& w : post.posterior) w /= total;

  const auto mode_it = std::max_element(post.posterior.begin(), post.posterior.end());
  post.mode = grid[static_cast<std::size_t>(mode_it - post.posterior.begin())];
  std::vector<std::pair<double, double>> by_rho;
  for (std::size_t j = 0; j < grid.size(); ++j) by_rho.emplace_back(grid[j], post.posterior[j]);
  post.median = weighted_quantile(by_rho, 0.5);

  std::vector<std::pair<double, double>> by_psi;
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (post.posterior[j] > 0.0) by_psi.emplace_back(psi(grid[j]), post.posterior[j]);
  std::sort(by_psi.begin(), by_psi.end());
  post.credible_lo = weighted_quantile(by_psi, 0.5 * (1.0 - gamma));
  post.credible_hi = weighted_quantile(by_psi, 0.5 * (1.0 + gamma));
  return post;
}

HierarchyVerdict hierarchy_check(double point, std::pair<double, double> bayes, std::pair<double, double> constrained,
                                 std::pair<double, double> frechet, double tol) {
  auto inside = [tol](std::pair<double, double> in, std::pair<double, double> out) {
    return in.first >= out.first - tol && in.second <= out.second + tol;
  };
  HierarchyVerdict v;
  if (!inside({point, point}, bayes)) v.violated = "point in bayes";
  else if (!inside(bayes, constrained)) v.violated = "bayes in constrained";
  else if (!inside(constrained, frechet)) v.violated = "constrained in frechet";
  v.holds = !v.violated.has_value();
  return v;
}

}  // namespace twincf
