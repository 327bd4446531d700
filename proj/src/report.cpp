#include "twincf/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "twincf/error.hpp"

namespace twincf {

namespace {

Json opt(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

Json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", *v);
  return buf;
}

std::string verdict(RowOutcome o) {
  switch (o) {
    case RowOutcome::pass: return "PASS";
    case RowOutcome::fail: return "FAIL";
    case RowOutcome::report_only: return "report";
    case RowOutcome::skipped: return "skipped";
  }
  return "?";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

Json curve_json(const std::vector<CurvePoint>& curve) {
  Json a = Json::array();
  for (const auto& p : curve) a.push_back({num(p.x), opt(p.y)});
  return a;
}

}  // namespace

Json to_json(const ScoreRow& row) {
  return {{"level", row.level},
          {"test", row.test},
          {"statistic", row.statistic},
          {"value", opt(row.value)},
          {"threshold", row.threshold},
          {"threshold_value", opt(row.threshold_value)},
          {"outcome", to_string(row.outcome)},
          {"note", row.note}};
}

Json to_json(const Scorecard& s) {
  Json j;
  j["alpha"] = s.alpha;
  j["eps0_bar"] = s.eps0_bar;
  j["eps1_bar"] = s.eps1_bar;
  j["seed"] = s.seed;
  j["config_hash"] = s.config_hash;
  j["n_units"] = s.n_units;
  j["replicates"] = s.replicates;
  j["coupling"] = s.coupling;
  j["rows"] = Json::array();
  for (const auto& r : s.rows) j["rows"].push_back(to_json(r));
  j["eps0"] = num(s.eps0);
  j["eps1"] = opt(s.eps1);
  j["licensed"] = s.licensed;
  j["never_licensed"] = s.never_licensed;
  j["stopped"] = s.stopped;
  j["stop_reason"] = s.stop_reason;
  j["complete"] = s.complete();
  j["passed"] = s.passed();
  return j;
}

std::string scorecard_markdown(const Scorecard& s) {
  std::ostringstream os;
  os << "# Validation scorecard\n\n";
  os << "- units: " << s.n_units << ", replicates: " << s.replicates << ", coupling: " << s.coupling << "\n";
  os << "- alpha: " << s.alpha << ", eps0_bar: " << s.eps0_bar << ", eps1_bar: " << s.eps1_bar << "\n";
  os << "- seed: " << s.seed << ", config hash: " << s.config_hash << "\n\n";
  os << "| Level | Test | Statistic | Value | Threshold | Pass/Fail |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& r : s.rows) {
    os << "| " << r.level << " | " << md_escape(r.test) << " | " << md_escape(r.statistic) << " | " << cell(r.value)
       << " | " << md_escape(r.threshold) << " | " << verdict(r.outcome);
    if (!r.note.empty()) os << " (" << md_escape(r.note) << ")";
    os << " |\n";
  }
  os << "\n";
  os << "eps0 = " << cell(s.eps0) << ", eps1 = " << cell(s.eps1) << "\n\n";
  if (s.stopped) os << "**STOP**: " << s.stop_reason << "\n\n";
  os << "Licensed: " << (s.licensed.empty() ? std::string("none") : "") ;
  for (std::size_t k = 0; k < s.licensed.size(); ++k) os << (k ? ", " : "") << s.licensed[k];
  os << "\n\nNever licensed by data (copula-dependent): ";
  for (std::size_t k = 0; k < s.never_licensed.size(); ++k) os << (k ? ", " : "") << s.never_licensed[k];
  os << "\n";
  return os.str();
}

std::string scorecard_text(const Scorecard& s) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-5s %-28s %-14s %-12s %-16s %s\n", "level", "test", "statistic", "value",
                "threshold", "outcome");
  os << buf;
  for (const auto& r : s.rows) {
    std::snprintf(buf, sizeof buf, "%-5d %-28s %-14s %-12s %-16s %s\n", r.level, r.test.c_str(), r.statistic.c_str(),
                  cell(r.value).c_str(), r.threshold.c_str(), verdict(r.outcome).c_str());
    os << buf;
  }
  if (s.stopped) os << "STOP: " << s.stop_reason << "\n";
  os << "licensed:";
  for (const auto& e : s.licensed) os << ' ' << e;
  os << "\n" << (s.passed() ? "PASSED" : "NOT PASSED") << "\n";
  return os.str();
}

void write_scorecard_csv(std::ostream& out, const Scorecard& s) {
  out << "level,test,statistic,value,threshold,outcome,note\n";
  for (const auto& r : s.rows)
    out << r.level << ',' << csv_field(r.test) << ',' << csv_field(r.statistic) << ','
        << (r.value ? format_double(*r.value) : "") << ',' << csv_field(r.threshold) << ',' << to_string(r.outcome)
        << ',' << csv_field(r.note) << '\n';
}

Json to_json(const BoundsResult& b) {
  Json j{{"estimand", b.estimand},
         {"lower", num(b.lower)},
         {"upper", num(b.upper)},
         {"regime", to_string(b.regime)},
         {"attaining_copulas", b.attaining_copulas}};
  j["infeasible"] = b.infeasible ? Json(*b.infeasible) : Json(nullptr);
  return j;
}

Json to_json(const EstimandResult& e) {
  Json j{{"name", e.name},
         {"value", opt(e.value)},
         {"fidelity_required", to_string(e.fidelity_required)},
         {"copula_dependent", e.copula_dependent},
         {"mc_se", opt(e.mc_se)}};
  if (!e.curve.empty()) j["curve"] = curve_json(e.curve);
  if (e.bounds) j["bounds"] = to_json(*e.bounds);
  if (e.csi) j["csi"] = num(*e.csi);
  if (!e.extras.empty()) {
    Json x = Json::object();
    for (const auto& [k, v] : e.extras) x[k] = num(v);
    j["extras"] = x;
  }
  return j;
}

Json to_json(const SensitivityCurve& c) {
  Json pts = Json::array();
  for (std::size_t k = 0; k < c.grid.size(); ++k) pts.push_back({{"parameter", c.grid[k]}, {"value", num(c.values[k])}, {"mc_se", num(c.mc_se[k])}});
  return {{"family", to_string(c.family)},
          {"functional", to_string(c.theta.functional)},
          {"t", c.theta.t},
          {"points", pts},
          {"range", num(c.range())},
          {"copula_robust", c.copula_robust()},
          {"reference_parameter", c.reference_parameter},
          {"csi", num(c.csi)}};
}

Json to_json(const TransportReport& t) {
  Json j{{"eps_treated", num(t.eps_treated)},
         {"eps_control", num(t.eps_control)},
         {"discrepancy", num(t.discrepancy)},
         {"t3", opt(t.t3)},
         {"delta_treated", t.delta_treated},
         {"delta_control", t.delta_control},
         {"widened_bound", opt(t.widened_bound)}};
  if (t.placebo) {
    const auto& p = *t.placebo;
    j["placebo"] = {{"stratum_a", p.stratum_a}, {"stratum_b", p.stratum_b}, {"eps_a", num(p.eps_a)},
                    {"eps_b", num(p.eps_b)},   {"difference", num(p.difference)}, {"band", num(p.band)},
                    {"differential", p.differential}};
  }
  return j;
}

Json to_json(const CopulaPosterior& p) {
  Json ev = Json::array();
  for (const auto& e : p.evidence) ev.push_back({{"rho_obs", e.rho_obs}, {"n_cross", e.n_cross}});
  return {{"grid", p.grid},     {"prior", p.prior},   {"posterior", p.posterior}, {"evidence", ev},
          {"mode", p.mode},     {"median", p.median}, {"credible", {p.credible_lo, p.credible_hi}},
          {"gamma", p.gamma}};
}

Json to_json(const MediationResult& m) {
  return {{"nde", num(m.nde)}, {"nie", num(m.nie)}, {"ate", num(m.ate)}, {"cde", opt(m.cde)}, {"mc_se", num(m.mc_se)}};
}

Json to_json(const SequentialResult& s) {
  Json regimes = Json::array();
  for (std::size_t k = 0; k < s.regimes.size(); ++k)
    regimes.push_back({{"regime", s.regimes[k]}, {"value", num(s.values[k])}, {"mc_se", num(s.mc_se[k])}});
  return {{"regimes", regimes}, {"argmax", s.argmax}, {"tau_curve", s.tau_curve}};
}

Json to_json(const SurvivalResult& s) {
  return {{"grid", s.grid}, {"s1", s.s1}, {"s0", s.s0}, {"rmst1", num(s.rmst1)}, {"rmst0", num(s.rmst0)},
          {"delta", num(s.delta)}, {"mc_se", num(s.mc_se)}};
}

Json results_document(const std::vector<EstimandResult>& results, std::uint64_t seed, const std::string& hash,
                      std::optional<double> eps0, std::optional<double> eps1) {
  Json j;
  j["seed"] = seed;
  j["config_hash"] = hash;
  j["eps0"] = opt(eps0);
  j["eps1"] = opt(eps1);
  j["estimands"] = Json::array();
  for (const auto& e : results) {
    if (e.copula_dependent && !e.bounds)
      throw ArgumentError("estimand '" + e.name + "' is copula-dependent and has no bounds attached");
    j["estimands"].push_back(to_json(e));
  }
  return j;
}

std::string results_markdown(const std::vector<EstimandResult>& results) {
  std::ostringstream os;
  os << "| Estimand | Value | MC s.e. | Bounds | CSI | Copula-dependent |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& e : results) {
    os << "| " << e.name << " | " << (e.value ? cell(e.value) : (e.curve.empty() ? "-" : "curve")) << " | "
       << cell(e.mc_se) << " | ";
    if (e.bounds) {
      if (e.bounds->infeasible) os << "infeasible";
      else os << "[" << cell(e.bounds->lower) << ", " << cell(e.bounds->upper) << "] (" << to_string(e.bounds->regime) << ")";
    } else {
      os << "-";
    }
    os << " | " << cell(e.csi) << " | " << (e.copula_dependent ? "yes" : "no") << " |\n";
  }
  return os.str();
}

void write_results_csv(std::ostream& out, const std::vector<EstimandResult>& results) {
  out << "estimand,x,value,mc_se,lower,upper,csi,copula_dependent\n";
  auto f = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& e : results) {
    const std::string lo = e.bounds ? format_double(e.bounds->lower) : "";
    const std::string hi = e.bounds ? format_double(e.bounds->upper) : "";
    const std::string tail = "," + lo + "," + hi + "," + f(e.csi) + "," + (e.copula_dependent ? "1" : "0") + "\n";
    if (e.value || e.curve.empty()) out << e.name << ",," << f(e.value) << ',' << f(e.mc_se) << tail;
    for (const auto& p : e.curve) out << e.name << ',' << format_double(p.x) << ',' << f(p.y) << ',' << tail;
  }
}

}  // namespace twincf
