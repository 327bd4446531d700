#include "twincf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "twincf/error.hpp"

namespace twincf {

// ---- CSV helpers ------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, const std::string& source, std::size_t line, const std::string& column) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(source, line, "column '" + column + "': not a finite number: '" + s + "'");
  return v;
}

long parse_integer(const std::string& raw, const std::string& source, std::size_t line, const std::string& column) {
  const std::string s = trim(raw);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(source, line, "column '" + column + "': not an integer: '" + s + "'");
  return v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Dataset read_dataset_csv(std::istream& in, const std::string& source, std::optional<OutcomeBounds> bounds) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty file, expected header");
  ++lineno;
  const auto header = split_csv(line);
  int col_id = -1, col_d = -1, col_y = -1, col_s = -1, col_rct = -1;
  std::map<int, int> xcols;  // covariate index -> column
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string h = trim(header[c]);
    if (h == "unit_id") col_id = c;
    else if (h == "d") col_d = c;
    else if (h == "y_obs") col_y = c;
    else if (h == "stratum") col_s = c;
    else if (h == "rct") col_rct = c;
    else if (h.size() > 1 && h[0] == 'x' && std::all_of(h.begin() + 1, h.end(), ::isdigit)) {
      const int k = std::stoi(h.substr(1));
      if (k < 1 || xcols.count(k)) throw ParseError(source, 1, "bad or duplicate covariate column '" + h + "'");
      xcols[k] = c;
    } else {
      throw ParseError(source, 1, "unexpected column '" + h + "'");
    }
  }
  if (col_id < 0 || col_d < 0 || col_y < 0) throw ParseError(source, 1, "header needs unit_id, d and y_obs");
  int expect = 1;
  for (const auto& [k, c] : xcols) {
    if (k != expect++) throw ParseError(source, 1, "covariate columns must be x1..xp without gaps");
  }
  Dataset data;
  data.p = xcols.size();
  data.outcome_bounds = bounds;
  std::vector<int> labels;
  std::set<std::string> rct;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw ParseError(source, lineno, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    Unit u;
    u.unit_id = trim(f[col_id]);
    if (u.unit_id.empty()) throw ParseError(source, lineno, "empty unit_id");
    for (const auto& [k, c] : xcols) u.covariates.push_back(parse_number(f[c], source, lineno, "x" + std::to_string(k)));
    const long d = parse_integer(f[col_d], source, lineno, "d");
    if (d != 0 && d != 1) throw ParseError(source, lineno, "treatment d must be 0 or 1");
    u.treatment = static_cast<int>(d);
    u.observed_outcome = parse_number(f[col_y], source, lineno, "y_obs");
    if (bounds && !bounds->contains(u.observed_outcome))
      throw ParseError(source, lineno, "y_obs outside outcome bounds");
    if (col_s >= 0) {
      const long s = parse_integer(f[col_s], source, lineno, "stratum");
      if (s < 0) throw ParseError(source, lineno, "stratum must be >= 0");
      labels.push_back(static_cast<int>(s));
    }
    if (col_rct >= 0) {
      const long r = parse_integer(f[col_rct], source, lineno, "rct");
      if (r != 0 && r != 1) throw ParseError(source, lineno, "rct must be 0 or 1");
      if (r == 1) rct.insert(u.unit_id);
    }
    data.units.push_back(std::move(u));
  }
  if (data.units.empty()) throw ParseError(source, lineno, "no data rows");
  if (col_s >= 0) data.strata = StrataPartition::from_labels(std::move(labels));
  if (!rct.empty()) data.rct_subset = std::move(rct);
  try {
    data.validate();
  } catch (const SpecError& e) {
    throw Error(source + ": " + e.what());
  }
  return data;
}

Dataset read_dataset_csv(const std::string& path, std::optional<OutcomeBounds> bounds) {
  auto in = open_input(path);
  return read_dataset_csv(in, path, bounds);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const bool labels = data.strata && data.strata_count() >= 1;
  out << "unit_id";
  for (std::size_t k = 1; k <= data.p; ++k) out << ",x" << k;
  out << ",d,y_obs";
  if (labels) out << ",stratum";
  if (data.rct_subset) out << ",rct";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Unit& u = data.units[i];
    out << u.unit_id;
    for (double x : u.covariates) out << ',' << format_double(x);
    out << ',' << u.treatment << ',' << format_double(u.observed_outcome);
    if (labels) out << ',' << data.stratum_of(i);
    if (data.rct_subset) out << ',' << (data.rct_subset->count(u.unit_id) ? 1 : 0);
    out << '\n';
  }
}

TwinDraws read_draws_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty file, expected header");
  ++lineno;
  const auto header = split_csv(line);
  const std::vector<std::string> expected{"unit_id", "replicate", "y1_hat", "y0_hat", "coupling"};
  if (header.size() != expected.size()) throw ParseError(source, 1, "header must be unit_id,replicate,y1_hat,y0_hat,coupling");
  for (std::size_t c = 0; c < expected.size(); ++c)
    if (trim(header[c]) != expected[c]) throw ParseError(source, 1, "header must be unit_id,replicate,y1_hat,y0_hat,coupling");

  struct Rows {
    std::map<long, std::pair<double, double>> by_rep;
    std::size_t first_line = 0;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Rows> units;
  std::optional<Coupling> coupling;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw ParseError(source, lineno, "expected 5 fields, got " + std::to_string(f.size()));
    const std::string id = trim(f[0]);
    if (id.empty()) throw ParseError(source, lineno, "empty unit_id");
    const long r = parse_integer(f[1], source, lineno, "replicate");
    if (r < 1) throw ParseError(source, lineno, "replicate must be >= 1");
    const double y1 = parse_number(f[2], source, lineno, "y1_hat");
    const double y0 = parse_number(f[3], source, lineno, "y0_hat");
    Coupling c;
    try {
      c = coupling_from_string(trim(f[4]));
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
    if (coupling && *coupling != c) throw ParseError(source, lineno, "mixed coupling flags");
    coupling = c;
    auto [it, fresh] = units.try_emplace(id);
    if (fresh) {
      order.push_back(id);
      it->second.first_line = lineno;
    }
    if (!it->second.by_rep.emplace(r, std::pair{y1, y0}).second)
      throw ParseError(source, lineno, "duplicate replicate " + std::to_string(r) + " for unit " + id);
  }
  if (order.empty()) throw ParseError(source, lineno, "no data rows");
  TwinDraws d;
  d.coupling = *coupling;
  d.replicates = units[order.front()].by_rep.size();
  for (const auto& id : order) {
    const Rows& rows = units[id];
    if (rows.by_rep.size() != d.replicates || rows.by_rep.rbegin()->first != static_cast<long>(d.replicates))
      throw ParseError(source, rows.first_line,
                       "unit " + id + " must have replicates 1.." + std::to_string(d.replicates));
    d.unit_ids.push_back(id);
    for (const auto& [r, v] : rows.by_rep) {
      d.y1.push_back(v.first);
      d.y0.push_back(v.second);
    }
  }
  return d;
}

TwinDraws read_draws_csv(const std::string& path) {
  auto in = open_input(path);
  return read_draws_csv(in, path);
}

void write_draws_csv(std::ostream& out, const TwinDraws& draws) {
  out << "unit_id,replicate,y1_hat,y0_hat,coupling\n";
  const std::string c = to_string(draws.coupling);
  for (std::size_t i = 0; i < draws.units(); ++i)
    for (std::size_t r = 0; r < draws.replicates; ++r)
      out << draws.unit_ids[i] << ',' << (r + 1) << ',' << format_double(draws.y1_at(i, r)) << ','
          << format_double(draws.y0_at(i, r)) << ',' << c << '\n';
}

void write_truth_csv(std::ostream& out, const Dataset& data, const HiddenTruth& truth) {
  out << "unit_id,y1,y0\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    out << data.units[i].unit_id << ',' << format_double(truth.y1[i]) << ',' << format_double(truth.y0[i]) << '\n';
}

// ---- JSON helpers -----------------------------------------------------------

namespace {

void check_keys(const Json& j, const std::string& field, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SpecError(field, "expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw SpecError(field.empty() ? k : field + "." + k, "unknown key");
  }
}

std::string join(const std::string& field, const std::string& key) { return field.empty() ? key : field + "." + key; }

double get_number(const Json& j, const std::string& field, const char* key, std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw SpecError(join(field, key), "required");
  }
  if (!j.at(key).is_number()) throw SpecError(join(field, key), "expected a number");
  return j.at(key).get<double>();
}

std::size_t get_count(const Json& j, const std::string& field, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw SpecError(join(field, key), "expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::string get_string(const Json& j, const std::string& field, const char* key, std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw SpecError(join(field, key), "required");
  }
  if (!j.at(key).is_string()) throw SpecError(join(field, key), "expected a string");
  return j.at(key).get<std::string>();
}

std::vector<double> get_numbers(const Json& j, const std::string& field, const char* key) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  const Json& a = j.at(key);
  if (!a.is_array()) throw SpecError(join(field, key), "expected an array of numbers");
  for (const auto& v : a) {
    if (!v.is_number()) throw SpecError(join(field, key), "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::optional<OutcomeBounds> get_bounds(const Json& j, const std::string& field) {
  if (!j.contains("outcome_bounds") || j.at("outcome_bounds").is_null()) return std::nullopt;
  const auto v = get_numbers(j, field, "outcome_bounds");
  if (v.size() != 2 || !(v[0] < v[1])) throw SpecError(join(field, "outcome_bounds"), "expected [a, b] with a < b");
  return OutcomeBounds{v[0], v[1]};
}

Json bounds_json(const std::optional<OutcomeBounds>& b) {
  if (!b) return nullptr;
  return Json::array({b->lower, b->upper});
}

template <class F>
auto rethrow_domain(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(field, e.what());
  }
}

ArmLaws arm_laws_from_json(const Json& j, const std::string& field, bool allow_prob) {
  if (allow_prob) check_keys(j, field, {"treated", "control", "assignment_prob"});
  else check_keys(j, field, {"treated", "control"});
  if (!j.contains("treated")) throw SpecError(join(field, "treated"), "required");
  if (!j.contains("control")) throw SpecError(join(field, "control"), "required");
  return {marginal_from_json(j.at("treated"), join(field, "treated")),
          marginal_from_json(j.at("control"), join(field, "control"))};
}

Json arm_laws_json(const ArmLaws& a) { return {{"treated", to_json(a.treated)}, {"control", to_json(a.control)}}; }

}  // namespace

MarginalLaw marginal_from_json(const Json& j, const std::string& field) {
  if (!j.is_object()) throw SpecError(field, "expected an object");
  const std::string fam = get_string(j, field, "family");
  const MarginalFamily family = rethrow_domain(join(field, "family"), [&] { return marginal_family_from_string(fam); });
  MarginalLaw m;
  switch (family) {
    case MarginalFamily::normal:
      check_keys(j, field, {"family", "mean", "sd", "coef"});
      m = MarginalLaw::normal(get_number(j, field, "mean"), get_number(j, field, "sd"), get_numbers(j, field, "coef"));
      break;
    case MarginalFamily::lognormal:
      check_keys(j, field, {"family", "meanlog", "sdlog", "coef"});
      m = MarginalLaw::lognormal(get_number(j, field, "meanlog"), get_number(j, field, "sdlog"), get_numbers(j, field, "coef"));
      break;
    case MarginalFamily::bernoulli:
      check_keys(j, field, {"family", "p"});
      m = MarginalLaw::bernoulli(get_number(j, field, "p"));
      break;
  }
  return m;
}

Json to_json(const MarginalLaw& m) {
  Json j{{"family", to_string(m.family)}};
  switch (m.family) {
    case MarginalFamily::normal: j["mean"] = m.location; j["sd"] = m.scale; break;
    case MarginalFamily::lognormal: j["meanlog"] = m.location; j["sdlog"] = m.scale; break;
    case MarginalFamily::bernoulli: j["p"] = m.p; break;
  }
  if (!m.coef.empty()) j["coef"] = m.coef;
  return j;
}

CopulaSpec copula_from_json(const Json& j, const std::string& field) {
  check_keys(j, field, {"family", "parameter"});
  const std::string fam = get_string(j, field, "family");
  CopulaSpec c;
  c.family = rethrow_domain(join(field, "family"), [&] { return copula_family_from_string(fam); });
  if (c.parametric()) c.parameter = get_number(j, field, "parameter");
  else if (j.contains("parameter") && !j.at("parameter").is_null())
    throw SpecError(join(field, "parameter"), "family " + fam + " takes no parameter");
  rethrow_domain(join(field, "parameter"), [&] { c.validate(); return 0; });
  return c;
}

Json to_json(const CopulaSpec& c) {
  Json j{{"family", to_string(c.family)}};
  if (c.parametric()) j["parameter"] = c.parameter;
  return j;
}

WorldSpec world_from_json(const Json& j) {
  check_keys(j, "", {"covariates", "strata_bins", "strata", "copula", "outcome_bounds", "rct_fraction"});
  WorldSpec w;
  if (j.contains("covariates")) {
    if (!j.at("covariates").is_array()) throw SpecError("covariates", "expected an array");
    for (std::size_t k = 0; k < j.at("covariates").size(); ++k) {
      const Json& c = j.at("covariates")[k];
      const std::string f = "covariates[" + std::to_string(k) + "]";
      check_keys(c, f, {"kind", "a", "b"});
      CovariateRule r;
      const std::string kind = get_string(c, f, "kind");
      if (kind == "uniform") r.kind = CovariateRule::Kind::uniform;
      else if (kind == "normal") r.kind = CovariateRule::Kind::normal;
      else if (kind == "bernoulli") r.kind = CovariateRule::Kind::bernoulli;
      else throw SpecError(f + ".kind", "expected uniform, normal or bernoulli");
      r.a = get_number(c, f, "a", r.kind == CovariateRule::Kind::bernoulli ? 0.5 : 0.0);
      r.b = get_number(c, f, "b", 1.0);
      w.covariates.push_back(r);
    }
  }
  if (j.contains("strata_bins")) {
    if (!j.at("strata_bins").is_array()) throw SpecError("strata_bins", "expected an array");
    for (std::size_t k = 0; k < j.at("strata_bins").size(); ++k) {
      const Json& b = j.at("strata_bins")[k];
      const std::string f = "strata_bins[" + std::to_string(k) + "]";
      check_keys(b, f, {"coordinate", "edges"});
      w.strata_bins.push_back({get_count(b, f, "coordinate", 0), get_numbers(b, f, "edges")});
    }
  }
  if (!j.contains("strata") || !j.at("strata").is_array() || j.at("strata").empty())
    throw SpecError("strata", "required: array of per-stratum arm laws");
  for (std::size_t k = 0; k < j.at("strata").size(); ++k) {
    const Json& s = j.at("strata")[k];
    const std::string f = "strata[" + std::to_string(k) + "]";
    WorldStratum ws;
    ws.laws = arm_laws_from_json(s, f, true);
    ws.assignment_prob = get_number(s, f, "assignment_prob", 0.5);
    w.strata.push_back(ws);
  }
  if (j.contains("copula")) w.copula = copula_from_json(j.at("copula"), "copula");
  w.outcome_bounds = get_bounds(j, "");
  w.rct_fraction = get_number(j, "", "rct_fraction", 0.0);
  if (!(w.rct_fraction >= 0.0 && w.rct_fraction <= 1.0)) throw SpecError("rct_fraction", "must lie in [0,1]");
  w.validate();
  return w;
}

Json to_json(const WorldSpec& w) {
  Json j;
  j["covariates"] = Json::array();
  for (const auto& c : w.covariates) {
    const char* kind = c.kind == CovariateRule::Kind::uniform ? "uniform"
                       : c.kind == CovariateRule::Kind::normal ? "normal" : "bernoulli";
    j["covariates"].push_back({{"kind", kind}, {"a", c.a}, {"b", c.b}});
  }
  j["strata_bins"] = Json::array();
  for (const auto& b : w.strata_bins) j["strata_bins"].push_back({{"coordinate", b.coordinate}, {"edges", b.edges}});
  j["strata"] = Json::array();
  for (const auto& s : w.strata) {
    Json e = arm_laws_json(s.laws);
    e["assignment_prob"] = s.assignment_prob;
    j["strata"].push_back(e);
  }
  j["copula"] = to_json(w.copula);
  j["outcome_bounds"] = bounds_json(w.outcome_bounds);
  j["rct_fraction"] = w.rct_fraction;
  return j;
}

SimulatorSpec simulator_from_json(const Json& j) {
  check_keys(j, "", {"kind", "marginals", "copula", "perturbation", "dispersion_scale", "structural", "sequential"});
  SimulatorSpec s;
  const std::string kind = get_string(j, "", "kind", std::string("oracle"));
  s.kind = rethrow_domain("kind", [&] { return simulator_kind_from_string(kind); });
  if (j.contains("marginals")) {
    if (!j.at("marginals").is_array()) throw SpecError("marginals", "expected an array");
    for (std::size_t k = 0; k < j.at("marginals").size(); ++k)
      s.marginals.push_back(arm_laws_from_json(j.at("marginals")[k], "marginals[" + std::to_string(k) + "]", false));
  }
  if (j.contains("copula")) s.copula = copula_from_json(j.at("copula"), "copula");
  if (j.contains("perturbation") && !j.at("perturbation").is_null()) {
    const Json& p = j.at("perturbation");
    check_keys(p, "perturbation", {"epsilon", "arm"});
    Perturbation pt;
    pt.epsilon = get_number(p, "perturbation", "epsilon");
    const std::string arm = get_string(p, "perturbation", "arm", std::string("treated"));
    if (arm == "treated") pt.arm = PerturbArm::treated;
    else if (arm == "control") pt.arm = PerturbArm::control;
    else if (arm == "both") pt.arm = PerturbArm::both;
    else throw SpecError("perturbation.arm", "expected treated, control or both");
    s.perturbation = pt;
  }
  s.dispersion_scale = get_number(j, "", "dispersion_scale", 1.0);
  if (j.contains("structural") && !j.at("structural").is_null()) {
    const Json& st = j.at("structural");
    check_keys(st, "structural", {"mediator", "outcome"});
    StructuralParts p;
    if (st.contains("mediator")) {
      const Json& m = st.at("mediator");
      check_keys(m, "structural.mediator", {"intercept", "treat", "sd", "coef"});
      p.m_intercept = get_number(m, "structural.mediator", "intercept", 0.0);
      p.m_treat = get_number(m, "structural.mediator", "treat", 0.0);
      p.m_sd = get_number(m, "structural.mediator", "sd", 0.0);
      p.m_coef = get_numbers(m, "structural.mediator", "coef");
    }
    if (st.contains("outcome")) {
      const Json& y = st.at("outcome");
      check_keys(y, "structural.outcome", {"intercept", "treat", "mediator", "interaction", "sd", "coef"});
      p.y_intercept = get_number(y, "structural.outcome", "intercept", 0.0);
      p.y_treat = get_number(y, "structural.outcome", "treat", 0.0);
      p.y_mediator = get_number(y, "structural.outcome", "mediator", 0.0);
      p.y_interaction = get_number(y, "structural.outcome", "interaction", 0.0);
      p.y_sd = get_number(y, "structural.outcome", "sd", 0.0);
      p.y_coef = get_numbers(y, "structural.outcome", "coef");
    }
    if (p.m_sd < 0.0) throw SpecError("structural.mediator.sd", "must be >= 0");
    if (p.y_sd < 0.0) throw SpecError("structural.outcome.sd", "must be >= 0");
    s.structural = p;
  }
  if (j.contains("sequential") && !j.at("sequential").is_null()) {
    const Json& q = j.at("sequential");
    const std::string f = "sequential";
    check_keys(q, f, {"horizon", "baseline", "persistence", "effect", "effect_state", "noise_sd", "coef"});
    SequentialParts p;
    p.horizon = static_cast<int>(get_count(q, f, "horizon", 0));
    p.baseline = get_number(q, f, "baseline", 0.0);
    p.persistence = get_number(q, f, "persistence", 1.0);
    p.effect = get_number(q, f, "effect", 0.0);
    p.effect_state = get_number(q, f, "effect_state", 0.0);
    p.noise_sd = get_number(q, f, "noise_sd", 0.0);
    p.coef = get_numbers(q, f, "coef");
    if (p.noise_sd < 0.0) throw SpecError("sequential.noise_sd", "must be >= 0");
    s.sequential = p;
  }
  s.validate();
  return s;
}

Json to_json(const SimulatorSpec& s) {
  Json j{{"kind", to_string(s.kind)}, {"dispersion_scale", s.dispersion_scale}, {"copula", to_json(s.copula)}};
  j["marginals"] = Json::array();
  for (const auto& m : s.marginals) j["marginals"].push_back(arm_laws_json(m));
  if (s.perturbation) {
    const char* arm = s.perturbation->arm == PerturbArm::treated ? "treated"
                      : s.perturbation->arm == PerturbArm::control ? "control" : "both";
    j["perturbation"] = {{"epsilon", s.perturbation->epsilon}, {"arm", arm}};
  }
  if (s.structural) {
    const auto& p = *s.structural;
    j["structural"] = {{"mediator", {{"intercept", p.m_intercept}, {"treat", p.m_treat}, {"sd", p.m_sd}, {"coef", p.m_coef}}},
                       {"outcome", {{"intercept", p.y_intercept}, {"treat", p.y_treat}, {"mediator", p.y_mediator},
                                    {"interaction", p.y_interaction}, {"sd", p.y_sd}, {"coef", p.y_coef}}}};
  }
  if (s.sequential) {
    const auto& p = *s.sequential;
    j["sequential"] = {{"horizon", p.horizon}, {"baseline", p.baseline}, {"persistence", p.persistence},
                       {"effect", p.effect}, {"effect_state", p.effect_state}, {"noise_sd", p.noise_sd}, {"coef", p.coef}};
  }
  return j;
}

LevelConfig level_config_from_json(const Json& j) {
  const std::string f = "validation";
  check_keys(j, f, {"alpha", "eps0_bar", "eps1_bar", "min_stratum_n", "bootstrap_B", "ad_permutations",
                    "energy_permutations", "cmmd", "cmmd_permutations", "interval_level", "slope_tolerance",
                    "rmspe_max", "placebo_arm", "monotonicity_pairs"});
  LevelConfig c;
  c.alpha = get_number(j, f, "alpha", c.alpha);
  c.eps0_bar = get_number(j, f, "eps0_bar", c.eps0_bar);
  c.eps1_bar = get_number(j, f, "eps1_bar", c.eps1_bar);
  c.min_stratum_n = get_count(j, f, "min_stratum_n", c.min_stratum_n);
  c.bootstrap_B = get_count(j, f, "bootstrap_B", c.bootstrap_B);
  c.ad_permutations = get_count(j, f, "ad_permutations", c.ad_permutations);
  c.energy_permutations = get_count(j, f, "energy_permutations", c.energy_permutations);
  if (j.contains("cmmd")) {
    if (!j.at("cmmd").is_boolean()) throw SpecError("validation.cmmd", "expected true or false");
    c.cmmd = j.at("cmmd").get<bool>();
  }
  c.cmmd_permutations = get_count(j, f, "cmmd_permutations", c.cmmd_permutations);
  c.interval_level = get_number(j, f, "interval_level", c.interval_level);
  if (j.contains("slope_tolerance") && !j.at("slope_tolerance").is_null()) c.slope_tolerance = get_number(j, f, "slope_tolerance");
  if (j.contains("rmspe_max") && !j.at("rmspe_max").is_null()) c.rmspe_max = get_number(j, f, "rmspe_max");
  if (j.contains("placebo_arm") && !j.at("placebo_arm").is_null())
    c.placebo_arm = static_cast<int>(get_count(j, f, "placebo_arm", 0));
  if (j.contains("monotonicity_pairs")) {
    const Json& m = j.at("monotonicity_pairs");
    if (!m.is_array()) throw SpecError("validation.monotonicity_pairs", "expected [[d1, d2], ...]");
    for (const auto& p : m) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
        throw SpecError("validation.monotonicity_pairs", "expected [[d1, d2], ...]");
      c.monotonicity_pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
  }
  try {
    c.validate();
  } catch (const SpecError& e) {
    throw SpecError("validation." + e.field(), e.what());
  }
  return c;
}

Json to_json(const LevelConfig& c) {
  Json j{{"alpha", c.alpha},
         {"eps0_bar", c.eps0_bar},
         {"eps1_bar", c.eps1_bar},
         {"min_stratum_n", c.min_stratum_n},
         {"bootstrap_B", c.bootstrap_B},
         {"ad_permutations", c.ad_permutations},
         {"energy_permutations", c.energy_permutations},
         {"cmmd", c.cmmd},
         {"cmmd_permutations", c.cmmd_permutations},
         {"interval_level", c.interval_level},
         {"seed", c.seed}};
  j["slope_tolerance"] = c.slope_tolerance ? Json(*c.slope_tolerance) : Json(nullptr);
  j["rmspe_max"] = c.rmspe_max ? Json(*c.rmspe_max) : Json(nullptr);
  j["placebo_arm"] = c.placebo_arm ? Json(*c.placebo_arm) : Json(nullptr);
  j["monotonicity_pairs"] = Json::array();
  for (const auto& [a, b] : c.monotonicity_pairs) j["monotonicity_pairs"].push_back({a, b});
  return j;
}

Json read_json_file(const std::string& path) {
  auto in = open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ParseError(path, line, e.what());
  }
}

RunConfig run_config_from_json(const Json& j) {
  check_keys(j, "", {"seed", "n", "replicates", "outcome_bounds", "formats", "validation", "estimands", "estimate",
                     "bounds", "sensitivity", "power", "transport", "calibration"});
  RunConfig rc;
  rc.raw = j;
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0) throw SpecError("seed", "expected a nonnegative integer");
    rc.seed = j.at("seed").get<std::uint64_t>();
  }
  rc.n = get_count(j, "", "n", rc.n);
  rc.replicates = get_count(j, "", "replicates", rc.replicates);
  if (rc.replicates < 1) throw SpecError("replicates", "must be >= 1");
  rc.outcome_bounds = get_bounds(j, "");
  if (j.contains("validation")) rc.level = level_config_from_json(j.at("validation"));
  rc.level.seed = rc.seed;
  if (j.contains("formats")) {
    rc.formats.clear();
    for (const auto& f : j.at("formats")) {
      const std::string s = f.get<std::string>();
      if (s != "json" && s != "markdown" && s != "csv") throw SpecError("formats", "expected json, markdown or csv");
      rc.formats.push_back(s);
    }
  }
  if (j.contains("estimands")) {
    for (const auto& e : j.at("estimands")) rc.estimands.push_back(e.get<std::string>());
  }
  if (j.contains("estimate")) {
    const Json& e = j.at("estimate");
    check_keys(e, "estimate", {"q_grid", "gates_groups", "cate_mode", "bandwidth", "coordinate"});
    if (e.contains("q_grid")) rc.catalog.q_grid = get_numbers(e, "estimate", "q_grid");
    rc.catalog.gates_groups = get_count(e, "estimate", "gates_groups", rc.catalog.gates_groups);
    const std::string mode = get_string(e, "estimate", "cate_mode", std::string("stratified"));
    if (mode == "stratified") rc.catalog.cate.mode = CateMode::stratified;
    else if (mode == "kernel") rc.catalog.cate.mode = CateMode::kernel;
    else throw SpecError("estimate.cate_mode", "expected stratified or kernel");
    if (e.contains("bandwidth") && !e.at("bandwidth").is_string()) rc.catalog.cate.bandwidth = get_number(e, "estimate", "bandwidth");
    rc.catalog.cate.coordinate = get_count(e, "estimate", "coordinate", 0);
  }
  rc.catalog.seed = rc.seed;
  return rc;
}

std::string hash_json(const Json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const LevelConfig& config) { return hash_json(to_json(config)); }

}  // namespace twincf
