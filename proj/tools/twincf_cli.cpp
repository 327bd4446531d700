// twincf: command-line front end.
//
//   twincf simulate-world --world w.json --n 10000 --seed 1 --out run/
//   twincf validate --data run/dataset.csv --sim sim.json --config cfg.json --out run/
//   twincf estimate --data run/dataset.csv --draws run/draws.csv --estimands ate,pbenefit
//   twincf bounds --sd1 2 --sd0 2
//   twincf sensitivity --sim sim.json --functional ate
//   twincf power --level 0 --epsilon 0.05
//
// Exit status: 0 success (validate: every pass/fail row passed), 1 validation
// not passed, 2 usage or input error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twincf/error.hpp"
#include "twincf/estimands.hpp"
#include "twincf/io.hpp"
#include "twincf/model.hpp"
#include "twincf/sensitivity.hpp"
#include "twincf/stats.hpp"
#include "twincf/validation.hpp"

namespace fs = std::filesystem;
using namespace twincf;

namespace {

struct Common {
  std::string data, draws, sim, world, config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> formats;
};

std::ofstream open_output(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot open '" + p.string() + "' for writing");
  return os;
}

void write_text(const fs::path& p, const std::string& s) {
  auto os = open_output(p);
  os << s;
}

void write_json(const fs::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

RunConfig load_config(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : run_config_from_json(read_json_file(c.config));
  if (c.seed) {
    rc.seed = *c.seed;
    rc.level.seed = *c.seed;
    rc.catalog.seed = *c.seed;
  }
  if (!c.formats.empty()) {
    for (const auto& f : c.formats)
      if (f != "json" && f != "markdown" && f != "csv") throw ArgumentError("--format: expected json, markdown or csv");
    rc.formats = c.formats;
  }
  return rc;
}

bool wants(const RunConfig& rc, const std::string& f) {
  return std::find(rc.formats.begin(), rc.formats.end(), f) != rc.formats.end();
}

fs::path prepare_out(const Common& c) {
  fs::path p(c.out);
  fs::create_directories(p);
  return p;
}

/// Hash of every spec document that shaped the run.
std::string spec_hash(const Common& c, const RunConfig& rc) {
  Json parts = Json::object();
  if (!c.world.empty()) parts["world"] = read_json_file(c.world);
  if (!c.sim.empty()) parts["sim"] = read_json_file(c.sim);
  parts["config"] = rc.raw;
  parts["seed"] = rc.seed;
  return hash_json(parts);
}

void write_manifest(const fs::path& dir, const std::string& command, const Common& c, const RunConfig& rc,
                    const std::vector<std::string>& outputs) {
  Json m{{"command", command}, {"seed", rc.seed}, {"spec_hash", spec_hash(c, rc)}, {"outputs", outputs}};
  Json in = Json::object();
  if (!c.data.empty()) in["data"] = c.data;
  if (!c.draws.empty()) in["draws"] = c.draws;
  if (!c.sim.empty()) in["sim"] = c.sim;
  if (!c.world.empty()) in["world"] = c.world;
  if (!c.config.empty()) in["config"] = c.config;
  m["inputs"] = in;
  write_json(dir / "manifest.json", m);
}

Dataset load_data(const Common& c, const RunConfig& rc) {
  if (c.data.empty()) throw ArgumentError("--data is required");
  return read_dataset_csv(c.data, rc.outcome_bounds);
}

std::optional<SimulatorSpec> load_sim(const Common& c) {
  if (c.sim.empty()) return std::nullopt;
  return simulator_from_json(read_json_file(c.sim));
}

TwinDraws obtain_draws(const Common& c, const RunConfig& rc, const Dataset& data, const std::optional<SimulatorSpec>& sim) {
  if (!c.draws.empty() && sim) throw ArgumentError("give exactly one of --draws and --sim");
  if (!c.draws.empty()) return read_draws_csv(c.draws);
  if (sim) return simulate_twins(*sim, data, rc.replicates, rc.seed);
  throw ArgumentError("give exactly one of --draws and --sim");
}

/// Arm laws from --sim (one stratum) or from normal parameters on the command line.
struct LawArgs {
  int stratum = 0;
  double mean1 = 0.0, mean0 = 0.0;
  std::optional<double> sd1, sd0;
};

ArmLaws load_laws(const Common& c, const LawArgs& a) {
  if (auto sim = load_sim(c)) {
    if (a.stratum < 0 || static_cast<std::size_t>(a.stratum) >= sim->marginals.size())
      throw ArgumentError("--stratum out of range");
    return sim->effective_laws(static_cast<std::size_t>(a.stratum), std::nullopt);
  }
  if (!a.sd1 || !a.sd0) throw ArgumentError("give --sim or both --sd1 and --sd0");
  return {MarginalLaw::normal(a.mean1, *a.sd1), MarginalLaw::normal(a.mean0, *a.sd0)};
}

void add_common(CLI::App* app, Common& c, bool data_flags) {
  if (data_flags) {
    app->add_option("--data", c.data, "Observed dataset CSV");
    app->add_option("--draws", c.draws, "Twin draws CSV");
  }
  app->add_option("--sim", c.sim, "Simulator spec JSON");
  app->add_option("--config", c.config, "Run config JSON");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--seed", c.seed, "Master seed (overrides the config)");
  app->add_option("--format", c.formats, "Report formats: json, markdown, csv")->delimiter(',');
}

// ---- subcommands ----------------------------------------------------------

int cmd_simulate_world(const Common& c, std::size_t n, std::size_t replicates) {
  if (c.world.empty()) throw ArgumentError("--world is required");
  if (n == 0) throw ArgumentError("--n must be positive");
  const RunConfig rc = load_config(c);
  const WorldSpec world = world_from_json(read_json_file(c.world));
  const WorldSample ws = generate_world(world, n, rc.seed);
  const fs::path dir = prepare_out(c);
  std::vector<std::string> outputs{"dataset.csv", "truth.csv"};
  {
    auto os = open_output(dir / "dataset.csv");
    write_dataset_csv(os, ws.data);
  }
  {
    auto os = open_output(dir / "truth.csv");
    write_truth_csv(os, ws.data, ws.truth);
  }
  if (auto sim = load_sim(c)) {
    auto os = open_output(dir / "draws.csv");
    write_draws_csv(os, simulate_twins(*sim, ws.data, replicates, derive_seed(rc.seed, "cli-draws")));
    outputs.push_back("draws.csv");
  }
  write_manifest(dir, "simulate-world", c, rc, outputs);
  std::cout << "wrote " << n << " units to " << dir.string() << " (seed " << rc.seed << ")\n";
  return 0;
}

int cmd_validate(const Common& c) {
  const RunConfig rc = load_config(c);
  const Dataset data = load_data(c, rc);
  const auto sim = load_sim(c);
  const TwinDraws draws = obtain_draws(c, rc, data, sim);
  const Scorecard sc = run_protocol(draws, data, sim ? &*sim : nullptr, rc.level);
  const fs::path dir = prepare_out(c);
  std::vector<std::string> outputs;
  if (wants(rc, "json")) {
    write_json(dir / "scorecard.json", to_json(sc));
    outputs.push_back("scorecard.json");
  }
  if (wants(rc, "markdown")) {
    write_text(dir / "scorecard.md", scorecard_markdown(sc));
    outputs.push_back("scorecard.md");
  }
  if (wants(rc, "csv")) {
    auto os = open_output(dir / "scorecard.csv");
    write_scorecard_csv(os, sc);
    outputs.push_back("scorecard.csv");
  }
  write_manifest(dir, "validate", c, rc, outputs);
  std::cout << scorecard_text(sc);
  return sc.passed() ? 0 : 1;
}

int cmd_estimate(const Common& c, const std::vector<std::string>& names_flag) {
  RunConfig rc = load_config(c);
  const Dataset data = load_data(c, rc);
  const auto sim = load_sim(c);
  const TwinDraws draws = obtain_draws(c, rc, data, sim);
  if (sim) {
    SimulatorSpec indep = *sim;
    indep.kind = SimulatorKind::independent_coupling;
    const TwinDraws alt = simulate_twins(indep, data, rc.replicates, rc.seed);
    rc.catalog.csi = ks_statistic(draws.tau(), alt.tau());
  }
  const std::vector<std::string>& names = names_flag.empty() ? rc.estimands : names_flag;
  const auto results = estimate_catalog(draws, data, names, rc.catalog);

  // Validation epsilons accompany every results document.
  LevelConfig lc = rc.level;
  const Level0Result l0 = level0(draws, data, lc);
  std::optional<double> eps1;
  try {
    eps1 = level1(draws, data, lc).eps1;
  } catch (const CannotValidateError&) {
  }

  const fs::path dir = prepare_out(c);
  std::vector<std::string> outputs;
  const Json doc = results_document(results, rc.seed, spec_hash(c, rc), l0.eps0, eps1);
  if (wants(rc, "json")) {
    write_json(dir / "results.json", doc);
    outputs.push_back("results.json");
  }
  if (wants(rc, "markdown")) {
    write_text(dir / "results.md", results_markdown(results));
    outputs.push_back("results.md");
  }
  if (wants(rc, "csv")) {
    auto os = open_output(dir / "results.csv");
    write_results_csv(os, results);
    outputs.push_back("results.csv");
  }
  write_manifest(dir, "estimate", c, rc, outputs);
  std::cout << results_markdown(results);
  return 0;
}

int cmd_bounds(const Common& c, const LawArgs& la, const std::string& functional, double t,
               std::optional<double> rho_obs, std::size_t n_cross) {
  const RunConfig rc = load_config(c);
  const ArmLaws laws = load_laws(c, la);
  const Theta theta{functional_from_string(functional), t};
  auto q1 = [&](double u) { return laws.treated.quantile(u); };
  auto q0 = [&](double u) { return laws.control.quantile(u); };
  const double s1 = std::sqrt(laws.treated.variance()), s0 = std::sqrt(laws.control.variance());

  Json doc{{"seed", rc.seed}, {"spec_hash", spec_hash(c, rc)}, {"functional", functional}};
  doc["frechet"] = {{"var_tau", to_json(fh_var_bounds(s1, s0))}, {"pbenefit", to_json(fh_pbenefit_bounds(q1, q0))}};
  ConstraintOptions co;
  co.seed = rc.seed;
  Json constrained = Json::object();
  for (Constraint k : {Constraint::pqd, Constraint::monotone, Constraint::rank_invariance})
    constrained[to_string(k)] = to_json(constrained_bounds(laws, k, theta, co));
  doc["constrained"] = constrained;

  if (rho_obs) {
    const auto [grid, prior] = uniform_rho_prior(0.0, 1.0, 200);
    const std::vector<ProxyEvidence> ev{{*rho_obs, n_cross}};
    auto psi = [&](double rho) {
      return theta.evaluate(coupled_tau_sample(laws, CopulaSpec::gaussian(rho), 4000, rc.seed));
    };
    const CopulaPosterior post = copula_posterior(grid, prior, ev, psi);
    doc["posterior"] = to_json(post);
  }

  const fs::path dir = prepare_out(c);
  write_json(dir / "bounds.json", doc);
  write_manifest(dir, "bounds", c, rc, {"bounds.json"});
  const Json& v = doc["frechet"]["var_tau"];
  const Json& p = doc["frechet"]["pbenefit"];
  std::cout << "Var(tau) in [" << v["lower"] << ", " << v["upper"] << "]\n";
  std::cout << "P(tau > 0) in [" << p["lower"] << ", " << p["upper"] << "]\n";
  return 0;
}

int cmd_sensitivity(const Common& c, const LawArgs& la, const std::string& functional, double t,
                    const std::string& family, std::vector<double> grid, std::size_t mc_n) {
  const RunConfig rc = load_config(c);
  const ArmLaws laws = load_laws(c, la);
  const CopulaFamily fam = copula_family_from_string(family);
  if (grid.empty()) {
    if (fam != CopulaFamily::gaussian) throw ArgumentError("--grid is required for family " + family);
    grid = default_rho_grid();
  }
  const SensitivityCurve curve =
      sensitivity_curve(laws, fam, grid, Theta{functional_from_string(functional), t}, mc_n, rc.seed);
  const fs::path dir = prepare_out(c);
  Json doc = to_json(curve);
  doc["seed"] = rc.seed;
  doc["spec_hash"] = spec_hash(c, rc);
  write_json(dir / "sensitivity.json", doc);
  {
    auto os = open_output(dir / "sensitivity.csv");
    write_curve_csv(os, curve);
  }
  write_manifest(dir, "sensitivity", c, rc, {"sensitivity.json", "sensitivity.csv"});
  std::cout << functional << " range " << curve.range() << (curve.copula_robust() ? " (copula-robust)" : " (copula-sensitive)")
            << ", CSI " << curve.csi << "\n";
  return 0;
}

int cmd_power(int level, const SampleSizeParams& p) {
  std::cout << sample_size(level, p) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital twin counterfactual validation and estimation"};
  app.require_subcommand(1);

  Common c;
  std::size_t n = 0, replicates = 20;
  auto* sw = app.add_subcommand("simulate-world", "Generate a dataset and hidden truth from a world spec");
  add_common(sw, c, false);
  sw->add_option("--world", c.world, "World spec JSON")->required();
  sw->add_option("--n", n, "Number of units")->required();
  sw->add_option("--replicates", replicates, "Replicates when --sim is also given");

  auto* va = app.add_subcommand("validate", "Run the validation protocol and write the scorecard");
  add_common(va, c, true);

  std::vector<std::string> names;
  auto* es = app.add_subcommand("estimate", "Estimate catalog entries from twin draws");
  add_common(es, c, true);
  es->add_option("--estimands", names, "Comma-separated estimand names (default: all)")->delimiter(',');

  LawArgs la;
  std::string functional = "var_tau";
  double t = 0.0;
  std::optional<double> rho_obs;
  std::size_t n_cross = 0;
  auto* bo = app.add_subcommand("bounds", "Frechet and constrained bounds");
  add_common(bo, c, false);
  bo->add_option("--stratum", la.stratum);
  bo->add_option("--mean1", la.mean1);
  bo->add_option("--mean0", la.mean0);
  bo->add_option("--sd1", la.sd1);
  bo->add_option("--sd0", la.sd0);
  bo->add_option("--functional", functional, "ate, var_tau, pbenefit, pharm, g_tau_at_t");
  bo->add_option("--t", t, "Threshold for g_tau_at_t");
  bo->add_option("--rho-obs", rho_obs, "Cross-arm proxy correlation for the copula posterior");
  bo->add_option("--n-cross", n_cross, "Sample size behind --rho-obs");

  std::string sfunctional = "ate", family = "gaussian";
  std::vector<double> grid;
  std::size_t mc_n = 20000;
  LawArgs sla;
  double st = 0.0;
  auto* se = app.add_subcommand("sensitivity", "Sensitivity curve over a copula family");
  add_common(se, c, false);
  se->add_option("--stratum", sla.stratum);
  se->add_option("--mean1", sla.mean1);
  se->add_option("--mean0", sla.mean0);
  se->add_option("--sd1", sla.sd1);
  se->add_option("--sd0", sla.sd0);
  se->add_option("--functional", sfunctional, "ate, var_tau, pbenefit, pharm, g_tau_at_t");
  se->add_option("--t", st);
  se->add_option("--family", family, "gaussian, frank or clayton");
  se->add_option("--grid", grid, "Comma-separated copula parameters")->delimiter(',');
  se->add_option("--mc-n", mc_n, "Monte Carlo pairs per grid point");

  int level = 0;
  SampleSizeParams sp;
  auto* po = app.add_subcommand("power", "Sample size for a validation level");
  po->add_option("--level", level, "0, 1 or 3")->required();
  po->add_option("--epsilon", sp.epsilon);
  po->add_option("--alpha", sp.alpha);
  po->add_option("--power", sp.power);
  po->add_option("--strata", sp.strata);
  po->add_option("--delta", sp.delta);
  po->add_option("--sigma", sp.sigma_y);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sw) return cmd_simulate_world(c, n, replicates);
    if (*va) return cmd_validate(c);
    if (*es) return cmd_estimate(c, names);
    if (*bo) return cmd_bounds(c, la, functional, t, rho_obs, n_cross);
    if (*se) return cmd_sensitivity(c, sla, sfunctional, st, family, grid, mc_n);
    if (*po) return cmd_power(level, sp);
  } catch (const std::exception& e) {
    std::cerr << "twincf: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
