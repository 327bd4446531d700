#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "twincf/estimands.hpp"
#include "twincf/model.hpp"
#include "twincf/sensitivity.hpp"
#include "twincf/validation.hpp"

namespace twincf {

using Json = nlohmann::json;

// ---- CSV ------------------------------------------------------------------

/// Reads `unit_id,x1..xp,d,y_obs[,stratum][,rct]`. `source` names the input
/// in error messages. Bounds, when given, are attached before validation.
Dataset read_dataset_csv(std::istream& in, const std::string& source,
                         std::optional<OutcomeBounds> bounds = std::nullopt);
Dataset read_dataset_csv(const std::string& path, std::optional<OutcomeBounds> bounds = std::nullopt);
/// Values are written in shortest round-trip form.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Reads `unit_id,replicate,y1_hat,y0_hat,coupling` (replicates 1..R).
TwinDraws read_draws_csv(std::istream& in, const std::string& source);
TwinDraws read_draws_csv(const std::string& path);
void write_draws_csv(std::ostream& out, const TwinDraws& draws);

void write_truth_csv(std::ostream& out, const Dataset& data, const HiddenTruth& truth);

std::string format_double(double v);

// ---- Spec documents -------------------------------------------------------

MarginalLaw marginal_from_json(const Json& j, const std::string& field);
Json to_json(const MarginalLaw& m);
CopulaSpec copula_from_json(const Json& j, const std::string& field);
Json to_json(const CopulaSpec& c);
WorldSpec world_from_json(const Json& j);
Json to_json(const WorldSpec& w);
SimulatorSpec simulator_from_json(const Json& j);
Json to_json(const SimulatorSpec& s);
LevelConfig level_config_from_json(const Json& j);
Json to_json(const LevelConfig& c);

/// Parses a JSON document from a file; syntax errors carry the line.
Json read_json_file(const std::string& path);

/// Whole-run configuration; subcommand sections are kept as raw JSON.
struct RunConfig {
  LevelConfig level;
  std::uint64_t seed = 0;
  std::size_t n = 1000;
  std::size_t replicates = 20;
  std::optional<OutcomeBounds> outcome_bounds;
  std::vector<std::string> formats{"json", "markdown"};
  std::vector<std::string> estimands;
  CatalogOptions catalog;
  Json raw = Json::object();
};

RunConfig run_config_from_json(const Json& j);

/// FNV-1a (64-bit, hex) of the canonical serialisation.
std::string hash_json(const Json& j);
std::string config_hash(const LevelConfig& config);

// ---- Reports --------------------------------------------------------------

Json to_json(const ScoreRow& row);
Json to_json(const Scorecard& scorecard);
/// Markdown table with columns Level | Test | Statistic | Value | Threshold | Pass/Fail.
std::string scorecard_markdown(const Scorecard& scorecard);
std::string scorecard_text(const Scorecard& scorecard);
void write_scorecard_csv(std::ostream& out, const Scorecard& scorecard);

Json to_json(const BoundsResult& b);
Json to_json(const EstimandResult& e);
Json to_json(const SensitivityCurve& c);
Json to_json(const TransportReport& t);
Json to_json(const CopulaPosterior& p);
Json to_json(const MediationResult& m);
Json to_json(const SequentialResult& s);
Json to_json(const SurvivalResult& s);

/// Results document for a set of estimands; a copula-dependent entry
/// without bounds is rejected.
Json results_document(const std::vector<EstimandResult>& results, std::uint64_t seed, const std::string& config_hash,
                      std::optional<double> eps0, std::optional<double> eps1);
std::string results_markdown(const std::vector<EstimandResult>& results);
void write_results_csv(std::ostream& out, const std::vector<EstimandResult>& results);

}  // namespace twincf
