#pragma once

// Named end-to-end scenarios and the entry points that run them, either with
// every party in this process or as a single party over TCP.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mpfix/harness/config.hpp"
#include "mpfix/harness/report.hpp"
#include "mpfix/nonlinear.hpp"
#include "mpfix/precomp.hpp"
#include "mpfix/session.hpp"

namespace mpfix {

struct ScenarioOutput {
  std::vector<AccuracyStat> accuracy;
  std::map<std::string, double> values;
  std::vector<std::uint64_t> opened;  // every opened word, in order
};

using ScenarioFn = std::function<ScenarioOutput(Session&, const ScenarioConfig&)>;

const std::vector<std::string>& scenario_names();

// The scenario's defaults with `scenario` set; throws ConfigError if unknown.
ScenarioConfig default_config(const std::string& scenario);

// Fills in defaults for every key the config file leaves out.
ScenarioConfig with_defaults(const ScenarioConfig& cfg);

// Default approximation parameters with any `approx.*` keys of the config
// applied (newton_iters, maxcut_eps, baseline_taylor_degree,
// softmax_recip_precision, exp_coeffs, log_coeffs as five comma-separated
// ascending coefficients).
ApproxParams approx_params(const ScenarioConfig& cfg);

// Preprocessing demand of one run, from a dry run.
Manifest scenario_demand(const ScenarioConfig& cfg);

// Writes per-party dealer files for one run of the scenario.
void deal_scenario(const ScenarioConfig& cfg, const std::filesystem::path& dir);

// All parties in this process (threads), over cfg.transport. One report per party.
std::vector<RunReport> run_scenario(const ScenarioConfig& cfg);

// A single party over TCP, consuming dealer files from cfg.precomp_dir.
RunReport run_party(const ScenarioConfig& cfg, int party);

// Checks that all parties opened identical outputs and returns one report
// (party -1) carrying party 0's figures.
RunReport aggregate(const std::vector<RunReport>& reports);

// Reads MPFIX_LOG_LEVEL (trace, debug, info, warn, error, off).
void init_logging();

}  // namespace mpfix
