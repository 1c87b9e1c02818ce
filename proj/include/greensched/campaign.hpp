#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "greensched/config.hpp"
#include "greensched/metrics_service.hpp"

namespace greensched {

struct CampaignOverrides {
    std::optional<std::uint64_t> base_seed;
    std::optional<int> repeats;
    std::vector<StrategyKey> strategies;  // empty: keep config
};

void apply_overrides(ExperimentConfig& config, const CampaignOverrides& overrides);

struct CampaignRun {
    StrategyKey strategy;
    int repeat = 0;
    std::uint64_t seed = 0;
    RunSummary summary;
};

// Executes repeats x strategies runs and writes, per run, the event log, the
// request records and the summary, plus one campaign-level summaries.csv.
std::vector<CampaignRun> run_campaign(const ExperimentConfig& config,
                                      const std::filesystem::path& out_dir);

struct StrategyAggregate {
    std::string strategy;
    int repeats = 0;
    double mean_sci_ug = 0.0;
    double mean_response_ms = 0.0;
    double mean_weighted_moer = 0.0;
    double mean_scheduling_ms = 0.0;
    double mean_binding_ms = 0.0;
};

struct PairwiseDelta {
    std::string a;
    std::string b;
    // Arithmetic mean over repeats of (sci_b - sci_a)/sci_b * 100.
    double emission_reduction_pct = 0.0;
    // (geometric mean over repeats of rt_a/rt_b - 1) * 100.
    double response_gm_slowdown_pct = 0.0;
};

struct ComparisonReport {
    std::vector<StrategyAggregate> strategies;        // sorted by name
    std::vector<PairwiseDelta> pairs;                 // sorted by (a, b)
    std::map<std::string, double> mean_emission_reduction_vs_others;
};

// Reads summary_*.json from a campaign directory; needs >= 2 strategies.
// Writes report.json and report.csv next to them; idempotent on unchanged
// artifacts.
ComparisonReport compare_campaign(const std::filesystem::path& campaign_dir);

nlohmann::json comparison_report_to_json(const ComparisonReport& report);

// gen-trace helpers. Both throw ConfigError on invalid parameters.
void write_constant_workload_trace(const std::filesystem::path& out, const std::string& function_id,
                                   double rate_per_min, int start_minute, int minutes);
struct CarbonTraceSpec {
    std::map<std::string, SyntheticSignal> signals;
    double start_epoch_s = 0.0;
    double end_epoch_s = 3600.0;
    double step_s = 300.0;
};
void write_carbon_trace(const std::filesystem::path& out, const CarbonTraceSpec& spec);

// serve wiring shared by the CLI and tests.
ScoreService make_score_service(const ExperimentConfig& config);
std::pair<std::string, int> parse_listen_address(const std::string& listen);

std::string requests_to_csv(const std::vector<RequestRecord>& requests);

}  // namespace greensched
