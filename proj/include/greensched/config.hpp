#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "greensched/accounting.hpp"
#include "greensched/engine.hpp"

namespace greensched {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    ClusterTopology topology;
    std::vector<FunctionSpec> functions;
    WorkloadConfig workload;
    CarbonProviderConfig carbon;
    double carbon_ttl_s = 300.0;
    double carbon_epoch_start_s = 0.0;
    std::vector<StrategyKey> strategies;
    LatencyModel latency;
    AutoscalerConfig autoscaler;
    double duration_ms = 600000.0;
    int repeats = 5;
    std::uint64_t base_seed = 1;
    WeightingMode weighting_mode = WeightingMode::EndCounts;
    EnergyParams energy;
    std::string serve_listen = "127.0.0.1:8080";
};

// Parses the experiment file (JSON; schema documented in the README).
// Relative paths inside the file resolve against the file's directory.
// Throws ConfigError on malformed input.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir);

// Structural checks beyond parsing: topology/function invariants, referenced
// files, carbon coverage. Returns violation descriptions.
std::vector<std::string> validate_experiment_config(const ExperimentConfig& config);

RunPlan make_run_plan(const ExperimentConfig& config, StrategyKey strategy);

// Seed schedule: pure function of (base_seed, strategy index, repeat index).
inline std::uint64_t run_seed(std::uint64_t base_seed, int strategy_index, int repeat_index,
                              int repeats) {
    return base_seed + static_cast<std::uint64_t>(strategy_index) *
                           static_cast<std::uint64_t>(repeats) +
           static_cast<std::uint64_t>(repeat_index);
}

Distribution distribution_from_json(const nlohmann::json& j);
nlohmann::json distribution_to_json(const Distribution& d);

nlohmann::json run_summary_to_json(const RunSummary& summary);
RunSummary run_summary_from_json(const nlohmann::json& j);

}  // namespace greensched
