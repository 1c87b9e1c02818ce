#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "greensched/engine.hpp"

namespace greensched {

struct EmissionInputs {
    double energy_kwh_per_day = 0.0;        // E
    double intensity_g_per_kwh = 0.0;       // I
    double embodied_g = 0.0;                // M; the evaluation keeps this at 0
    double functional_units_per_day = 0.0;  // R
};

// SCI = (E * I + M) / R, grams per functional unit.
double sci_g_per_unit(const EmissionInputs& inputs);

struct RegionInstanceCount {
    std::string region_id;
    double weight = 0.0;  // instance count or instance-seconds
    double moer_g_per_kwh = 0.0;
};

// Instance-weighted mean MOER across regions.
double weighted_moer(const std::vector<RegionInstanceCount>& counts);

// Fleet energy per day: tdp_w * utilization * hours * cores plus a RAM term
// of 3 W per 8 GiB. By default the RAM term enters as watts without the hour
// factor; dimensional_ram=true applies ram_w * hours instead.
double energy_estimate_kwh(double cores, double tdp_w, double utilization, double hours,
                           double ram_gib, bool dimensional_ram = false);

// Requests one instance can serve in 24 h at the given mean response time.
std::int64_t functional_units_per_day(double mean_response_ms);

struct EnergyParams {
    double tdp_w = 165.0;        // Intel Skylake-SP
    double utilization = 0.5;
    double hours = 24.0;
    bool dimensional_ram = false;
};

enum class WeightingMode { EndCounts, InstanceSeconds };

const char* weighting_mode_name(WeightingMode mode);
std::optional<WeightingMode> parse_weighting_mode(const std::string& name);

struct LatencyStats {
    double mean = 0.0, median = 0.0, min = 0.0, max = 0.0;
    std::size_t count = 0;
};

struct ResponseStats {
    double mean = 0.0, median = 0.0, p95 = 0.0;
    std::size_t count = 0;
};

struct RunSummary {
    std::string strategy;
    std::uint64_t seed = 0;
    std::size_t total_requests = 0;  // completed
    std::size_t arrivals = 0;
    std::optional<ResponseStats> response_time_ms;
    std::optional<LatencyStats> scheduling_latency_ms;
    std::optional<LatencyStats> binding_latency_ms;
    WeightingMode weighting_mode = WeightingMode::EndCounts;
    std::map<std::string, double> region_weights;
    std::optional<double> weighted_moer_g_per_kwh;
    double energy_kwh_per_day = 0.0;
    std::int64_t functional_units_per_day = 0;
    std::optional<double> sci_g_per_invocation;
    std::optional<double> sci_ug_per_invocation;  // exactly g * 1e6
};

// 2 vCPU = 1 core; capacities are stored in millicores of vCPU and converted
// only here.
double fleet_cores(const ClusterTopology& topology);
double fleet_ram_gib(const ClusterTopology& topology);

LatencyStats latency_stats(std::vector<double> samples);
ResponseStats response_stats(std::vector<double> samples);

RunSummary summarize_run(const RunResult& result, const ClusterTopology& topology,
                         const EnergyParams& energy, WeightingMode mode);

}  // namespace greensched
