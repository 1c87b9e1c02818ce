#include "greensched/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace greensched {

double sci_g_per_unit(const EmissionInputs& inputs) {
    if (!(inputs.functional_units_per_day > 0.0))
        throw std::invalid_argument("sci: functional unit count R must be > 0");
    if (inputs.energy_kwh_per_day < 0.0 || inputs.intensity_g_per_kwh < 0.0 ||
        inputs.embodied_g < 0.0)
        throw std::invalid_argument("sci: E, I and M must be >= 0");
    return (inputs.energy_kwh_per_day * inputs.intensity_g_per_kwh + inputs.embodied_g) /
           inputs.functional_units_per_day;
}

double weighted_moer(const std::vector<RegionInstanceCount>& counts) {
    double weight_sum = 0.0;
    double weighted = 0.0;
    for (const auto& c : counts) {
        if (c.weight < 0.0 || c.moer_g_per_kwh < 0.0)
            throw std::invalid_argument("weighted_moer: weights and MOER values must be >= 0");
        weight_sum += c.weight;
        weighted += c.weight * c.moer_g_per_kwh;
    }
    if (!(weight_sum > 0.0))
        throw std::invalid_argument("weighted_moer: total weight must be > 0");
    return weighted / weight_sum;
}

double energy_estimate_kwh(double cores, double tdp_w, double utilization, double hours,
                           double ram_gib, bool dimensional_ram) {
    if (cores < 0.0 || tdp_w < 0.0 || hours < 0.0 || ram_gib < 0.0)
        throw std::invalid_argument("energy_estimate: inputs must be >= 0");
    if (utilization < 0.0 || utilization > 1.0)
        throw std::invalid_argument("energy_estimate: utilization must be in [0, 1]");
    const double cpu_wh = tdp_w * utilization * hours * cores;
    const double ram_w = (ram_gib / 8.0) * 3.0;
    const double ram_wh = dimensional_ram ? ram_w * hours : ram_w;
    return (cpu_wh + ram_wh) / 1000.0;
}

std::int64_t functional_units_per_day(double mean_response_ms) {
    if (!(mean_response_ms > 0.0))
        throw std::invalid_argument("functional_units_per_day: mean response must be > 0");
    return static_cast<std::int64_t>(std::floor(86400000.0 / mean_response_ms));
}

const char* weighting_mode_name(WeightingMode mode) {
    return mode == WeightingMode::EndCounts ? "end_counts" : "instance_seconds";
}

std::optional<WeightingMode> parse_weighting_mode(const std::string& name) {
    if (name == "end_counts") return WeightingMode::EndCounts;
    if (name == "instance_seconds") return WeightingMode::InstanceSeconds;
    return std::nullopt;
}

double fleet_cores(const ClusterTopology& topology) {
    std::int64_t millicores = 0;
    for (const auto& node : topology.nodes) millicores += node.cpu_capacity_millicores;
    return static_cast<double>(millicores) / 1000.0 / 2.0;
}

double fleet_ram_gib(const ClusterTopology& topology) {
    std::int64_t mib = 0;
    for (const auto& node : topology.nodes) mib += node.memory_capacity_mib;
    return static_cast<double>(mib) / 1024.0;
}

namespace {

double percentile_nearest_rank(const std::vector<double>& sorted, double fraction) {
    if (sorted.empty()) return 0.0;
    auto rank = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sorted.size())));
    if (rank == 0) rank = 1;
    return sorted[std::min(rank, sorted.size()) - 1];
}

double median_of(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return sorted[n / 2];
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double mean_of(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

}  // namespace

LatencyStats latency_stats(std::vector<double> samples) {
    LatencyStats stats;
    stats.count = samples.size();
    if (samples.empty()) return stats;
    std::sort(samples.begin(), samples.end());
    stats.mean = mean_of(samples);
    stats.median = median_of(samples);
    stats.min = samples.front();
    stats.max = samples.back();
    return stats;
}

ResponseStats response_stats(std::vector<double> samples) {
    ResponseStats stats;
    stats.count = samples.size();
    if (samples.empty()) return stats;
    std::sort(samples.begin(), samples.end());
    stats.mean = mean_of(samples);
    stats.median = median_of(samples);
    stats.p95 = percentile_nearest_rank(samples, 0.95);
    return stats;
}

RunSummary summarize_run(const RunResult& result, const ClusterTopology& topology,
                         const EnergyParams& energy, WeightingMode mode) {
    RunSummary summary;
    summary.strategy = strategy_name(result.strategy);
    summary.seed = result.seed;
    summary.arrivals = result.arrivals;
    summary.weighting_mode = mode;

    std::vector<double> responses;
    for (const auto& r : result.requests)
        if (r.completed()) responses.push_back(r.response_time_ms);
    summary.total_requests = responses.size();
    if (!responses.empty()) summary.response_time_ms = response_stats(std::move(responses));

    std::vector<double> sched;
    for (const auto& d : result.decisions)
        if (d.decision.chosen_node) sched.push_back(d.decision.decision_latency_ms);
    if (!sched.empty()) summary.scheduling_latency_ms = latency_stats(std::move(sched));

    std::vector<double> binding;
    for (const auto& inst : result.instances)
        if (inst.phase_timestamps.contains(Phase::Running))
            binding.push_back(inst.binding_latency_ms);
    if (!binding.empty()) summary.binding_latency_ms = latency_stats(std::move(binding));

    if (mode == WeightingMode::EndCounts) {
        for (const auto& [region, count] : result.end_instance_counts_by_region)
            summary.region_weights[region] = static_cast<double>(count);
    } else {
        summary.region_weights = result.instance_seconds_by_region;
    }

    std::vector<RegionInstanceCount> counts;
    for (const auto& [region, weight] : summary.region_weights) {
        auto moer = result.region_moer_avg_g_per_kwh.find(region);
        if (weight > 0.0 && moer != result.region_moer_avg_g_per_kwh.end())
            counts.push_back(RegionInstanceCount{region, weight, moer->second});
    }
    if (!counts.empty()) summary.weighted_moer_g_per_kwh = weighted_moer(counts);

    summary.energy_kwh_per_day =
        energy_estimate_kwh(fleet_cores(topology), energy.tdp_w, energy.utilization, energy.hours,
                            fleet_ram_gib(topology), energy.dimensional_ram);

    if (summary.response_time_ms && summary.response_time_ms->mean > 0.0 &&
        summary.weighted_moer_g_per_kwh) {
        summary.functional_units_per_day =
            functional_units_per_day(summary.response_time_ms->mean);
        EmissionInputs inputs;
        inputs.energy_kwh_per_day = summary.energy_kwh_per_day;
        inputs.intensity_g_per_kwh = *summary.weighted_moer_g_per_kwh;
        inputs.embodied_g = 0.0;
        inputs.functional_units_per_day = static_cast<double>(summary.functional_units_per_day);
        summary.sci_g_per_invocation = sci_g_per_unit(inputs);
        summary.sci_ug_per_invocation = *summary.sci_g_per_invocation * 1e6;
    }
    return summary;
}

}  // namespace greensched
