#include "greensched/scheduler.hpp"

#include <algorithm>

#include "greensched/util.hpp"

namespace greensched {

const char* strategy_name(StrategyKey key) {
    switch (key) {
        case StrategyKey::CarbonAware: return "carbon_aware";
        case StrategyKey::GeoAware: return "geo_aware";
        case StrategyKey::DefaultSpread: return "default_spread";
    }
    return "?";
}

std::optional<StrategyKey> parse_strategy(const std::string& name) {
    if (name == "carbon_aware") return StrategyKey::CarbonAware;
    if (name == "geo_aware") return StrategyKey::GeoAware;
    if (name == "default_spread") return StrategyKey::DefaultSpread;
    return std::nullopt;
}

void ResourceUsage::commit(const std::string& node_id, std::int64_t cpu_m, std::int64_t mem_mib) {
    auto& [cpu, mem] = committed_[node_id];
    cpu += cpu_m;
    mem += mem_mib;
}

void ResourceUsage::release(const std::string& node_id, std::int64_t cpu_m, std::int64_t mem_mib) {
    auto& [cpu, mem] = committed_[node_id];
    cpu -= cpu_m;
    mem -= mem_mib;
}

std::int64_t ResourceUsage::cpu_committed(const std::string& node_id) const {
    auto it = committed_.find(node_id);
    return it == committed_.end() ? 0 : it->second.first;
}

std::int64_t ResourceUsage::memory_committed(const std::string& node_id) const {
    auto it = committed_.find(node_id);
    return it == committed_.end() ? 0 : it->second.second;
}

std::vector<const NodeSpec*> filter(const PodRequest& pod, const std::vector<NodeSpec>& nodes,
                                    const ResourceUsage& usage) {
    std::vector<const NodeSpec*> feasible;
    for (const auto& node : nodes) {
        if (node.cpu_capacity_millicores - usage.cpu_committed(node.id) < pod.cpu_request_millicores)
            continue;
        if (node.memory_capacity_mib - usage.memory_committed(node.id) < pod.memory_request_mib)
            continue;
        bool tolerated = true;
        for (const auto& taint : node.taints) {
            if (std::find(pod.tolerations.begin(), pod.tolerations.end(), taint) ==
                pod.tolerations.end()) {
                tolerated = false;
                break;
            }
        }
        if (tolerated) feasible.push_back(&node);
    }
    return feasible;
}

std::map<std::string, double> score_carbon_aware(const PodRequest&,
                                                 const std::vector<const NodeSpec*>& feasible,
                                                 const ScoreTable& scores) {
    std::map<std::string, double> out;
    for (const auto* node : feasible) {
        auto region = node->annotations.at("region");
        auto it = scores.entries.find(region);
        if (it == scores.entries.end()) throw MissingRegionScore(region);
        out[node->id] = it->second.score;
    }
    return out;
}

std::map<std::string, double> score_geo_aware(const PodRequest&,
                                              const std::vector<const NodeSpec*>& feasible,
                                              const ClusterTopology& topology) {
    std::map<std::string, double> distances;
    double d_min = std::numeric_limits<double>::infinity();
    double d_max = -std::numeric_limits<double>::infinity();
    const Region& mgmt = topology.management_region;
    for (const auto* node : feasible) {
        const Region* region = topology.find_provider_region(node->region_id);
        double d = region ? haversine_km(mgmt.latitude, mgmt.longitude, region->latitude,
                                         region->longitude)
                          : 0.0;
        distances[node->id] = d;
        d_min = std::min(d_min, d);
        d_max = std::max(d_max, d);
    }
    std::map<std::string, double> out;
    for (const auto& [node_id, d] : distances)
        out[node_id] = d_max > d_min ? 100.0 * ((d_max - d) / (d_max - d_min)) : 100.0;
    return out;
}

std::map<std::string, double> score_default_spread(
    const PodRequest&, const std::vector<const NodeSpec*>& feasible,
    const std::map<std::string, int>& region_instance_counts) {
    auto count_of = [&](const std::string& region) {
        auto it = region_instance_counts.find(region);
        return it == region_instance_counts.end() ? 0 : it->second;
    };
    int c_max = 0;
    for (const auto* node : feasible) c_max = std::max(c_max, count_of(node->region_id));
    std::map<std::string, double> out;
    for (const auto* node : feasible) {
        out[node->id] = c_max == 0
                            ? 100.0
                            : 100.0 * (1.0 - static_cast<double>(count_of(node->region_id)) /
                                                 static_cast<double>(c_max));
    }
    return out;
}

Scheduler::Scheduler(std::map<StrategyKey, Distribution> scheduling_latency,
                     RandomStream& latency_rng)
    : scheduling_latency_(std::move(scheduling_latency)), latency_rng_(latency_rng) {}

std::map<StrategyKey, Distribution> Scheduler::default_scheduling_latency() {
    return {
        {StrategyKey::CarbonAware, Distribution::constant(539.0)},
        {StrategyKey::GeoAware, Distribution::constant(539.0)},
        {StrategyKey::DefaultSpread, Distribution::constant(515.0)},
    };
}

std::string Scheduler::pick_with_tie_break(const PodRequest& pod, StrategyKey strategy,
                                           const std::vector<std::string>& tied, bool* applied) {
    if (tied.size() == 1) {
        *applied = false;
        return tied.front();
    }
    *applied = true;
    // Round-robin cursor keyed by (strategy, function, sorted tied-node list):
    // deterministic for a fixed event order, and it walks load across the
    // equally-scored nodes instead of hammering the first one.
    std::string key = std::string(strategy_name(strategy)) + "|" + pod.function + "|" +
                      join(tied, ",");
    std::uint64_t cursor = tie_cursors_[key]++;
    return tied[cursor % tied.size()];
}

ScheduleDecision Scheduler::schedule(const PodRequest& pod, SchedulerContext& ctx) {
    ScheduleDecision decision;
    decision.pod_id = pod.pod_id;

    auto feasible = filter(pod, ctx.topology->nodes, *ctx.usage);
    for (const auto* node : feasible) decision.feasible_nodes.push_back(node->id);
    if (feasible.empty()) return decision;  // caller re-queues

    try {
        switch (pod.strategy) {
            case StrategyKey::CarbonAware:
                decision.per_node_scores = score_carbon_aware(pod, feasible, ctx.score_source());
                break;
            case StrategyKey::GeoAware:
                decision.per_node_scores = score_geo_aware(pod, feasible, *ctx.topology);
                break;
            case StrategyKey::DefaultSpread: {
                static const std::map<std::string, int> kEmpty;
                decision.per_node_scores = score_default_spread(
                    pod, feasible, ctx.spread_counts ? *ctx.spread_counts : kEmpty);
                break;
            }
        }
    } catch (const MissingRegionScore& e) {
        decision.failure_reason = e.what();
        return decision;
    } catch (const ScoreTableError& e) {
        decision.failure_reason = e.what();
        return decision;
    } catch (const FetchError& e) {
        decision.failure_reason = e.what();
        return decision;
    }

    double best = -std::numeric_limits<double>::infinity();
    for (const auto& id : decision.feasible_nodes)
        best = std::max(best, decision.per_node_scores.at(id));
    std::vector<std::string> tied;
    for (const auto& id : decision.feasible_nodes)
        if (decision.per_node_scores.at(id) == best) tied.push_back(id);
    std::sort(tied.begin(), tied.end());

    decision.chosen_node =
        pick_with_tie_break(pod, pod.strategy, tied, &decision.tie_break_applied);
    decision.decision_latency_ms = scheduling_latency_.at(pod.strategy).sample(latency_rng_);
    ctx.usage->commit(*decision.chosen_node, pod.cpu_request_millicores, pod.memory_request_mib);
    return decision;
}

}  // namespace greensched
