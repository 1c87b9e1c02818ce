#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "greensched/carbon.hpp"
#include "greensched/core_model.hpp"

namespace greensched {

enum class StrategyKey { CarbonAware, GeoAware, DefaultSpread };

const char* strategy_name(StrategyKey key);
std::optional<StrategyKey> parse_strategy(const std::string& name);

struct PodRequest {
    std::string pod_id;
    std::string function;
    std::int64_t cpu_request_millicores = 0;
    std::int64_t memory_request_mib = 0;
    std::vector<std::string> tolerations;
    StrategyKey strategy = StrategyKey::DefaultSpread;
};

struct ScheduleDecision {
    std::string pod_id;
    std::optional<std::string> chosen_node;
    std::map<std::string, double> per_node_scores;  // feasible nodes only
    std::vector<std::string> feasible_nodes;
    bool tie_break_applied = false;
    double decision_latency_ms = 0.0;
    std::string failure_reason;  // empty iff chosen_node is set or feasible set was empty
};

// Committed resources per node, maintained across decisions.
class ResourceUsage {
public:
    void commit(const std::string& node_id, std::int64_t cpu_m, std::int64_t mem_mib);
    void release(const std::string& node_id, std::int64_t cpu_m, std::int64_t mem_mib);
    std::int64_t cpu_committed(const std::string& node_id) const;
    std::int64_t memory_committed(const std::string& node_id) const;

private:
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> committed_;  // node -> (cpu, mem)
};

// Predicate phase: resources-fit plus taint toleration.
std::vector<const NodeSpec*> filter(const PodRequest& pod, const std::vector<NodeSpec>& nodes,
                                    const ResourceUsage& usage);

class MissingRegionScore : public std::runtime_error {
public:
    explicit MissingRegionScore(const std::string& region)
        : std::runtime_error("no carbon score for region '" + region + "'"), region_(region) {}
    const std::string& region() const { return region_; }

private:
    std::string region_;
};

// Node score = carbon score of the node's "region" annotation. The table is
// already normalized to [0, 100] over the full region set, so re-normalizing
// here would be the identity.
std::map<std::string, double> score_carbon_aware(const PodRequest& pod,
                                                 const std::vector<const NodeSpec*>& feasible,
                                                 const ScoreTable& scores);

// Closer to the management region scores higher; distances via haversine.
std::map<std::string, double> score_geo_aware(const PodRequest& pod,
                                              const std::vector<const NodeSpec*>& feasible,
                                              const ClusterTopology& topology);

// Evens this function's instance counts across regions, modeling the
// PodTopologySpread behavior.
std::map<std::string, double> score_default_spread(
    const PodRequest& pod, const std::vector<const NodeSpec*>& feasible,
    const std::map<std::string, int>& region_instance_counts);

struct SchedulerContext {
    const ClusterTopology* topology = nullptr;
    ResourceUsage* usage = nullptr;
    // Carbon-aware runs pull the table lazily so the TTL cache, not the
    // scheduling rate, bounds metrics-server round trips.
    std::function<ScoreTable()> score_source;
    const std::map<std::string, int>* spread_counts = nullptr;  // per-region, this function
};

// The two-phase filter/score pipeline with deterministic round-robin
// tie-breaking and per-strategy decision-latency sampling. One instance per
// simulated scheduler; decisions are strictly serialized by the caller.
class Scheduler {
public:
    Scheduler(std::map<StrategyKey, Distribution> scheduling_latency, RandomStream& latency_rng);

    // Runs filter then the strategy's score plugin, commits the chosen node's
    // resources, and returns the full decision record. A pod with no feasible
    // node or an unavailable score table yields chosen_node = nullopt; the
    // caller re-queues it.
    ScheduleDecision schedule(const PodRequest& pod, SchedulerContext& ctx);

    static std::map<StrategyKey, Distribution> default_scheduling_latency();

private:
    std::string pick_with_tie_break(const PodRequest& pod, StrategyKey strategy,
                                    const std::vector<std::string>& tied, bool* applied);

    std::map<StrategyKey, Distribution> scheduling_latency_;
    RandomStream& latency_rng_;
    std::map<std::string, std::uint64_t> tie_cursors_;
};

}  // namespace greensched
