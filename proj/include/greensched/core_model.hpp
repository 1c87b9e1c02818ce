#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "greensched/distribution.hpp"

namespace greensched {

struct Region {
    std::string id;
    std::string display_name;
    double latitude = 0.0;   // degrees, [-90, 90]
    double longitude = 0.0;  // degrees, [-180, 180]
};

struct NodeSpec {
    std::string id;
    std::string region_id;
    std::int64_t cpu_capacity_millicores = 0;
    std::int64_t memory_capacity_mib = 0;
    std::map<std::string, std::string> annotations;  // must carry "region"
    std::vector<std::string> taints;
};

// Round-trip times in ms between region pairs, as configured. Lookups fall
// back to the reverse direction; a region to itself defaults to 0.
class RttMatrix {
public:
    void set(const std::string& a, const std::string& b, double ms) { entries_[{a, b}] = ms; }

    std::optional<double> find(const std::string& a, const std::string& b) const {
        if (auto it = entries_.find({a, b}); it != entries_.end()) return it->second;
        if (auto it = entries_.find({b, a}); it != entries_.end()) return it->second;
        if (a == b) return 0.0;
        return std::nullopt;
    }

    double at(const std::string& a, const std::string& b) const;

    const std::map<std::pair<std::string, std::string>, double>& entries() const {
        return entries_;
    }

private:
    std::map<std::pair<std::string, std::string>, double> entries_;
};

struct ClusterTopology {
    Region management_region;
    std::vector<Region> provider_regions;
    std::vector<NodeSpec> nodes;
    RttMatrix rtt_ms;

    const Region* find_provider_region(const std::string& id) const;
    const NodeSpec* find_node(const std::string& id) const;
    // Management <-> node-region round trip, ms.
    double rtt_to(const std::string& region_id) const { return rtt_ms.at(management_region.id, region_id); }
};

struct FunctionSpec {
    std::string name;
    std::int64_t cpu_request_millicores = 0;
    std::int64_t memory_request_mib = 0;
    Distribution service_time_ms = Distribution::constant(100.0);
    int container_concurrency = 1;
    std::string scheduler_name;  // strategy key string
};

// Pod/instance lifecycle. Phases only ever advance in this order; the single
// allowed skip is Pending -> Terminated for unschedulable pods.
enum class Phase { Pending = 0, Scheduled = 1, Binding = 2, Running = 3, Terminated = 4 };

const char* phase_name(Phase p);

struct InstanceState {
    std::string instance_id;
    std::string function;
    Phase phase = Phase::Pending;
    std::optional<std::string> node_id;
    std::string region_id;
    std::map<Phase, double> phase_timestamps;  // sim-time ms per phase entered
    int in_flight = 0;
};

// Great-circle distance (haversine, mean Earth radius 6371.0088 km).
double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

// Returns one description per violated invariant; empty means the topology is
// well formed. Violations are data, not failures.
std::vector<std::string> validate_topology(const ClusterTopology& topology);

// Deployability and per-field checks for a function against a topology.
std::vector<std::string> validate_function(const FunctionSpec& fn, const ClusterTopology& topology);

}  // namespace greensched
