#include "greensched/core_model.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace greensched {

double RttMatrix::at(const std::string& a, const std::string& b) const {
    if (auto v = find(a, b)) return *v;
    throw std::out_of_range("rtt_matrix has no entry for " + a + " <-> " + b);
}

const Region* ClusterTopology::find_provider_region(const std::string& id) const {
    for (const auto& r : provider_regions)
        if (r.id == id) return &r;
    return nullptr;
}

const NodeSpec* ClusterTopology::find_node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Pending: return "Pending";
        case Phase::Scheduled: return "Scheduled";
        case Phase::Binding: return "Binding";
        case Phase::Running: return "Running";
        case Phase::Terminated: return "Terminated";
    }
    return "?";
}

double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
    constexpr double kMeanEarthRadiusKm = 6371.0088;
    constexpr double deg = std::numbers::pi / 180.0;
    const double lat1 = lat1_deg * deg;
    const double lat2 = lat2_deg * deg;
    const double dlat = (lat2_deg - lat1_deg) * deg;
    const double dlon = (lon2_deg - lon1_deg) * deg;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kMeanEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

bool valid_coordinates(const Region& r) {
    return r.latitude >= -90.0 && r.latitude <= 90.0 && r.longitude >= -180.0 &&
           r.longitude <= 180.0;
}

}  // namespace

std::vector<std::string> validate_topology(const ClusterTopology& topology) {
    std::vector<std::string> violations;

    std::set<std::string> region_ids;
    auto check_region = [&](const Region& r, const char* role) {
        if (r.id.empty()) violations.push_back(std::string(role) + " region has empty id");
        if (!region_ids.insert(r.id).second && r.id != topology.management_region.id)
            violations.push_back("region id '" + r.id + "' is not unique");
        if (!valid_coordinates(r))
            violations.push_back("region '" + r.id + "' has out-of-range coordinates");
    };
    check_region(topology.management_region, "management");
    for (const auto& r : topology.provider_regions) check_region(r, "provider");

    std::set<std::string> node_ids;
    for (const auto& n : topology.nodes) {
        if (!node_ids.insert(n.id).second)
            violations.push_back("node id '" + n.id + "' is not unique");
        if (n.cpu_capacity_millicores <= 0)
            violations.push_back("node '" + n.id + "' must have cpu_capacity > 0");
        if (n.memory_capacity_mib <= 0)
            violations.push_back("node '" + n.id + "' must have memory_capacity > 0");
        if (topology.find_provider_region(n.region_id) == nullptr)
            violations.push_back("node '" + n.id + "' references unknown provider region '" +
                                 n.region_id + "'");
        auto it = n.annotations.find("region");
        if (it == n.annotations.end())
            violations.push_back("node '" + n.id + "' is missing the \"region\" annotation");
        else if (it->second != n.region_id)
            violations.push_back("node '" + n.id + "' annotation region '" + it->second +
                                 "' does not match region_id '" + n.region_id + "'");
    }

    for (const auto& [pair, ms] : topology.rtt_ms.entries()) {
        if (ms < 0.0)
            violations.push_back("rtt entry " + pair.first + " <-> " + pair.second +
                                 " must be >= 0");
        auto reverse = topology.rtt_ms.entries().find({pair.second, pair.first});
        if (reverse != topology.rtt_ms.entries().end() && reverse->second != ms &&
            pair.first < pair.second)
            violations.push_back("rtt entries for " + pair.first + " <-> " + pair.second +
                                 " are asymmetric");
    }
    for (const auto& r : topology.provider_regions) {
        if (!topology.rtt_ms.find(topology.management_region.id, r.id))
            violations.push_back("rtt_matrix is missing entry " + topology.management_region.id +
                                 " <-> " + r.id);
    }

    return violations;
}

std::vector<std::string> validate_function(const FunctionSpec& fn, const ClusterTopology& topology) {
    std::vector<std::string> violations;
    if (fn.name.empty()) violations.push_back("function has empty name");
    if (fn.cpu_request_millicores <= 0)
        violations.push_back("function '" + fn.name + "' must request cpu > 0");
    if (fn.memory_request_mib <= 0)
        violations.push_back("function '" + fn.name + "' must request memory > 0");
    if (fn.container_concurrency < 1)
        violations.push_back("function '" + fn.name + "' must have container_concurrency >= 1");
    std::int64_t max_cpu = 0;
    for (const auto& n : topology.nodes) max_cpu = std::max(max_cpu, n.cpu_capacity_millicores);
    if (!topology.nodes.empty() && fn.cpu_request_millicores > max_cpu)
        violations.push_back("function '" + fn.name + "' cpu request " +
                             std::to_string(fn.cpu_request_millicores) +
                             "m exceeds the largest node capacity " + std::to_string(max_cpu) +
                             "m");
    return violations;
}

}  // namespace greensched
