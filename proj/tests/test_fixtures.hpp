#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "greensched/engine.hpp"

namespace greensched::testing {

// The evaluation cluster layout: Frankfurt management, four provider regions
// with their real coordinates, four 4-vCPU/16-GiB nodes each.
inline ClusterTopology evaluation_topology() {
    ClusterTopology topo;
    topo.management_region = {"europe-west3-a", "Frankfurt", 50.1109, 8.6821};
    topo.provider_regions = {
        {"europe-southwest1-a", "Spain", 40.4168, -3.7038},
        {"europe-west9-a", "France", 48.8566, 2.3522},
        {"europe-west1-b", "Belgium", 50.4542, 3.8193},
        {"europe-west4-a", "Netherlands", 53.4386, 6.8335},
    };
    for (const auto& region : topo.provider_regions) {
        for (int i = 1; i <= 4; ++i) {
            NodeSpec node;
            node.id = region.id + "-n" + std::to_string(i);
            node.region_id = region.id;
            node.cpu_capacity_millicores = 4000;
            node.memory_capacity_mib = 16384;
            node.annotations["region"] = region.id;
            topo.nodes.push_back(std::move(node));
        }
        topo.rtt_ms.set(topo.management_region.id, region.id, 20.0);
    }
    return topo;
}

inline FunctionSpec small_function(const std::string& name = "fn") {
    FunctionSpec fn;
    fn.name = name;
    fn.cpu_request_millicores = 500;
    fn.memory_request_mib = 512;
    fn.service_time_ms = Distribution::constant(100.0);
    fn.container_concurrency = 1;
    fn.scheduler_name = "carbon_aware";
    return fn;
}

// Constant per-region MOER map used across the suites: Spain cleanest,
// Netherlands dirtiest.
inline std::map<std::string, SyntheticSignal> constant_signals() {
    return {
        {"europe-southwest1-a", SyntheticSignal{SyntheticSignal::Kind::Constant, 150.0}},
        {"europe-west9-a", SyntheticSignal{SyntheticSignal::Kind::Constant, 200.0}},
        {"europe-west1-b", SyntheticSignal{SyntheticSignal::Kind::Constant, 250.0}},
        {"europe-west4-a", SyntheticSignal{SyntheticSignal::Kind::Constant, 300.0}},
    };
}

inline std::filesystem::path write_temp_file(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace greensched::testing
