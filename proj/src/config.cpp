#include "greensched/config.hpp"

#include <fstream>
#include <set>

namespace greensched {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail(where + ": missing field '" + key + "'");
    return j.at(key);
}

double number_or(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

Region region_from_json(const json& j, const std::string& where) {
    Region r;
    r.id = require(j, "id", where).get<std::string>();
    r.display_name = j.value("display_name", r.id);
    r.latitude = number_or(j, "latitude", 0.0);
    r.longitude = number_or(j, "longitude", 0.0);
    return r;
}

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

}  // namespace

Distribution distribution_from_json(const json& j) {
    if (j.is_number()) return Distribution::constant(j.get<double>());
    if (!j.is_object()) fail("distribution must be an object or a number");
    const std::string kind = require(j, "kind", "distribution").get<std::string>();
    if (kind == "constant")
        return Distribution::constant(require(j, "value_ms", "constant distribution").get<double>());
    if (kind == "exponential")
        return Distribution::exponential(
            require(j, "mean_ms", "exponential distribution").get<double>());
    if (kind == "lognormal")
        return Distribution::lognormal(require(j, "mu", "lognormal distribution").get<double>(),
                                       require(j, "sigma", "lognormal distribution").get<double>());
    fail("unknown distribution kind '" + kind + "'");
}

json distribution_to_json(const Distribution& d) {
    switch (d.kind) {
        case DistKind::Constant: return json{{"kind", "constant"}, {"value_ms", d.p0}};
        case DistKind::Exponential: return json{{"kind", "exponential"}, {"mean_ms", d.p0}};
        case DistKind::Lognormal:
            return json{{"kind", "lognormal"}, {"mu", d.p0}, {"sigma", d.p1}};
    }
    return {};
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) fail("config file " + path.string() + " is not valid JSON");
    return parse_experiment_config(j, path.has_parent_path() ? path.parent_path()
                                                             : std::filesystem::path("."));
}

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) fail("config root must be a JSON object");
    ExperimentConfig config;

    const json& topo = require(j, "topology", "config");
    config.topology.management_region =
        region_from_json(require(topo, "management_region", "topology"), "management_region");
    for (const auto& rj : require(topo, "provider_regions", "topology"))
        config.topology.provider_regions.push_back(region_from_json(rj, "provider_region"));
    for (const auto& nj : require(topo, "nodes", "topology")) {
        NodeSpec node;
        node.id = require(nj, "id", "node").get<std::string>();
        node.region_id = require(nj, "region", "node '" + node.id + "'").get<std::string>();
        node.cpu_capacity_millicores =
            require(nj, "cpu_millicores", "node '" + node.id + "'").get<std::int64_t>();
        node.memory_capacity_mib =
            require(nj, "memory_mib", "node '" + node.id + "'").get<std::int64_t>();
        if (nj.contains("annotations"))
            for (const auto& [k, v] : nj.at("annotations").items())
                node.annotations[k] = v.get<std::string>();
        node.annotations.emplace("region", node.region_id);
        if (nj.contains("taints"))
            for (const auto& t : nj.at("taints")) node.taints.push_back(t.get<std::string>());
        config.topology.nodes.push_back(std::move(node));
    }
    if (topo.contains("rtt_ms"))
        for (const auto& ej : topo.at("rtt_ms")) {
            config.topology.rtt_ms.set(require(ej, "a", "rtt entry").get<std::string>(),
                                       require(ej, "b", "rtt entry").get<std::string>(),
                                       require(ej, "ms", "rtt entry").get<double>());
        }

    for (const auto& fj : require(j, "functions", "config")) {
        FunctionSpec fn;
        fn.name = require(fj, "name", "function").get<std::string>();
        fn.cpu_request_millicores =
            require(fj, "cpu_millicores", "function '" + fn.name + "'").get<std::int64_t>();
        fn.memory_request_mib =
            require(fj, "memory_mib", "function '" + fn.name + "'").get<std::int64_t>();
        if (fj.contains("service_time")) fn.service_time_ms = distribution_from_json(fj.at("service_time"));
        fn.container_concurrency = fj.value("container_concurrency", 1);
        fn.scheduler_name = fj.value("scheduler_name", "default_spread");
        config.functions.push_back(std::move(fn));
    }

    const json& wj = require(j, "workload", "config");
    const std::string wkind = require(wj, "kind", "workload").get<std::string>();
    if (wkind == "synthetic_constant") {
        config.workload.kind = WorkloadConfig::Kind::SyntheticConstant;
        config.workload.rate_per_min = number_or(wj, "rate_per_min", 60.0);
    } else if (wkind == "trace") {
        config.workload.kind = WorkloadConfig::Kind::Trace;
        config.workload.trace_path =
            resolve(base_dir, require(wj, "path", "workload").get<std::string>());
    } else {
        fail("unknown workload kind '" + wkind + "'");
    }
    config.workload.window_start_minute = static_cast<int>(number_or(wj, "window_start_minute", 0));
    config.workload.window_minutes = static_cast<int>(number_or(wj, "window_minutes", 10));

    const json& cj = require(j, "carbon", "config");
    const json& pj = require(cj, "provider", "carbon");
    const std::string ckind = require(pj, "kind", "carbon provider").get<std::string>();
    if (ckind == "synthetic") {
        config.carbon.kind = CarbonProviderConfig::Kind::Synthetic;
        for (const auto& [region, sj] : require(pj, "signals", "synthetic provider").items()) {
            SyntheticSignal sig;
            const std::string skind = sj.value("kind", "constant");
            if (skind == "constant") {
                sig.kind = SyntheticSignal::Kind::Constant;
            } else if (skind == "sinusoid") {
                sig.kind = SyntheticSignal::Kind::Sinusoid;
                sig.amplitude = number_or(sj, "amplitude", 0.0);
                sig.period_s = number_or(sj, "period_s", 86400.0);
            } else {
                fail("unknown synthetic signal kind '" + skind + "'");
            }
            sig.base = require(sj, "base", "synthetic signal").get<double>();
            config.carbon.signals[region] = sig;
        }
    } else if (ckind == "trace") {
        config.carbon.kind = CarbonProviderConfig::Kind::Trace;
        config.carbon.trace_path =
            resolve(base_dir, require(pj, "path", "carbon provider").get<std::string>());
    } else if (ckind == "http") {
        config.carbon.kind = CarbonProviderConfig::Kind::Http;
        config.carbon.endpoint_url =
            require(pj, "endpoint", "carbon provider").get<std::string>();
        const std::string format = pj.value("format", "watttime");
        if (format == "watttime")
            config.carbon.format = WireFormat::WattTimeLike;
        else if (format == "carbonsdk")
            config.carbon.format = WireFormat::CarbonSdkLike;
        else
            fail("unknown carbon wire format '" + format + "'");
        config.carbon.token = pj.value("token", "");
    } else {
        fail("unknown carbon provider kind '" + ckind + "'");
    }
    config.carbon_ttl_s = number_or(cj, "ttl_s", 300.0);
    config.carbon_epoch_start_s = number_or(cj, "epoch_start_s", 0.0);

    for (const auto& sj : require(j, "strategies", "config")) {
        auto key = parse_strategy(sj.get<std::string>());
        if (!key) fail("unknown strategy '" + sj.get<std::string>() + "'");
        config.strategies.push_back(*key);
    }

    if (j.contains("latency")) {
        const json& lj = j.at("latency");
        if (lj.contains("scheduling"))
            for (const auto& [name, dj] : lj.at("scheduling").items()) {
                auto key = parse_strategy(name);
                if (!key) fail("unknown strategy '" + name + "' in latency.scheduling");
                config.latency.scheduling[*key] = distribution_from_json(dj);
            }
        if (lj.contains("binding_remote"))
            config.latency.binding_remote = distribution_from_json(lj.at("binding_remote"));
        if (lj.contains("binding_local"))
            config.latency.binding_local = distribution_from_json(lj.at("binding_local"));
    }

    if (j.contains("autoscaler")) {
        const json& aj = j.at("autoscaler");
        if (aj.contains("target_concurrency") && !aj.at("target_concurrency").is_null())
            config.autoscaler.target_concurrency = aj.at("target_concurrency").get<int>();
        config.autoscaler.scale_to_zero_idle_ms =
            number_or(aj, "scale_to_zero_idle_ms", config.autoscaler.scale_to_zero_idle_ms);
        config.autoscaler.evaluate_period_ms =
            number_or(aj, "evaluate_period_ms", config.autoscaler.evaluate_period_ms);
        if (aj.contains("max_instances") && !aj.at("max_instances").is_null())
            config.autoscaler.max_instances = aj.at("max_instances").get<int>();
    }

    config.duration_ms = number_or(j, "duration_ms", 600000.0);
    config.repeats = static_cast<int>(number_or(j, "repeats", 5));
    if (j.contains("base_seed")) config.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("weighting_mode")) {
        auto mode = parse_weighting_mode(j.at("weighting_mode").get<std::string>());
        if (!mode) fail("unknown weighting_mode '" + j.at("weighting_mode").get<std::string>() + "'");
        config.weighting_mode = *mode;
    }
    if (j.contains("energy")) {
        const json& ej = j.at("energy");
        config.energy.tdp_w = number_or(ej, "tdp_w", config.energy.tdp_w);
        config.energy.utilization = number_or(ej, "utilization", config.energy.utilization);
        config.energy.hours = number_or(ej, "hours", config.energy.hours);
        config.energy.dimensional_ram = ej.value("dimensional_ram", false);
    }
    if (j.contains("serve")) config.serve_listen = j.at("serve").value("listen", config.serve_listen);

    return config;
}

std::vector<std::string> validate_experiment_config(const ExperimentConfig& config) {
    std::vector<std::string> violations = validate_topology(config.topology);
    for (const auto& fn : config.functions) {
        auto fv = validate_function(fn, config.topology);
        violations.insert(violations.end(), fv.begin(), fv.end());
    }
    if (config.functions.empty()) violations.push_back("config declares no functions");
    if (config.strategies.empty()) violations.push_back("config declares no strategies");
    if (config.repeats < 1) violations.push_back("repeats must be >= 1");
    if (!(config.duration_ms > 0.0)) violations.push_back("duration_ms must be > 0");
    if (!(config.autoscaler.evaluate_period_ms > 0.0))
        violations.push_back("autoscaler.evaluate_period_ms must be > 0");
    if (!(config.autoscaler.scale_to_zero_idle_ms > 0.0))
        violations.push_back("autoscaler.scale_to_zero_idle_ms must be > 0");
    if (config.autoscaler.target_concurrency && *config.autoscaler.target_concurrency < 1)
        violations.push_back("autoscaler.target_concurrency must be >= 1");
    if (config.autoscaler.max_instances && *config.autoscaler.max_instances < 0)
        violations.push_back("autoscaler.max_instances must be >= 0");

    std::set<std::string> function_names;
    for (const auto& fn : config.functions) {
        if (!function_names.insert(fn.name).second)
            violations.push_back("duplicate function name '" + fn.name + "'");
    }

    if (config.workload.kind == WorkloadConfig::Kind::Trace) {
        if (!std::filesystem::exists(config.workload.trace_path)) {
            violations.push_back("workload trace file " + config.workload.trace_path.string() +
                                 " does not exist");
        } else {
            try {
                auto rows = load_trace(config.workload.trace_path);
                for (const auto& row : rows)
                    if (!function_names.contains(row.function_id))
                        violations.push_back("workload trace references unknown function '" +
                                             row.function_id + "'");
            } catch (const TraceFormatError& e) {
                violations.push_back(e.what());
            }
        }
        if (config.workload.window_start_minute < 0 || config.workload.window_minutes < 0 ||
            config.workload.window_start_minute + config.workload.window_minutes > kMinutesPerDay)
            violations.push_back("workload window must fit within [0, 1440)");
    } else if (config.workload.rate_per_min < 0.0) {
        violations.push_back("workload rate_per_min must be >= 0");
    }

    std::vector<std::string> region_ids;
    for (const auto& r : config.topology.provider_regions) region_ids.push_back(r.id);
    if (config.carbon.kind == CarbonProviderConfig::Kind::Trace) {
        if (!std::filesystem::exists(config.carbon.trace_path)) {
            violations.push_back("carbon trace file " + config.carbon.trace_path.string() +
                                 " does not exist");
        } else {
            try {
                auto provider = TraceCarbonProvider::load(config.carbon.trace_path);
                auto coverage =
                    provider->validate_coverage(region_ids, config.carbon_epoch_start_s);
                violations.insert(violations.end(), coverage.begin(), coverage.end());
            } catch (const FetchError& e) {
                violations.push_back(e.what());
            }
        }
    } else if (config.carbon.kind == CarbonProviderConfig::Kind::Synthetic) {
        for (const auto& r : region_ids)
            if (!config.carbon.signals.contains(r))
                violations.push_back("no synthetic carbon signal for region '" + r + "'");
    }
    if (!(config.carbon_ttl_s >= 0.0)) violations.push_back("carbon ttl_s must be >= 0");

    return violations;
}

RunPlan make_run_plan(const ExperimentConfig& config, StrategyKey strategy) {
    RunPlan plan;
    plan.topology = config.topology;
    plan.functions = config.functions;
    plan.workload = config.workload;
    plan.carbon = config.carbon;
    plan.carbon_ttl_s = config.carbon_ttl_s;
    plan.carbon_epoch_start_s = config.carbon_epoch_start_s;
    plan.strategy_override = strategy;
    plan.latency = config.latency;
    plan.autoscaler = config.autoscaler;
    plan.duration_ms = config.duration_ms;
    return plan;
}

namespace {

json stats_to_json(const LatencyStats& s) {
    return json{{"mean", s.mean}, {"median", s.median}, {"min", s.min},
                {"max", s.max},   {"count", s.count}};
}

json stats_to_json(const ResponseStats& s) {
    return json{{"mean", s.mean}, {"median", s.median}, {"p95", s.p95}, {"count", s.count}};
}

}  // namespace

json run_summary_to_json(const RunSummary& summary) {
    json j;
    j["strategy"] = summary.strategy;
    j["seed"] = summary.seed;
    j["arrivals"] = summary.arrivals;
    j["total_requests"] = summary.total_requests;
    j["weighting_mode"] = weighting_mode_name(summary.weighting_mode);
    j["region_weights"] = summary.region_weights;
    j["energy_kwh_per_day"] = summary.energy_kwh_per_day;
    j["functional_units_per_day"] = summary.functional_units_per_day;
    if (summary.response_time_ms) j["response_time_ms"] = stats_to_json(*summary.response_time_ms);
    if (summary.scheduling_latency_ms)
        j["scheduling_latency_ms"] = stats_to_json(*summary.scheduling_latency_ms);
    if (summary.binding_latency_ms)
        j["binding_latency_ms"] = stats_to_json(*summary.binding_latency_ms);
    if (summary.weighted_moer_g_per_kwh)
        j["weighted_moer_g_per_kwh"] = *summary.weighted_moer_g_per_kwh;
    if (summary.sci_g_per_invocation) j["sci_g_per_invocation"] = *summary.sci_g_per_invocation;
    if (summary.sci_ug_per_invocation) j["sci_ug_per_invocation"] = *summary.sci_ug_per_invocation;
    return j;
}

RunSummary run_summary_from_json(const json& j) {
    RunSummary summary;
    summary.strategy = j.at("strategy").get<std::string>();
    summary.seed = j.at("seed").get<std::uint64_t>();
    summary.arrivals = j.at("arrivals").get<std::size_t>();
    summary.total_requests = j.at("total_requests").get<std::size_t>();
    if (auto mode = parse_weighting_mode(j.at("weighting_mode").get<std::string>()))
        summary.weighting_mode = *mode;
    for (const auto& [region, w] : j.at("region_weights").items())
        summary.region_weights[region] = w.get<double>();
    summary.energy_kwh_per_day = j.at("energy_kwh_per_day").get<double>();
    summary.functional_units_per_day = j.at("functional_units_per_day").get<std::int64_t>();
    if (j.contains("response_time_ms")) {
        const json& s = j.at("response_time_ms");
        summary.response_time_ms =
            ResponseStats{s.at("mean"), s.at("median"), s.at("p95"), s.at("count")};
    }
    auto read_latency = [&](const char* key) -> std::optional<LatencyStats> {
        if (!j.contains(key)) return std::nullopt;
        const json& s = j.at(key);
        return LatencyStats{s.at("mean"), s.at("median"), s.at("min"), s.at("max"), s.at("count")};
    };
    summary.scheduling_latency_ms = read_latency("scheduling_latency_ms");
    summary.binding_latency_ms = read_latency("binding_latency_ms");
    if (j.contains("weighted_moer_g_per_kwh"))
        summary.weighted_moer_g_per_kwh = j.at("weighted_moer_g_per_kwh").get<double>();
    if (j.contains("sci_g_per_invocation"))
        summary.sci_g_per_invocation = j.at("sci_g_per_invocation").get<double>();
    if (j.contains("sci_ug_per_invocation"))
        summary.sci_ug_per_invocation = j.at("sci_ug_per_invocation").get<double>();
    return summary;
}

}  // namespace greensched
