#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "greensched/carbon.hpp"
#include "greensched/core_model.hpp"
#include "greensched/scheduler.hpp"
#include "greensched/workload.hpp"

namespace greensched {

// Construction descriptor for carbon providers; kept plain so configs stay
// serializable.
struct CarbonProviderConfig {
    enum class Kind { Trace, Synthetic, Http };
    Kind kind = Kind::Synthetic;
    std::filesystem::path trace_path;                  // Trace
    std::map<std::string, SyntheticSignal> signals;    // Synthetic
    std::string endpoint_url;                          // Http
    WireFormat format = WireFormat::WattTimeLike;
    std::string token;
};

std::shared_ptr<CarbonProvider> make_carbon_provider(const CarbonProviderConfig& config);

struct WorkloadConfig {
    enum class Kind { SyntheticConstant, Trace, Explicit };
    Kind kind = Kind::SyntheticConstant;
    double rate_per_min = 60.0;        // SyntheticConstant: applied to every function
    std::filesystem::path trace_path;  // Trace
    int window_start_minute = 0;
    int window_minutes = 10;
    ArrivalStream explicit_arrivals;   // Explicit: injected as-is (oracle tests)
};

ArrivalStream build_arrivals(const WorkloadConfig& config,
                             const std::vector<std::string>& function_names, std::uint64_t seed);

struct LatencyModel {
    std::map<StrategyKey, Distribution> scheduling = Scheduler::default_scheduling_latency();
    Distribution binding_remote = Distribution::constant(8280.0);  // cross-cluster offload
    Distribution binding_local = Distribution::constant(4530.0);   // kubelet baseline
};

struct AutoscalerConfig {
    std::optional<int> target_concurrency;  // default: the function's container_concurrency
    double scale_to_zero_idle_ms = 60000.0;
    double evaluate_period_ms = 2000.0;
    std::optional<int> max_instances;  // default: topology capacity bound per function
};

struct RunPlan {
    ClusterTopology topology;
    std::vector<FunctionSpec> functions;
    WorkloadConfig workload;
    CarbonProviderConfig carbon;
    double carbon_ttl_s = 300.0;
    double carbon_epoch_start_s = 0.0;
    std::optional<StrategyKey> strategy_override;  // unset: per-function scheduler_name
    LatencyModel latency;
    AutoscalerConfig autoscaler;
    double duration_ms = 600000.0;  // arrivals stop here; in-flight work drains
};

enum class SimEventKind {
    RequestComplete = 0,
    BindingComplete = 1,
    RequestArrival = 2,
    DecisionDue = 3,
    ScaleEvaluate = 4,
    IdleCheck = 5,
};

const char* sim_event_name(SimEventKind kind);

struct RequestRecord {
    std::string request_id;
    std::string function;
    double arrival_ms = 0.0;
    double start_service_ms = -1.0;
    double completion_ms = -1.0;
    std::string instance_id;
    std::string node_id;
    std::string region_id;
    double response_time_ms = -1.0;
    bool completed() const { return completion_ms >= 0.0; }
};

struct InstanceRecord {
    std::string instance_id;
    std::string function;
    std::string node_id;
    std::string region_id;
    Phase final_phase = Phase::Pending;
    std::map<Phase, double> phase_timestamps;
    double scheduling_latency_ms = -1.0;
    double binding_latency_ms = -1.0;
};

struct DecisionRecord {
    double time_ms = 0.0;
    StrategyKey strategy = StrategyKey::DefaultSpread;
    ScheduleDecision decision;
};

struct RunResult {
    StrategyKey strategy = StrategyKey::DefaultSpread;
    std::uint64_t seed = 0;
    double duration_ms = 0.0;
    std::vector<RequestRecord> requests;
    std::vector<InstanceRecord> instances;
    std::vector<DecisionRecord> decisions;
    std::string event_log_csv;  // byte-identical for identical (plan, seed)
    std::size_t arrivals = 0;
    std::size_t completions = 0;
    std::size_t queued_at_end = 0;
    // Snapshot at t = duration (end of the load window).
    std::map<std::string, int> end_instance_counts_by_region;
    std::map<std::string, double> instance_seconds_by_region;  // Running time within the window
    std::map<std::string, double> region_moer_avg_g_per_kwh;   // window time-average per region
};

// Deterministic single-threaded discrete-event run: identical (plan, seed)
// pairs produce byte-identical event logs.
RunResult run_simulation(const RunPlan& plan, std::uint64_t seed);

}  // namespace greensched
