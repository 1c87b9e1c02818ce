#include "greensched/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "greensched/rng.hpp"
#include "greensched/util.hpp"

namespace greensched {

std::shared_ptr<CarbonProvider> make_carbon_provider(const CarbonProviderConfig& config) {
    switch (config.kind) {
        case CarbonProviderConfig::Kind::Trace:
            return TraceCarbonProvider::load(config.trace_path);
        case CarbonProviderConfig::Kind::Synthetic:
            return std::make_shared<SyntheticCarbonProvider>(config.signals);
        case CarbonProviderConfig::Kind::Http:
            return std::make_shared<HttpCarbonProvider>(config.endpoint_url, config.format,
                                                        config.token);
    }
    throw std::invalid_argument("unknown carbon provider kind");
}

ArrivalStream build_arrivals(const WorkloadConfig& config,
                             const std::vector<std::string>& function_names, std::uint64_t seed) {
    if (config.kind == WorkloadConfig::Kind::Explicit) return config.explicit_arrivals;
    if (config.kind == WorkloadConfig::Kind::Trace) {
        auto rows = load_trace(config.trace_path);
        return synthesize(rows, config.window_start_minute, config.window_minutes, seed);
    }
    ArrivalStream merged;
    for (const auto& fn : function_names) {
        auto stream = synthetic_constant(config.rate_per_min, config.window_minutes, seed, fn);
        merged.insert(merged.end(), stream.begin(), stream.end());
    }
    std::stable_sort(merged.begin(), merged.end(), [](const Arrival& a, const Arrival& b) {
        if (a.time_ms != b.time_ms) return a.time_ms < b.time_ms;
        return a.function_id < b.function_id;
    });
    return merged;
}

const char* sim_event_name(SimEventKind kind) {
    switch (kind) {
        case SimEventKind::RequestComplete: return "request_complete";
        case SimEventKind::BindingComplete: return "binding_complete";
        case SimEventKind::RequestArrival: return "request_arrival";
        case SimEventKind::DecisionDue: return "decision_due";
        case SimEventKind::ScaleEvaluate: return "scale_evaluate";
        case SimEventKind::IdleCheck: return "idle_check";
    }
    return "?";
}

namespace {

struct SimEvent {
    double time_ms;
    SimEventKind kind;
    std::uint64_t seq;       // insertion order; final tie-break
    std::string entity;      // request / instance / function id
    bool periodic = false;   // ScaleEvaluate: reschedules itself
};

struct EventAfter {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.time_ms != b.time_ms) return a.time_ms > b.time_ms;
        if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
        return a.seq > b.seq;
    }
};

struct Instance {
    InstanceState state;
    double idle_since = -1.0;
    double scheduling_latency_ms = -1.0;
    double binding_latency_ms = -1.0;
};

struct FunctionRuntime {
    FunctionSpec spec;
    StrategyKey strategy = StrategyKey::DefaultSpread;
    int target_concurrency = 1;
    int max_instances = 0;
    std::deque<std::string> queue;   // queued request ids, FIFO
    std::set<std::string> live;      // non-terminated instance ids
    int in_flight_total = 0;
    std::uint64_t next_instance = 0;
    bool evaluate_queued = false;    // immediate evaluate pending
};

class Engine {
public:
    Engine(const RunPlan& plan, std::uint64_t seed)
        : plan_(plan),
          seed_(seed),
          rng_(seed),
          carbon_(std::make_shared<CachedCarbonSource>(make_carbon_provider(plan.carbon),
                                                       plan.carbon_ttl_s)),
          scheduler_(plan.latency.scheduling, rng_.stream("sched_latency")) {
        for (const auto& r : plan_.topology.provider_regions) region_ids_.push_back(r.id);
    }

    RunResult run();

private:
    // -- setup ---------------------------------------------------------------
    void init_functions();
    int capacity_bound(const FunctionSpec& fn) const;

    // -- event plumbing -------------------------------------------------------
    void push(double time_ms, SimEventKind kind, std::string entity, bool periodic = false) {
        events_.push(SimEvent{time_ms, kind, next_seq_++, std::move(entity), periodic});
    }
    void log(double time_ms, const std::string& kind, const std::string& entity,
             const std::string& detail) {
        log_ << format_double(time_ms) << ',' << kind << ',' << entity << ',' << detail << '\n';
    }
    double epoch_s(double time_ms) const { return plan_.carbon_epoch_start_s + time_ms / 1000.0; }

    // -- handlers --------------------------------------------------------------
    void on_arrival(const SimEvent& ev);
    void on_decision_due(const SimEvent& ev);
    void on_binding_complete(const SimEvent& ev);
    void on_request_complete(const SimEvent& ev);
    void on_scale_evaluate(const SimEvent& ev);
    void on_idle_check(const SimEvent& ev);

    // -- helpers ----------------------------------------------------------------
    void spawn_pod(FunctionRuntime& fr, double now);
    void dispatch(const std::string& request_id, Instance& inst, double now);
    bool try_route(const std::string& request_id, FunctionRuntime& fr, double now);
    void request_immediate_evaluate(FunctionRuntime& fr, double now);
    int desired_instances(const FunctionRuntime& fr) const;
    void scale_down_expired(FunctionRuntime& fr, double now);
    void terminate_instance(Instance& inst, double now, const std::string& reason);
    std::map<std::string, int> spread_counts(const FunctionRuntime& fr) const;
    void take_end_snapshot();
    RunResult build_result();

    const RunPlan& plan_;
    std::uint64_t seed_;
    RngRegistry rng_;
    std::shared_ptr<CachedCarbonSource> carbon_;
    Scheduler scheduler_;
    std::vector<std::string> region_ids_;

    std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> events_;
    std::uint64_t next_seq_ = 0;
    std::ostringstream log_;

    std::map<std::string, FunctionRuntime> functions_;
    std::map<std::string, Instance> instances_;  // all ever created
    std::map<std::string, RequestRecord> requests_;
    std::vector<std::string> request_order_;
    std::vector<DecisionRecord> decisions_;
    ResourceUsage usage_;

    double now_ = 0.0;
    bool snapshot_taken_ = false;
    std::map<std::string, int> end_counts_;
    std::size_t arrivals_ = 0;
    std::size_t completions_ = 0;
};

void Engine::init_functions() {
    for (const auto& spec : plan_.functions) {
        FunctionRuntime fr;
        fr.spec = spec;
        if (plan_.strategy_override) {
            fr.strategy = *plan_.strategy_override;
        } else {
            auto parsed = parse_strategy(spec.scheduler_name);
            fr.strategy = parsed.value_or(StrategyKey::DefaultSpread);
        }
        fr.target_concurrency =
            plan_.autoscaler.target_concurrency.value_or(spec.container_concurrency);
        if (fr.target_concurrency < 1) fr.target_concurrency = 1;
        fr.max_instances = plan_.autoscaler.max_instances.value_or(capacity_bound(spec));
        functions_[spec.name] = std::move(fr);
    }
}

int Engine::capacity_bound(const FunctionSpec& fn) const {
    std::int64_t total = 0;
    for (const auto& node : plan_.topology.nodes) {
        std::int64_t by_cpu = node.cpu_capacity_millicores / std::max<std::int64_t>(1, fn.cpu_request_millicores);
        std::int64_t by_mem = node.memory_capacity_mib / std::max<std::int64_t>(1, fn.memory_request_mib);
        total += std::min(by_cpu, by_mem);
    }
    return static_cast<int>(std::min<std::int64_t>(total, std::numeric_limits<int>::max()));
}

int Engine::desired_instances(const FunctionRuntime& fr) const {
    const std::int64_t load = fr.in_flight_total + static_cast<std::int64_t>(fr.queue.size());
    std::int64_t desired = (load + fr.target_concurrency - 1) / fr.target_concurrency;
    desired = std::clamp<std::int64_t>(desired, 0, fr.max_instances);
    return static_cast<int>(desired);
}

std::map<std::string, int> Engine::spread_counts(const FunctionRuntime& fr) const {
    std::map<std::string, int> counts;
    for (const auto& id : fr.live) {
        const auto& inst = instances_.at(id);
        if (inst.state.phase == Phase::Scheduled || inst.state.phase == Phase::Binding ||
            inst.state.phase == Phase::Running)
            counts[inst.state.region_id] += 1;
    }
    return counts;
}

void Engine::request_immediate_evaluate(FunctionRuntime& fr, double now) {
    if (fr.evaluate_queued) return;
    fr.evaluate_queued = true;
    push(now, SimEventKind::ScaleEvaluate, fr.spec.name);
}

void Engine::spawn_pod(FunctionRuntime& fr, double now) {
    std::string id = fr.spec.name + "-i" + std::to_string(++fr.next_instance);
    Instance inst;
    inst.state.instance_id = id;
    inst.state.function = fr.spec.name;
    inst.state.phase = Phase::Pending;
    inst.state.phase_timestamps[Phase::Pending] = now;
    instances_[id] = std::move(inst);
    fr.live.insert(id);
    log(now, "pod_pending", id, "function=" + fr.spec.name);
    push(now, SimEventKind::DecisionDue, id);
}

void Engine::dispatch(const std::string& request_id, Instance& inst, double now) {
    auto& record = requests_.at(request_id);
    auto& fr = functions_.at(record.function);
    inst.state.in_flight += 1;
    fr.in_flight_total += 1;
    inst.idle_since = -1.0;
    record.start_service_ms = now;
    record.instance_id = inst.state.instance_id;
    record.node_id = *inst.state.node_id;
    record.region_id = inst.state.region_id;
    const double rtt = plan_.topology.rtt_to(inst.state.region_id);
    const double service = fr.spec.service_time_ms.sample(rng_.stream("service/" + fr.spec.name));
    push(now + rtt + service, SimEventKind::RequestComplete, request_id);
    log(now, "dispatch", request_id,
        "instance=" + inst.state.instance_id + ";node=" + record.node_id);
}

bool Engine::try_route(const std::string& request_id, FunctionRuntime& fr, double now) {
    std::vector<std::string> eligible;
    for (const auto& id : fr.live) {
        const auto& inst = instances_.at(id);
        if (inst.state.phase == Phase::Running &&
            inst.state.in_flight < fr.spec.container_concurrency)
            eligible.push_back(id);
    }
    if (eligible.empty()) return false;
    // Traffic is spread uniformly across free instances (seeded per function).
    auto idx = rng_.stream("routing/" + fr.spec.name).next_index(eligible.size());
    dispatch(request_id, instances_.at(eligible[idx]), now);
    return true;
}

void Engine::on_arrival(const SimEvent& ev) {
    const std::string& request_id = ev.entity;
    auto& record = requests_.at(request_id);
    auto& fr = functions_.at(record.function);
    arrivals_ += 1;
    log(now_, "request_arrival", request_id, "function=" + record.function);
    if (!try_route(request_id, fr, now_)) {
        fr.queue.push_back(request_id);
        log(now_, "enqueue", request_id, "function=" + record.function);
        request_immediate_evaluate(fr, now_);
    }
}

void Engine::on_decision_due(const SimEvent& ev) {
    auto& inst = instances_.at(ev.entity);
    if (inst.state.phase != Phase::Pending) return;
    auto& fr = functions_.at(inst.state.function);

    PodRequest pod;
    pod.pod_id = inst.state.instance_id;
    pod.function = fr.spec.name;
    pod.cpu_request_millicores = fr.spec.cpu_request_millicores;
    pod.memory_request_mib = fr.spec.memory_request_mib;
    pod.strategy = fr.strategy;

    auto counts = spread_counts(fr);
    SchedulerContext ctx;
    ctx.topology = &plan_.topology;
    ctx.usage = &usage_;
    ctx.spread_counts = &counts;
    ctx.score_source = [this] { return carbon_->scores(region_ids_, epoch_s(now_)); };

    ScheduleDecision decision = scheduler_.schedule(pod, ctx);
    decisions_.push_back(DecisionRecord{now_, fr.strategy, decision});

    if (!decision.chosen_node) {
        std::string reason =
            decision.failure_reason.empty() ? "no_feasible_node" : decision.failure_reason;
        log(now_, "decision_failed", pod.pod_id, "reason=" + reason);
        // Stays Pending; retried next cycle. Pods that never fit are closed
        // out as Terminated when the run drains.
        if (now_ + plan_.autoscaler.evaluate_period_ms <= plan_.duration_ms)
            push(now_ + plan_.autoscaler.evaluate_period_ms, SimEventKind::DecisionDue, ev.entity);
        else {
            inst.state.phase = Phase::Terminated;
            inst.state.phase_timestamps[Phase::Terminated] = now_;
            fr.live.erase(ev.entity);
            log(now_, "pod_terminated", ev.entity, "reason=unschedulable");
        }
        return;
    }

    const NodeSpec* node = plan_.topology.find_node(*decision.chosen_node);
    const double assigned_at = now_ + decision.decision_latency_ms;
    const bool local = node->region_id == plan_.topology.management_region.id;
    const Distribution& binding_dist =
        local ? plan_.latency.binding_local : plan_.latency.binding_remote;
    const double binding = binding_dist.sample(rng_.stream("binding_latency"));

    inst.state.node_id = node->id;
    inst.state.region_id = node->region_id;
    inst.state.phase = Phase::Binding;
    inst.state.phase_timestamps[Phase::Scheduled] = assigned_at;
    inst.state.phase_timestamps[Phase::Binding] = assigned_at;
    inst.scheduling_latency_ms = decision.decision_latency_ms;
    inst.binding_latency_ms = binding;

    log(now_, "pod_scheduled", pod.pod_id,
        "node=" + node->id + ";latency_ms=" + format_double(decision.decision_latency_ms) +
            ";tie_break=" + (decision.tie_break_applied ? "1" : "0") +
            ";feasible=" + std::to_string(decision.feasible_nodes.size()));
    push(assigned_at + binding, SimEventKind::BindingComplete, pod.pod_id);
}

void Engine::on_binding_complete(const SimEvent& ev) {
    auto& inst = instances_.at(ev.entity);
    auto& fr = functions_.at(inst.state.function);
    inst.state.phase = Phase::Running;
    inst.state.phase_timestamps[Phase::Running] = now_;
    log(now_, "pod_running", ev.entity, "node=" + *inst.state.node_id);
    while (!fr.queue.empty() && inst.state.in_flight < fr.spec.container_concurrency) {
        std::string request_id = fr.queue.front();
        fr.queue.pop_front();
        dispatch(request_id, inst, now_);
    }
    if (inst.state.in_flight == 0) {
        inst.idle_since = now_;
        push(now_ + plan_.autoscaler.scale_to_zero_idle_ms, SimEventKind::IdleCheck, ev.entity);
    }
}

void Engine::on_request_complete(const SimEvent& ev) {
    auto& record = requests_.at(ev.entity);
    auto& fr = functions_.at(record.function);
    auto& inst = instances_.at(record.instance_id);
    record.completion_ms = now_;
    record.response_time_ms = now_ - record.arrival_ms;
    completions_ += 1;
    inst.state.in_flight -= 1;
    fr.in_flight_total -= 1;
    log(now_, "request_complete", ev.entity,
        "response_ms=" + format_double(record.response_time_ms));
    if (!fr.queue.empty() && inst.state.phase == Phase::Running) {
        std::string next_id = fr.queue.front();
        fr.queue.pop_front();
        dispatch(next_id, inst, now_);
    } else if (inst.state.in_flight == 0 && inst.state.phase == Phase::Running) {
        inst.idle_since = now_;
        push(now_ + plan_.autoscaler.scale_to_zero_idle_ms, SimEventKind::IdleCheck,
             inst.state.instance_id);
    }
}

void Engine::on_scale_evaluate(const SimEvent& ev) {
    auto& fr = functions_.at(ev.entity);
    if (!ev.periodic) fr.evaluate_queued = false;
    const int desired = desired_instances(fr);
    const int current = static_cast<int>(fr.live.size());
    log(now_, "scale_evaluate", ev.entity,
        "desired=" + std::to_string(desired) + ";current=" + std::to_string(current));
    if (desired > current) {
        for (int i = 0; i < desired - current; ++i) spawn_pod(fr, now_);
    } else if (desired < current) {
        scale_down_expired(fr, now_);
    }
    if (ev.periodic && now_ + plan_.autoscaler.evaluate_period_ms <= plan_.duration_ms)
        push(now_ + plan_.autoscaler.evaluate_period_ms, SimEventKind::ScaleEvaluate, ev.entity,
             /*periodic=*/true);
}

void Engine::scale_down_expired(FunctionRuntime& fr, double now) {
    int surplus = static_cast<int>(fr.live.size()) - desired_instances(fr);
    if (surplus <= 0) return;
    // Idle instances past the scale-to-zero window, newest-idle-first.
    std::vector<std::string> candidates;
    for (const auto& id : fr.live) {
        const auto& inst = instances_.at(id);
        if (inst.state.phase == Phase::Running && inst.state.in_flight == 0 &&
            inst.idle_since >= 0.0 &&
            now - inst.idle_since >= plan_.autoscaler.scale_to_zero_idle_ms - 1e-9)
            candidates.push_back(id);
    }
    std::sort(candidates.begin(), candidates.end(), [&](const std::string& a, const std::string& b) {
        double ia = instances_.at(a).idle_since;
        double ib = instances_.at(b).idle_since;
        if (ia != ib) return ia > ib;
        return a > b;
    });
    for (const auto& id : candidates) {
        if (surplus == 0) break;
        terminate_instance(instances_.at(id), now, "idle");
        surplus -= 1;
    }
}

void Engine::terminate_instance(Instance& inst, double now, const std::string& reason) {
    auto& fr = functions_.at(inst.state.function);
    usage_.release(*inst.state.node_id, fr.spec.cpu_request_millicores,
                   fr.spec.memory_request_mib);
    inst.state.phase = Phase::Terminated;
    inst.state.phase_timestamps[Phase::Terminated] = now;
    fr.live.erase(inst.state.instance_id);
    log(now, "pod_terminated", inst.state.instance_id, "reason=" + reason);
}

void Engine::on_idle_check(const SimEvent& ev) {
    auto it = instances_.find(ev.entity);
    if (it == instances_.end()) return;
    auto& inst = it->second;
    log(now_, "idle_check", ev.entity, "");
    if (inst.state.phase != Phase::Running || inst.state.in_flight != 0 || inst.idle_since < 0.0)
        return;
    if (now_ - inst.idle_since < plan_.autoscaler.scale_to_zero_idle_ms - 1e-9) return;
    scale_down_expired(functions_.at(inst.state.function), now_);
}

void Engine::take_end_snapshot() {
    snapshot_taken_ = true;
    for (const auto& [id, inst] : instances_) {
        auto sched = inst.state.phase_timestamps.find(Phase::Scheduled);
        if (sched == inst.state.phase_timestamps.end() || sched->second > plan_.duration_ms)
            continue;
        auto term = inst.state.phase_timestamps.find(Phase::Terminated);
        if (term != inst.state.phase_timestamps.end() && term->second <= plan_.duration_ms)
            continue;
        end_counts_[inst.state.region_id] += 1;
    }
}

RunResult Engine::build_result() {
    RunResult result;
    result.strategy = plan_.strategy_override.value_or(
        functions_.empty() ? StrategyKey::DefaultSpread : functions_.begin()->second.strategy);
    result.seed = seed_;
    result.duration_ms = plan_.duration_ms;
    result.arrivals = arrivals_;
    result.completions = completions_;
    for (const auto& [name, fr] : functions_) result.queued_at_end += fr.queue.size();
    for (const auto& id : request_order_) result.requests.push_back(requests_.at(id));
    for (const auto& [id, inst] : instances_) {
        InstanceRecord record;
        record.instance_id = id;
        record.function = inst.state.function;
        record.node_id = inst.state.node_id.value_or("");
        record.region_id = inst.state.region_id;
        record.final_phase = inst.state.phase;
        record.phase_timestamps = inst.state.phase_timestamps;
        record.scheduling_latency_ms = inst.scheduling_latency_ms;
        record.binding_latency_ms = inst.binding_latency_ms;
        result.instances.push_back(std::move(record));

        // Running time clipped to the load window, for instance-seconds weighting.
        auto running = inst.state.phase_timestamps.find(Phase::Running);
        if (running != inst.state.phase_timestamps.end()) {
            double start = running->second;
            double end = plan_.duration_ms;
            auto term = inst.state.phase_timestamps.find(Phase::Terminated);
            if (term != inst.state.phase_timestamps.end()) end = std::min(end, term->second);
            start = std::min(start, plan_.duration_ms);
            if (end > start)
                result.instance_seconds_by_region[inst.state.region_id] += (end - start) / 1000.0;
        }
    }
    result.decisions = decisions_;
    result.event_log_csv = "time_ms,kind,entity_id,detail\n" + log_.str();
    result.end_instance_counts_by_region = end_counts_;

    for (const auto& region : region_ids_) {
        double avg = 0.0;
        bool have = false;
        try {
            avg = carbon_->provider().time_average_g_per_kwh(region, epoch_s(0.0),
                                                             epoch_s(plan_.duration_ms));
            have = true;
        } catch (const FetchError&) {
            if (auto fallback = carbon_->history_time_average(region, epoch_s(0.0),
                                                              epoch_s(plan_.duration_ms))) {
                avg = *fallback;
                have = true;
            }
        }
        if (have) result.region_moer_avg_g_per_kwh[region] = avg;
    }
    return result;
}

RunResult Engine::run() {
    init_functions();

    std::vector<std::string> names;
    for (const auto& [name, fr] : functions_) names.push_back(name);
    ArrivalStream stream = build_arrivals(plan_.workload, names, seed_);
    std::uint64_t request_seq = 0;
    for (const auto& arrival : stream) {
        if (arrival.time_ms >= plan_.duration_ms) continue;  // arrivals stop at duration
        if (!functions_.contains(arrival.function_id))
            throw std::invalid_argument("workload references unknown function '" +
                                        arrival.function_id + "'");
        std::string request_id = "r" + std::to_string(++request_seq);
        RequestRecord record;
        record.request_id = request_id;
        record.function = arrival.function_id;
        record.arrival_ms = arrival.time_ms;
        requests_[request_id] = std::move(record);
        request_order_.push_back(request_id);
        push(arrival.time_ms, SimEventKind::RequestArrival, request_id);
    }
    for (const auto& [name, fr] : functions_) {
        if (plan_.autoscaler.evaluate_period_ms <= plan_.duration_ms)
            push(plan_.autoscaler.evaluate_period_ms, SimEventKind::ScaleEvaluate, name,
                 /*periodic=*/true);
    }

    while (!events_.empty()) {
        SimEvent ev = events_.top();
        events_.pop();
        now_ = ev.time_ms;
        if (!snapshot_taken_ && now_ >= plan_.duration_ms) take_end_snapshot();
        switch (ev.kind) {
            case SimEventKind::RequestArrival: on_arrival(ev); break;
            case SimEventKind::DecisionDue: on_decision_due(ev); break;
            case SimEventKind::BindingComplete: on_binding_complete(ev); break;
            case SimEventKind::RequestComplete: on_request_complete(ev); break;
            case SimEventKind::ScaleEvaluate: on_scale_evaluate(ev); break;
            case SimEventKind::IdleCheck: on_idle_check(ev); break;
        }
    }
    if (!snapshot_taken_) take_end_snapshot();

    // Close out pods that never found a node.
    for (auto& [name, fr] : functions_) {
        std::vector<std::string> pending;
        for (const auto& id : fr.live)
            if (instances_.at(id).state.phase == Phase::Pending) pending.push_back(id);
        for (const auto& id : pending) {
            auto& inst = instances_.at(id);
            inst.state.phase = Phase::Terminated;
            inst.state.phase_timestamps[Phase::Terminated] = now_;
            fr.live.erase(id);
            log(now_, "pod_terminated", id, "reason=unschedulable");
        }
    }

    return build_result();
}

}  // namespace

RunResult run_simulation(const RunPlan& plan, std::uint64_t seed) {
    Engine engine(plan, seed);
    return engine.run();
}

}  // namespace greensched
