#include "greensched/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "greensched/util.hpp"

namespace greensched {

using nlohmann::json;

void apply_overrides(ExperimentConfig& config, const CampaignOverrides& overrides) {
    if (overrides.base_seed) config.base_seed = *overrides.base_seed;
    if (overrides.repeats) config.repeats = *overrides.repeats;
    if (!overrides.strategies.empty()) config.strategies = overrides.strategies;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
}

std::string csv_field(double v) { return format_double(v); }

}  // namespace

std::string requests_to_csv(const std::vector<RequestRecord>& requests) {
    std::string csv =
        "request_id,function,arrival_ms,start_service_ms,completion_ms,instance_id,node_id,"
        "region_id,response_time_ms\n";
    for (const auto& r : requests) {
        csv += r.request_id + ',' + r.function + ',' + csv_field(r.arrival_ms) + ',' +
               csv_field(r.start_service_ms) + ',' + csv_field(r.completion_ms) + ',' +
               r.instance_id + ',' + r.node_id + ',' + r.region_id + ',' +
               csv_field(r.response_time_ms) + '\n';
    }
    return csv;
}

std::vector<CampaignRun> run_campaign(const ExperimentConfig& config,
                                      const std::filesystem::path& out_dir) {
    auto violations = validate_experiment_config(config);
    if (!violations.empty())
        throw ConfigError("config validation failed:\n  " + join(violations, "\n  "));
    std::filesystem::create_directories(out_dir);

    std::vector<CampaignRun> runs;
    std::string summaries_csv =
        "strategy,repeat,seed,arrivals,total_requests,mean_response_ms,median_response_ms,"
        "p95_response_ms,weighted_moer_g_per_kwh,sci_g_per_invocation,sci_ug_per_invocation,"
        "scheduling_mean_ms,scheduling_median_ms,scheduling_min_ms,scheduling_max_ms,"
        "binding_mean_ms,energy_kwh_per_day,functional_units_per_day,weighting_mode\n";

    for (std::size_t si = 0; si < config.strategies.size(); ++si) {
        const StrategyKey strategy = config.strategies[si];
        for (int ri = 0; ri < config.repeats; ++ri) {
            const std::uint64_t seed =
                run_seed(config.base_seed, static_cast<int>(si), ri, config.repeats);
            RunPlan plan = make_run_plan(config, strategy);
            RunResult result = run_simulation(plan, seed);
            RunSummary summary =
                summarize_run(result, config.topology, config.energy, config.weighting_mode);

            const std::string tag =
                std::string(strategy_name(strategy)) + "_r" + std::to_string(ri);
            write_file(out_dir / ("events_" + tag + ".csv"), result.event_log_csv);
            write_file(out_dir / ("requests_" + tag + ".csv"), requests_to_csv(result.requests));
            write_file(out_dir / ("summary_" + tag + ".json"),
                       run_summary_to_json(summary).dump(2) + "\n");

            auto opt = [](const std::optional<double>& v) {
                return v ? format_double(*v) : std::string("");
            };
            const auto& resp = summary.response_time_ms;
            const auto& sched = summary.scheduling_latency_ms;
            const auto& bind = summary.binding_latency_ms;
            summaries_csv += std::string(strategy_name(strategy)) + ',' + std::to_string(ri) +
                             ',' + std::to_string(seed) + ',' + std::to_string(summary.arrivals) +
                             ',' + std::to_string(summary.total_requests) + ',' +
                             (resp ? csv_field(resp->mean) : "") + ',' +
                             (resp ? csv_field(resp->median) : "") + ',' +
                             (resp ? csv_field(resp->p95) : "") + ',' +
                             opt(summary.weighted_moer_g_per_kwh) + ',' +
                             opt(summary.sci_g_per_invocation) + ',' +
                             opt(summary.sci_ug_per_invocation) + ',' +
                             (sched ? csv_field(sched->mean) : "") + ',' +
                             (sched ? csv_field(sched->median) : "") + ',' +
                             (sched ? csv_field(sched->min) : "") + ',' +
                             (sched ? csv_field(sched->max) : "") + ',' +
                             (bind ? csv_field(bind->mean) : "") + ',' +
                             csv_field(summary.energy_kwh_per_day) + ',' +
                             std::to_string(summary.functional_units_per_day) + ',' +
                             weighting_mode_name(summary.weighting_mode) + '\n';

            runs.push_back(CampaignRun{strategy, ri, seed, std::move(summary)});
        }
    }
    write_file(out_dir / "summaries.csv", summaries_csv);
    return runs;
}

ComparisonReport compare_campaign(const std::filesystem::path& campaign_dir) {
    std::map<std::string, std::map<int, RunSummary>> by_strategy;  // strategy -> repeat -> summary
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(campaign_dir))
        throw ConfigError("campaign directory " + campaign_dir.string() + " does not exist");
    for (const auto& entry : std::filesystem::directory_iterator(campaign_dir)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("summary_") && name.ends_with(".json")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        std::ifstream in(file);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ConfigError("summary file " + file.string() + " is not JSON");
        RunSummary summary = run_summary_from_json(j);
        // repeat index from "summary_<strategy>_r<k>.json"
        auto stem = file.stem().string();
        auto pos = stem.rfind("_r");
        int repeat = pos == std::string::npos ? 0 : std::stoi(stem.substr(pos + 2));
        by_strategy[summary.strategy][repeat] = std::move(summary);
    }
    if (by_strategy.size() < 2)
        throw ConfigError("compare needs summaries from at least 2 strategies; found " +
                          std::to_string(by_strategy.size()));

    ComparisonReport report;
    for (const auto& [name, repeats] : by_strategy) {
        StrategyAggregate agg;
        agg.strategy = name;
        agg.repeats = static_cast<int>(repeats.size());
        double n = static_cast<double>(repeats.size());
        for (const auto& [ri, s] : repeats) {
            if (s.sci_ug_per_invocation) agg.mean_sci_ug += *s.sci_ug_per_invocation / n;
            if (s.response_time_ms) agg.mean_response_ms += s.response_time_ms->mean / n;
            if (s.weighted_moer_g_per_kwh) agg.mean_weighted_moer += *s.weighted_moer_g_per_kwh / n;
            if (s.scheduling_latency_ms) agg.mean_scheduling_ms += s.scheduling_latency_ms->mean / n;
            if (s.binding_latency_ms) agg.mean_binding_ms += s.binding_latency_ms->mean / n;
        }
        report.strategies.push_back(agg);
    }

    for (const auto& [a, runs_a] : by_strategy) {
        double reduction_sum = 0.0;
        int reduction_pairs = 0;
        for (const auto& [b, runs_b] : by_strategy) {
            if (a == b) continue;
            PairwiseDelta delta;
            delta.a = a;
            delta.b = b;
            double reduction_acc = 0.0;
            double log_ratio_acc = 0.0;
            int n = 0;
            for (const auto& [ri, sa] : runs_a) {
                auto it = runs_b.find(ri);
                if (it == runs_b.end()) continue;
                const RunSummary& sb = it->second;
                if (!sa.sci_g_per_invocation || !sb.sci_g_per_invocation ||
                    !sa.response_time_ms || !sb.response_time_ms)
                    throw ConfigError("summary for strategy '" + a + "' or '" + b + "' repeat " +
                                      std::to_string(ri) + " lacks SCI or response statistics");
                reduction_acc += (*sb.sci_g_per_invocation - *sa.sci_g_per_invocation) /
                                 *sb.sci_g_per_invocation * 100.0;
                log_ratio_acc += std::log(sa.response_time_ms->mean / sb.response_time_ms->mean);
                n += 1;
            }
            if (n == 0)
                throw ConfigError("strategies '" + a + "' and '" + b + "' share no repeat index");
            delta.emission_reduction_pct = reduction_acc / n;
            delta.response_gm_slowdown_pct = (std::exp(log_ratio_acc / n) - 1.0) * 100.0;
            report.pairs.push_back(delta);
            reduction_sum += delta.emission_reduction_pct;
            reduction_pairs += 1;
        }
        if (reduction_pairs > 0)
            report.mean_emission_reduction_vs_others[a] = reduction_sum / reduction_pairs;
    }
    std::sort(report.pairs.begin(), report.pairs.end(), [](const auto& x, const auto& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });

    json report_json = comparison_report_to_json(report);
    write_file(campaign_dir / "report.json", report_json.dump(2) + "\n");

    std::string csv = "a,b,emission_reduction_pct,response_gm_slowdown_pct\n";
    for (const auto& p : report.pairs)
        csv += p.a + ',' + p.b + ',' + format_double(p.emission_reduction_pct) + ',' +
               format_double(p.response_gm_slowdown_pct) + '\n';
    write_file(campaign_dir / "report.csv", csv);

    return report;
}

json comparison_report_to_json(const ComparisonReport& report) {
    json j;
    j["strategies"] = json::array();
    for (const auto& s : report.strategies)
        j["strategies"].push_back(json{{"strategy", s.strategy},
                                       {"repeats", s.repeats},
                                       {"mean_sci_ug_per_invocation", s.mean_sci_ug},
                                       {"mean_response_ms", s.mean_response_ms},
                                       {"mean_weighted_moer_g_per_kwh", s.mean_weighted_moer},
                                       {"mean_scheduling_ms", s.mean_scheduling_ms},
                                       {"mean_binding_ms", s.mean_binding_ms}});
    j["pairs"] = json::array();
    for (const auto& p : report.pairs)
        j["pairs"].push_back(json{{"a", p.a},
                                  {"b", p.b},
                                  {"emission_reduction_pct", p.emission_reduction_pct},
                                  {"response_gm_slowdown_pct", p.response_gm_slowdown_pct}});
    j["mean_emission_reduction_vs_others"] = report.mean_emission_reduction_vs_others;
    return j;
}

void write_constant_workload_trace(const std::filesystem::path& out, const std::string& function_id,
                                   double rate_per_min, int start_minute, int minutes) {
    if (rate_per_min < 0.0) throw ConfigError("gen-trace: rate must be >= 0");
    if (start_minute < 0 || minutes < 0 || start_minute + minutes > kMinutesPerDay)
        throw ConfigError("gen-trace: window must fit within [0, 1440)");
    if (function_id.empty() || function_id.find(',') != std::string::npos)
        throw ConfigError("gen-trace: invalid function id");
    std::string row = function_id;
    for (int m = 0; m < kMinutesPerDay; ++m) {
        const bool in_window = m >= start_minute && m < start_minute + minutes;
        row += ',' + std::to_string(in_window ? static_cast<std::int64_t>(std::llround(rate_per_min))
                                              : 0);
    }
    write_file(out, row + '\n');
}

void write_carbon_trace(const std::filesystem::path& out, const CarbonTraceSpec& spec) {
    if (spec.signals.empty()) throw ConfigError("gen-trace: at least one region signal required");
    if (!(spec.step_s > 0.0)) throw ConfigError("gen-trace: step_s must be > 0");
    if (!(spec.end_epoch_s >= spec.start_epoch_s))
        throw ConfigError("gen-trace: end must be >= start");
    std::string csv = "region,point_time_epoch_s,value,unit\n";
    for (const auto& [region, signal] : spec.signals) {
        for (double t = spec.start_epoch_s; t <= spec.end_epoch_s; t += spec.step_s)
            csv += region + ',' + format_double(t) + ',' + format_double(signal.value_at(t)) +
                   ",g_per_kwh\n";
    }
    write_file(out, csv);
}

ScoreService make_score_service(const ExperimentConfig& config) {
    auto provider = make_carbon_provider(config.carbon);
    auto source = std::make_shared<CachedCarbonSource>(provider, config.carbon_ttl_s);
    std::vector<std::string> regions;
    for (const auto& r : config.topology.provider_regions) regions.push_back(r.id);
    return ScoreService(std::move(source), std::move(regions));
}

std::pair<std::string, int> parse_listen_address(const std::string& listen) {
    auto pos = listen.rfind(':');
    if (pos == std::string::npos) return {listen, 8080};
    try {
        return {listen.substr(0, pos), std::stoi(listen.substr(pos + 1))};
    } catch (const std::exception&) {
        throw ConfigError("invalid listen address '" + listen + "'");
    }
}

}  // namespace greensched
