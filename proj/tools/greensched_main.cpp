#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "greensched/campaign.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

greensched::ExperimentConfig load_and_validate(const std::string& config_path,
                                               const greensched::CampaignOverrides& overrides) {
    auto config = greensched::load_experiment_config(config_path);
    greensched::apply_overrides(config, overrides);
    auto violations = greensched::validate_experiment_config(config);
    if (!violations.empty()) {
        std::cerr << "config validation failed:\n";
        for (const auto& v : violations) std::cerr << "  - " << v << "\n";
        throw greensched::ConfigError("invalid config");
    }
    return config;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const greensched::CampaignOverrides& overrides) {
    auto config = load_and_validate(config_path, overrides);
    auto runs = greensched::run_campaign(config, out_dir);
    std::cout << "wrote " << runs.size() << " runs to " << out_dir << "\n";
    for (const auto& run : runs) {
        std::cout << "  " << greensched::strategy_name(run.strategy) << " repeat " << run.repeat
                  << " seed " << run.seed;
        if (run.summary.sci_ug_per_invocation)
            std::cout << "  sci=" << *run.summary.sci_ug_per_invocation << " ug/invocation";
        if (run.summary.response_time_ms)
            std::cout << "  mean_rt=" << run.summary.response_time_ms->mean << " ms";
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_compare(const std::string& campaign_dir) {
    auto report = greensched::compare_campaign(campaign_dir);
    std::cout << greensched::comparison_report_to_json(report).dump(2) << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    auto config = greensched::load_experiment_config(config_path);
    auto violations = greensched::validate_experiment_config(config);
    if (violations.empty()) {
        std::cout << "config ok\n";
        return kExitOk;
    }
    for (const auto& v : violations) std::cout << "violation: " << v << "\n";
    return kExitValidation;
}

int cmd_serve(const std::string& config_path, const std::string& listen_override) {
    auto config = greensched::load_experiment_config(config_path);
    auto violations = greensched::validate_experiment_config(config);
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
        return kExitValidation;
    }
    auto [host, port] = greensched::parse_listen_address(
        listen_override.empty() ? config.serve_listen : listen_override);
    greensched::MetricsHttpServer server(greensched::make_score_service(config));
    if (!server.bind(host, port)) {
        std::cerr << "cannot bind " << host << ":" << port << "\n";
        return kExitRuntime;
    }
    server.start();
    std::cout << "metrics service listening on " << host << ":" << server.port() << "\n";
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop.load() && server.running())
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carbon-aware serverless scheduling simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "campaign";
    std::string campaign_dir;
    std::string listen;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int repeats_override = 0;
    bool repeats_set = false;
    std::vector<std::string> strategy_names;

    auto* run = app.add_subcommand("run", "execute a strategy-comparison campaign");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed_override, "override base_seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--repeats", repeats_override, "override repeats")
        ->each([&](const std::string&) { repeats_set = true; });
    run->add_option("--strategies", strategy_names,
                    "override strategies (carbon_aware|geo_aware|default_spread)")
        ->delimiter(',');

    auto* compare = app.add_subcommand("compare", "compare strategies from a finished campaign");
    compare->add_option("dir", campaign_dir, "campaign directory")->required();

    auto* validate = app.add_subcommand("validate", "validate an experiment config");
    validate->add_option("--config", config_path, "experiment config file")->required();

    auto* serve = app.add_subcommand("serve", "run the carbon metrics service");
    serve->add_option("--config", config_path, "experiment config file")->required();
    serve->add_option("--listen", listen, "listen address host:port");

    auto* gen = app.add_subcommand("gen-trace", "generate workload or carbon trace files");
    std::string kind;
    std::string out_path;
    std::string function_id = "fn";
    double rate = 60.0;
    int minutes = 10;
    int start_minute = 0;
    std::vector<std::string> region_specs;
    double start_epoch = 0.0, end_epoch = 3600.0, step = 300.0, period = 86400.0;
    gen->add_option("--kind", kind, "workload-constant | carbon-constant | carbon-sinusoid")
        ->required();
    gen->add_option("--out", out_path, "output file")->required();
    gen->add_option("--function", function_id, "workload function id");
    gen->add_option("--rate", rate, "workload arrivals per minute");
    gen->add_option("--minutes", minutes, "workload window length in minutes");
    gen->add_option("--start-minute", start_minute, "workload window start minute");
    gen->add_option("--region", region_specs,
                    "carbon region spec id=base or id=base:amplitude (repeatable)");
    gen->add_option("--start-epoch", start_epoch, "carbon trace start, epoch seconds");
    gen->add_option("--end-epoch", end_epoch, "carbon trace end, epoch seconds");
    gen->add_option("--step", step, "carbon trace sample period, seconds");
    gen->add_option("--period", period, "sinusoid period, seconds");

    CLI11_PARSE(app, argc, argv);

    greensched::CampaignOverrides overrides;
    if (seed_set) overrides.base_seed = seed_override;
    if (repeats_set) overrides.repeats = repeats_override;
    for (const auto& name : strategy_names) {
        auto key = greensched::parse_strategy(name);
        if (!key) {
            std::cerr << "unknown strategy '" << name << "'\n";
            return kExitValidation;
        }
        overrides.strategies.push_back(*key);
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, overrides);
        if (compare->parsed()) return cmd_compare(campaign_dir);
        if (validate->parsed()) return cmd_validate(config_path);
        if (serve->parsed()) return cmd_serve(config_path, listen);
        if (gen->parsed()) {
            if (kind == "workload-constant") {
                greensched::write_constant_workload_trace(out_path, function_id, rate,
                                                          start_minute, minutes);
            } else if (kind == "carbon-constant" || kind == "carbon-sinusoid") {
                greensched::CarbonTraceSpec spec;
                spec.start_epoch_s = start_epoch;
                spec.end_epoch_s = end_epoch;
                spec.step_s = step;
                for (const auto& rs : region_specs) {
                    auto eq = rs.find('=');
                    if (eq == std::string::npos)
                        throw greensched::ConfigError("bad region spec '" + rs + "'");
                    greensched::SyntheticSignal sig;
                    std::string params = rs.substr(eq + 1);
                    auto colon = params.find(':');
                    sig.base = std::stod(params.substr(0, colon));
                    if (kind == "carbon-sinusoid") {
                        sig.kind = greensched::SyntheticSignal::Kind::Sinusoid;
                        sig.amplitude = colon == std::string::npos
                                            ? 0.0
                                            : std::stod(params.substr(colon + 1));
                        sig.period_s = period;
                    }
                    if (sig.base < 0.0)
                        throw greensched::ConfigError("negative base intensity in '" + rs + "'");
                    spec.signals[rs.substr(0, eq)] = sig;
                }
                greensched::write_carbon_trace(out_path, spec);
            } else {
                std::cerr << "unknown gen-trace kind '" << kind << "'\n";
                return kExitValidation;
            }
            std::cout << "wrote " << out_path << "\n";
            return kExitOk;
        }
    } catch (const greensched::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
