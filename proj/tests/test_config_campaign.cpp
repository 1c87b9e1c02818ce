#include <doctest.h>

#include <fstream>

#include "greensched/campaign.hpp"
#include "test_fixtures.hpp"

using namespace greensched;
using nlohmann::json;

namespace {

json minimal_config_json() {
    return json::parse(R"({
      "topology": {
        "management_region": {"id": "mgmt", "latitude": 50.0, "longitude": 8.0},
        "provider_regions": [
          {"id": "a", "latitude": 50.0, "longitude": 9.0},
          {"id": "b", "latitude": 50.0, "longitude": 12.0}
        ],
        "nodes": [
          {"id": "a-n1", "region": "a", "cpu_millicores": 4000, "memory_mib": 16384},
          {"id": "b-n1", "region": "b", "cpu_millicores": 4000, "memory_mib": 16384}
        ],
        "rtt_ms": [
          {"a": "mgmt", "b": "a", "ms": 10.0},
          {"a": "mgmt", "b": "b", "ms": 20.0}
        ]
      },
      "functions": [
        {"name": "fn", "cpu_millicores": 500, "memory_mib": 512,
         "service_time": {"kind": "constant", "value_ms": 100},
         "container_concurrency": 1, "scheduler_name": "carbon_aware"}
      ],
      "workload": {"kind": "synthetic_constant", "rate_per_min": 60, "window_minutes": 1},
      "carbon": {
        "provider": {"kind": "synthetic", "signals": {
          "a": {"kind": "constant", "base": 100},
          "b": {"kind": "constant", "base": 300}
        }},
        "ttl_s": 300
      },
      "strategies": ["carbon_aware", "default_spread"],
      "duration_ms": 60000,
      "repeats": 1,
      "base_seed": 5
    })");
}

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing fills defaults and resolves values") {
    auto config = parse_experiment_config(minimal_config_json(), ".");
    CHECK(config.topology.nodes.size() == 2);
    CHECK(config.topology.nodes[0].annotations.at("region") == "a");
    CHECK(config.functions.size() == 1);
    CHECK(config.strategies.size() == 2);
    CHECK(config.carbon_ttl_s == 300.0);
    CHECK(config.repeats == 1);
    CHECK(config.base_seed == 5);
    CHECK(config.weighting_mode == WeightingMode::EndCounts);
    CHECK(config.latency.scheduling.at(StrategyKey::CarbonAware).p0 == 539.0);
    CHECK(config.latency.scheduling.at(StrategyKey::DefaultSpread).p0 == 515.0);
    CHECK(config.latency.binding_remote.p0 == 8280.0);
    CHECK(validate_experiment_config(config).empty());
}

TEST_CASE("config errors are typed and descriptive") {
    auto j = minimal_config_json();
    SUBCASE("missing section") {
        j.erase("topology");
        CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
    }
    SUBCASE("unknown strategy") {
        j["strategies"] = {"warp_speed"};
        CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
    }
    SUBCASE("unknown distribution kind") {
        j["functions"][0]["service_time"] = {{"kind", "zipf"}};
        CHECK_THROWS_AS(parse_experiment_config(j, "."), ConfigError);
    }
    SUBCASE("missing trace file is a validation finding, not a parse error") {
        j["workload"] = {{"kind", "trace"}, {"path", "/nonexistent/w.csv"}};
        auto config = parse_experiment_config(j, ".");
        auto violations = validate_experiment_config(config);
        REQUIRE(!violations.empty());
        CHECK(violations[0].find("does not exist") != std::string::npos);
    }
    SUBCASE("synthetic provider must cover every region") {
        j["carbon"]["provider"]["signals"].erase("b");
        auto config = parse_experiment_config(j, ".");
        auto violations = validate_experiment_config(config);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].find("'b'") != std::string::npos);
    }
}

TEST_CASE("seed schedule is a pure function of indices") {
    CHECK(run_seed(100, 0, 0, 5) == 100);
    CHECK(run_seed(100, 0, 4, 5) == 104);
    CHECK(run_seed(100, 1, 0, 5) == 105);
    CHECK(run_seed(100, 2, 3, 5) == 113);
}

TEST_CASE("distribution json round trip") {
    auto c = distribution_from_json(distribution_to_json(Distribution::constant(539.0)));
    CHECK(c.kind == DistKind::Constant);
    CHECK(c.p0 == 539.0);
    auto l = distribution_from_json(distribution_to_json(Distribution::lognormal(6.0, 0.25)));
    CHECK(l.kind == DistKind::Lognormal);
    CHECK(l.p1 == 0.25);
    auto shorthand = distribution_from_json(json(250.0));
    CHECK(shorthand.kind == DistKind::Constant);
    CHECK(shorthand.p0 == 250.0);
}

TEST_CASE("run summary json round trip") {
    RunSummary summary;
    summary.strategy = "carbon_aware";
    summary.seed = 7;
    summary.arrivals = 10;
    summary.total_requests = 10;
    summary.response_time_ms = ResponseStats{120.0, 110.0, 200.0, 10};
    summary.scheduling_latency_ms = LatencyStats{539.0, 539.0, 539.0, 539.0, 3};
    summary.region_weights = {{"a", 2.0}};
    summary.weighted_moer_g_per_kwh = 100.0;
    summary.energy_kwh_per_day = 63.456;
    summary.functional_units_per_day = 720000;
    summary.sci_g_per_invocation = 0.00881;
    summary.sci_ug_per_invocation = 8810.0;
    auto restored = run_summary_from_json(run_summary_to_json(summary));
    CHECK(restored.strategy == summary.strategy);
    CHECK(restored.seed == summary.seed);
    CHECK(restored.response_time_ms->mean == 120.0);
    CHECK(restored.scheduling_latency_ms->max == 539.0);
    CHECK(restored.region_weights.at("a") == 2.0);
    CHECK(*restored.sci_ug_per_invocation == 8810.0);
    CHECK(!restored.binding_latency_ms.has_value());
}

TEST_CASE("campaign writes one artifact set per run and compare is idempotent") {
    auto dir = temp_dir("gs_campaign");
    auto config = parse_experiment_config(minimal_config_json(), ".");
    auto runs = run_campaign(config, dir);
    CHECK(runs.size() == 2);  // 2 strategies x 1 repeat
    CHECK(std::filesystem::exists(dir / "events_carbon_aware_r0.csv"));
    CHECK(std::filesystem::exists(dir / "requests_carbon_aware_r0.csv"));
    CHECK(std::filesystem::exists(dir / "summary_carbon_aware_r0.json"));
    CHECK(std::filesystem::exists(dir / "summary_default_spread_r0.json"));
    CHECK(std::filesystem::exists(dir / "summaries.csv"));

    auto report = compare_campaign(dir);
    CHECK(report.strategies.size() == 2);
    CHECK(report.pairs.size() == 2);
    CHECK(std::filesystem::exists(dir / "report.json"));

    auto read_bytes = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    auto first = read_bytes(dir / "report.json");
    compare_campaign(dir);
    CHECK(read_bytes(dir / "report.json") == first);

    std::filesystem::remove_all(dir);
}

TEST_CASE("compare needs at least two strategies") {
    auto dir = temp_dir("gs_campaign_one");
    auto config = parse_experiment_config(minimal_config_json(), ".");
    config.strategies = {StrategyKey::CarbonAware};
    run_campaign(config, dir);
    // One strategy x one repeat leaves exactly one summary file.
    std::size_t summaries = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().filename().string().starts_with("summary_")) summaries += 1;
    CHECK(summaries == 1);
    CHECK_THROWS_AS(compare_campaign(dir), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("comparison arithmetic matches hand-computed deltas") {
    auto dir = temp_dir("gs_campaign_math");
    auto write_summary = [&](const std::string& strategy, int repeat, double sci,
                             double mean_rt) {
        RunSummary s;
        s.strategy = strategy;
        s.seed = repeat;
        s.arrivals = 1;
        s.total_requests = 1;
        s.response_time_ms = ResponseStats{mean_rt, mean_rt, mean_rt, 1};
        s.sci_g_per_invocation = sci;
        s.sci_ug_per_invocation = sci * 1e6;
        s.weighted_moer_g_per_kwh = 100.0;
        std::ofstream out(dir / ("summary_" + strategy + "_r" + std::to_string(repeat) + ".json"));
        out << run_summary_to_json(s).dump(2);
    };
    // sci 75 vs 100 -> 25% reduction; rt ratios {1.1, 1.2} -> GM slowdown 14.89%.
    write_summary("carbon_aware", 0, 75.0, 110.0);
    write_summary("carbon_aware", 1, 75.0, 120.0);
    write_summary("default_spread", 0, 100.0, 100.0);
    write_summary("default_spread", 1, 100.0, 100.0);

    auto report = compare_campaign(dir);
    const PairwiseDelta* carbon_vs_default = nullptr;
    for (const auto& p : report.pairs)
        if (p.a == "carbon_aware" && p.b == "default_spread") carbon_vs_default = &p;
    REQUIRE(carbon_vs_default != nullptr);
    CHECK(carbon_vs_default->emission_reduction_pct == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(carbon_vs_default->response_gm_slowdown_pct ==
          doctest::Approx(14.891252930760569).epsilon(1e-9));
    CHECK(report.mean_emission_reduction_vs_others.at("carbon_aware") ==
          doctest::Approx(25.0));

    // Identical summaries compare to zero deltas.
    auto dir2 = temp_dir("gs_campaign_zero");
    for (const auto& strategy : {"carbon_aware", "geo_aware"}) {
        RunSummary s;
        s.strategy = strategy;
        s.arrivals = 1;
        s.total_requests = 1;
        s.response_time_ms = ResponseStats{100.0, 100.0, 100.0, 1};
        s.sci_g_per_invocation = 50.0;
        s.sci_ug_per_invocation = 5e7;
        std::ofstream out(dir2 / ("summary_" + std::string(strategy) + "_r0.json"));
        out << run_summary_to_json(s).dump(2);
    }
    auto zero = compare_campaign(dir2);
    for (const auto& p : zero.pairs) {
        CHECK(p.emission_reduction_pct == 0.0);
        CHECK(p.response_gm_slowdown_pct == doctest::Approx(0.0));
    }
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("gen-trace emits loadable artifacts") {
    SUBCASE("constant workload row") {
        auto path = std::filesystem::temp_directory_path() / "gs_gen_w.csv";
        write_constant_workload_trace(path, "fnA", 60.0, 0, 10);
        auto rows = load_trace(path);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].function_id == "fnA");
        CHECK(rows[0].per_minute_counts[0] == 60);
        CHECK(rows[0].per_minute_counts[9] == 60);
        CHECK(rows[0].per_minute_counts[10] == 0);
        std::filesystem::remove(path);
    }
    SUBCASE("sinusoid carbon trace, 4 regions, sorted rows") {
        auto path = std::filesystem::temp_directory_path() / "gs_gen_c.csv";
        CarbonTraceSpec spec;
        spec.start_epoch_s = 0.0;
        spec.end_epoch_s = 1200.0;
        spec.step_s = 300.0;
        for (const auto& r : {"a", "b", "c", "d"})
            spec.signals[r] = SyntheticSignal{SyntheticSignal::Kind::Sinusoid, 200.0, 50.0, 86400.0};
        write_carbon_trace(path, spec);
        auto provider = TraceCarbonProvider::load(path);
        CHECK(provider->validate_coverage({"a", "b", "c", "d"}, 0.0).empty());
        std::ifstream in(path);
        std::string line;
        std::size_t lines = 0;
        while (std::getline(in, line)) ++lines;
        CHECK(lines == 1 + 4 * 5);  // header + 4 regions x 5 samples
        std::filesystem::remove(path);
    }
    SUBCASE("negative rate is rejected") {
        CHECK_THROWS_AS(
            write_constant_workload_trace("/tmp/gs_gen_bad.csv", "fn", -1.0, 0, 10),
            ConfigError);
    }
}

TEST_CASE("listen address parsing") {
    auto [host, port] = parse_listen_address("0.0.0.0:9100");
    CHECK(host == "0.0.0.0");
    CHECK(port == 9100);
    CHECK_THROWS_AS(parse_listen_address("host:notaport"), ConfigError);
}

TEST_CASE("overrides replace seed, repeats and strategies") {
    auto config = parse_experiment_config(minimal_config_json(), ".");
    CampaignOverrides overrides;
    overrides.base_seed = 99;
    overrides.repeats = 3;
    overrides.strategies = {StrategyKey::GeoAware};
    apply_overrides(config, overrides);
    CHECK(config.base_seed == 99);
    CHECK(config.repeats == 3);
    REQUIRE(config.strategies.size() == 1);
    CHECK(config.strategies[0] == StrategyKey::GeoAware);
}
