#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "greensched/campaign.hpp"

namespace py = pybind11;
using namespace greensched;

namespace {

py::dict score_table_to_dict(const ScoreTable& table) {
    py::dict out;
    for (const auto& [region, entry] : table.entries) {
        py::dict e;
        e["raw_g_per_kwh"] = entry.raw_g_per_kwh;
        e["score"] = entry.score;
        out[py::str(region)] = e;
    }
    return out;
}

py::dict summary_to_dict(const RunSummary& summary) {
    return py::module_::import("json").attr("loads")(run_summary_to_json(summary).dump());
}

RunSummary run_once(const std::string& config_path, const std::string& strategy,
                    std::uint64_t seed) {
    auto config = load_experiment_config(config_path);
    auto violations = validate_experiment_config(config);
    if (!violations.empty()) throw std::invalid_argument("invalid config: " + violations.front());
    auto key = parse_strategy(strategy);
    if (!key) throw std::invalid_argument("unknown strategy '" + strategy + "'");
    RunPlan plan = make_run_plan(config, *key);
    RunResult result = run_simulation(plan, seed);
    return summarize_run(result, config.topology, config.energy, config.weighting_mode);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "carbon-aware serverless scheduling simulator";

    m.def("convert_lbs_per_mwh_to_g_per_kwh",
          [](double value) { return value * kLbsPerMwhToGPerKwh; }, py::arg("value"));

    m.def(
        "normalize_scores",
        [](const std::map<std::string, double>& raw) {
            return score_table_to_dict(normalize_scores(raw));
        },
        py::arg("raw_g_per_kwh"),
        "Min-max carbon-efficiency scores in [0, 100]; lowest intensity scores 100.");

    m.def(
        "sci",
        [](double energy_kwh_per_day, double intensity_g_per_kwh, double embodied_g,
           double functional_units_per_day) {
            return sci_g_per_unit(EmissionInputs{energy_kwh_per_day, intensity_g_per_kwh,
                                                 embodied_g, functional_units_per_day});
        },
        py::arg("energy_kwh_per_day"), py::arg("intensity_g_per_kwh"), py::arg("embodied_g"),
        py::arg("functional_units_per_day"),
        "Software carbon intensity (E*I + M)/R in grams per functional unit.");

    m.def(
        "weighted_moer",
        [](const std::map<std::string, std::pair<double, double>>& by_region) {
            std::vector<RegionInstanceCount> counts;
            for (const auto& [region, wm] : by_region)
                counts.push_back(RegionInstanceCount{region, wm.first, wm.second});
            return weighted_moer(counts);
        },
        py::arg("by_region"),
        "Instance-weighted mean MOER; input maps region -> (weight, moer_g_per_kwh).");

    m.def("energy_estimate_kwh", &energy_estimate_kwh, py::arg("cores"), py::arg("tdp_w"),
          py::arg("utilization"), py::arg("hours"), py::arg("ram_gib"),
          py::arg("dimensional_ram") = false);

    m.def("functional_units_per_day", &functional_units_per_day, py::arg("mean_response_ms"));

    m.def("haversine_km", &haversine_km, py::arg("lat1"), py::arg("lon1"), py::arg("lat2"),
          py::arg("lon2"));

    m.def(
        "synthetic_constant_arrivals",
        [](double rate_per_min, int window_minutes, std::uint64_t seed,
           const std::string& function_id) {
            auto stream = synthetic_constant(rate_per_min, window_minutes, seed, function_id);
            std::vector<std::pair<double, std::string>> out;
            out.reserve(stream.size());
            for (const auto& a : stream) out.emplace_back(a.time_ms, a.function_id);
            return out;
        },
        py::arg("rate_per_min"), py::arg("window_minutes"), py::arg("seed"),
        py::arg("function_id") = "fn",
        "Seeded Poisson arrival stream as (time_ms, function_id) pairs.");

    m.def(
        "validate_config",
        [](const std::string& path) { return validate_experiment_config(load_experiment_config(path)); },
        py::arg("config_path"), "Returns violation descriptions; empty means valid.");

    m.def(
        "run_experiment",
        [](const std::string& config_path, const std::string& strategy, std::uint64_t seed) {
            return summary_to_dict(run_once(config_path, strategy, seed));
        },
        py::arg("config_path"), py::arg("strategy"), py::arg("seed"),
        "Single simulation run; returns the run summary as a dict.");

    m.def(
        "run_campaign",
        [](const std::string& config_path, const std::string& out_dir) {
            auto config = load_experiment_config(config_path);
            auto runs = run_campaign(config, out_dir);
            py::list out;
            for (const auto& r : runs) out.append(summary_to_dict(r.summary));
            return out;
        },
        py::arg("config_path"), py::arg("out_dir"));

    m.def(
        "compare_campaign",
        [](const std::string& campaign_dir) {
            auto report = compare_campaign(campaign_dir);
            return py::module_::import("json").attr("loads")(
                comparison_report_to_json(report).dump());
        },
        py::arg("campaign_dir"));
}
