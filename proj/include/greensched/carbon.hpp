#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace greensched {

enum class MoerUnit { LbsPerMWh, GPerKWh };

const char* moer_unit_name(MoerUnit u);
std::optional<MoerUnit> parse_moer_unit(const std::string& token);

// 1 lb = 453.59237 g and 1 MWh = 1000 kWh.
inline constexpr double kLbsPerMwhToGPerKwh = 0.45359237;

struct MoerSample {
    std::string region_id;
    double point_time_s = 0.0;  // epoch seconds
    double value = 0.0;         // >= 0
    MoerUnit unit = MoerUnit::GPerKWh;
};

MoerSample convert_to_g_per_kwh(const MoerSample& sample);

struct ScoreEntry {
    double raw_g_per_kwh = 0.0;
    double score = 0.0;  // in [0, 100]; lowest intensity maps to 100
};

struct ScoreTable {
    double computed_at_s = 0.0;
    std::map<std::string, ScoreEntry> entries;
};

// Min-max normalization inverted so the cleanest region scores 100. All raw
// values equal (including a singleton) maps every region to 100; downstream
// argmax then falls through to the scheduler tie-break.
ScoreTable normalize_scores(const std::map<std::string, double>& raw_g_per_kwh);

enum class FetchErrorKind { Unreachable, HttpStatus, MalformedBody, UnknownUnits, UnknownRegion, NoData };

class FetchError : public std::runtime_error {
public:
    FetchError(FetchErrorKind kind, std::string region, const std::string& message)
        : std::runtime_error(message), kind_(kind), region_(std::move(region)) {}
    FetchErrorKind kind() const { return kind_; }
    const std::string& region() const { return region_; }

private:
    FetchErrorKind kind_;
    std::string region_;
};

// Thrown when a full score table cannot be assembled; carries every region
// whose fetch failed so callers can report all of them.
class ScoreTableError : public std::runtime_error {
public:
    explicit ScoreTableError(std::vector<std::string> failed_regions);
    const std::vector<std::string>& failed_regions() const { return failed_regions_; }

private:
    std::vector<std::string> failed_regions_;
};

class CarbonProvider {
public:
    virtual ~CarbonProvider() = default;
    // Raw sample in the provider's native unit; throws FetchError.
    virtual MoerSample fetch(const std::string& region_id, double now_epoch_s) = 0;
    // Exact time average in g/kWh over [t0, t1]; throws FetchError(NoData) when
    // the provider cannot answer (e.g. live HTTP feeds).
    virtual double time_average_g_per_kwh(const std::string& region_id, double t0_epoch_s,
                                          double t1_epoch_s) const = 0;
    virtual std::string source_tag() const = 0;
};

// CSV-backed provider with step interpolation: a value holds until the next
// sample, matching the 5-minute granularity of real feeds.
class TraceCarbonProvider : public CarbonProvider {
public:
    static std::shared_ptr<TraceCarbonProvider> load(const std::filesystem::path& csv_path);

    MoerSample fetch(const std::string& region_id, double now_epoch_s) override;
    double time_average_g_per_kwh(const std::string& region_id, double t0_epoch_s,
                                  double t1_epoch_s) const override;
    std::string source_tag() const override { return "trace"; }

    // Coverage check: every region must have data at or before window_start.
    std::vector<std::string> validate_coverage(const std::vector<std::string>& regions,
                                               double window_start_epoch_s) const;

private:
    struct Point {
        double time_s;
        double g_per_kwh;
    };
    std::map<std::string, std::vector<Point>> series_;
};

struct SyntheticSignal {
    enum class Kind { Constant, Sinusoid };
    Kind kind = Kind::Constant;
    double base = 0.0;
    double amplitude = 0.0;
    double period_s = 86400.0;

    // base + amplitude * sin(2*pi*t/period), clamped at 0.
    double value_at(double t_epoch_s) const;
};

class SyntheticCarbonProvider : public CarbonProvider {
public:
    explicit SyntheticCarbonProvider(std::map<std::string, SyntheticSignal> signals)
        : signals_(std::move(signals)) {}

    MoerSample fetch(const std::string& region_id, double now_epoch_s) override;
    double time_average_g_per_kwh(const std::string& region_id, double t0_epoch_s,
                                  double t1_epoch_s) const override;
    std::string source_tag() const override { return "synthetic"; }

private:
    const SyntheticSignal& signal_for(const std::string& region_id) const;
    std::map<std::string, SyntheticSignal> signals_;
};

enum class WireFormat { WattTimeLike, CarbonSdkLike };

// Body parsers for the two supported wire formats, exposed for tests.
// watttime-like: {"point_time": <epoch_s>, "value": <n>, "units": "lbs_co2_per_mwh", "region": "<id>"}
// carbonsdk-like: {"time": <epoch_s>, "rating": <g/kWh>, "location": "<id>"}
MoerSample parse_watttime_body(const std::string& body);
MoerSample parse_carbonsdk_body(const std::string& body);

class HttpCarbonProvider : public CarbonProvider {
public:
    HttpCarbonProvider(std::string endpoint_url, WireFormat format, std::string bearer_token = "");

    MoerSample fetch(const std::string& region_id, double now_epoch_s) override;
    double time_average_g_per_kwh(const std::string& region_id, double t0_epoch_s,
                                  double t1_epoch_s) const override;
    std::string source_tag() const override { return "http"; }

private:
    std::string host_;
    std::string base_path_;
    WireFormat format_;
    std::string token_;
};

// TTL cache over a provider. Samples are unit-converted at this boundary so
// every consumer sees g/kWh. A sample stays fresh while its age is <= ttl, so
// any closed ttl-long window holds at most one fetch per region.
class CachedCarbonSource {
public:
    explicit CachedCarbonSource(std::shared_ptr<CarbonProvider> provider, double ttl_s = 300.0);

    MoerSample fetch_cached(const std::string& region_id, double now_epoch_s);

    // The one shared scoring path: fetch_cached for every region, then
    // normalize. All-or-nothing; throws ScoreTableError naming every failed
    // region so a partial table can never silently re-scale scores.
    ScoreTable scores(const std::vector<std::string>& regions, double now_epoch_s);

    std::size_t fetch_count(const std::string& region_id) const;
    double ttl_s() const { return ttl_s_; }
    std::string source_tag() const { return provider_->source_tag(); }
    CarbonProvider& provider() { return *provider_; }

    // Step-wise time average over the samples this cache actually fetched;
    // fallback intensity estimate for providers without exact averages.
    std::optional<double> history_time_average(const std::string& region_id, double t0_epoch_s,
                                               double t1_epoch_s) const;

private:
    struct Entry {
        std::mutex fetch_mutex;
        bool valid = false;
        double fetched_at_s = 0.0;
        MoerSample sample;
        std::size_t fetches = 0;
        std::vector<std::pair<double, double>> history;  // (fetch time, g/kWh)
    };

    Entry& entry_for(const std::string& region_id);

    std::shared_ptr<CarbonProvider> provider_;
    double ttl_s_;
    mutable std::mutex map_mutex_;
    std::map<std::string, std::unique_ptr<Entry>> entries_;
};

}  // namespace greensched
