#include "greensched/carbon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "greensched/util.hpp"

namespace greensched {

const char* moer_unit_name(MoerUnit u) {
    return u == MoerUnit::LbsPerMWh ? "lbs_per_mwh" : "g_per_kwh";
}

std::optional<MoerUnit> parse_moer_unit(const std::string& token) {
    if (token == "lbs_per_mwh") return MoerUnit::LbsPerMWh;
    if (token == "g_per_kwh") return MoerUnit::GPerKWh;
    return std::nullopt;
}

MoerSample convert_to_g_per_kwh(const MoerSample& sample) {
    MoerSample out = sample;
    if (sample.unit == MoerUnit::LbsPerMWh) {
        out.value = sample.value * kLbsPerMwhToGPerKwh;
        out.unit = MoerUnit::GPerKWh;
    }
    return out;
}

ScoreTable normalize_scores(const std::map<std::string, double>& raw_g_per_kwh) {
    if (raw_g_per_kwh.empty())
        throw std::invalid_argument("normalize_scores: input must be non-empty");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [region, value] : raw_g_per_kwh) {
        if (!std::isfinite(value) || value < 0.0)
            throw std::invalid_argument("normalize_scores: region '" + region +
                                        "' has a negative or non-finite intensity");
        lo = std::min(lo, value);
        hi = std::max(hi, value);
    }
    ScoreTable table;
    for (const auto& [region, value] : raw_g_per_kwh) {
        // Ratio first: keeps the endpoints exactly 100 and 0 and the range
        // closed under floating point.
        double score = hi > lo ? 100.0 * ((hi - value) / (hi - lo)) : 100.0;
        table.entries[region] = ScoreEntry{value, score};
    }
    return table;
}

ScoreTableError::ScoreTableError(std::vector<std::string> failed_regions)
    : std::runtime_error("carbon scores unavailable for: " + join(failed_regions, ", ")),
      failed_regions_(std::move(failed_regions)) {}

// --- trace provider ---------------------------------------------------------

std::shared_ptr<TraceCarbonProvider> TraceCarbonProvider::load(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in)
        throw FetchError(FetchErrorKind::NoData, "", "cannot open carbon trace " + csv_path.string());
    auto provider = std::make_shared<TraceCarbonProvider>();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (line.starts_with("region,")) continue;  // header
        auto fields = split(trim(line), ',');
        if (fields.size() != 4)
            throw FetchError(FetchErrorKind::MalformedBody, "",
                             "carbon trace line " + std::to_string(line_no) + ": expected 4 fields");
        MoerSample s;
        s.region_id = fields[0];
        try {
            s.point_time_s = std::stod(fields[1]);
            s.value = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw FetchError(FetchErrorKind::MalformedBody, fields[0],
                             "carbon trace line " + std::to_string(line_no) + ": bad number");
        }
        auto unit = parse_moer_unit(fields[3]);
        if (!unit)
            throw FetchError(FetchErrorKind::UnknownUnits, fields[0],
                             "carbon trace line " + std::to_string(line_no) + ": unknown unit '" +
                                 fields[3] + "'");
        if (s.value < 0.0)
            throw FetchError(FetchErrorKind::MalformedBody, fields[0],
                             "carbon trace line " + std::to_string(line_no) + ": negative value");
        s.unit = *unit;
        MoerSample g = convert_to_g_per_kwh(s);
        auto& series = provider->series_[g.region_id];
        if (!series.empty() && g.point_time_s < series.back().time_s)
            throw FetchError(FetchErrorKind::MalformedBody, g.region_id,
                             "carbon trace line " + std::to_string(line_no) +
                                 ": rows must be sorted by time within region");
        series.push_back({g.point_time_s, g.value});
    }
    if (provider->series_.empty())
        throw FetchError(FetchErrorKind::NoData, "", "carbon trace " + csv_path.string() + " is empty");
    return provider;
}

MoerSample TraceCarbonProvider::fetch(const std::string& region_id, double now_epoch_s) {
    auto it = series_.find(region_id);
    if (it == series_.end())
        throw FetchError(FetchErrorKind::UnknownRegion, region_id,
                         "carbon trace has no region '" + region_id + "'");
    const auto& pts = it->second;
    // Last point at or before now; the value holds until the next sample.
    auto upper = std::upper_bound(pts.begin(), pts.end(), now_epoch_s,
                                  [](double t, const Point& p) { return t < p.time_s; });
    if (upper == pts.begin())
        throw FetchError(FetchErrorKind::NoData, region_id,
                         "carbon trace for '" + region_id + "' starts after the requested time");
    const Point& p = *(upper - 1);
    return MoerSample{region_id, p.time_s, p.g_per_kwh, MoerUnit::GPerKWh};
}

double TraceCarbonProvider::time_average_g_per_kwh(const std::string& region_id, double t0_epoch_s,
                                                   double t1_epoch_s) const {
    auto it = series_.find(region_id);
    if (it == series_.end())
        throw FetchError(FetchErrorKind::UnknownRegion, region_id,
                         "carbon trace has no region '" + region_id + "'");
    const auto& pts = it->second;
    if (pts.empty() || pts.front().time_s > t0_epoch_s)
        throw FetchError(FetchErrorKind::NoData, region_id,
                         "carbon trace for '" + region_id + "' does not cover the window start");
    if (t1_epoch_s < t0_epoch_s) std::swap(t0_epoch_s, t1_epoch_s);
    if (t1_epoch_s == t0_epoch_s) {
        auto self = const_cast<TraceCarbonProvider*>(this);
        return self->fetch(region_id, t0_epoch_s).value;
    }
    // Integrate the step function over [t0, t1].
    double integral = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double seg_start = pts[i].time_s;
        double seg_end = (i + 1 < pts.size()) ? pts[i + 1].time_s : t1_epoch_s;
        double lo = std::max(seg_start, t0_epoch_s);
        double hi = std::min(seg_end, t1_epoch_s);
        if (hi > lo) integral += pts[i].g_per_kwh * (hi - lo);
    }
    return integral / (t1_epoch_s - t0_epoch_s);
}

std::vector<std::string> TraceCarbonProvider::validate_coverage(
    const std::vector<std::string>& regions, double window_start_epoch_s) const {
    std::vector<std::string> problems;
    for (const auto& r : regions) {
        auto it = series_.find(r);
        if (it == series_.end())
            problems.push_back("carbon trace has no rows for region '" + r + "'");
        else if (it->second.front().time_s > window_start_epoch_s)
            problems.push_back("carbon trace for region '" + r +
                               "' starts after the simulation window");
    }
    return problems;
}

// --- synthetic provider ------------------------------------------------------

double SyntheticSignal::value_at(double t_epoch_s) const {
    double v = base;
    if (kind == Kind::Sinusoid)
        v = base + amplitude * std::sin(2.0 * std::numbers::pi * t_epoch_s / period_s);
    return std::max(0.0, v);
}

const SyntheticSignal& SyntheticCarbonProvider::signal_for(const std::string& region_id) const {
    auto it = signals_.find(region_id);
    if (it == signals_.end())
        throw FetchError(FetchErrorKind::UnknownRegion, region_id,
                         "no synthetic carbon signal configured for region '" + region_id + "'");
    return it->second;
}

MoerSample SyntheticCarbonProvider::fetch(const std::string& region_id, double now_epoch_s) {
    const auto& sig = signal_for(region_id);
    return MoerSample{region_id, now_epoch_s, sig.value_at(now_epoch_s), MoerUnit::GPerKWh};
}

double SyntheticCarbonProvider::time_average_g_per_kwh(const std::string& region_id,
                                                       double t0_epoch_s, double t1_epoch_s) const {
    const auto& sig = signal_for(region_id);
    if (t1_epoch_s < t0_epoch_s) std::swap(t0_epoch_s, t1_epoch_s);
    if (sig.kind == SyntheticSignal::Kind::Constant || t1_epoch_s == t0_epoch_s)
        return sig.value_at(t0_epoch_s);
    // Composite Simpson; fixed panel count keeps the result deterministic.
    constexpr int kPanels = 20000;
    const double h = (t1_epoch_s - t0_epoch_s) / kPanels;
    double sum = sig.value_at(t0_epoch_s) + sig.value_at(t1_epoch_s);
    for (int i = 1; i < kPanels; ++i)
        sum += sig.value_at(t0_epoch_s + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0 / (t1_epoch_s - t0_epoch_s);
}

// --- cached source -----------------------------------------------------------

CachedCarbonSource::CachedCarbonSource(std::shared_ptr<CarbonProvider> provider, double ttl_s)
    : provider_(std::move(provider)), ttl_s_(ttl_s) {
    if (!provider_) throw std::invalid_argument("CachedCarbonSource requires a provider");
    if (!(ttl_s_ >= 0.0)) throw std::invalid_argument("cache ttl must be >= 0");
}

CachedCarbonSource::Entry& CachedCarbonSource::entry_for(const std::string& region_id) {
    std::lock_guard lock(map_mutex_);
    auto it = entries_.find(region_id);
    if (it == entries_.end()) it = entries_.emplace(region_id, std::make_unique<Entry>()).first;
    return *it->second;
}

MoerSample CachedCarbonSource::fetch_cached(const std::string& region_id, double now_epoch_s) {
    Entry& entry = entry_for(region_id);
    // Per-region lock: at most one in-flight provider fetch per region and no
    // torn reads of (fetched_at, sample).
    std::lock_guard lock(entry.fetch_mutex);
    if (entry.valid && now_epoch_s - entry.fetched_at_s <= ttl_s_ && now_epoch_s >= entry.fetched_at_s)
        return entry.sample;
    MoerSample raw = provider_->fetch(region_id, now_epoch_s);
    entry.sample = convert_to_g_per_kwh(raw);
    entry.fetched_at_s = now_epoch_s;
    entry.valid = true;
    entry.fetches += 1;
    entry.history.emplace_back(now_epoch_s, entry.sample.value);
    return entry.sample;
}

ScoreTable CachedCarbonSource::scores(const std::vector<std::string>& regions, double now_epoch_s) {
    std::map<std::string, double> raw;
    std::vector<std::string> failed;
    for (const auto& r : regions) {
        try {
            raw[r] = fetch_cached(r, now_epoch_s).value;
        } catch (const FetchError&) {
            failed.push_back(r);
        }
    }
    if (!failed.empty()) throw ScoreTableError(std::move(failed));
    ScoreTable table = normalize_scores(raw);
    table.computed_at_s = now_epoch_s;
    return table;
}

std::size_t CachedCarbonSource::fetch_count(const std::string& region_id) const {
    std::lock_guard lock(map_mutex_);
    auto it = entries_.find(region_id);
    return it == entries_.end() ? 0 : it->second->fetches;
}

std::optional<double> CachedCarbonSource::history_time_average(const std::string& region_id,
                                                               double t0_epoch_s,
                                                               double t1_epoch_s) const {
    std::vector<std::pair<double, double>> history;
    {
        std::lock_guard lock(map_mutex_);
        auto it = entries_.find(region_id);
        if (it == entries_.end() || it->second->history.empty()) return std::nullopt;
        history = it->second->history;
    }
    if (t1_epoch_s < t0_epoch_s) std::swap(t0_epoch_s, t1_epoch_s);
    if (t1_epoch_s == t0_epoch_s) return history.front().second;
    double integral = 0.0;
    double covered = 0.0;
    for (std::size_t i = 0; i < history.size(); ++i) {
        double seg_start = history[i].first;
        double seg_end = (i + 1 < history.size()) ? history[i + 1].first : t1_epoch_s;
        double lo = std::max(seg_start, t0_epoch_s);
        double hi = std::min(seg_end, t1_epoch_s);
        if (hi > lo) {
            integral += history[i].second * (hi - lo);
            covered += hi - lo;
        }
    }
    if (covered <= 0.0) return history.front().second;
    return integral / covered;
}

}  // namespace greensched
