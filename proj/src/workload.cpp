#include "greensched/workload.hpp"

#include <algorithm>
#include <fstream>

#include "greensched/rng.hpp"
#include "greensched/util.hpp"

namespace greensched {

std::vector<TraceRow> load_trace(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw TraceFormatError(0, "cannot open " + csv_path.string());
    std::vector<TraceRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.starts_with("function_id,")) continue;  // header
        auto fields = split(t, ',');
        if (fields.size() != 1 + kMinutesPerDay)
            throw TraceFormatError(line_no, "expected 1441 fields (function_id + 1440 counts), got " +
                                                std::to_string(fields.size()));
        TraceRow row;
        row.function_id = fields[0];
        if (row.function_id.empty()) throw TraceFormatError(line_no, "empty function_id");
        row.per_minute_counts.reserve(kMinutesPerDay);
        for (int m = 0; m < kMinutesPerDay; ++m) {
            std::int64_t count = 0;
            try {
                count = std::stoll(fields[m + 1]);
            } catch (const std::exception&) {
                throw TraceFormatError(line_no, "count for minute " + std::to_string(m) +
                                                    " is not an integer");
            }
            if (count < 0)
                throw TraceFormatError(line_no,
                                       "count for minute " + std::to_string(m) + " is negative");
            row.per_minute_counts.push_back(count);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

// Appends a rate-per-minute Poisson process restricted to one minute.
void append_minute(ArrivalStream& out, RandomStream& rng, double rate_per_min,
                   double minute_offset_ms, const std::string& function_id) {
    if (rate_per_min <= 0.0) return;
    const double mean_gap_ms = kMsPerMinute / rate_per_min;
    double t = minute_offset_ms + rng.next_exponential(mean_gap_ms);
    const double minute_end = minute_offset_ms + kMsPerMinute;
    while (t < minute_end) {
        out.push_back(Arrival{t, function_id});
        t += rng.next_exponential(mean_gap_ms);
    }
}

void sort_stream(ArrivalStream& stream) {
    std::stable_sort(stream.begin(), stream.end(), [](const Arrival& a, const Arrival& b) {
        if (a.time_ms != b.time_ms) return a.time_ms < b.time_ms;
        return a.function_id < b.function_id;
    });
}

}  // namespace

ArrivalStream synthesize(const std::vector<TraceRow>& rows, int window_start_minute,
                         int window_minutes, std::uint64_t seed) {
    if (window_start_minute < 0 || window_minutes < 0 ||
        window_start_minute + window_minutes > kMinutesPerDay)
        throw std::invalid_argument("synthesize: window must fit within [0, 1440)");
    RngRegistry rng(seed);
    ArrivalStream stream;
    for (const auto& row : rows) {
        for (int m = 0; m < window_minutes; ++m) {
            const int minute = window_start_minute + m;
            const auto count = row.per_minute_counts.at(minute);
            if (count == 0) continue;
            // Seeded per (function, absolute minute): one function's stream is
            // independent of every other row in the trace.
            auto& stream_rng =
                rng.stream("arrivals/" + row.function_id + "/" + std::to_string(minute));
            append_minute(stream, stream_rng, static_cast<double>(count), m * kMsPerMinute,
                          row.function_id);
        }
    }
    sort_stream(stream);
    return stream;
}

ArrivalStream synthetic_constant(double rate_per_min, int window_minutes, std::uint64_t seed,
                                 const std::string& function_id) {
    if (rate_per_min < 0.0) throw std::invalid_argument("synthetic_constant: rate must be >= 0");
    if (window_minutes < 0) throw std::invalid_argument("synthetic_constant: window must be >= 0");
    RngRegistry rng(seed);
    ArrivalStream stream;
    for (int m = 0; m < window_minutes; ++m) {
        auto& stream_rng = rng.stream("arrivals/" + function_id + "/" + std::to_string(m));
        append_minute(stream, stream_rng, rate_per_min, m * kMsPerMinute, function_id);
    }
    sort_stream(stream);
    return stream;
}

}  // namespace greensched
