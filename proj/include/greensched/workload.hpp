#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace greensched {

inline constexpr int kMinutesPerDay = 1440;
inline constexpr double kMsPerMinute = 60000.0;

// One function's invocation counts for each minute of a day, Azure-trace style.
struct TraceRow {
    std::string function_id;
    std::vector<std::int64_t> per_minute_counts;  // exactly 1440 entries, all >= 0
};

class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(std::size_t line_no, const std::string& message)
        : std::runtime_error("workload trace line " + std::to_string(line_no) + ": " + message),
          line_no_(line_no) {}
    std::size_t line_no() const { return line_no_; }

private:
    std::size_t line_no_;
};

std::vector<TraceRow> load_trace(const std::filesystem::path& csv_path);

struct Arrival {
    double time_ms = 0.0;  // relative to window start, in [0, window)
    std::string function_id;
};

using ArrivalStream = std::vector<Arrival>;

// Piecewise-constant Poisson synthesis: each minute with count c > 0 becomes a
// rate-c Poisson process restricted to that minute (exponential gaps, seeded
// per function and minute), then all functions merge into one sorted stream.
ArrivalStream synthesize(const std::vector<TraceRow>& rows, int window_start_minute,
                         int window_minutes, std::uint64_t seed);

ArrivalStream synthetic_constant(double rate_per_min, int window_minutes, std::uint64_t seed,
                                 const std::string& function_id = "fn");

}  // namespace greensched
