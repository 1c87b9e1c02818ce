#pragma once

#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "greensched/carbon.hpp"

namespace httplib {
class Server;
}

namespace greensched {

struct ScoreRow {
    std::string region;
    double score = 0.0;
    double raw_g_per_kwh = 0.0;
    std::string source;
};

struct ScoresResponse {
    double computed_at_s = 0.0;
    std::vector<ScoreRow> scores;  // exactly the configured provider regions
};

class UnknownRegionError : public std::runtime_error {
public:
    explicit UnknownRegionError(const std::string& region)
        : std::runtime_error("unknown region '" + region + "'"), region_(region) {}
    const std::string& region() const { return region_; }

private:
    std::string region_;
};

// Scoring facade shared by the HTTP endpoints and in-process callers (the
// simulator bypasses HTTP but runs the same code path). The clock is
// injectable so tests can drive cache expiry.
class ScoreService {
public:
    ScoreService(std::shared_ptr<CachedCarbonSource> source, std::vector<std::string> regions,
                 std::function<double()> clock_epoch_s = {});

    // Throws ScoreTableError naming every failed region; never returns a
    // partial table.
    ScoresResponse get_scores();
    ScoreRow get_region_score(const std::string& region);

    const std::vector<std::string>& regions() const { return regions_; }

private:
    std::shared_ptr<CachedCarbonSource> source_;
    std::vector<std::string> regions_;
    std::function<double()> clock_;
};

// REST surface:
//   GET /v1/scores          -> ScoresResponse
//   GET /v1/scores/{region} -> single entry (404 for unknown regions)
//   GET /healthz            -> 200 while the loop is responsive
// Fetch failures map to 502 with the failed regions listed.
class MetricsHttpServer {
public:
    explicit MetricsHttpServer(ScoreService service);
    ~MetricsHttpServer();

    MetricsHttpServer(const MetricsHttpServer&) = delete;
    MetricsHttpServer& operator=(const MetricsHttpServer&) = delete;

    // port 0 binds an ephemeral port. Returns false when the address is taken.
    bool bind(const std::string& host, int port);
    int port() const { return port_; }
    void start();
    void stop();
    bool running() const;

private:
    ScoreService service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string host_;
    int port_ = -1;
};

}  // namespace greensched
