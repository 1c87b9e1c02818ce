#include "greensched/metrics_service.hpp"

#include <algorithm>
#include <chrono>

#include <httplib.h>
#include <json.hpp>

namespace greensched {

using nlohmann::json;

namespace {

double wall_clock_epoch_s() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

json to_json(const ScoreRow& row) {
    return json{{"region", row.region},
                {"score", row.score},
                {"raw_g_per_kwh", row.raw_g_per_kwh},
                {"source", row.source}};
}

}  // namespace

ScoreService::ScoreService(std::shared_ptr<CachedCarbonSource> source,
                           std::vector<std::string> regions, std::function<double()> clock_epoch_s)
    : source_(std::move(source)), regions_(std::move(regions)), clock_(std::move(clock_epoch_s)) {
    if (!source_) throw std::invalid_argument("ScoreService requires a carbon source");
    if (regions_.empty()) throw std::invalid_argument("ScoreService requires at least one region");
    if (!clock_) clock_ = wall_clock_epoch_s;
}

ScoresResponse ScoreService::get_scores() {
    const double now = clock_();
    ScoreTable table = source_->scores(regions_, now);
    ScoresResponse response;
    response.computed_at_s = table.computed_at_s;
    for (const auto& region : regions_) {
        const auto& entry = table.entries.at(region);
        response.scores.push_back(
            ScoreRow{region, entry.score, entry.raw_g_per_kwh, source_->source_tag()});
    }
    return response;
}

ScoreRow ScoreService::get_region_score(const std::string& region) {
    if (std::find(regions_.begin(), regions_.end(), region) == regions_.end())
        throw UnknownRegionError(region);
    // Project from the full table so the entry always agrees with get_scores()
    // evaluated at the same instant.
    ScoresResponse full = get_scores();
    for (const auto& row : full.scores)
        if (row.region == region) return row;
    throw UnknownRegionError(region);
}

MetricsHttpServer::MetricsHttpServer(ScoreService service)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
    // Only SO_REUSEADDR; the httplib default adds SO_REUSEPORT, which would
    // let two services bind one port instead of failing.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes),
                   sizeof(yes));
    });
    server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });
    server_->Get("/v1/scores", [this](const httplib::Request&, httplib::Response& res) {
        try {
            ScoresResponse scores = service_.get_scores();
            json body{{"computed_at", scores.computed_at_s}, {"scores", json::array()}};
            for (const auto& row : scores.scores) body["scores"].push_back(to_json(row));
            res.set_content(body.dump(), "application/json");
        } catch (const ScoreTableError& e) {
            res.status = 502;
            res.set_content(json{{"error", "fetch_failed"}, {"regions", e.failed_regions()}}.dump(),
                            "application/json");
        }
    });
    server_->Get("/v1/scores/:region", [this](const httplib::Request& req,
                                              httplib::Response& res) {
        const std::string region = req.path_params.at("region");
        try {
            ScoreRow row = service_.get_region_score(region);
            res.set_content(to_json(row).dump(), "application/json");
        } catch (const UnknownRegionError&) {
            res.status = 404;
            res.set_content(json{{"error", "unknown_region"}, {"region", region}}.dump(),
                            "application/json");
        } catch (const ScoreTableError& e) {
            res.status = 502;
            res.set_content(json{{"error", "fetch_failed"}, {"regions", e.failed_regions()}}.dump(),
                            "application/json");
        }
    });
}

MetricsHttpServer::~MetricsHttpServer() { stop(); }

bool MetricsHttpServer::bind(const std::string& host, int port) {
    host_ = host;
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        return port_ > 0;
    }
    if (!server_->bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

void MetricsHttpServer::start() {
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void MetricsHttpServer::stop() {
    if (server_ && server_->is_running()) server_->stop();
    if (thread_.joinable()) thread_.join();
}

bool MetricsHttpServer::running() const { return server_ && server_->is_running(); }

}  // namespace greensched
