#include <httplib.h>
#include <json.hpp>

#include "greensched/carbon.hpp"

namespace greensched {

namespace {

using nlohmann::json;

json parse_json_body(const std::string& body, const std::string& region) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FetchError(FetchErrorKind::MalformedBody, region, "response body is not a JSON object");
    return j;
}

double number_field(const json& j, const char* key, const std::string& region) {
    if (!j.contains(key) || !j[key].is_number())
        throw FetchError(FetchErrorKind::MalformedBody, region,
                         std::string("response body is missing numeric field '") + key + "'");
    return j[key].get<double>();
}

std::string string_field(const json& j, const char* key, const std::string& region) {
    if (!j.contains(key) || !j[key].is_string())
        throw FetchError(FetchErrorKind::MalformedBody, region,
                         std::string("response body is missing string field '") + key + "'");
    return j[key].get<std::string>();
}

}  // namespace

MoerSample parse_watttime_body(const std::string& body) {
    json j = parse_json_body(body, "");
    std::string region = string_field(j, "region", "");
    std::string units = string_field(j, "units", region);
    if (units != "lbs_co2_per_mwh")
        throw FetchError(FetchErrorKind::UnknownUnits, region, "unknown units string '" + units + "'");
    MoerSample s;
    s.region_id = region;
    s.point_time_s = number_field(j, "point_time", region);
    s.value = number_field(j, "value", region);
    s.unit = MoerUnit::LbsPerMWh;
    if (s.value < 0.0)
        throw FetchError(FetchErrorKind::MalformedBody, region, "negative MOER value");
    return s;
}

MoerSample parse_carbonsdk_body(const std::string& body) {
    json j = parse_json_body(body, "");
    std::string region = string_field(j, "location", "");
    MoerSample s;
    s.region_id = region;
    s.point_time_s = number_field(j, "time", region);
    s.value = number_field(j, "rating", region);
    s.unit = MoerUnit::GPerKWh;
    if (s.value < 0.0)
        throw FetchError(FetchErrorKind::MalformedBody, region, "negative MOER value");
    return s;
}

HttpCarbonProvider::HttpCarbonProvider(std::string endpoint_url, WireFormat format,
                                       std::string bearer_token)
    : format_(format), token_(std::move(bearer_token)) {
    // Split "http://host:port/path" into client target and request path.
    auto scheme_end = endpoint_url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = endpoint_url.find('/', host_start);
    if (path_start == std::string::npos) {
        host_ = endpoint_url;
        base_path_ = "/";
    } else {
        host_ = endpoint_url.substr(0, path_start);
        base_path_ = endpoint_url.substr(path_start);
    }
}

MoerSample HttpCarbonProvider::fetch(const std::string& region_id, double /*now_epoch_s*/) {
    httplib::Client client(host_);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(5, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    const char* query_key = format_ == WireFormat::WattTimeLike ? "region" : "location";
    std::string path = base_path_ + (base_path_.find('?') == std::string::npos ? "?" : "&") +
                       query_key + "=" + region_id;
    auto res = client.Get(path, headers);
    if (!res)
        throw FetchError(FetchErrorKind::Unreachable, region_id,
                         "carbon endpoint " + host_ + " unreachable");
    if (res->status != 200)
        throw FetchError(FetchErrorKind::HttpStatus, region_id,
                         "carbon endpoint returned HTTP " + std::to_string(res->status));
    MoerSample s = format_ == WireFormat::WattTimeLike ? parse_watttime_body(res->body)
                                                       : parse_carbonsdk_body(res->body);
    if (s.region_id.empty()) s.region_id = region_id;
    return s;
}

double HttpCarbonProvider::time_average_g_per_kwh(const std::string& region_id, double, double) const {
    throw FetchError(FetchErrorKind::NoData, region_id,
                     "live HTTP feeds do not support exact time averages");
}

}  // namespace greensched
