#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "greensched/carbon.hpp"
#include "greensched/rng.hpp"
#include "test_fixtures.hpp"

using namespace greensched;

namespace {

// Counting provider for cache tests.
class CountingProvider : public CarbonProvider {
public:
    explicit CountingProvider(double value = 100.0) : value_(value) {}
    MoerSample fetch(const std::string& region, double now) override {
        fetches += 1;
        fetch_times.push_back(now);
        return MoerSample{region, now, value_, MoerUnit::GPerKWh};
    }
    double time_average_g_per_kwh(const std::string&, double, double) const override {
        return value_;
    }
    std::string source_tag() const override { return "counting"; }

    std::atomic<int> fetches{0};
    std::vector<double> fetch_times;

private:
    double value_;
};

class FailingProvider : public CarbonProvider {
public:
    MoerSample fetch(const std::string& region, double) override {
        throw FetchError(FetchErrorKind::Unreachable, region, "down");
    }
    double time_average_g_per_kwh(const std::string& region, double, double) const override {
        throw FetchError(FetchErrorKind::NoData, region, "down");
    }
    std::string source_tag() const override { return "failing"; }
};

}  // namespace

TEST_CASE("unit conversion lbs/MWh -> g/kWh") {
    MoerSample s{"ES", 0.0, 1000.0, MoerUnit::LbsPerMWh};
    auto g = convert_to_g_per_kwh(s);
    CHECK(g.unit == MoerUnit::GPerKWh);
    CHECK(g.value == doctest::Approx(453.59237).epsilon(1e-12));
    CHECK(g.region_id == "ES");
    CHECK(g.point_time_s == 0.0);

    s.value = 0.0;
    CHECK(convert_to_g_per_kwh(s).value == 0.0);

    s.value = 220.46226218487757;  // 100 / 0.45359237
    CHECK(convert_to_g_per_kwh(s).value == doctest::Approx(100.0).epsilon(1e-9));

    MoerSample already{"ES", 5.0, 42.0, MoerUnit::GPerKWh};
    CHECK(convert_to_g_per_kwh(already).value == 42.0);
}

TEST_CASE("conversion round trip within 1e-9 relative") {
    RandomStream rng(11);
    for (int i = 0; i < 200; ++i) {
        double lbs = rng.next_double() * 2000.0;
        MoerSample s{"X", 0.0, lbs, MoerUnit::LbsPerMWh};
        double back = convert_to_g_per_kwh(s).value / kLbsPerMwhToGPerKwh;
        CHECK(back == doctest::Approx(lbs).epsilon(1e-9));
    }
}

TEST_CASE("min-max normalization on the evaluation intensities") {
    std::map<std::string, double> raw{
        {"Spain", 150.0}, {"France", 200.0}, {"Belgium", 250.0}, {"Netherlands", 300.0}};
    auto table = normalize_scores(raw);
    CHECK(table.entries.at("Spain").score == 100.0);
    CHECK(table.entries.at("France").score == doctest::Approx(66.66666666666667).epsilon(1e-12));
    CHECK(table.entries.at("Belgium").score == doctest::Approx(33.333333333333336).epsilon(1e-12));
    CHECK(table.entries.at("Netherlands").score == 0.0);
    CHECK(table.entries.at("Spain").raw_g_per_kwh == 150.0);
}

TEST_CASE("degenerate normalization maps everything to 100") {
    CHECK(normalize_scores({{"A", 42.0}}).entries.at("A").score == 100.0);
    auto tied = normalize_scores({{"A", 10.0}, {"B", 10.0}, {"C", 10.0}});
    for (const auto& [region, entry] : tied.entries) CHECK(entry.score == 100.0);
}

TEST_CASE("normalization rejects bad input") {
    CHECK_THROWS_AS(normalize_scores({}), std::invalid_argument);
    CHECK_THROWS_AS(normalize_scores({{"A", -1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(normalize_scores({{"A", std::nan("")}}), std::invalid_argument);
}

TEST_CASE("normalization properties over random inputs") {
    RandomStream rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::map<std::string, double> raw;
        int n = 2 + static_cast<int>(rng.next_index(6));
        for (int i = 0; i < n; ++i)
            raw["r" + std::to_string(i)] = 1.0 + rng.next_double() * 500.0;
        auto table = normalize_scores(raw);

        double lo = 1e18, hi = -1e18;
        for (const auto& [r, v] : raw) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (const auto& [r, entry] : table.entries) {
            CHECK(entry.score >= 0.0);
            CHECK(entry.score <= 100.0);
            if (raw.at(r) == lo) CHECK(entry.score == 100.0);
            if (raw.at(r) == hi && hi > lo) CHECK(entry.score == 0.0);
        }
        // Strict order reversal.
        for (const auto& [a, ea] : table.entries)
            for (const auto& [b, eb] : table.entries)
                if (hi > lo && raw.at(a) < raw.at(b)) CHECK(ea.score > eb.score);

        // Affine transforms never change the ranking.
        double scale = 0.1 + rng.next_double() * 10.0;
        double shift = rng.next_double() * 100.0;
        std::map<std::string, double> transformed;
        for (const auto& [r, v] : raw) transformed[r] = scale * v + shift;
        auto table2 = normalize_scores(transformed);
        for (const auto& [a, ea] : table.entries)
            for (const auto& [b, eb] : table.entries) {
                if (ea.score > eb.score) CHECK(table2.entries.at(a).score > table2.entries.at(b).score);
                if (ea.score == eb.score) CHECK(table2.entries.at(a).score == table2.entries.at(b).score);
            }
    }
}

TEST_CASE("cache fetches at most once per ttl window") {
    auto provider = std::make_shared<CountingProvider>();
    CachedCarbonSource source(provider, 300.0);

    SUBCASE("second call within the window is served from cache") {
        source.fetch_cached("ES", 0.0);
        source.fetch_cached("ES", 299.0);
        CHECK(provider->fetches == 1);
    }
    SUBCASE("ttl boundary + 1 refetches") {
        source.fetch_cached("ES", 0.0);
        source.fetch_cached("ES", 301.0);
        CHECK(provider->fetches == 2);
    }
    SUBCASE("cache is keyed per region") {
        source.fetch_cached("ES", 0.0);
        source.fetch_cached("FR", 0.0);
        CHECK(provider->fetches == 2);
        CHECK(source.fetch_count("ES") == 1);
        CHECK(source.fetch_count("FR") == 1);
    }
}

TEST_CASE("any closed 300 s window holds at most one fetch per region") {
    auto provider = std::make_shared<CountingProvider>();
    CachedCarbonSource source(provider, 300.0);
    RandomStream rng(3);
    double t = 0.0;
    for (int i = 0; i < 5000; ++i) {
        t += rng.next_double() * 2.0;
        source.fetch_cached("ES", t);
    }
    const auto& times = provider->fetch_times;
    for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] - times[i - 1] > 300.0);
}

TEST_CASE("cached samples arrive unit-converted") {
    class LbsProvider : public CarbonProvider {
    public:
        MoerSample fetch(const std::string& region, double now) override {
            return MoerSample{region, now, 1000.0, MoerUnit::LbsPerMWh};
        }
        double time_average_g_per_kwh(const std::string&, double, double) const override {
            return 0.0;
        }
        std::string source_tag() const override { return "lbs"; }
    };
    CachedCarbonSource source(std::make_shared<LbsProvider>(), 300.0);
    auto sample = source.fetch_cached("ES", 0.0);
    CHECK(sample.unit == MoerUnit::GPerKWh);
    CHECK(sample.value == doctest::Approx(453.59237));
}

TEST_CASE("concurrent fetch_cached callers trigger one provider fetch per region") {
    auto provider = std::make_shared<CountingProvider>();
    CachedCarbonSource source(provider, 1e9);
    std::vector<std::thread> threads;
    std::atomic<int> mismatches{0};
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            for (int k = 0; k < 200; ++k) {
                auto s = source.fetch_cached("ES", 1.0);
                if (s.value != 100.0) mismatches += 1;
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(provider->fetches == 1);
    CHECK(mismatches == 0);
}

TEST_CASE("fetch-history time average steps over the observed samples") {
    class ClockValueProvider : public CarbonProvider {
    public:
        MoerSample fetch(const std::string& region, double now) override {
            return MoerSample{region, now, now, MoerUnit::GPerKWh};  // value == fetch time
        }
        double time_average_g_per_kwh(const std::string& region, double, double) const override {
            throw FetchError(FetchErrorKind::NoData, region, "no exact average");
        }
        std::string source_tag() const override { return "clock"; }
    };
    CachedCarbonSource source(std::make_shared<ClockValueProvider>(), 300.0);
    CHECK(!source.history_time_average("ES", 0.0, 600.0).has_value());
    source.fetch_cached("ES", 0.0);    // history: (0, 0)
    source.fetch_cached("ES", 100.0);  // cached, no new entry
    source.fetch_cached("ES", 301.0);  // history: (301, 301)
    auto avg = source.history_time_average("ES", 0.0, 600.0);
    REQUIRE(avg.has_value());
    // 0 * 301 + 301 * 299 over 600 s.
    CHECK(*avg == doctest::Approx(301.0 * 299.0 / 600.0));
}

TEST_CASE("scores() is all-or-nothing and names every failed region") {
    auto source = std::make_shared<CachedCarbonSource>(
        std::make_shared<SyntheticCarbonProvider>(greensched::testing::constant_signals()), 300.0);
    auto table = source->scores({"europe-southwest1-a", "europe-west4-a"}, 0.0);
    CHECK(table.entries.size() == 2);
    CHECK(table.entries.at("europe-southwest1-a").score == 100.0);
    CHECK(table.entries.at("europe-west4-a").score == 0.0);

    CachedCarbonSource failing(std::make_shared<FailingProvider>(), 300.0);
    try {
        failing.scores({"a", "b"}, 0.0);
        FAIL("expected ScoreTableError");
    } catch (const ScoreTableError& e) {
        CHECK(e.failed_regions() == std::vector<std::string>{"a", "b"});
    }
}

TEST_CASE("trace provider: step interpolation and exact time averages") {
    auto path = greensched::testing::write_temp_file(
        "gs_carbon_trace.csv",
        "region,point_time_epoch_s,value,unit\n"
        "ES,0,100,g_per_kwh\n"
        "ES,300,200,g_per_kwh\n"
        "FR,0,1000,lbs_per_mwh\n");
    auto provider = TraceCarbonProvider::load(path);

    CHECK(provider->fetch("ES", 0.0).value == 100.0);
    CHECK(provider->fetch("ES", 299.0).value == 100.0);   // holds until next sample
    CHECK(provider->fetch("ES", 300.0).value == 200.0);
    CHECK(provider->fetch("ES", 9999.0).value == 200.0);  // last value holds
    CHECK(provider->fetch("FR", 10.0).value == doctest::Approx(453.59237));  // converted

    CHECK(provider->time_average_g_per_kwh("ES", 0.0, 600.0) == doctest::Approx(150.0));
    CHECK(provider->time_average_g_per_kwh("ES", 150.0, 450.0) == doctest::Approx(150.0));
    CHECK(provider->time_average_g_per_kwh("ES", 0.0, 0.0) == 100.0);

    CHECK_THROWS_AS(provider->fetch("ES", -1.0), FetchError);
    CHECK_THROWS_AS(provider->fetch("atlantis", 0.0), FetchError);

    CHECK(provider->validate_coverage({"ES", "FR"}, 0.0).empty());
    CHECK(provider->validate_coverage({"ES", "DE"}, 0.0).size() == 1);

    std::filesystem::remove(path);
}

TEST_CASE("trace provider rejects malformed files") {
    auto bad_arity = greensched::testing::write_temp_file("gs_carbon_bad1.csv", "ES,0,100\n");
    CHECK_THROWS_AS(TraceCarbonProvider::load(bad_arity), FetchError);
    std::filesystem::remove(bad_arity);

    auto bad_unit = greensched::testing::write_temp_file("gs_carbon_bad2.csv",
                                                         "ES,0,100,furlongs\n");
    try {
        TraceCarbonProvider::load(bad_unit);
        FAIL("expected FetchError");
    } catch (const FetchError& e) {
        CHECK(e.kind() == FetchErrorKind::UnknownUnits);
    }
    std::filesystem::remove(bad_unit);

    auto unsorted = greensched::testing::write_temp_file(
        "gs_carbon_bad3.csv", "ES,300,100,g_per_kwh\nES,0,90,g_per_kwh\n");
    CHECK_THROWS_AS(TraceCarbonProvider::load(unsorted), FetchError);
    std::filesystem::remove(unsorted);
}

TEST_CASE("synthetic signals: sinusoid with zero clamp") {
    SyntheticSignal sig{SyntheticSignal::Kind::Sinusoid, 10.0, 50.0, 86400.0};
    CHECK(sig.value_at(0.0) == 10.0);
    CHECK(sig.value_at(86400.0 / 4.0) == doctest::Approx(60.0));
    CHECK(sig.value_at(3.0 * 86400.0 / 4.0) == 0.0);  // clamped

    SyntheticCarbonProvider provider({{"ES", sig}});
    CHECK(provider.fetch("ES", 0.0).value == 10.0);
    CHECK_THROWS_AS(provider.fetch("??", 0.0), FetchError);

    SyntheticSignal flat{SyntheticSignal::Kind::Constant, 150.0};
    SyntheticCarbonProvider flat_provider({{"ES", flat}});
    CHECK(flat_provider.time_average_g_per_kwh("ES", 0.0, 600.0) == 150.0);

    // Unclamped sinusoid averages back to its base over whole periods.
    SyntheticSignal wave{SyntheticSignal::Kind::Sinusoid, 100.0, 50.0, 600.0};
    SyntheticCarbonProvider wave_provider({{"ES", wave}});
    CHECK(wave_provider.time_average_g_per_kwh("ES", 0.0, 600.0) ==
          doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("wire format parsers") {
    SUBCASE("watttime-like body") {
        auto s = parse_watttime_body(
            R"({"point_time": 1700000000, "value": 900, "units": "lbs_co2_per_mwh", "region": "ES"})");
        CHECK(s.region_id == "ES");
        CHECK(s.value == 900.0);
        CHECK(s.unit == MoerUnit::LbsPerMWh);
        CHECK(s.point_time_s == 1700000000.0);
    }
    SUBCASE("carbonsdk-like body") {
        auto s = parse_carbonsdk_body(R"({"time": 1700000000, "rating": 120, "location": "FR"})");
        CHECK(s.region_id == "FR");
        CHECK(s.value == 120.0);
        CHECK(s.unit == MoerUnit::GPerKWh);
    }
    SUBCASE("unknown units are a typed error") {
        try {
            parse_watttime_body(
                R"({"point_time": 0, "value": 1, "units": "furlongs", "region": "ES"})");
            FAIL("expected FetchError");
        } catch (const FetchError& e) {
            CHECK(e.kind() == FetchErrorKind::UnknownUnits);
        }
    }
    SUBCASE("missing fields and non-JSON are malformed-body errors") {
        try {
            parse_carbonsdk_body(R"({"time": 0, "location": "FR"})");
            FAIL("expected FetchError");
        } catch (const FetchError& e) {
            CHECK(e.kind() == FetchErrorKind::MalformedBody);
        }
        try {
            parse_watttime_body("not json");
            FAIL("expected FetchError");
        } catch (const FetchError& e) {
            CHECK(e.kind() == FetchErrorKind::MalformedBody);
        }
    }
}
