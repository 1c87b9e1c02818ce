#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

namespace greensched {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One independent random stream. Raw bits come from std::mt19937_64, whose
// output sequence is pinned by the standard; the distribution transforms are
// implemented here so results never depend on libstdc++ internals.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n > 0. Multiply-shift; bias is < 2^-64.
    std::uint64_t next_index(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(gen_()) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }

    double next_exponential(double mean) { return -mean * std::log1p(-next_double()); }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double next_lognormal(double mu, double sigma) { return std::exp(mu + sigma * next_normal()); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Named substreams derived from a single base seed. Every stochastic consumer
// draws from its own stream, so adding a consumer never perturbs another.
class RngRegistry {
public:
    explicit RngRegistry(std::uint64_t base_seed) : base_seed_(base_seed) {}

    RandomStream& stream(const std::string& name) {
        auto it = streams_.find(name);
        if (it == streams_.end())
            it = streams_.emplace(name, RandomStream(derive_seed(base_seed_, name))).first;
        return it->second;
    }

    static std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view name) {
        return splitmix64(base_seed ^ fnv1a64(name));
    }

    std::uint64_t base_seed() const { return base_seed_; }

private:
    std::uint64_t base_seed_;
    std::map<std::string, RandomStream> streams_;
};

}  // namespace greensched
