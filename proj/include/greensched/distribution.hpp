#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "greensched/rng.hpp"

namespace greensched {

enum class DistKind { Constant, Exponential, Lognormal };

// Descriptor for service times and latency stages. All values are in ms and
// samples are always >= 0.
struct Distribution {
    DistKind kind = DistKind::Constant;
    double p0 = 0.0;  // constant: value; exponential: mean; lognormal: mu
    double p1 = 0.0;  // lognormal: sigma

    static Distribution constant(double value_ms) {
        if (!(value_ms >= 0.0))
            throw std::invalid_argument("constant distribution requires value >= 0");
        return {DistKind::Constant, value_ms, 0.0};
    }
    static Distribution exponential(double mean_ms) {
        if (!(mean_ms >= 0.0))
            throw std::invalid_argument("exponential distribution requires mean >= 0");
        return {DistKind::Exponential, mean_ms, 0.0};
    }
    static Distribution lognormal(double mu, double sigma) {
        if (!(sigma >= 0.0))
            throw std::invalid_argument("lognormal distribution requires sigma >= 0");
        return {DistKind::Lognormal, mu, sigma};
    }

    double sample(RandomStream& rng) const {
        switch (kind) {
            case DistKind::Constant: return p0;
            case DistKind::Exponential: return rng.next_exponential(p0);
            case DistKind::Lognormal: return rng.next_lognormal(p0, p1);
        }
        return p0;
    }

    double mean() const {
        switch (kind) {
            case DistKind::Constant: return p0;
            case DistKind::Exponential: return p0;
            case DistKind::Lognormal: return std::exp(p0 + 0.5 * p1 * p1);
        }
        return p0;
    }

    std::string describe() const {
        switch (kind) {
            case DistKind::Constant: return "constant(" + std::to_string(p0) + ")";
            case DistKind::Exponential: return "exponential(" + std::to_string(p0) + ")";
            case DistKind::Lognormal:
                return "lognormal(" + std::to_string(p0) + "," + std::to_string(p1) + ")";
        }
        return "?";
    }
};

}  // namespace greensched
