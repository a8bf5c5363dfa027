#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

#include "audscope/errors.hpp"

namespace audscope {

/// How raw audience counts are snapped to the reporting resolution. Which rule
/// the real platform uses is unknown; nearest (ties away from zero) is the
/// default.
enum class RoundingRule : std::uint8_t { nearest = 0, down = 1, up = 2 };

inline constexpr std::array<std::string_view, 3> kRoundingNames = {"nearest", "down", "up"};

constexpr std::string_view rounding_name(RoundingRule r) {
    return kRoundingNames[static_cast<std::size_t>(r)];
}

inline RoundingRule rounding_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kRoundingNames.size(); ++i) {
        if (kRoundingNames[i] == name) return static_cast<RoundingRule>(i);
    }
    throw ConfigError("unknown rounding rule: " + std::string(name));
}

/// Censoring behaviour of the reporting platform: counts are rounded to
/// `resolution` and sub-floor audiences are reported as the floor itself.
/// An empty audience reports 0, never the floor.
struct CensorModel {
    std::int64_t censor_floor = 1000;
    std::int64_t resolution = 100;
    double noise_sigma = 0.05;   // multiplicative log-normal, per run epoch
    RoundingRule rounding = RoundingRule::nearest;

    void validate() const {
        if (resolution <= 0) throw ConfigError("resolution must be positive");
        if (censor_floor < 0 || censor_floor % resolution != 0) {
            throw ConfigError("censor_floor must be a non-negative multiple of resolution");
        }
        if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
    }

    std::int64_t round_to_resolution(double audience) const {
        double units = audience / static_cast<double>(resolution);
        double snapped = 0.0;
        switch (rounding) {
            case RoundingRule::nearest: snapped = std::floor(units + 0.5); break;
            case RoundingRule::down: snapped = std::floor(units); break;
            case RoundingRule::up: snapped = std::ceil(units); break;
        }
        return static_cast<std::int64_t>(snapped) * resolution;
    }

    /// Reported MAU for a (possibly noisy) true audience.
    std::int64_t report(double audience) const {
        if (audience <= 0.0) return 0;
        return std::max(censor_floor, round_to_resolution(audience));
    }

    bool is_censored(std::int64_t reported) const {
        return reported > 0 && reported <= censor_floor;
    }
};

}  // namespace audscope
