#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "audscope/errors.hpp"

namespace audscope {

/// Closed catalog of targeting attributes. `users` is the unconstrained
/// pseudo-attribute (total audience); the remaining 22 constrain the query.
enum class Attribute : std::uint8_t {
    users = 0,
    male,
    female,
    single_status,
    married,
    high_school,
    college,
    network_3g,
    network_4g,
    wifi,
    android,
    ios,
    tech_early_adopter,
    lives_abroad,
    away_from_hometown,
    frequent_travelers,
    frequent_intl_travelers,
    catholic_church,
    gambling,
    cooking,
    fast_food,
    restaurants,
    fitness_wellness,
};

inline constexpr std::size_t kAttributeCount = 23;    // users + 22 constrained
inline constexpr std::size_t kConstrainedCount = 22;

inline constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {
    "users",
    "male",
    "female",
    "single",
    "married",
    "high_school",
    "college",
    "3g",
    "4g",
    "wifi",
    "android",
    "ios",
    "tech_early_adopter",
    "lives_abroad",
    "away_from_hometown",
    "frequent_travelers",
    "frequent_intl_travelers",
    "catholic_church",
    "gambling",
    "cooking",
    "fast_food",
    "restaurants",
    "fitness_wellness",
};

constexpr std::size_t attribute_index(Attribute a) {
    return static_cast<std::size_t>(a);
}

constexpr std::string_view attribute_name(Attribute a) {
    return kAttributeNames[attribute_index(a)];
}

inline std::optional<Attribute> parse_attribute(std::string_view name) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
        if (kAttributeNames[i] == name) return static_cast<Attribute>(i);
    }
    return std::nullopt;
}

inline Attribute attribute_from_name(std::string_view name) {
    auto a = parse_attribute(name);
    if (!a) throw NotFoundError("unknown attribute: " + std::string(name));
    return *a;
}

/// All catalog attributes including `users`, in catalog order.
inline std::array<Attribute, kAttributeCount> all_attributes() {
    std::array<Attribute, kAttributeCount> out{};
    for (std::size_t i = 0; i < kAttributeCount; ++i) out[i] = static_cast<Attribute>(i);
    return out;
}

/// The 22 constrained attributes, in catalog order.
inline std::array<Attribute, kConstrainedCount> constrained_attributes() {
    std::array<Attribute, kConstrainedCount> out{};
    for (std::size_t i = 0; i < kConstrainedCount; ++i) out[i] = static_cast<Attribute>(i + 1);
    return out;
}

}  // namespace audscope
