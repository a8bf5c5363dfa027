#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "audscope/attributes.hpp"
#include "audscope/errors.hpp"

namespace audscope {

/// Three-way degree of urbanization. Reporting order is urban, suburban, rural.
enum class UrbanizationDegree : std::uint8_t { urban = 0, suburban = 1, rural = 2 };

inline constexpr std::size_t kDegreeCount = 3;

inline constexpr std::array<std::string_view, kDegreeCount> kDegreeNames = {
    "urban", "suburban", "rural"};

constexpr std::size_t degree_index(UrbanizationDegree d) { return static_cast<std::size_t>(d); }

constexpr std::string_view degree_name(UrbanizationDegree d) {
    return kDegreeNames[degree_index(d)];
}

inline UrbanizationDegree degree_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kDegreeCount; ++i) {
        if (kDegreeNames[i] == name) return static_cast<UrbanizationDegree>(i);
    }
    throw NotFoundError("unknown urbanization degree: " + std::string(name));
}

inline std::array<UrbanizationDegree, kDegreeCount> all_degrees() {
    return {UrbanizationDegree::urban, UrbanizationDegree::suburban, UrbanizationDegree::rural};
}

/// Ground-truth statistics for one municipality. Shares are fractions in [0,1];
/// percent only appears at report boundaries.
struct CensusRecord {
    std::int64_t population = 0;
    std::optional<std::int64_t> male_count;
    std::optional<std::int64_t> female_count;
    std::optional<double> high_school_share;
    std::optional<double> college_share;
    std::optional<double> income_per_capita;   // Euros/year
    std::optional<double> foreign_resident_share;

    bool operator==(const CensusRecord&) const = default;
};

/// Smallest administrative unit; the unit of all estimation.
struct Municipality {
    std::string id;
    std::string name;
    std::string province_id;
    UrbanizationDegree degree = UrbanizationDegree::rural;
    std::optional<CensusRecord> census;

    bool operator==(const Municipality&) const = default;
};

/// One audience query: a location set plus an optional attribute constraint.
/// Queries always count residents ("people who live there").
struct TargetingSpec {
    std::vector<std::string> locations;   // sorted, unique municipality ids
    Attribute attribute = Attribute::users;

    static constexpr std::string_view kLocationType = "home";

    TargetingSpec() = default;
    TargetingSpec(std::vector<std::string> locs, Attribute attr)
        : locations(std::move(locs)), attribute(attr) {
        std::sort(locations.begin(), locations.end());
        locations.erase(std::unique(locations.begin(), locations.end()), locations.end());
        if (locations.empty()) throw ConfigError("targeting spec requires at least one location");
    }

    /// Canonical text form, stable across runs; used for hashing and replay keys.
    std::string canonical() const {
        std::string s{attribute_name(attribute)};
        s += '|';
        for (std::size_t i = 0; i < locations.size(); ++i) {
            if (i) s += ',';
            s += locations[i];
        }
        return s;
    }

    bool operator==(const TargetingSpec&) const = default;
};

enum class BackendKind : std::uint8_t { simulator = 0, replay = 1, live = 2 };

inline constexpr std::array<std::string_view, 3> kBackendNames = {"simulator", "replay", "live"};

constexpr std::string_view backend_name(BackendKind k) {
    return kBackendNames[static_cast<std::size_t>(k)];
}

/// A single backend reply: the censored, rounded monthly-active-user count.
struct AudienceResponse {
    TargetingSpec spec;
    std::int64_t mau_reported = 0;
    int run_index = 0;
    std::int64_t timestamp = 0;   // unix seconds of the collection epoch
    BackendKind backend = BackendKind::simulator;
};

/// Synthetic collection timestamps: run epochs spaced two weeks apart.
inline constexpr std::int64_t kCollectionEpochStart = 1554595200;   // 2019-04-07T00:00:00Z
inline constexpr std::int64_t kCollectionCadenceSeconds = 14 * 86400;

constexpr std::int64_t collection_timestamp(int run_index) {
    return kCollectionEpochStart + static_cast<std::int64_t>(run_index) * kCollectionCadenceSeconds;
}

}  // namespace audscope
