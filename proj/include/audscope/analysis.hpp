#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <string>
#include <unordered_map>
#include <vector>

#include "audscope/estimator.hpp"
#include "audscope/stats.hpp"
#include "audscope/types.hpp"

namespace audscope {

/// Degree and province of each municipality, shared by the analysis ops.
struct MunicipalityInfo {
    UrbanizationDegree degree = UrbanizationDegree::rural;
    std::string province_id;
};

using MunicipalityIndex = std::unordered_map<std::string, MunicipalityInfo>;

inline MunicipalityIndex build_index(const World& world) {
    MunicipalityIndex idx;
    for (const auto& wm : world.municipalities) {
        idx[wm.info.id] = {wm.info.degree, wm.info.province_id};
    }
    return idx;
}

// ---------------------------------------------------------------------------
// Spatial coverage

struct CoverageCell {
    Attribute attribute = Attribute::users;
    UrbanizationDegree degree = UrbanizationDegree::urban;
    std::int64_t threshold = 0;
    std::size_t covered = 0;
    std::size_t total = 0;

    double fraction() const {
        return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
    }
};

struct CoverageReport {
    std::vector<CoverageCell> cells;

    const CoverageCell* find(Attribute a, UrbanizationDegree d, std::int64_t t) const {
        for (const auto& c : cells) {
            if (c.attribute == a && c.degree == d && c.threshold == t) return &c;
        }
        return nullptr;
    }
};

inline bool run_value_passes(EstimateMethod method, std::int64_t value, std::int64_t threshold,
                             std::int64_t censor_floor) {
    if (value < threshold) return false;
    if (method == EstimateMethod::standard && value <= censor_floor) return false;
    return true;
}

/// A municipality is covered for an attribute when at least one run produced
/// a response at or above the threshold; standard responses must additionally
/// clear the censor floor.
inline bool covered_by_any_run(const EstimateRecord& rec, std::int64_t threshold,
                               std::int64_t censor_floor) {
    for (const auto& v : rec.per_run) {
        if (v && run_value_passes(rec.method, *v, threshold, censor_floor)) return true;
    }
    return false;
}

inline CoverageReport coverage(const std::vector<EstimateRecord>& records,
                               const MunicipalityIndex& index, std::int64_t threshold,
                               std::int64_t censor_floor) {
    if (threshold < 0) throw ConfigError("threshold must be >= 0");
    std::array<std::size_t, kDegreeCount> totals{};
    for (const auto& [id, info] : index) totals[degree_index(info.degree)]++;

    // (attribute, degree) -> distinct covered municipalities; a municipality
    // counts once even if several records mention the same cell
    std::map<std::pair<std::size_t, std::size_t>, std::set<std::string>> covered;
    std::map<std::pair<std::size_t, std::size_t>, bool> seen_cell;
    for (const auto& rec : records) {
        auto it = index.find(rec.municipality_id);
        if (it == index.end()) continue;
        auto key = std::make_pair(attribute_index(rec.attribute), degree_index(it->second.degree));
        seen_cell[key] = true;
        if (covered_by_any_run(rec, threshold, censor_floor)) {
            covered[key].insert(rec.municipality_id);
        }
    }

    CoverageReport report;
    for (const auto& [key, _] : seen_cell) {
        CoverageCell cell;
        cell.attribute = static_cast<Attribute>(key.first);
        cell.degree = static_cast<UrbanizationDegree>(key.second);
        cell.threshold = threshold;
        cell.covered = covered.count(key) ? covered[key].size() : 0;
        cell.total = totals[key.second];
        report.cells.push_back(cell);
    }
    return report;
}

/// Coverage across a threshold sweep, long format. Non-increasing in the
/// threshold for every cell.
inline CoverageReport coverage_curve(const std::vector<EstimateRecord>& records,
                                     const MunicipalityIndex& index,
                                     std::span<const std::int64_t> thresholds,
                                     std::int64_t censor_floor) {
    CoverageReport curve;
    for (std::int64_t t : thresholds) {
        auto r = coverage(records, index, t, censor_floor);
        curve.cells.insert(curve.cells.end(), r.cells.begin(), r.cells.end());
    }
    return curve;
}

inline std::vector<std::int64_t> default_thresholds() {
    std::vector<std::int64_t> t;
    for (std::int64_t v = 100; v <= 1200; v += 100) t.push_back(v);
    return t;
}

// ---------------------------------------------------------------------------
// Per-collection coverage: how much each single run would cover on its own.
// The spread across runs is the platform's week-to-week instability.

struct RunCoverageCell {
    Attribute attribute = Attribute::users;
    UrbanizationDegree degree = UrbanizationDegree::urban;
    int run_index = 0;
    std::size_t covered = 0;
    std::size_t total = 0;

    double fraction() const {
        return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
    }
};

inline std::vector<RunCoverageCell> coverage_by_run(const std::vector<EstimateRecord>& records,
                                                    const MunicipalityIndex& index,
                                                    std::int64_t threshold,
                                                    std::int64_t censor_floor) {
    if (threshold < 0) throw ConfigError("threshold must be >= 0");
    std::array<std::size_t, kDegreeCount> totals{};
    for (const auto& [id, info] : index) totals[degree_index(info.degree)]++;

    // (attribute, degree, run) -> distinct covered municipalities
    std::map<std::tuple<std::size_t, std::size_t, int>, std::set<std::string>> covered;
    std::map<std::tuple<std::size_t, std::size_t, int>, bool> seen;
    for (const auto& rec : records) {
        auto it = index.find(rec.municipality_id);
        if (it == index.end()) continue;
        for (std::size_t r = 0; r < rec.per_run.size(); ++r) {
            auto key = std::make_tuple(attribute_index(rec.attribute),
                                       degree_index(it->second.degree), static_cast<int>(r));
            seen[key] = true;
            const auto& v = rec.per_run[r];
            if (v && run_value_passes(rec.method, *v, threshold, censor_floor)) {
                covered[key].insert(rec.municipality_id);
            }
        }
    }
    std::vector<RunCoverageCell> out;
    for (const auto& [key, _] : seen) {
        RunCoverageCell cell;
        cell.attribute = static_cast<Attribute>(std::get<0>(key));
        cell.degree = static_cast<UrbanizationDegree>(std::get<1>(key));
        cell.run_index = std::get<2>(key);
        cell.covered = covered.count(key) ? covered[key].size() : 0;
        cell.total = totals[std::get<1>(key)];
        out.push_back(cell);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Proportion indices P_m[c]

struct ProportionIndex {
    std::string municipality_id;
    Attribute attribute = Attribute::users;
    double value = 0.0;       // attribute audience / total audience, clamped to [0,1]
    bool clamped = false;
    EstimateMethod method = EstimateMethod::standard;   // method of the numerator
};

/// Computes P_m[c] = FB_m[c] / FB_m from a merged panel for every attribute
/// record valid at `threshold`. Defined only when the total-audience
/// aggregate is present and positive; values above 1 (a rounding artifact)
/// are clamped.
inline std::vector<ProportionIndex> proportion_indices(const std::vector<EstimateRecord>& panel,
                                                       std::int64_t threshold,
                                                       std::int64_t censor_floor) {
    std::unordered_map<std::string, std::int64_t> users_aggregate;
    for (const auto& rec : panel) {
        if (rec.attribute != Attribute::users) continue;
        if (rec.aggregate && *rec.aggregate > 0) users_aggregate[rec.municipality_id] = *rec.aggregate;
    }
    std::vector<ProportionIndex> out;
    for (const auto& rec : panel) {
        if (rec.attribute == Attribute::users) continue;
        if (!is_valid_estimate(rec, threshold, censor_floor)) continue;
        auto it = users_aggregate.find(rec.municipality_id);
        if (it == users_aggregate.end()) continue;
        ProportionIndex p;
        p.municipality_id = rec.municipality_id;
        p.attribute = rec.attribute;
        p.method = rec.method;
        double raw = static_cast<double>(*rec.aggregate) / static_cast<double>(it->second);
        p.clamped = raw > 1.0;
        p.value = std::min(raw, 1.0);
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stability: variance of P_m[c] across municipalities, per threshold

struct VarianceCell {
    Attribute attribute = Attribute::users;
    UrbanizationDegree degree = UrbanizationDegree::urban;
    std::int64_t threshold = 0;
    std::size_t n = 0;
    std::optional<double> variance;   // absent for fewer than 2 points
};

inline std::vector<VarianceCell> variance_curve(const std::vector<EstimateRecord>& panel,
                                                const MunicipalityIndex& index,
                                                std::span<const std::int64_t> thresholds,
                                                std::int64_t censor_floor) {
    std::vector<VarianceCell> out;
    for (std::int64_t t : thresholds) {
        auto indices = proportion_indices(panel, t, censor_floor);
        std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> values;
        for (const auto& p : indices) {
            auto it = index.find(p.municipality_id);
            if (it == index.end()) continue;
            values[{attribute_index(p.attribute), degree_index(it->second.degree)}].push_back(
                p.value);
        }
        for (const auto& [key, vals] : values) {
            VarianceCell cell;
            cell.attribute = static_cast<Attribute>(key.first);
            cell.degree = static_cast<UrbanizationDegree>(key.second);
            cell.threshold = t;
            cell.n = vals.size();
            cell.variance = sample_variance(vals);
            out.push_back(std::move(cell));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gender parity

struct GenderShare {
    std::string municipality_id;
    double female_share = 0.0;   // F / (F + M); parity at 0.5
};

/// Female share per municipality from the panel; absent when either gender
/// estimate is missing or the sum is zero.
inline std::vector<GenderShare> gender_share(const std::vector<EstimateRecord>& panel) {
    std::unordered_map<std::string, std::pair<std::optional<std::int64_t>, std::optional<std::int64_t>>>
        by_muni;
    for (const auto& rec : panel) {
        if (!rec.aggregate) continue;
        if (rec.attribute == Attribute::female) by_muni[rec.municipality_id].first = *rec.aggregate;
        if (rec.attribute == Attribute::male) by_muni[rec.municipality_id].second = *rec.aggregate;
    }
    std::vector<GenderShare> out;
    for (const auto& [id, fm] : by_muni) {
        if (!fm.first || !fm.second) continue;
        double total = static_cast<double>(*fm.first + *fm.second);
        if (total <= 0.0) continue;
        out.push_back({id, static_cast<double>(*fm.first) / total});
    }
    std::sort(out.begin(), out.end(),
              [](const GenderShare& a, const GenderShare& b) {
                  return a.municipality_id < b.municipality_id;
              });
    return out;
}

// ---------------------------------------------------------------------------
// Provincial urban-rural gaps

struct GapDistribution {
    Attribute attribute = Attribute::users;
    std::vector<double> differences;   // one per contributing province
    double mean = 0.0;
    std::optional<double> p_value;     // absent when under-powered (< 6 provinces)
    int n_provinces = 0;
};

/// Within each province that has both covered urban and covered rural
/// municipalities, the urban median of P_m[c] minus the rural median.
/// Suburban municipalities are excluded. Significance against zero via the
/// two-sided Wilcoxon signed-rank test.
inline GapDistribution provincial_gaps(const std::vector<ProportionIndex>& indices,
                                       const MunicipalityIndex& index, Attribute attribute) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_province;
    for (const auto& p : indices) {
        if (p.attribute != attribute) continue;
        auto it = index.find(p.municipality_id);
        if (it == index.end()) continue;
        if (it->second.degree == UrbanizationDegree::urban) {
            by_province[it->second.province_id].first.push_back(p.value);
        } else if (it->second.degree == UrbanizationDegree::rural) {
            by_province[it->second.province_id].second.push_back(p.value);
        }
    }

    GapDistribution gaps;
    gaps.attribute = attribute;
    for (const auto& [prov, ur] : by_province) {
        if (ur.first.empty() || ur.second.empty()) continue;
        auto mu = median(ur.first);
        auto mr = median(ur.second);
        gaps.differences.push_back(*mu - *mr);
    }
    gaps.n_provinces = static_cast<int>(gaps.differences.size());
    if (!gaps.differences.empty()) gaps.mean = mean(gaps.differences);
    if (gaps.n_provinces >= 6) {
        gaps.p_value = wilcoxon_signed_rank(gaps.differences).p_value;
    }
    return gaps;
}

// ---------------------------------------------------------------------------
// Census comparison panel

enum class CensusField : std::uint8_t {
    population,
    hs_share,
    college_share,
    income_eur,
    foreign_share,
};

inline constexpr std::array<std::string_view, 5> kCensusFieldNames = {
    "population", "hs_share", "college_share", "income_eur", "foreign_share"};

constexpr std::string_view census_field_name(CensusField f) {
    return kCensusFieldNames[static_cast<std::size_t>(f)];
}

/// How the platform-side value is expressed for a comparison pair.
enum class PlatformMeasure : std::uint8_t { absolute, proportion };

struct VariablePair {
    Attribute attribute = Attribute::users;
    PlatformMeasure measure = PlatformMeasure::absolute;
    CensusField census_field = CensusField::population;
};

/// The comparison set used when none is supplied: totals vs population,
/// college and lives-abroad proportions vs the matching census shares, and
/// the two OS proportions vs income per capita.
inline std::vector<VariablePair> default_variable_pairs() {
    return {
        {Attribute::users, PlatformMeasure::absolute, CensusField::population},
        {Attribute::college, PlatformMeasure::proportion, CensusField::college_share},
        {Attribute::lives_abroad, PlatformMeasure::proportion, CensusField::foreign_share},
        {Attribute::ios, PlatformMeasure::proportion, CensusField::income_eur},
        {Attribute::android, PlatformMeasure::proportion, CensusField::income_eur},
    };
}

struct ComparePanelCell {
    VariablePair pair;
    UrbanizationDegree degree = UrbanizationDegree::urban;
    std::size_t n = 0;
    std::size_t n_standard = 0;
    std::size_t n_exclusion = 0;
    std::size_t n_unmatched = 0;   // estimates without a census row
    std::optional<double> pearson_r;
    std::optional<LineFit> line;
};

/// One scatter point of a comparison panel, tagged with how the platform
/// value was obtained.
struct ComparePoint {
    VariablePair pair;
    std::string municipality_id;
    UrbanizationDegree degree = UrbanizationDegree::urban;
    double platform_value = 0.0;
    double census_value = 0.0;
    EstimateMethod method = EstimateMethod::standard;
};

struct CompareResult {
    std::vector<ComparePanelCell> cells;
    std::vector<ComparePoint> points;
};

inline std::optional<double> census_value(const CensusRecord& c, CensusField f) {
    switch (f) {
        case CensusField::population: return static_cast<double>(c.population);
        case CensusField::hs_share: return c.high_school_share;
        case CensusField::college_share: return c.college_share;
        case CensusField::income_eur: return c.income_per_capita;
        case CensusField::foreign_share: return c.foreign_resident_share;
    }
    return std::nullopt;
}

/// Correlates platform estimates with census statistics per urbanization
/// degree. Municipalities without a census row are excluded and counted;
/// every retained point keeps its estimation-method tag.
inline CompareResult census_compare(
    const std::vector<EstimateRecord>& panel,
    const std::unordered_map<std::string, CensusRecord>& census, const MunicipalityIndex& index,
    const std::vector<VariablePair>& pairs, std::int64_t threshold, std::int64_t censor_floor) {
    auto indices = proportion_indices(panel, threshold, censor_floor);
    std::map<std::pair<std::string, std::size_t>, const ProportionIndex*> index_by_cell;
    for (const auto& p : indices) {
        index_by_cell[{p.municipality_id, attribute_index(p.attribute)}] = &p;
    }
    std::map<std::pair<std::string, std::size_t>, const EstimateRecord*> record_by_cell;
    for (const auto& rec : panel) {
        record_by_cell[{rec.municipality_id, attribute_index(rec.attribute)}] = &rec;
    }

    CompareResult out;
    for (const auto& pair : pairs) {
        std::array<ComparePanelCell, kDegreeCount> cells;
        std::array<std::vector<double>, kDegreeCount> xs, ys;
        for (std::size_t d = 0; d < kDegreeCount; ++d) {
            cells[d].pair = pair;
            cells[d].degree = static_cast<UrbanizationDegree>(d);
        }
        std::vector<std::string> ids;
        ids.reserve(index.size());
        for (const auto& [id, info] : index) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) {
            const auto& info = index.at(id);
            std::size_t d = degree_index(info.degree);
            double x = 0.0;
            EstimateMethod method = EstimateMethod::standard;
            if (pair.measure == PlatformMeasure::absolute) {
                auto it = record_by_cell.find({id, attribute_index(pair.attribute)});
                if (it == record_by_cell.end() ||
                    !is_valid_estimate(*it->second, threshold, censor_floor)) {
                    continue;
                }
                x = static_cast<double>(*it->second->aggregate);
                method = it->second->method;
            } else {
                auto it = index_by_cell.find({id, attribute_index(pair.attribute)});
                if (it == index_by_cell.end()) continue;
                x = it->second->value;
                method = it->second->method;
            }
            auto cit = census.find(id);
            if (cit == census.end()) {
                cells[d].n_unmatched++;
                continue;
            }
            auto y = census_value(cit->second, pair.census_field);
            if (!y) continue;
            xs[d].push_back(x);
            ys[d].push_back(*y);
            cells[d].n++;
            if (method == EstimateMethod::standard) cells[d].n_standard++;
            else cells[d].n_exclusion++;
            out.points.push_back({pair, id, info.degree, x, *y, method});
        }
        for (std::size_t d = 0; d < kDegreeCount; ++d) {
            cells[d].pearson_r = pearson(xs[d], ys[d]);
            cells[d].line = fit_line(xs[d], ys[d]);
            out.cells.push_back(std::move(cells[d]));
        }
    }
    return out;
}

}  // namespace audscope
