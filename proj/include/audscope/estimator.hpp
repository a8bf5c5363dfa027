#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "audscope/backend.hpp"
#include "audscope/stats.hpp"
#include "audscope/store.hpp"
#include "audscope/types.hpp"

namespace audscope {

enum class EstimateMethod : std::uint8_t { standard = 0, exclusion = 1 };

inline constexpr std::array<std::string_view, 2> kMethodNames = {"standard", "exclusion"};

constexpr std::string_view method_name(EstimateMethod m) {
    return kMethodNames[static_cast<std::size_t>(m)];
}

inline EstimateMethod method_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
        if (kMethodNames[i] == name) return static_cast<EstimateMethod>(i);
    }
    throw NotFoundError("unknown estimate method: " + std::string(name));
}

/// Per-(municipality, attribute) estimate across repeated collections.
/// The aggregate is the lower median of the runs that produced a value, so
/// it always lies on the reported-value grid.
struct EstimateRecord {
    std::string municipality_id;
    Attribute attribute = Attribute::users;
    EstimateMethod method = EstimateMethod::standard;
    std::vector<std::optional<std::int64_t>> per_run;
    std::optional<std::int64_t> aggregate;
    bool censored = false;   // standard only: the platform reported the floor
    bool valid = false;      // set by apply_validity for a chosen threshold

    bool operator==(const EstimateRecord&) const = default;
};

/// Median across valid runs; lower median for even counts.
inline std::optional<std::int64_t> aggregate_runs(
    const std::vector<std::optional<std::int64_t>>& per_run) {
    std::vector<std::int64_t> present;
    present.reserve(per_run.size());
    for (const auto& v : per_run) {
        if (v) present.push_back(*v);
    }
    return lower_median(std::move(present));
}

/// Validity rule: exclusion estimates count at `threshold` and above;
/// standard estimates must additionally clear the censor floor.
inline bool is_valid_estimate(const EstimateRecord& rec, std::int64_t threshold,
                              std::int64_t censor_floor) {
    if (!rec.aggregate) return false;
    if (*rec.aggregate < threshold) return false;
    if (rec.method == EstimateMethod::standard && *rec.aggregate <= censor_floor) return false;
    return true;
}

inline void apply_validity(std::vector<EstimateRecord>& records, std::int64_t threshold,
                           std::int64_t censor_floor) {
    for (auto& rec : records) rec.valid = is_valid_estimate(rec, threshold, censor_floor);
}

// ---------------------------------------------------------------------------
// Standard collection

/// Queries every (municipality, attribute) cell `runs` times. The `users`
/// pseudo-attribute is always collected, so an empty attribute list collects
/// totals only. Backend failures leave the run value missing; the sweep
/// never aborts.
inline std::vector<EstimateRecord> standard_collect(Backend& backend,
                                                    std::span<const std::string> municipality_ids,
                                                    std::span<const Attribute> attributes,
                                                    int runs) {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (municipality_ids.empty()) throw ConfigError("no municipalities to collect");

    std::vector<Attribute> attrs{Attribute::users};
    for (Attribute a : attributes) {
        if (a != Attribute::users) attrs.push_back(a);
    }

    const std::int64_t floor = backend.censor_model().censor_floor;
    std::vector<EstimateRecord> records;
    records.reserve(municipality_ids.size() * attrs.size());
    for (const auto& id : municipality_ids) {
        for (Attribute attr : attrs) {
            EstimateRecord rec;
            rec.municipality_id = id;
            rec.attribute = attr;
            rec.method = EstimateMethod::standard;
            rec.per_run.assign(static_cast<std::size_t>(runs), std::nullopt);
            TargetingSpec spec({id}, attr);
            for (int r = 0; r < runs; ++r) {
                try {
                    rec.per_run[static_cast<std::size_t>(r)] =
                        backend.query(spec, r).mau_reported;
                } catch (const Error&) {
                    // recorded as missing
                }
            }
            rec.aggregate = aggregate_runs(rec.per_run);
            rec.censored = rec.aggregate && *rec.aggregate > 0 && *rec.aggregate <= floor;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Reference selection

struct Reference {
    std::string municipality_id;
    std::int64_t mau = 0;   // aggregated standard total-audience value
};

struct ReferenceSet {
    std::vector<Reference> references;
    bool underfilled = false;   // fewer eligible municipalities than requested
};

/// Picks reference municipalities from the standard `users` records whose
/// aggregate lands in [min_mau, max_mau]. The choice is deterministic:
/// eligible municipalities sorted by aggregate, picked at nearest-rank
/// quantiles 0, 1/(count-1), ..., 1 of the eligible list.
inline ReferenceSet select_references(const std::vector<EstimateRecord>& standard_records,
                                      int count = 5, std::int64_t min_mau = 2000,
                                      std::int64_t max_mau = 10000) {
    if (count < 1) throw ConfigError("reference count must be >= 1");
    std::vector<Reference> eligible;
    for (const auto& rec : standard_records) {
        if (rec.attribute != Attribute::users || rec.method != EstimateMethod::standard) continue;
        if (!rec.aggregate || rec.censored) continue;
        if (*rec.aggregate < min_mau || *rec.aggregate > max_mau) continue;
        eligible.push_back({rec.municipality_id, *rec.aggregate});
    }
    if (eligible.empty()) {
        throw NoReferenceAvailableError("no municipality has an uncensored total audience in [" +
                                        std::to_string(min_mau) + ", " + std::to_string(max_mau) +
                                        "]");
    }
    std::sort(eligible.begin(), eligible.end(), [](const Reference& a, const Reference& b) {
        return a.mau != b.mau ? a.mau < b.mau : a.municipality_id < b.municipality_id;
    });

    ReferenceSet set;
    if (std::cmp_less(eligible.size(), count)) {
        set.references = std::move(eligible);
        set.underfilled = true;
        return set;
    }
    std::size_t n = eligible.size();
    std::vector<std::size_t> picked;
    for (int j = 0; j < count; ++j) {
        double q = count == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(count - 1);
        // nearest-rank quantile: ceil(q*n) as a 1-based rank
        auto rank = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(n)));
        std::size_t idx = rank <= 1 ? 0 : static_cast<std::size_t>(rank - 1);
        if (idx >= n) idx = n - 1;
        if (picked.empty() || picked.back() != idx) picked.push_back(idx);
    }
    for (std::size_t idx : picked) set.references.push_back(eligible[idx]);
    set.underfilled = set.references.size() < static_cast<std::size_t>(count);
    return set;
}

// ---------------------------------------------------------------------------
// Exclusion query

/// Estimates a censored cell by differencing combined queries against each
/// reference: d_i = mau(target + R_i) - mau(R_i), both taken at the same run
/// epoch and for the same attribute. A difference only counts when neither
/// response is censored and d_i > 0; the estimate is the mean of the
/// surviving differences.
inline std::optional<std::int64_t> exclusion_estimate(Backend& backend,
                                                      const std::string& target_id,
                                                      Attribute attribute,
                                                      const ReferenceSet& refs, int run_index) {
    if (refs.references.empty()) throw ConfigError("exclusion query needs at least one reference");
    const std::int64_t floor = backend.censor_model().censor_floor;
    double sum = 0.0;
    int used = 0;
    for (const auto& ref : refs.references) {
        if (ref.municipality_id == target_id) continue;
        try {
            auto combined =
                backend.query(TargetingSpec({target_id, ref.municipality_id}, attribute), run_index);
            if (combined.mau_reported <= floor) continue;   // combined hit the floor too
            auto alone =
                backend.query(TargetingSpec({ref.municipality_id}, attribute), run_index);
            if (alone.mau_reported <= floor) continue;   // reference itself censored here
            std::int64_t d = combined.mau_reported - alone.mau_reported;
            if (d > 0) {
                sum += static_cast<double>(d);
                ++used;
            }
        } catch (const Error&) {
            // invalid difference, skip
        }
    }
    if (used == 0) return std::nullopt;
    return std::llround(sum / used);
}

/// Runs the exclusion procedure for every censored standard cell, producing
/// one record per cell with per-run estimates and their temporal median.
inline std::vector<EstimateRecord> exclusion_collect(Backend& backend,
                                                     const std::vector<EstimateRecord>& standard_records,
                                                     const ReferenceSet& refs, int runs) {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    std::vector<EstimateRecord> records;
    for (const auto& std_rec : standard_records) {
        if (!std_rec.censored) continue;
        EstimateRecord rec;
        rec.municipality_id = std_rec.municipality_id;
        rec.attribute = std_rec.attribute;
        rec.method = EstimateMethod::exclusion;
        rec.per_run.assign(static_cast<std::size_t>(runs), std::nullopt);
        for (int r = 0; r < runs; ++r) {
            rec.per_run[static_cast<std::size_t>(r)] =
                exclusion_estimate(backend, rec.municipality_id, rec.attribute, refs, r);
        }
        rec.aggregate = aggregate_runs(rec.per_run);
        records.push_back(std::move(rec));
    }
    return records;
}

/// Final estimate panel: the standard record where it cleared the floor,
/// otherwise the exclusion record when one exists.
inline std::vector<EstimateRecord> merge_panel(const std::vector<EstimateRecord>& standard_records,
                                               const std::vector<EstimateRecord>& exclusion_records,
                                               std::int64_t censor_floor) {
    std::map<std::pair<std::string, std::size_t>, const EstimateRecord*> exclusion_by_cell;
    for (const auto& rec : exclusion_records) {
        exclusion_by_cell[{rec.municipality_id, attribute_index(rec.attribute)}] = &rec;
    }
    std::vector<EstimateRecord> panel;
    panel.reserve(standard_records.size());
    for (const auto& std_rec : standard_records) {
        bool uncensored = std_rec.aggregate && *std_rec.aggregate > censor_floor;
        if (!uncensored) {
            auto it = exclusion_by_cell.find(
                {std_rec.municipality_id, attribute_index(std_rec.attribute)});
            if (it != exclusion_by_cell.end()) {
                panel.push_back(*it->second);
                continue;
            }
        }
        panel.push_back(std_rec);
    }
    return panel;
}

// ---------------------------------------------------------------------------
// Exclusion-vs-standard validation

struct ValidationCell {
    Attribute attribute = Attribute::users;
    UrbanizationDegree degree = UrbanizationDegree::urban;
    int sampled = 0;
    std::optional<double> pearson_r;
};

struct ValidationReport {
    std::vector<ValidationCell> cells;
    std::optional<double> mean_r;
};

/// Re-estimates municipalities with known uncensored standard values through
/// the exclusion route and correlates the two estimate vectors per
/// (attribute, degree) cell.
inline ValidationReport validate_exclusion_vs_standard(
    Backend& backend, const std::vector<EstimateRecord>& standard_records,
    const std::unordered_map<std::string, UrbanizationDegree>& degrees, const ReferenceSet& refs,
    int runs, int sample_per_cell = 20) {
    const std::int64_t floor = backend.censor_model().censor_floor;

    std::map<std::pair<std::size_t, std::size_t>, std::vector<const EstimateRecord*>> cells;
    for (const auto& rec : standard_records) {
        if (rec.method != EstimateMethod::standard) continue;
        if (!rec.aggregate || *rec.aggregate <= floor) continue;
        auto it = degrees.find(rec.municipality_id);
        if (it == degrees.end()) continue;
        cells[{attribute_index(rec.attribute), degree_index(it->second)}].push_back(&rec);
    }

    ValidationReport report;
    double r_sum = 0.0;
    int r_count = 0;
    for (auto& [key, recs] : cells) {
        std::sort(recs.begin(), recs.end(), [](const EstimateRecord* a, const EstimateRecord* b) {
            return a->municipality_id < b->municipality_id;
        });
        if (std::cmp_greater(recs.size(), sample_per_cell)) {
            recs.resize(static_cast<std::size_t>(sample_per_cell));
        }
        std::vector<double> std_vals, exc_vals;
        for (const EstimateRecord* rec : recs) {
            std::vector<std::optional<std::int64_t>> per_run(static_cast<std::size_t>(runs));
            for (int r = 0; r < runs; ++r) {
                per_run[static_cast<std::size_t>(r)] =
                    exclusion_estimate(backend, rec->municipality_id, rec->attribute, refs, r);
            }
            auto agg = aggregate_runs(per_run);
            if (!agg) continue;
            std_vals.push_back(static_cast<double>(*rec->aggregate));
            exc_vals.push_back(static_cast<double>(*agg));
        }
        ValidationCell cell;
        cell.attribute = static_cast<Attribute>(key.first);
        cell.degree = static_cast<UrbanizationDegree>(key.second);
        cell.sampled = static_cast<int>(std_vals.size());
        if (std_vals.size() >= 3) cell.pearson_r = pearson(std_vals, exc_vals);
        if (cell.pearson_r) {
            r_sum += *cell.pearson_r;
            ++r_count;
        }
        report.cells.push_back(cell);
    }
    if (r_count > 0) report.mean_r = r_sum / r_count;
    return report;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json estimate_to_json(const EstimateRecord& rec) {
    nlohmann::json j;
    j["municipality_id"] = rec.municipality_id;
    j["attribute"] = attribute_name(rec.attribute);
    j["method"] = method_name(rec.method);
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& v : rec.per_run) {
        if (v) runs.push_back(*v);
        else runs.push_back(nullptr);
    }
    j["per_run"] = std::move(runs);
    if (rec.aggregate) j["aggregate"] = *rec.aggregate;
    else j["aggregate"] = nullptr;
    j["censored"] = rec.censored;
    j["valid"] = rec.valid;
    return j;
}

inline EstimateRecord estimate_from_json(const nlohmann::json& j) {
    EstimateRecord rec;
    rec.municipality_id = j.at("municipality_id").get<std::string>();
    rec.attribute = attribute_from_name(j.at("attribute").get<std::string>());
    rec.method = method_from_name(j.at("method").get<std::string>());
    for (const auto& v : j.at("per_run")) {
        if (v.is_null()) rec.per_run.push_back(std::nullopt);
        else rec.per_run.push_back(v.get<std::int64_t>());
    }
    if (!j.at("aggregate").is_null()) rec.aggregate = j.at("aggregate").get<std::int64_t>();
    rec.censored = j.at("censored").get<bool>();
    rec.valid = j.at("valid").get<bool>();
    return rec;
}

inline void write_estimates_jsonl(const std::vector<EstimateRecord>& records,
                                  const std::string& path) {
    store::persist_jsonl(records, path, estimate_to_json);
}

inline std::vector<EstimateRecord> read_estimates_jsonl(const std::string& path,
                                                        store::LoadStats* stats = nullptr) {
    return store::load_jsonl<EstimateRecord>(path, estimate_from_json, stats);
}

/// Flat CSV export of a panel.
inline void write_estimates_csv(const std::vector<EstimateRecord>& records,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "municipality_id,attribute,method,aggregate,valid\n";
    for (const auto& rec : records) {
        out << csv::quote(rec.municipality_id) << ',' << attribute_name(rec.attribute) << ','
            << method_name(rec.method) << ','
            << (rec.aggregate ? std::to_string(*rec.aggregate) : "") << ','
            << (rec.valid ? "true" : "false") << "\n";
    }
}

}  // namespace audscope
