#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "audscope/csv.hpp"
#include "audscope/errors.hpp"
#include "audscope/estimator.hpp"
#include "audscope/store.hpp"
#include "audscope/types.hpp"

namespace audscope {

// ---------------------------------------------------------------------------
// Census reference data

struct CensusEntry {
    std::string municipality_id;
    std::string name;
    std::string province_id;
    UrbanizationDegree degree = UrbanizationDegree::rural;
    CensusRecord record;
};

struct RowIssue {
    std::size_t line = 0;   // 1-based source line
    std::string message;
};

struct CensusLoadResult {
    std::vector<CensusEntry> entries;
    std::vector<RowIssue> rejected;
};

/// Loads and validates the census CSV. Rows that violate the record
/// invariants are rejected with their line numbers; a missing column or an
/// empty file is fatal.
inline CensusLoadResult load_census(const std::string& path) {
    auto table = csv::read_file(path);
    std::size_t c_id = csv::column_index(table, "municipality_id", path);
    std::size_t c_name = csv::column_index(table, "name", path);
    std::size_t c_prov = csv::column_index(table, "province_id", path);
    std::size_t c_degree = csv::column_index(table, "degree", path);
    std::size_t c_pop = csv::column_index(table, "population", path);
    std::size_t c_male = csv::column_index(table, "male", path);
    std::size_t c_female = csv::column_index(table, "female", path);
    std::size_t c_hs = csv::column_index(table, "hs_share", path);
    std::size_t c_college = csv::column_index(table, "college_share", path);
    std::size_t c_income = csv::column_index(table, "income_eur", path);
    std::size_t c_foreign = csv::column_index(table, "foreign_share", path);

    CensusLoadResult result;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        std::size_t line = table.row_lines[r];
        auto reject = [&](const std::string& why) { result.rejected.push_back({line, why}); };
        if (row.size() != table.header.size()) {
            reject("wrong field count");
            continue;
        }

        CensusEntry entry;
        entry.municipality_id = row[c_id];
        entry.name = row[c_name];
        entry.province_id = row[c_prov];
        if (entry.municipality_id.empty()) {
            reject("empty municipality_id");
            continue;
        }
        if (entry.province_id.empty()) {
            reject("empty province_id");
            continue;
        }
        try {
            entry.degree = degree_from_name(row[c_degree]);
        } catch (const Error&) {
            reject("unknown degree '" + row[c_degree] + "'");
            continue;
        }

        auto pop = csv::parse_int(row[c_pop]);
        if (!pop || *pop < 0) {
            reject("unparseable population '" + row[c_pop] + "'");
            continue;
        }
        entry.record.population = *pop;

        bool bad = false;
        auto opt_count = [&](std::size_t col, const char* what) -> std::optional<std::int64_t> {
            if (row[col].empty()) return std::nullopt;
            auto v = csv::parse_int(row[col]);
            if (!v || *v < 0) {
                reject(std::string("unparseable ") + what + " '" + row[col] + "'");
                bad = true;
                return std::nullopt;
            }
            return v;
        };
        auto opt_share = [&](std::size_t col, const char* what) -> std::optional<double> {
            if (row[col].empty()) return std::nullopt;
            auto v = csv::parse_double(row[col]);
            if (!v) {
                reject(std::string("unparseable ") + what + " '" + row[col] + "'");
                bad = true;
                return std::nullopt;
            }
            if (*v < 0.0 || *v > 1.0) {
                reject(std::string(what) + " out of [0,1]: " + row[col]);
                bad = true;
                return std::nullopt;
            }
            return v;
        };

        entry.record.male_count = opt_count(c_male, "male count");
        entry.record.female_count = opt_count(c_female, "female count");
        entry.record.high_school_share = opt_share(c_hs, "hs_share");
        entry.record.college_share = opt_share(c_college, "college_share");
        entry.record.foreign_resident_share = opt_share(c_foreign, "foreign_share");
        if (!row[c_income].empty()) {
            auto v = csv::parse_double(row[c_income]);
            if (!v) {
                reject("unparseable income '" + row[c_income] + "'");
                bad = true;
            } else if (*v <= 0.0) {
                reject("income must be positive: " + row[c_income]);
                bad = true;
            } else {
                entry.record.income_per_capita = v;
            }
        }
        if (bad) continue;

        std::int64_t mf = entry.record.male_count.value_or(0) + entry.record.female_count.value_or(0);
        if (mf > entry.record.population) {
            reject("male+female exceeds population");
            continue;
        }
        result.entries.push_back(std::move(entry));
    }
    return result;
}

inline std::unordered_map<std::string, CensusRecord> census_by_id(const CensusLoadResult& load) {
    std::unordered_map<std::string, CensusRecord> out;
    for (const auto& e : load.entries) out[e.municipality_id] = e.record;
    return out;
}

// ---------------------------------------------------------------------------
// Name matching

namespace detail {

/// Folds the Latin-1 / Latin Extended-A accented letters that occur in
/// Italian place names to their ASCII base letter.
inline char fold_accent(unsigned char lead, unsigned char cont) {
    if (lead == 0xC3) {
        if (cont >= 0x80 && cont <= 0x85) return 'a';   // À..Å
        if (cont == 0x87) return 'c';                   // Ç
        if (cont >= 0x88 && cont <= 0x8B) return 'e';   // È..Ë
        if (cont >= 0x8C && cont <= 0x8F) return 'i';   // Ì..Ï
        if (cont == 0x91) return 'n';                   // Ñ
        if (cont >= 0x92 && cont <= 0x96) return 'o';   // Ò..Ö
        if (cont >= 0x99 && cont <= 0x9C) return 'u';   // Ù..Ü
        if (cont >= 0xA0 && cont <= 0xA5) return 'a';   // à..å
        if (cont == 0xA7) return 'c';                   // ç
        if (cont >= 0xA8 && cont <= 0xAB) return 'e';   // è..ë
        if (cont >= 0xAC && cont <= 0xAF) return 'i';   // ì..ï
        if (cont == 0xB1) return 'n';                   // ñ
        if (cont >= 0xB2 && cont <= 0xB6) return 'o';   // ò..ö
        if (cont >= 0xB9 && cont <= 0xBC) return 'u';   // ù..ü
    }
    return 0;
}

}  // namespace detail

/// Case-folds, strips accents, and drops punctuation; runs of whitespace
/// collapse to single spaces.
inline std::string normalize_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    auto push = [&](char c) {
        if (pending_space && !out.empty()) out += ' ';
        pending_space = false;
        out += c;
    };
    for (std::size_t i = 0; i < name.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(name[i]);
        if (c < 0x80) {
            if (c >= 'A' && c <= 'Z') push(static_cast<char>(c - 'A' + 'a'));
            else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) push(static_cast<char>(c));
            else if (c == ' ' || c == '\t') pending_space = true;
            // other ASCII punctuation dropped
        } else if ((c & 0xE0) == 0xC0 && i + 1 < name.size()) {
            char folded = detail::fold_accent(c, static_cast<unsigned char>(name[i + 1]));
            if (folded) push(folded);
            ++i;
        } else if ((c & 0xF0) == 0xE0) {
            i += 2;   // unknown 3-byte sequence, dropped
        } else if ((c & 0xF8) == 0xF0) {
            i += 3;
        }
    }
    return out;
}

/// Classic two-row edit distance.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() > b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(a.size() + 1), curr(a.size() + 1);
    for (std::size_t i = 0; i <= a.size(); ++i) prev[i] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
        curr[0] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            std::size_t sub = prev[i - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[i] = std::min({prev[i] + 1, curr[i - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[a.size()];
}

/// 1 - distance/max(len), on normalized names.
inline double name_similarity(std::string_view normalized_a, std::string_view normalized_b) {
    std::size_t longest = std::max(normalized_a.size(), normalized_b.size());
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(normalized_a, normalized_b)) /
                     static_cast<double>(longest);
}

enum class MatchDisposition : std::uint8_t { exact = 0, fuzzy = 1, unmatched = 2 };

inline constexpr std::array<std::string_view, 3> kDispositionNames = {"exact", "fuzzy",
                                                                      "unmatched"};

constexpr std::string_view disposition_name(MatchDisposition d) {
    return kDispositionNames[static_cast<std::size_t>(d)];
}

struct MatchResult {
    std::string source_name;
    std::optional<std::string> matched_id;
    double similarity = 0.0;
    MatchDisposition disposition = MatchDisposition::unmatched;
};

struct NamedId {
    std::string id;
    std::string name;
};

inline constexpr double kDefaultMatchCutoff = 0.85;

/// Links source names to platform entries: exact on the normalized form,
/// otherwise the best Levenshtein similarity at or above the cutoff. Ties
/// break to the lexicographically first candidate, so reruns are identical.
inline std::vector<MatchResult> match_names(const std::vector<std::string>& source_names,
                                            const std::vector<NamedId>& candidates,
                                            double cutoff = kDefaultMatchCutoff) {
    if (source_names.empty() || candidates.empty()) {
        throw ConfigError("match_names requires non-empty name lists");
    }
    struct Candidate {
        std::string normalized;
        const NamedId* entry;
    };
    std::vector<Candidate> normalized;
    normalized.reserve(candidates.size());
    for (const auto& c : candidates) normalized.push_back({normalize_name(c.name), &c});
    std::sort(normalized.begin(), normalized.end(), [](const Candidate& a, const Candidate& b) {
        if (a.normalized != b.normalized) return a.normalized < b.normalized;
        return a.entry->name != b.entry->name ? a.entry->name < b.entry->name
                                              : a.entry->id < b.entry->id;
    });
    std::unordered_map<std::string_view, const NamedId*> exact;
    for (const auto& c : normalized) exact.try_emplace(c.normalized, c.entry);

    std::vector<MatchResult> results;
    results.reserve(source_names.size());
    for (const auto& source : source_names) {
        MatchResult res;
        res.source_name = source;
        std::string norm = normalize_name(source);
        if (auto it = exact.find(norm); it != exact.end()) {
            res.matched_id = it->second->id;
            res.similarity = 1.0;
            res.disposition = MatchDisposition::exact;
        } else {
            double best = -1.0;
            const NamedId* best_entry = nullptr;
            for (const auto& c : normalized) {
                double sim = name_similarity(norm, c.normalized);
                if (sim > best) {   // candidates pre-sorted, first wins ties
                    best = sim;
                    best_entry = c.entry;
                }
            }
            if (best_entry && best >= cutoff) {
                res.matched_id = best_entry->id;
                res.similarity = best;
                res.disposition = MatchDisposition::fuzzy;
            } else {
                res.similarity = std::max(best, 0.0);
                res.disposition = MatchDisposition::unmatched;
            }
        }
        results.push_back(std::move(res));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Run store persistence (JSON Lines, lossless round-trip)

inline void persist_run(const std::vector<EstimateRecord>& records, const std::string& path) {
    store::persist_jsonl(records, path, estimate_to_json);
}

inline std::vector<EstimateRecord> load_run(const std::string& path,
                                            store::LoadStats* stats = nullptr) {
    return store::load_jsonl<EstimateRecord>(path, estimate_from_json, stats);
}

}  // namespace audscope
