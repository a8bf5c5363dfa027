#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "audscope/attributes.hpp"
#include "audscope/csv.hpp"
#include "audscope/errors.hpp"
#include "audscope/random.hpp"
#include "audscope/types.hpp"

namespace audscope {

/// Per-degree prevalence of one targeting attribute (urban, suburban, rural).
using DegreeShares = std::array<double, kDegreeCount>;

/// Parameters of a synthetic world. Defaults are sized like the Italian
/// municipality taxonomy; tests use much smaller counts.
struct WorldConfig {
    std::array<int, kDegreeCount> municipality_counts = {270, 2303, 5405};
    std::array<double, kDegreeCount> mean_population = {74900.0, 11200.0, 2700.0};
    double penetration = 0.6;        // platform audience as a share of population
    double population_sigma = 0.55;  // log-normal spread of municipality sizes
    int provinces = 107;
    double unmatched_share = 0.0;    // municipalities absent from the platform (audience 0)

    /// Prevalence of each constrained attribute by degree. users row ignored.
    std::array<DegreeShares, kAttributeCount> prevalence = default_prevalence();

    /// Cross-municipality spread of the prevalences: each municipality's
    /// effective rate is the degree base plus a normal draw with this sd,
    /// clamped to [0,1]. Attributes with a zero base stay off.
    double prevalence_jitter = 0.0;

    // Census synthesis: shares get a small perturbation around the realized
    // audience shares; income is a linear signal plus noise.
    double census_share_noise = 0.01;
    double income_base = 16000.0;
    double income_noise = 900.0;
    std::array<double, kAttributeCount> income_coefficients = default_income_coefficients();

    static std::array<DegreeShares, kAttributeCount> default_prevalence() {
        std::array<DegreeShares, kAttributeCount> p{};
        auto set = [&](Attribute a, double urban, double suburban, double rural) {
            p[attribute_index(a)] = {urban, suburban, rural};
        };
        set(Attribute::users, 1.0, 1.0, 1.0);
        set(Attribute::male, 0.53, 0.53, 0.55);
        set(Attribute::female, 0.47, 0.47, 0.45);
        set(Attribute::single_status, 0.40, 0.35, 0.30);
        set(Attribute::married, 0.35, 0.40, 0.45);
        set(Attribute::high_school, 0.50, 0.45, 0.40);
        set(Attribute::college, 0.28, 0.18, 0.10);
        set(Attribute::network_3g, 0.10, 0.14, 0.18);
        set(Attribute::network_4g, 0.30, 0.38, 0.45);
        set(Attribute::wifi, 0.55, 0.45, 0.35);
        set(Attribute::android, 0.50, 0.55, 0.62);
        set(Attribute::ios, 0.35, 0.28, 0.20);
        set(Attribute::tech_early_adopter, 0.10, 0.07, 0.05);
        set(Attribute::lives_abroad, 0.06, 0.05, 0.05);
        set(Attribute::away_from_hometown, 0.25, 0.20, 0.15);
        set(Attribute::frequent_travelers, 0.12, 0.18, 0.25);
        set(Attribute::frequent_intl_travelers, 0.10, 0.06, 0.03);
        set(Attribute::catholic_church, 0.08, 0.12, 0.16);
        set(Attribute::gambling, 0.05, 0.07, 0.09);
        set(Attribute::cooking, 0.20, 0.25, 0.30);
        set(Attribute::fast_food, 0.18, 0.16, 0.14);
        set(Attribute::restaurants, 0.35, 0.30, 0.25);
        set(Attribute::fitness_wellness, 0.25, 0.18, 0.12);
        return p;
    }

    static std::array<double, kAttributeCount> default_income_coefficients() {
        std::array<double, kAttributeCount> c{};
        c[attribute_index(Attribute::ios)] = 12000.0;
        c[attribute_index(Attribute::android)] = -8000.0;
        c[attribute_index(Attribute::college)] = 9000.0;
        c[attribute_index(Attribute::frequent_travelers)] = -6000.0;
        c[attribute_index(Attribute::network_4g)] = -3000.0;
        c[attribute_index(Attribute::fitness_wellness)] = 4000.0;
        c[attribute_index(Attribute::single_status)] = -2000.0;
        return c;
    }

    void validate() const {
        for (int n : municipality_counts) {
            if (n < 0) throw ConfigError("municipality count must be >= 0");
        }
        if (penetration < 0.0 || penetration > 1.0) {
            throw ConfigError("penetration must be in [0,1]");
        }
        if (unmatched_share < 0.0 || unmatched_share > 1.0) {
            throw ConfigError("unmatched_share must be in [0,1]");
        }
        if (provinces < 1) throw ConfigError("provinces must be >= 1");
        if (prevalence_jitter < 0.0) throw ConfigError("prevalence_jitter must be >= 0");
        for (const auto& row : prevalence) {
            for (double p : row) {
                if (p < 0.0 || p > 1.0) throw ConfigError("prevalence must be in [0,1]");
            }
        }
    }
};

/// One municipality with its true (uncensored) audience counts.
struct WorldMunicipality {
    Municipality info;
    std::int64_t true_users = 0;
    std::array<std::int64_t, kAttributeCount> true_counts{};   // [users] == true_users
};

struct World {
    std::uint64_t seed = 0;
    std::vector<WorldMunicipality> municipalities;
    std::unordered_map<std::string, std::size_t> index;   // id -> position

    const WorldMunicipality* find(const std::string& id) const {
        auto it = index.find(id);
        return it == index.end() ? nullptr : &municipalities[it->second];
    }

    void rebuild_index() {
        index.clear();
        for (std::size_t i = 0; i < municipalities.size(); ++i) {
            auto [it, inserted] = index.emplace(municipalities[i].info.id, i);
            if (!inserted) throw ConfigError("duplicate municipality id: " + municipalities[i].info.id);
        }
    }
};

namespace detail {

inline const std::array<std::string_view, 24> kSyllables = {
    "mon", "te", "ver", "de", "san", "ta", "fio", "ra",  "cas", "tel", "lo", "ri",
    "pog", "gio", "val", "da", "bor", "go", "sel", "va", "pie", "ve", "cam", "po"};

inline std::string synth_name(Rng& rng, std::size_t index) {
    int parts = static_cast<int>(rng.uniform_int(3, 5));
    std::string name;
    for (int i = 0; i < parts; ++i) {
        name += kSyllables[static_cast<std::size_t>(rng.uniform_int(0, 23))];
    }
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    if (rng.uniform01() < 0.25) {
        name += " ";
        name += std::to_string(index % 97);
    }
    return name;
}

}  // namespace detail

/// Deterministic synthetic world: identical (config, seed) pairs produce
/// bit-identical worlds.
inline World simulate_world(const WorldConfig& config, std::uint64_t seed) {
    config.validate();
    World world;
    world.seed = seed;

    std::size_t total = 0;
    for (int n : config.municipality_counts) total += static_cast<std::size_t>(n);
    world.municipalities.reserve(total);

    std::size_t serial = 0;
    for (auto degree : all_degrees()) {
        std::size_t d = degree_index(degree);
        for (int i = 0; i < config.municipality_counts[d]; ++i, ++serial) {
            std::uint64_t muni_seed = hash_combine(hash_combine(seed, 0x6D756E69ULL), serial);
            Rng rng(muni_seed);

            WorldMunicipality wm;
            char id[16];
            std::snprintf(id, sizeof(id), "M%05zu", serial);
            wm.info.id = id;
            wm.info.name = detail::synth_name(rng, serial);
            wm.info.province_id = "P" + std::to_string(serial % static_cast<std::size_t>(config.provinces));
            wm.info.degree = degree;

            bool unmatched = rng.uniform01() < config.unmatched_share;
            double audience_scale = config.mean_population[d] * config.penetration;
            double noisy = audience_scale * rng.lognormal_factor(config.population_sigma);
            wm.true_users = unmatched ? 0 : std::max<std::int64_t>(0, std::llround(noisy));
            wm.true_counts[attribute_index(Attribute::users)] = wm.true_users;

            for (auto attr : constrained_attributes()) {
                double prev = config.prevalence[attribute_index(attr)][d];
                if (prev > 0.0 && config.prevalence_jitter > 0.0) {
                    prev = std::clamp(prev + rng.normal(0.0, config.prevalence_jitter), 0.0, 1.0);
                }
                wm.true_counts[attribute_index(attr)] = rng.binomial(wm.true_users, prev);
            }

            // Census ground truth derived from the same draws. Population is
            // the audience scaled back by penetration; shares follow the
            // realized audience shares with a small perturbation.
            CensusRecord census;
            double pop_base = config.penetration > 0.0
                                  ? static_cast<double>(std::max<std::int64_t>(wm.true_users, 1)) /
                                        config.penetration
                                  : config.mean_population[d];
            if (unmatched) {
                pop_base = config.mean_population[d] * rng.lognormal_factor(config.population_sigma);
            }
            census.population = std::max<std::int64_t>(1, std::llround(pop_base));

            auto realized_share = [&](Attribute a) {
                if (wm.true_users <= 0) return config.prevalence[attribute_index(a)][d];
                return static_cast<double>(wm.true_counts[attribute_index(a)]) /
                       static_cast<double>(wm.true_users);
            };
            auto perturbed = [&](double share) {
                double s = share + rng.normal(0.0, config.census_share_noise);
                return std::clamp(s, 0.0, 1.0);
            };

            double male_share = perturbed(realized_share(Attribute::male));
            double female_share = std::min(perturbed(realized_share(Attribute::female)),
                                           1.0 - male_share);
            census.male_count = std::llround(male_share * static_cast<double>(census.population));
            census.female_count = std::min<std::int64_t>(
                std::llround(female_share * static_cast<double>(census.population)),
                census.population - *census.male_count);
            census.high_school_share = perturbed(realized_share(Attribute::high_school));
            census.college_share = perturbed(realized_share(Attribute::college));
            census.foreign_resident_share = perturbed(realized_share(Attribute::lives_abroad));

            double income = config.income_base;
            for (auto attr : constrained_attributes()) {
                income += config.income_coefficients[attribute_index(attr)] * realized_share(attr);
            }
            income += rng.normal(0.0, config.income_noise);
            census.income_per_capita = std::max(1.0, income);

            wm.info.census = census;
            world.municipalities.push_back(std::move(wm));
        }
    }
    world.rebuild_index();
    return world;
}

// ---------------------------------------------------------------------------
// World fixture file (platform registry + true audiences)

inline void write_world_csv(const World& world, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "municipality_id,name,province_id,degree,true_users";
    for (auto attr : constrained_attributes()) out << ",true_" << attribute_name(attr);
    out << "\n";
    for (const auto& wm : world.municipalities) {
        out << csv::quote(wm.info.id) << ',' << csv::quote(wm.info.name) << ','
            << csv::quote(wm.info.province_id) << ',' << degree_name(wm.info.degree) << ','
            << wm.true_users;
        for (auto attr : constrained_attributes()) {
            out << ',' << wm.true_counts[attribute_index(attr)];
        }
        out << "\n";
    }
}

inline World read_world_csv(const std::string& path) {
    auto table = csv::read_file(path);
    std::size_t c_id = csv::column_index(table, "municipality_id", path);
    std::size_t c_name = csv::column_index(table, "name", path);
    std::size_t c_prov = csv::column_index(table, "province_id", path);
    std::size_t c_degree = csv::column_index(table, "degree", path);
    std::size_t c_users = csv::column_index(table, "true_users", path);
    std::array<std::size_t, kAttributeCount> c_attr{};
    for (auto attr : constrained_attributes()) {
        c_attr[attribute_index(attr)] =
            csv::column_index(table, "true_" + std::string(attribute_name(attr)), path);
    }

    World world;
    world.municipalities.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        WorldMunicipality wm;
        wm.info.id = row.at(c_id);
        wm.info.name = row.at(c_name);
        wm.info.province_id = row.at(c_prov);
        if (wm.info.province_id.empty()) {
            throw SchemaError("empty province_id at line " + std::to_string(table.row_lines[r]));
        }
        wm.info.degree = degree_from_name(row.at(c_degree));
        auto users = csv::parse_int(row.at(c_users));
        if (!users || *users < 0) {
            throw SchemaError("bad true_users at line " + std::to_string(table.row_lines[r]));
        }
        wm.true_users = *users;
        wm.true_counts[attribute_index(Attribute::users)] = *users;
        for (auto attr : constrained_attributes()) {
            auto v = csv::parse_int(row.at(c_attr[attribute_index(attr)]));
            if (!v || *v < 0) {
                throw SchemaError("bad true count at line " + std::to_string(table.row_lines[r]));
            }
            wm.true_counts[attribute_index(attr)] = *v;
        }
        world.municipalities.push_back(std::move(wm));
    }
    world.rebuild_index();
    return world;
}

/// Census reference file for the same world (ingest schema).
inline void write_census_csv(const World& world, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "municipality_id,name,province_id,degree,population,male,female,"
           "hs_share,college_share,income_eur,foreign_share\n";
    for (const auto& wm : world.municipalities) {
        const auto& c = wm.info.census;
        out << csv::quote(wm.info.id) << ',' << csv::quote(wm.info.name) << ','
            << csv::quote(wm.info.province_id) << ',' << degree_name(wm.info.degree) << ',';
        if (c) {
            out << c->population << ',';
            out << (c->male_count ? std::to_string(*c->male_count) : "") << ',';
            out << (c->female_count ? std::to_string(*c->female_count) : "") << ',';
            out << (c->high_school_share ? csv::fmt(*c->high_school_share) : "") << ',';
            out << (c->college_share ? csv::fmt(*c->college_share) : "") << ',';
            out << (c->income_per_capita ? csv::fmt(*c->income_per_capita) : "") << ',';
            out << (c->foreign_resident_share ? csv::fmt(*c->foreign_resident_share) : "");
        } else {
            out << ",,,,,,";
        }
        out << "\n";
    }
}

}  // namespace audscope
