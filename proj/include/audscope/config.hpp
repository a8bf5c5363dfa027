#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "audscope/censor.hpp"
#include "audscope/errors.hpp"
#include "audscope/types.hpp"
#include "audscope/world.hpp"

namespace audscope {

/// Plain-text key=value configuration. Blank lines and '#' comments ignored.
inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + " is not key=value: " + t);
        }
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

/// Everything a pipeline run needs. Defaults follow the documented operating
/// point: 5 runs, validity threshold 200 users, 5 references.
struct RunConfig {
    std::uint64_t seed = 1;
    BackendKind backend = BackendKind::simulator;
    int runs = 5;
    std::int64_t threshold = 200;
    int reference_count = 5;
    double interval_seconds = 8.0;
    double min_coverage = 0.40;   // regression cutoff rule
    std::vector<Attribute> attributes;   // constrained attributes to collect
    CensorModel censor;
    WorldConfig world;

    RunConfig() {
        auto all = constrained_attributes();
        attributes.assign(all.begin(), all.end());
    }

    void validate() const {
        if (runs < 1) throw ConfigError("runs must be >= 1");
        if (threshold < 0 || threshold % censor.resolution != 0) {
            throw ConfigError("threshold must be a non-negative multiple of the resolution");
        }
        if (reference_count < 1) throw ConfigError("reference_count must be >= 1");
        if (interval_seconds <= 0.0) throw ConfigError("interval_seconds must be > 0");
        censor.validate();
        world.validate();
    }
};

namespace detail {

inline std::int64_t kv_int(const std::map<std::string, std::string>& kv, const std::string& key,
                           std::int64_t fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
    }
}

inline double kv_double(const std::map<std::string, std::string>& kv, const std::string& key,
                        double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: " + it->second);
    }
}

}  // namespace detail

/// Applies key=value settings on top of the defaults. Core keys:
/// seed, runs, threshold, censor_floor, resolution, noise_sigma, rounding,
/// interval_seconds, backend, reference_count, attributes. World keys:
/// urban/suburban/rural counts, mean_pop_*, penetration, pop_sigma,
/// provinces, unmatched_share, prev_<attr>[_<degree>], income_*,
/// census_share_noise, min_coverage. Unknown keys are rejected so prevalence
/// typos cannot silently fall back to defaults.
inline RunConfig config_from_kv(const std::map<std::string, std::string>& kv) {
    static const std::set<std::string> kFixedKeys = [] {
        std::set<std::string> keys = {
            "seed",          "runs",
            "threshold",     "reference_count",
            "interval_seconds", "min_coverage",
            "censor_floor",  "resolution",
            "noise_sigma",   "rounding",
            "backend",       "attributes",
            "urban",         "suburban",
            "rural",         "mean_pop_urban",
            "mean_pop_suburban", "mean_pop_rural",
            "penetration",   "pop_sigma",
            "provinces",     "unmatched_share",
            "prevalence_jitter",
            "census_share_noise", "income_base",
            "income_noise"};
        for (auto attr : constrained_attributes()) {
            std::string base = "prev_" + std::string(attribute_name(attr));
            keys.insert(base);
            for (auto degree : all_degrees()) {
                keys.insert(base + "_" + std::string(degree_name(degree)));
            }
            keys.insert("income_coef_" + std::string(attribute_name(attr)));
        }
        return keys;
    }();
    for (const auto& [key, value] : kv) {
        if (!kFixedKeys.count(key)) throw ConfigError("unknown config key: " + key);
    }

    RunConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(detail::kv_int(kv, "seed", 1));
    cfg.runs = static_cast<int>(detail::kv_int(kv, "runs", cfg.runs));
    cfg.threshold = detail::kv_int(kv, "threshold", cfg.threshold);
    cfg.reference_count = static_cast<int>(detail::kv_int(kv, "reference_count", cfg.reference_count));
    cfg.interval_seconds = detail::kv_double(kv, "interval_seconds", cfg.interval_seconds);
    cfg.min_coverage = detail::kv_double(kv, "min_coverage", cfg.min_coverage);
    cfg.censor.censor_floor = detail::kv_int(kv, "censor_floor", cfg.censor.censor_floor);
    cfg.censor.resolution = detail::kv_int(kv, "resolution", cfg.censor.resolution);
    cfg.censor.noise_sigma = detail::kv_double(kv, "noise_sigma", cfg.censor.noise_sigma);
    if (auto it = kv.find("rounding"); it != kv.end()) {
        cfg.censor.rounding = rounding_from_name(it->second);
    }
    if (auto it = kv.find("backend"); it != kv.end()) {
        if (it->second == "sim" || it->second == "simulator") cfg.backend = BackendKind::simulator;
        else if (it->second == "replay") cfg.backend = BackendKind::replay;
        else throw ConfigError("backend must be sim or replay: " + it->second);
    }
    if (auto it = kv.find("attributes"); it != kv.end()) {
        cfg.attributes.clear();
        std::string list = it->second;
        std::size_t start = 0;
        while (start <= list.size()) {
            auto comma = list.find(',', start);
            std::string token = list.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!token.empty()) {
                Attribute attr = attribute_from_name(token);
                bool dup = false;
                for (Attribute seen : cfg.attributes) dup = dup || seen == attr;
                if (!dup) cfg.attributes.push_back(attr);
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        // an empty list is allowed: the users pseudo-attribute is always collected
    }

    cfg.world.municipality_counts[0] =
        static_cast<int>(detail::kv_int(kv, "urban", cfg.world.municipality_counts[0]));
    cfg.world.municipality_counts[1] =
        static_cast<int>(detail::kv_int(kv, "suburban", cfg.world.municipality_counts[1]));
    cfg.world.municipality_counts[2] =
        static_cast<int>(detail::kv_int(kv, "rural", cfg.world.municipality_counts[2]));
    cfg.world.mean_population[0] =
        detail::kv_double(kv, "mean_pop_urban", cfg.world.mean_population[0]);
    cfg.world.mean_population[1] =
        detail::kv_double(kv, "mean_pop_suburban", cfg.world.mean_population[1]);
    cfg.world.mean_population[2] =
        detail::kv_double(kv, "mean_pop_rural", cfg.world.mean_population[2]);
    cfg.world.penetration = detail::kv_double(kv, "penetration", cfg.world.penetration);
    cfg.world.population_sigma = detail::kv_double(kv, "pop_sigma", cfg.world.population_sigma);
    cfg.world.provinces = static_cast<int>(detail::kv_int(kv, "provinces", cfg.world.provinces));
    cfg.world.unmatched_share =
        detail::kv_double(kv, "unmatched_share", cfg.world.unmatched_share);
    cfg.world.prevalence_jitter =
        detail::kv_double(kv, "prevalence_jitter", cfg.world.prevalence_jitter);
    cfg.world.census_share_noise =
        detail::kv_double(kv, "census_share_noise", cfg.world.census_share_noise);
    cfg.world.income_base = detail::kv_double(kv, "income_base", cfg.world.income_base);
    cfg.world.income_noise = detail::kv_double(kv, "income_noise", cfg.world.income_noise);

    for (auto attr : constrained_attributes()) {
        std::string base = "prev_" + std::string(attribute_name(attr));
        std::size_t idx = attribute_index(attr);
        if (kv.count(base)) {
            double v = detail::kv_double(kv, base, 0.0);
            cfg.world.prevalence[idx] = {v, v, v};
        }
        for (auto degree : all_degrees()) {
            std::string key = base + "_" + std::string(degree_name(degree));
            if (kv.count(key)) {
                cfg.world.prevalence[idx][degree_index(degree)] = detail::kv_double(kv, key, 0.0);
            }
        }
        std::string coef = "income_coef_" + std::string(attribute_name(attr));
        if (kv.count(coef)) {
            cfg.world.income_coefficients[idx] = detail::kv_double(kv, coef, 0.0);
        }
    }
    cfg.validate();
    return cfg;
}

/// Canonical text form of the effective configuration; hashed into manifests.
inline std::string config_canonical(const RunConfig& cfg) {
    std::string s;
    auto add = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    add("seed", std::to_string(cfg.seed));
    add("backend", std::string(backend_name(cfg.backend)));
    add("runs", std::to_string(cfg.runs));
    add("threshold", std::to_string(cfg.threshold));
    add("reference_count", std::to_string(cfg.reference_count));
    add("censor_floor", std::to_string(cfg.censor.censor_floor));
    add("resolution", std::to_string(cfg.censor.resolution));
    add("noise_sigma", csv::fmt(cfg.censor.noise_sigma));
    add("rounding", std::string(rounding_name(cfg.censor.rounding)));
    add("min_coverage", csv::fmt(cfg.min_coverage));
    std::string attrs;
    for (auto a : cfg.attributes) {
        if (!attrs.empty()) attrs += ",";
        attrs += attribute_name(a);
    }
    add("attributes", attrs);
    add("urban", std::to_string(cfg.world.municipality_counts[0]));
    add("suburban", std::to_string(cfg.world.municipality_counts[1]));
    add("rural", std::to_string(cfg.world.municipality_counts[2]));
    add("penetration", csv::fmt(cfg.world.penetration));
    add("pop_sigma", csv::fmt(cfg.world.population_sigma));
    add("provinces", std::to_string(cfg.world.provinces));
    for (auto attr : constrained_attributes()) {
        std::size_t idx = attribute_index(attr);
        std::string prev;
        for (std::size_t d = 0; d < kDegreeCount; ++d) {
            if (d) prev += "/";
            prev += csv::fmt(cfg.world.prevalence[idx][d]);
        }
        add("prev_" + std::string(attribute_name(attr)), prev);
    }
    return s;
}

}  // namespace audscope
