#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "audscope/errors.hpp"

namespace audscope::store {

struct LoadStats {
    std::size_t loaded = 0;
    std::size_t skipped = 0;
    std::vector<std::size_t> skipped_lines;   // 1-based
};

/// Append-one-JSON-object-per-line persistence. `to_json` must be lossless
/// for the record type so that load(persist(x)) == x.
template <typename Record, typename ToJson>
void persist_jsonl(const std::vector<Record>& records, const std::string& path, ToJson to_json) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    for (const auto& rec : records) {
        out << to_json(rec).dump() << "\n";
    }
}

/// Loads a JSON Lines store. Corrupt lines are skipped and reported in the
/// stats, never fatal.
template <typename Record, typename FromJson>
std::vector<Record> load_jsonl(const std::string& path, FromJson from_json, LoadStats* stats = nullptr) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("store not found: " + path);
    std::vector<Record> records;
    std::string line;
    std::size_t lineno = 0;
    LoadStats local;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            local.skipped++;
            local.skipped_lines.push_back(lineno);
            continue;
        }
        try {
            records.push_back(from_json(j));
            local.loaded++;
        } catch (const std::exception&) {
            local.skipped++;
            local.skipped_lines.push_back(lineno);
        }
    }
    if (stats) *stats = std::move(local);
    return records;
}

}  // namespace audscope::store
