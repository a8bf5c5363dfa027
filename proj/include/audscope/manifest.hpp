#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "audscope/errors.hpp"
#include "audscope/hash.hpp"

namespace audscope {

/// Provenance record written next to every command's artifacts. Wall-clock
/// time lives only here, so the artifacts themselves stay byte-identical
/// across reruns.
struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::map<std::string, std::string> input_hashes;    // filename -> fnv-1a 64
    std::map<std::string, std::string> output_hashes;
    std::int64_t created_unix = 0;

    void add_input(const std::string& path) {
        input_hashes[std::filesystem::path(path).filename().string()] = hash_file_hex(path);
    }

    void add_output(const std::string& path) {
        output_hashes[std::filesystem::path(path).filename().string()] = hash_file_hex(path);
    }

    void write(const std::string& path) const {
        nlohmann::json j;
        j["command"] = command;
        j["seed"] = seed;
        j["config_hash"] = config_hash;
        j["inputs"] = input_hashes;
        j["outputs"] = output_hashes;
        j["created_unix"] = created_unix;
        std::ofstream out(path);
        if (!out) throw Error("cannot write manifest: " + path);
        out << j.dump(2) << "\n";
    }
};

inline Manifest make_manifest(const std::string& command, std::uint64_t seed,
                              const std::string& config_canonical_text) {
    Manifest m;
    m.command = command;
    m.seed = seed;
    m.config_hash = to_hex(fnv1a64(config_canonical_text));
    m.created_unix = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    return m;
}

}  // namespace audscope
