#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "audscope/censor.hpp"
#include "audscope/hash.hpp"
#include "audscope/random.hpp"
#include "audscope/types.hpp"
#include "audscope/world.hpp"

namespace audscope {

/// Stable identifier of a targeting spec, used as the replay key.
inline std::string spec_hash(const TargetingSpec& spec) {
    return to_hex(fnv1a64(spec.canonical()));
}

/// Query/response contract of a censoring audience-estimation platform.
class Backend {
public:
    virtual ~Backend() = default;
    virtual AudienceResponse query(const TargetingSpec& spec, int run_index) = 0;
    virtual const CensorModel& censor_model() const = 0;
    virtual BackendKind kind() const = 0;
};

/// Deterministic platform simulator. A response is a pure function of
/// (world seed, spec, run index): per-run noise is drawn per
/// (municipality, attribute, run) and shared across every spec containing
/// that municipality, so combined queries stay internally consistent.
class SimulatorBackend final : public Backend {
public:
    SimulatorBackend(World world, CensorModel model)
        : world_(std::move(world)), model_(model) {
        model_.validate();
    }

    AudienceResponse query(const TargetingSpec& spec, int run_index) override {
        if (run_index < 0) throw ConfigError("run_index must be >= 0");
        double audience = 0.0;
        for (const auto& id : spec.locations) {
            const WorldMunicipality* wm = world_.find(id);
            if (!wm) throw NotFoundError("unknown municipality id: " + id);
            audience += noisy_count(*wm, spec.attribute, run_index);
        }
        AudienceResponse resp;
        resp.spec = spec;
        resp.mau_reported = model_.report(audience);
        resp.run_index = run_index;
        resp.timestamp = collection_timestamp(run_index);
        resp.backend = BackendKind::simulator;
        return resp;
    }

    const CensorModel& censor_model() const override { return model_; }
    BackendKind kind() const override { return BackendKind::simulator; }
    const World& world() const { return world_; }

private:
    double noisy_count(const WorldMunicipality& wm, Attribute attr, int run_index) const {
        std::int64_t truth = wm.true_counts[attribute_index(attr)];
        if (truth <= 0 || model_.noise_sigma <= 0.0) return static_cast<double>(truth);
        std::uint64_t key = hash_combine(world_.seed, 0x6E6F6973ULL);
        key = hash_combine(key, wm.info.id);
        key = hash_combine(key, static_cast<std::uint64_t>(attribute_index(attr)));
        key = hash_combine(key, static_cast<std::uint64_t>(run_index));
        Rng rng(key);
        return static_cast<double>(truth) * rng.lognormal_factor(model_.noise_sigma);
    }

    World world_;
    CensorModel model_;
};

// ---------------------------------------------------------------------------
// Replay log: JSON Lines, one response per line.

inline nlohmann::json response_to_json(const AudienceResponse& r) {
    nlohmann::json j;
    j["spec_hash"] = spec_hash(r.spec);
    j["locations"] = r.spec.locations;
    j["attribute"] = attribute_name(r.spec.attribute);
    j["run_index"] = r.run_index;
    j["mau"] = r.mau_reported;
    j["timestamp"] = r.timestamp;
    return j;
}

inline AudienceResponse response_from_json(const nlohmann::json& j, BackendKind kind) {
    AudienceResponse r;
    r.spec = TargetingSpec(j.at("locations").get<std::vector<std::string>>(),
                           attribute_from_name(j.at("attribute").get<std::string>()));
    r.run_index = j.at("run_index").get<int>();
    r.mau_reported = j.at("mau").get<std::int64_t>();
    r.timestamp = j.at("timestamp").get<std::int64_t>();
    r.backend = kind;
    return r;
}

/// Serves recorded responses; queries with no recording fail.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(CensorModel model) : model_(model) { model_.validate(); }

    ReplayBackend(const std::string& log_path, CensorModel model) : model_(model) {
        model_.validate();
        load(log_path);
    }

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw MissingArtifactError("replay log not found: " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) continue;   // tolerate trailing corruption
            try {
                AudienceResponse r = response_from_json(j, BackendKind::replay);
                recordings_[key(spec_hash(r.spec), r.run_index)] = r;
            } catch (const std::exception&) {
                continue;
            }
        }
    }

    void add(const AudienceResponse& r) {
        AudienceResponse copy = r;
        copy.backend = BackendKind::replay;
        recordings_[key(spec_hash(r.spec), r.run_index)] = copy;
    }

    AudienceResponse query(const TargetingSpec& spec, int run_index) override {
        auto it = recordings_.find(key(spec_hash(spec), run_index));
        if (it == recordings_.end()) {
            throw MissingRecordingError("no recording for spec " + spec.canonical() + " run " +
                                        std::to_string(run_index));
        }
        return it->second;
    }

    const CensorModel& censor_model() const override { return model_; }
    BackendKind kind() const override { return BackendKind::replay; }
    std::size_t size() const { return recordings_.size(); }

private:
    static std::string key(const std::string& hash, int run) {
        return hash + ":" + std::to_string(run);
    }

    std::unordered_map<std::string, AudienceResponse> recordings_;
    CensorModel model_;
};

/// Tees every distinct response of an inner backend to a JSON Lines log.
/// Appending re-reads the existing log first so reruns do not duplicate
/// lines and the log stays byte-stable.
class RecordingBackend final : public Backend {
public:
    RecordingBackend(Backend& inner, const std::string& log_path, bool append = false)
        : inner_(inner) {
        if (append) {
            std::ifstream in(log_path);
            std::string line;
            while (in && std::getline(in, line)) {
                auto j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded()) continue;
                auto hash = j.value("spec_hash", std::string());
                if (!hash.empty() && j.contains("run_index")) {
                    seen_.insert(hash + ":" + std::to_string(j["run_index"].get<int>()));
                }
            }
        }
        out_.open(log_path, append ? std::ios::app : std::ios::trunc);
        if (!out_) throw Error("cannot open replay log for writing: " + log_path);
    }

    AudienceResponse query(const TargetingSpec& spec, int run_index) override {
        AudienceResponse r = inner_.query(spec, run_index);
        std::string k = spec_hash(spec) + ":" + std::to_string(run_index);
        if (seen_.insert(k).second) {
            out_ << response_to_json(r).dump() << "\n";
        }
        return r;
    }

    const CensorModel& censor_model() const override { return inner_.censor_model(); }
    BackendKind kind() const override { return inner_.kind(); }
    void flush() { out_.flush(); }

private:
    Backend& inner_;
    std::ofstream out_;
    std::unordered_set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Live-backend contract: FIFO dispatch with a minimum spacing between queries.

/// Blocking FIFO rate limiter. Callers may arrive concurrently; dispatch
/// order follows arrival order and consecutive dispatches are spaced at
/// least `interval` apart.
class RateLimiter {
public:
    explicit RateLimiter(std::chrono::duration<double> interval) : interval_(interval) {
        if (interval_.count() <= 0.0) throw ConfigError("throttle interval must be > 0");
    }

    /// Blocks until it is this caller's turn and the interval has elapsed.
    void acquire() {
        std::unique_lock lock(mutex_);
        const std::uint64_t ticket = next_ticket_++;
        cv_.wait(lock, [&] { return ticket == serving_; });
        auto now = Clock::now();
        if (have_last_ && now < last_dispatch_ + interval_) {
            auto wake = last_dispatch_ + interval_;
            cv_.wait_until(lock, wake, [&] { return Clock::now() >= wake; });
            now = Clock::now();
        }
        last_dispatch_ = now;
        have_last_ = true;
        ++serving_;
        cv_.notify_all();
    }

    std::chrono::duration<double> interval() const { return interval_; }

private:
    using Clock = std::chrono::steady_clock;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
    Clock::time_point last_dispatch_{};
    bool have_last_ = false;
    std::chrono::duration<double> interval_;
};

/// Stub for a real remote platform. Holds the rate-limit contract; the
/// transport is injected (tests supply one backed by the simulator) and
/// absent by default, since live credentials are out of scope.
class LiveBackend final : public Backend {
public:
    using Transport = std::function<AudienceResponse(const TargetingSpec&, int)>;

    explicit LiveBackend(CensorModel model, double interval_seconds = 8.0,
                         Transport transport = nullptr)
        : model_(model),
          limiter_(std::chrono::duration<double>(interval_seconds)),
          transport_(std::move(transport)) {
        model_.validate();
    }

    AudienceResponse query(const TargetingSpec& spec, int run_index) override {
        limiter_.acquire();
        if (!transport_) {
            throw BackendUnavailableError("live backend has no transport/credentials configured");
        }
        AudienceResponse r = transport_(spec, run_index);
        r.backend = BackendKind::live;
        return r;
    }

    const CensorModel& censor_model() const override { return model_; }
    BackendKind kind() const override { return BackendKind::live; }
    double interval_seconds() const { return limiter_.interval().count(); }

private:
    CensorModel model_;
    RateLimiter limiter_;
    Transport transport_;
};

}  // namespace audscope
