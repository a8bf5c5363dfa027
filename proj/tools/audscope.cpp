// Command-line front end: seeded, reproducible estimation pipelines.
//
// Exit codes: 0 success, 2 validation/config error, 3 missing upstream
// artifact. Diagnostics are single machine-parseable lines on stderr.

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "audscope/config.hpp"
#include "audscope/pipeline.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::int64_t threshold = 0;
    int runs = 0;
    double live_cadence = 0.0;
    std::string backend;
    bool seed_set = false, threshold_set = false, runs_set = false, backend_set = false;
    bool cadence_set = false;
};

audscope::RunConfig effective_config(const CliOverrides& cli) {
    std::map<std::string, std::string> kv;
    if (!cli.config_path.empty()) kv = audscope::parse_kv_file(cli.config_path);
    audscope::RunConfig cfg = audscope::config_from_kv(kv);
    if (cli.seed_set) cfg.seed = cli.seed;
    if (cli.threshold_set) cfg.threshold = cli.threshold;
    if (cli.runs_set) cfg.runs = cli.runs;
    if (cli.cadence_set) cfg.interval_seconds = cli.live_cadence;
    if (cli.backend_set) {
        if (cli.backend == "sim" || cli.backend == "simulator") {
            cfg.backend = audscope::BackendKind::simulator;
        } else if (cli.backend == "replay") {
            cfg.backend = audscope::BackendKind::replay;
        } else {
            throw audscope::ConfigError("--backend must be sim or replay");
        }
    }
    cfg.validate();
    return cfg;
}

void print_error(const char* kind, const std::exception& e) {
    std::cerr << "audscope: error kind=" << kind << " msg=\"" << e.what() << "\"\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Censored audience estimation pipeline"};
    app.require_subcommand(1);

    CliOverrides cli;
    app.add_option("--config", cli.config_path, "key=value config file")
        ->envname("AUDSCOPE_CONFIG");
    app.add_option("--out", cli.out_dir, "artifact directory")->envname("AUDSCOPE_OUT");
    auto* seed_opt = app.add_option("--seed", cli.seed, "world/noise seed")
                         ->envname("AUDSCOPE_SEED");
    auto* thr_opt = app.add_option("--threshold", cli.threshold, "validity threshold in users")
                        ->envname("AUDSCOPE_THRESHOLD");
    auto* runs_opt = app.add_option("--runs", cli.runs, "collection runs")
                         ->envname("AUDSCOPE_RUNS");
    auto* backend_opt = app.add_option("--backend", cli.backend, "sim or replay")
                            ->envname("AUDSCOPE_BACKEND");
    auto* cadence_opt =
        app.add_option("--live-cadence", cli.live_cadence,
                       "min seconds between live-backend queries (stub contract only)")
            ->envname("AUDSCOPE_LIVE_CADENCE");

    std::map<std::string, std::function<void(const audscope::RunConfig&, const std::string&)>>
        commands = {
            {"simulate", audscope::pipeline::run_simulate},
            {"collect", audscope::pipeline::run_collect},
            {"estimate", audscope::pipeline::run_estimate},
            {"analyze", audscope::pipeline::run_analyze},
            {"compare", audscope::pipeline::run_compare},
            {"inequality", audscope::pipeline::run_inequality},
            {"regress", audscope::pipeline::run_regress},
            {"report", audscope::pipeline::run_report},
        };
    static const std::map<std::string, std::string> descriptions = {
        {"simulate", "synthesize a world and census fixture"},
        {"collect", "standard audience queries for all municipalities"},
        {"estimate", "exclusion queries for censored cells; build the panel"},
        {"analyze", "coverage, threshold curves, stability variance"},
        {"compare", "correlate estimates against the census"},
        {"inequality", "provincial urban-rural gap distributions"},
        {"regress", "income models and coverage/performance trade-off"},
        {"report", "analyze + compare + inequality + regress"},
    };
    for (auto& [name, fn] : commands) {
        app.add_subcommand(name, descriptions.at(name));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);   // --help
        std::cerr << "audscope: error kind=usage msg=\"" << e.what() << "\"\n";
        return 2;
    }

    cli.seed_set = seed_opt->count() > 0;
    cli.threshold_set = thr_opt->count() > 0;
    cli.runs_set = runs_opt->count() > 0;
    cli.backend_set = backend_opt->count() > 0;
    cli.cadence_set = cadence_opt->count() > 0;

    try {
        audscope::RunConfig cfg = effective_config(cli);
        for (auto& [name, fn] : commands) {
            if (app.got_subcommand(name)) {
                fn(cfg, cli.out_dir);
                return 0;
            }
        }
        std::cerr << "audscope: error kind=usage msg=\"no subcommand\"\n";
        return 2;
    } catch (const audscope::MissingArtifactError& e) {
        print_error("missing_artifact", e);
        return 3;
    } catch (const audscope::ConfigError& e) {
        print_error("config", e);
        return 2;
    } catch (const audscope::SchemaError& e) {
        print_error("schema", e);
        return 2;
    } catch (const audscope::Error& e) {
        print_error("runtime", e);
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e);
        return 1;
    }
}
