#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "audscope/analysis.hpp"
#include "audscope/backend.hpp"
#include "audscope/config.hpp"
#include "audscope/estimator.hpp"
#include "audscope/ingest.hpp"
#include "audscope/manifest.hpp"
#include "audscope/regression.hpp"
#include "audscope/world.hpp"

namespace audscope::pipeline {

namespace fs = std::filesystem;

inline std::string artifact(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

inline void require_artifact(const std::string& path) {
    if (!fs::exists(path)) {
        throw MissingArtifactError("missing upstream artifact: " + path +
                                   " (run the producing command first)");
    }
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + dir);
}

// ---------------------------------------------------------------------------

/// simulate: synthesize the world and its census ground truth.
inline void run_simulate(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    ensure_dir(out_dir);
    World world = simulate_world(cfg.world, cfg.seed);
    auto world_path = artifact(out_dir, "world.csv");
    auto census_path = artifact(out_dir, "census.csv");
    write_world_csv(world, world_path);
    write_census_csv(world, census_path);

    Manifest m = make_manifest("simulate", cfg.seed, config_canonical(cfg));
    m.add_output(world_path);
    m.add_output(census_path);
    m.write(artifact(out_dir, "manifest_simulate.json"));
}

inline World load_world(const RunConfig& cfg, const std::string& dir) {
    auto path = artifact(dir, "world.csv");
    require_artifact(path);
    World world = read_world_csv(path);
    world.seed = cfg.seed;   // noise stream is keyed off the run seed
    return world;
}

/// collect: standard queries for every municipality and attribute, all runs.
/// The simulator run also writes the replay log.
inline void run_collect(const RunConfig& cfg, const std::string& dir) {
    cfg.validate();
    ensure_dir(dir);
    auto standard_path = artifact(dir, "standard.jsonl");
    auto responses_path = artifact(dir, "responses.jsonl");

    std::vector<EstimateRecord> records;
    if (cfg.backend == BackendKind::simulator) {
        World world = load_world(cfg, dir);
        std::vector<std::string> ids;
        ids.reserve(world.municipalities.size());
        for (const auto& wm : world.municipalities) ids.push_back(wm.info.id);
        SimulatorBackend sim(std::move(world), cfg.censor);
        RecordingBackend recorder(sim, responses_path);
        records = standard_collect(recorder, ids, cfg.attributes, cfg.runs);
        recorder.flush();
    } else {
        require_artifact(responses_path);
        World world = load_world(cfg, dir);
        std::vector<std::string> ids;
        for (const auto& wm : world.municipalities) ids.push_back(wm.info.id);
        ReplayBackend replay(responses_path, cfg.censor);
        records = standard_collect(replay, ids, cfg.attributes, cfg.runs);
    }
    apply_validity(records, cfg.threshold, cfg.censor.censor_floor);
    write_estimates_jsonl(records, standard_path);

    Manifest m = make_manifest("collect", cfg.seed, config_canonical(cfg));
    m.add_input(artifact(dir, "world.csv"));
    m.add_output(standard_path);
    if (fs::exists(responses_path)) m.add_output(responses_path);
    m.write(artifact(dir, "manifest_collect.json"));
}

/// estimate: pick references, run exclusion queries for censored cells,
/// merge into the final panel, and cross-check the exclusion route against
/// municipalities whose standard values are known.
inline void run_estimate(const RunConfig& cfg, const std::string& dir) {
    cfg.validate();
    auto standard_path = artifact(dir, "standard.jsonl");
    require_artifact(standard_path);
    auto standard = read_estimates_jsonl(standard_path);

    World world = load_world(cfg, dir);
    std::unordered_map<std::string, UrbanizationDegree> degrees;
    for (const auto& wm : world.municipalities) degrees[wm.info.id] = wm.info.degree;

    auto responses_path = artifact(dir, "responses.jsonl");
    std::unique_ptr<SimulatorBackend> sim;
    std::unique_ptr<RecordingBackend> recorder;
    std::unique_ptr<ReplayBackend> replay;
    Backend* backend = nullptr;
    if (cfg.backend == BackendKind::simulator) {
        sim = std::make_unique<SimulatorBackend>(std::move(world), cfg.censor);
        recorder = std::make_unique<RecordingBackend>(*sim, responses_path, /*append=*/true);
        backend = recorder.get();
    } else {
        require_artifact(responses_path);
        replay = std::make_unique<ReplayBackend>(responses_path, cfg.censor);
        backend = replay.get();
    }

    ReferenceSet refs = select_references(standard, cfg.reference_count);
    auto exclusion = exclusion_collect(*backend, standard, refs, cfg.runs);
    apply_validity(exclusion, cfg.threshold, cfg.censor.censor_floor);
    auto panel = merge_panel(standard, exclusion, cfg.censor.censor_floor);
    apply_validity(panel, cfg.threshold, cfg.censor.censor_floor);
    auto validation = validate_exclusion_vs_standard(*backend, standard, degrees, refs, cfg.runs);
    if (recorder) recorder->flush();

    auto exclusion_path = artifact(dir, "exclusion.jsonl");
    auto panel_path = artifact(dir, "panel.jsonl");
    auto csv_path = artifact(dir, "estimates.csv");
    auto refs_path = artifact(dir, "references.csv");
    auto validation_path = artifact(dir, "validation.csv");
    write_estimates_jsonl(exclusion, exclusion_path);
    write_estimates_jsonl(panel, panel_path);
    write_estimates_csv(panel, csv_path);
    {
        std::ofstream out(refs_path);
        if (!out) throw Error("cannot write file: " + refs_path);
        out << "municipality_id,mau\n";
        for (const auto& r : refs.references) {
            out << csv::quote(r.municipality_id) << ',' << r.mau << "\n";
        }
    }
    {
        std::ofstream out(validation_path);
        if (!out) throw Error("cannot write file: " + validation_path);
        out << "attribute,degree,n,pearson_r\n";
        for (const auto& cell : validation.cells) {
            out << attribute_name(cell.attribute) << ',' << degree_name(cell.degree) << ','
                << cell.sampled << ',' << (cell.pearson_r ? csv::fmt(*cell.pearson_r) : "")
                << "\n";
        }
        out << "all,all," << validation.cells.size() << ','
            << (validation.mean_r ? csv::fmt(*validation.mean_r) : "") << "\n";
    }

    Manifest m = make_manifest("estimate", cfg.seed, config_canonical(cfg));
    m.add_input(standard_path);
    m.add_output(exclusion_path);
    m.add_output(panel_path);
    m.add_output(csv_path);
    m.add_output(refs_path);
    m.add_output(validation_path);
    m.write(artifact(dir, "manifest_estimate.json"));
}

// ---------------------------------------------------------------------------
// Report emitters

inline void write_coverage_csv(const CoverageReport& merged, const CoverageReport& standard_only,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << "query_mode,attribute,degree,threshold,covered,total,fraction\n";
    auto emit = [&](const char* mode, const CoverageReport& report) {
        for (const auto& c : report.cells) {
            out << mode << ',' << attribute_name(c.attribute) << ',' << degree_name(c.degree)
                << ',' << c.threshold << ',' << c.covered << ',' << c.total << ','
                << csv::fmt(c.fraction()) << "\n";
        }
    };
    emit("standard", standard_only);
    emit("exclusion", merged);
}

inline void run_analyze(const RunConfig& cfg, const std::string& dir) {
    cfg.validate();
    auto panel_path = artifact(dir, "panel.jsonl");
    require_artifact(panel_path);
    auto standard_path = artifact(dir, "standard.jsonl");
    require_artifact(standard_path);
    World world = load_world(cfg, dir);
    auto index = build_index(world);
    auto panel = read_estimates_jsonl(panel_path);
    auto standard = read_estimates_jsonl(standard_path);
    const std::int64_t floor = cfg.censor.censor_floor;

    auto cov_merged = coverage(panel, index, cfg.threshold, floor);
    auto cov_standard = coverage(standard, index, cfg.threshold, floor);
    write_coverage_csv(cov_merged, cov_standard, artifact(dir, "coverage.csv"));

    auto thresholds = default_thresholds();
    auto curve = coverage_curve(panel, index, thresholds, floor);
    {
        std::ofstream out(artifact(dir, "coverage_curve.csv"));
        out << "attribute,degree,threshold,covered,total,fraction\n";
        for (const auto& c : curve.cells) {
            out << attribute_name(c.attribute) << ',' << degree_name(c.degree) << ','
                << c.threshold << ',' << c.covered << ',' << c.total << ','
                << csv::fmt(c.fraction()) << "\n";
        }
    }
    auto variances = variance_curve(panel, index, thresholds, floor);
    {
        std::ofstream out(artifact(dir, "variance_curve.csv"));
        out << "attribute,degree,threshold,n,variance\n";
        for (const auto& v : variances) {
            out << attribute_name(v.attribute) << ',' << degree_name(v.degree) << ','
                << v.threshold << ',' << v.n << ','
                << (v.variance ? csv::fmt(*v.variance) : "") << "\n";
        }
    }
    auto per_run = coverage_by_run(panel, index, cfg.threshold, floor);
    {
        std::ofstream out(artifact(dir, "run_coverage.csv"));
        out << "attribute,degree,run_index,covered,total,fraction\n";
        for (const auto& c : per_run) {
            out << attribute_name(c.attribute) << ',' << degree_name(c.degree) << ','
                << c.run_index << ',' << c.covered << ',' << c.total << ','
                << csv::fmt(c.fraction()) << "\n";
        }
    }
    {
        nlohmann::json summary;
        summary["threshold"] = cfg.threshold;
        summary["panel_records"] = panel.size();
        nlohmann::json users_cov;
        for (auto degree : all_degrees()) {
            const auto* std_cell = cov_standard.find(Attribute::users, degree, cfg.threshold);
            const auto* exc_cell = cov_merged.find(Attribute::users, degree, cfg.threshold);
            nlohmann::json row;
            if (std_cell) row["standard"] = std_cell->fraction();
            if (exc_cell) row["exclusion"] = exc_cell->fraction();
            users_cov[std::string(degree_name(degree))] = row;
        }
        summary["users_coverage"] = users_cov;
        std::ofstream out(artifact(dir, "analysis_summary.json"));
        out << summary.dump(2) << "\n";
    }

    Manifest m = make_manifest("analyze", cfg.seed, config_canonical(cfg));
    m.add_input(panel_path);
    m.add_output(artifact(dir, "coverage.csv"));
    m.add_output(artifact(dir, "coverage_curve.csv"));
    m.add_output(artifact(dir, "variance_curve.csv"));
    m.add_output(artifact(dir, "run_coverage.csv"));
    m.add_output(artifact(dir, "analysis_summary.json"));
    m.write(artifact(dir, "manifest_analyze.json"));
}

inline void run_compare(const RunConfig& cfg, const std::string& dir) {
    cfg.validate();
    auto panel_path = artifact(dir, "panel.jsonl");
    require_artifact(panel_path);
    auto census_path = artifact(dir, "census.csv");
    require_artifact(census_path);
    World world = load_world(cfg, dir);
    auto index = build_index(world);
    auto panel = read_estimates_jsonl(panel_path);
    auto census = census_by_id(load_census(census_path));

    auto result = census_compare(panel, census, index, default_variable_pairs(), cfg.threshold,
                                 cfg.censor.censor_floor);
    {
        std::ofstream out(artifact(dir, "compare.csv"));
        out << "attribute,measure,census_field,degree,n,n_standard,n_exclusion,n_unmatched,"
               "pearson_r,slope,intercept\n";
        for (const auto& c : result.cells) {
            out << attribute_name(c.pair.attribute) << ','
                << (c.pair.measure == PlatformMeasure::absolute ? "absolute" : "proportion") << ','
                << census_field_name(c.pair.census_field) << ',' << degree_name(c.degree) << ','
                << c.n << ',' << c.n_standard << ',' << c.n_exclusion << ',' << c.n_unmatched
                << ',' << (c.pearson_r ? csv::fmt(*c.pearson_r) : "") << ','
                << (c.line ? csv::fmt(c.line->slope) : "") << ','
                << (c.line ? csv::fmt(c.line->intercept) : "") << "\n";
        }
    }
    {
        // scatter data for the panels, one row per point with its method tag
        std::ofstream out(artifact(dir, "compare_points.csv"));
        out << "attribute,census_field,municipality_id,degree,platform_value,census_value,"
               "method\n";
        for (const auto& p : result.points) {
            out << attribute_name(p.pair.attribute) << ','
                << census_field_name(p.pair.census_field) << ',' << csv::quote(p.municipality_id)
                << ',' << degree_name(p.degree) << ',' << csv::fmt(p.platform_value) << ','
                << csv::fmt(p.census_value) << ',' << method_name(p.method) << "\n";
        }
    }
    auto shares = gender_share(panel);
    {
        // platform female share next to the census one: the parity line for
        // both sits at 0.5
        std::ofstream out(artifact(dir, "gender_share.csv"));
        out << "municipality_id,female_share_platform,female_share_census\n";
        for (const auto& s : shares) {
            out << csv::quote(s.municipality_id) << ',' << csv::fmt(s.female_share) << ',';
            if (auto it = census.find(s.municipality_id); it != census.end()) {
                const auto& c = it->second;
                if (c.male_count && c.female_count && *c.male_count + *c.female_count > 0) {
                    out << csv::fmt(static_cast<double>(*c.female_count) /
                                    static_cast<double>(*c.male_count + *c.female_count));
                }
            }
            out << "\n";
        }
    }

    Manifest m = make_manifest("compare", cfg.seed, config_canonical(cfg));
    m.add_input(panel_path);
    m.add_input(census_path);
    m.add_output(artifact(dir, "compare.csv"));
    m.add_output(artifact(dir, "compare_points.csv"));
    m.add_output(artifact(dir, "gender_share.csv"));
    m.write(artifact(dir, "manifest_compare.json"));
}

inline void run_inequality(const RunConfig& cfg, const std::string& dir) {
    cfg.validate();
    auto panel_path = artifact(dir, "panel.jsonl");
    require_artifact(panel_path);
    World world = load_world(cfg, dir);
    auto index = build_index(world);
    auto panel = read_estimates_jsonl(panel_path);
    auto indices = proportion_indices(panel, cfg.threshold, cfg.censor.censor_floor);

    std::ofstream out(artifact(dir, "gaps.csv"));
    out << "attribute,n_provinces,mean_gap,p_value,significant\n";
    for (auto attr : cfg.attributes) {
        auto gaps = provincial_gaps(indices, index, attr);
        out << attribute_name(attr) << ',' << gaps.n_provinces << ','
            << (gaps.n_provinces > 0 ? csv::fmt(gaps.mean) : "") << ','
            << (gaps.p_value ? csv::fmt(*gaps.p_value) : "") << ','
            << (gaps.p_value && *gaps.p_value < 0.05 ? "true" : "false") << "\n";
    }
    out.close();

    Manifest m = make_manifest("inequality", cfg.seed, config_canonical(cfg));
    m.add_input(panel_path);
    m.add_output(artifact(dir, "gaps.csv"));
    m.write(artifact(dir, "manifest_inequality.json"));
}

/// Builds the regression inputs for one degree: income target from the
/// census, features are the P_m[c] proportion indices at the operating
/// threshold.
inline std::vector<FeatureRow> feature_rows_for_degree(
    const std::vector<EstimateRecord>& panel, const MunicipalityIndex& index,
    const std::unordered_map<std::string, CensusRecord>& census, UrbanizationDegree degree,
    std::int64_t threshold, std::int64_t censor_floor) {
    auto indices = proportion_indices(panel, threshold, censor_floor);
    std::unordered_map<std::string, FeatureRow> rows;
    for (const auto& [id, info] : index) {
        if (info.degree != degree) continue;
        FeatureRow row;
        row.municipality_id = id;
        if (auto it = census.find(id); it != census.end()) {
            row.target = it->second.income_per_capita;
        }
        rows.emplace(id, std::move(row));
    }
    for (const auto& p : indices) {
        auto it = rows.find(p.municipality_id);
        if (it == rows.end()) continue;
        it->second.features[attribute_index(p.attribute)] = p.value;
    }
    std::vector<FeatureRow> out;
    out.reserve(rows.size());
    for (auto& [id, row] : rows) out.push_back(std::move(row));
    std::sort(out.begin(), out.end(), [](const FeatureRow& a, const FeatureRow& b) {
        return a.municipality_id < b.municipality_id;
    });
    return out;
}

inline void run_regress(const RunConfig& cfg, const std::string& dir) {
    cfg.validate();
    auto panel_path = artifact(dir, "panel.jsonl");
    require_artifact(panel_path);
    auto census_path = artifact(dir, "census.csv");
    require_artifact(census_path);
    World world = load_world(cfg, dir);
    auto index = build_index(world);
    auto panel = read_estimates_jsonl(panel_path);
    auto census = census_by_id(load_census(census_path));

    std::ofstream models_csv(artifact(dir, "regression.csv"));
    models_csv << "model,feature,coefficient,stderr,p,stars\n";
    std::ofstream curve_csv(artifact(dir, "tradeoff.csv"));
    curve_csv << "degree,k,feature_added,n,f,adj_r2\n";
    nlohmann::json summary;

    auto emit_model = [&](const std::string& name, const RegressionReport& report) {
        models_csv << name << ",(intercept)," << csv::fmt(report.intercept.value) << ','
                   << csv::fmt(report.intercept.std_error) << ','
                   << csv::fmt(report.intercept.p_value) << ','
                   << significance_stars(report.intercept.p_value) << "\n";
        for (const auto& c : report.coefficients) {
            models_csv << name << ',' << c.name << ',' << csv::fmt(c.value) << ','
                       << csv::fmt(c.std_error) << ',' << csv::fmt(c.p_value) << ','
                       << significance_stars(c.p_value) << "\n";
        }
        nlohmann::json stats;
        stats["n"] = report.n;
        stats["f"] = report.f;
        stats["r2"] = report.r2;
        if (report.adj_r2) stats["adj_r2"] = *report.adj_r2;
        summary[name] = stats;
    };

    for (auto degree : all_degrees()) {
        std::size_t total = 0;
        for (const auto& [id, info] : index) {
            if (info.degree == degree) ++total;
        }
        if (total == 0) continue;
        auto rows = feature_rows_for_degree(panel, index, census, degree, cfg.threshold,
                                            cfg.censor.censor_floor);
        std::string degree_str(degree_name(degree));
        TradeoffCurve curve;
        try {
            curve = tradeoff_curve(rows, cfg.attributes, total);
        } catch (const Error& e) {
            summary[degree_str + "_error"] = e.what();
            continue;
        }
        for (const auto& point : curve.points) {
            curve_csv << degree_str << ',' << point.k << ','
                      << attribute_name(point.feature_added) << ',' << point.n << ','
                      << csv::fmt(point.f) << ','
                      << (point.adj_r2 ? csv::fmt(*point.adj_r2) : "") << "\n";
        }
        summary[degree_str + "_univariate_fallback"] = curve.univariate_fallback;

        // All-features model
        try {
            auto design = build_design(rows, cfg.attributes);
            auto report = ols_fit(design);
            report.f = static_cast<double>(report.n) / static_cast<double>(total);
            emit_model(degree_str + "_all", report);
        } catch (const Error& e) {
            summary[degree_str + "_all_error"] = e.what();
        }
        // Coverage-vs-performance cut model
        auto choice = select_cutoff(curve, cfg.min_coverage);
        curve.chosen = choice;
        summary[degree_str + "_cutoff_k"] = choice.k;
        summary[degree_str + "_cutoff_strategy"] = choice.strategy;
        summary[degree_str + "_cutoff_warning"] = choice.warning;
        try {
            std::vector<Attribute> cut(curve.feature_order.begin(),
                                       curve.feature_order.begin() + choice.k);
            auto design = build_design(rows, cut);
            auto report = ols_fit(design);
            report.f = static_cast<double>(report.n) / static_cast<double>(total);
            emit_model(degree_str + "_cut", report);
        } catch (const Error& e) {
            summary[degree_str + "_cut_error"] = e.what();
        }

        // Baseline model on the census columns themselves, for contrast with
        // the platform-derived ones (coverage f is ~1 by construction)
        try {
            std::vector<std::string> ids;
            std::vector<std::optional<double>> income, male_share, hs, college, foreign;
            for (const auto& row : rows) {
                ids.push_back(row.municipality_id);
                auto cit = census.find(row.municipality_id);
                if (cit == census.end()) {
                    income.emplace_back();
                    male_share.emplace_back();
                    hs.emplace_back();
                    college.emplace_back();
                    foreign.emplace_back();
                    continue;
                }
                const auto& c = cit->second;
                income.push_back(c.income_per_capita);
                if (c.male_count && c.population > 0) {
                    male_share.push_back(static_cast<double>(*c.male_count) /
                                         static_cast<double>(c.population));
                } else {
                    male_share.emplace_back();
                }
                hs.push_back(c.high_school_share);
                college.push_back(c.college_share);
                foreign.push_back(c.foreign_resident_share);
            }
            auto design = build_design_named(ids, income,
                                             {{"male_share", male_share},
                                              {"hs_share", hs},
                                              {"college_share", college},
                                              {"foreign_share", foreign}});
            auto report = ols_fit(design);
            report.f = static_cast<double>(report.n) / static_cast<double>(total);
            emit_model(degree_str + "_census", report);
        } catch (const Error& e) {
            summary[degree_str + "_census_error"] = e.what();
        }
    }
    models_csv.close();
    curve_csv.close();
    {
        std::ofstream out(artifact(dir, "regression_summary.json"));
        out << summary.dump(2) << "\n";
    }

    Manifest m = make_manifest("regress", cfg.seed, config_canonical(cfg));
    m.add_input(panel_path);
    m.add_input(census_path);
    m.add_output(artifact(dir, "regression.csv"));
    m.add_output(artifact(dir, "tradeoff.csv"));
    m.add_output(artifact(dir, "regression_summary.json"));
    m.write(artifact(dir, "manifest_regress.json"));
}

/// report: every downstream analysis in one pass.
inline void run_report(const RunConfig& cfg, const std::string& dir) {
    run_analyze(cfg, dir);
    run_compare(cfg, dir);
    run_inequality(cfg, dir);
    run_regress(cfg, dir);

    Manifest m = make_manifest("report", cfg.seed, config_canonical(cfg));
    m.add_input(artifact(dir, "panel.jsonl"));
    for (const char* name : {"coverage.csv", "coverage_curve.csv", "variance_curve.csv",
                             "compare.csv", "gender_share.csv", "gaps.csv", "regression.csv",
                             "tradeoff.csv"}) {
        m.add_output(artifact(dir, name));
    }
    m.write(artifact(dir, "manifest_report.json"));
}

}  // namespace audscope::pipeline
