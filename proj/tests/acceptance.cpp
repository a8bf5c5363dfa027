// Acceptance suite: simulator-backed, property-based end-to-end checks with
// exact-math oracles. Each criterion prints one PASS/FAIL line; the process
// exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "audscope/analysis.hpp"
#include "audscope/backend.hpp"
#include "audscope/config.hpp"
#include "audscope/estimator.hpp"
#include "audscope/pipeline.hpp"
#include "audscope/random.hpp"
#include "audscope/regression.hpp"
#include "audscope/stats.hpp"
#include "audscope/world.hpp"

using namespace audscope;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }

    void note(const std::string& info) {
        if (!detail.empty()) detail += "; ";
        detail += info;
    }
};

std::string fmt1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// --- world construction helpers -------------------------------------------

struct Builder {
    World world;
    int serial = 0;

    std::string add(UrbanizationDegree degree, std::int64_t users, const std::string& province,
                    const std::array<std::int64_t, kAttributeCount>* counts = nullptr) {
        WorldMunicipality wm;
        char id[16];
        std::snprintf(id, sizeof(id), "M%05d", serial++);
        wm.info.id = id;
        wm.info.name = std::string("Muni") + id;
        wm.info.province_id = province;
        wm.info.degree = degree;
        wm.true_users = users;
        if (counts) wm.true_counts = *counts;
        wm.true_counts[attribute_index(Attribute::users)] = users;
        world.municipalities.push_back(std::move(wm));
        return id;
    }

    World take(std::uint64_t seed) {
        world.seed = seed;
        world.rebuild_index();
        return std::move(world);
    }
};

std::vector<std::string> ids_of(const World& world) {
    std::vector<std::string> ids;
    ids.reserve(world.municipalities.size());
    for (const auto& wm : world.municipalities) ids.push_back(wm.info.id);
    return ids;
}

/// The shared synthetic world for criteria 2 and 3: 1,000 municipalities,
/// 80% with a total audience in [200, 1000), the rest reference-sized.
World recovery_world(Rng& rng) {
    Builder b;
    for (int i = 0; i < 700; ++i) {   // small rural, below the floor
        std::array<std::int64_t, kAttributeCount> counts{};
        std::int64_t users = rng.uniform_int(200, 999);
        Rng sub(hash_combine(rng.next_u64(), static_cast<std::uint64_t>(i)));
        for (auto attr : constrained_attributes()) {
            double prev = 0.15 + 0.03 * static_cast<double>(attribute_index(attr) % 10);
            counts[attribute_index(attr)] = sub.binomial(users, prev);
        }
        b.add(UrbanizationDegree::rural, users, "P" + std::to_string(i % 25), &counts);
    }
    for (int i = 0; i < 100; ++i) {   // small suburban, below the floor
        std::array<std::int64_t, kAttributeCount> counts{};
        std::int64_t users = rng.uniform_int(200, 999);
        Rng sub(hash_combine(rng.next_u64(), 700 + static_cast<std::uint64_t>(i)));
        for (auto attr : constrained_attributes()) {
            counts[attribute_index(attr)] = sub.binomial(users, 0.35);
        }
        b.add(UrbanizationDegree::suburban, users, "P" + std::to_string(i % 25), &counts);
    }
    for (int i = 0; i < 100; ++i) {   // rural above the floor: standard-covered
        std::array<std::int64_t, kAttributeCount> counts{};
        std::int64_t users = rng.uniform_int(1500, 3000);
        Rng sub(hash_combine(rng.next_u64(), 800 + static_cast<std::uint64_t>(i)));
        for (auto attr : constrained_attributes()) {
            counts[attribute_index(attr)] = sub.binomial(users, 0.40);
        }
        b.add(UrbanizationDegree::rural, users, "P" + std::to_string(i % 25), &counts);
    }
    for (int i = 0; i < 100; ++i) {   // urban reference pool
        std::array<std::int64_t, kAttributeCount> counts{};
        std::int64_t users = rng.uniform_int(2000, 12000);
        Rng sub(hash_combine(rng.next_u64(), 900 + static_cast<std::uint64_t>(i)));
        for (auto attr : constrained_attributes()) {
            counts[attribute_index(attr)] = sub.binomial(users, 0.45);
        }
        b.add(UrbanizationDegree::urban, users, "P" + std::to_string(i % 25), &counts);
    }
    return b.take(20240407);
}

// --- criteria ---------------------------------------------------------------

Check censoring_fidelity() {
    Check c;
    CensorModel model;
    model.noise_sigma = 0.0;
    for (std::int64_t t = 1; t <= 20000; ++t) {
        std::int64_t expected = std::max<std::int64_t>(1000, ((t + 50) / 100) * 100);
        if (model.report(static_cast<double>(t)) != expected) {
            c.expect(false, "mismatch at t=" + std::to_string(t));
            return c;
        }
    }
    // spot-check the same law through the backend path
    Builder b;
    for (std::int64_t t = 1; t <= 20000; t += 331) b.add(UrbanizationDegree::rural, t, "P0");
    World world = b.take(1);
    SimulatorBackend sim(world, model);
    for (const auto& wm : sim.world().municipalities) {
        std::int64_t expected =
            std::max<std::int64_t>(1000, ((wm.true_users + 50) / 100) * 100);
        auto r = sim.query(TargetingSpec({wm.info.id}, Attribute::users), 0);
        c.expect(r.mau_reported == expected, "backend mismatch at " + wm.info.id);
    }
    c.note("20,000 exact values");
    return c;
}

Check exclusion_recovery(const World& world) {
    Check c;
    CensorModel model;
    model.noise_sigma = 0.0;
    SimulatorBackend sim(world, model);
    auto ids = ids_of(world);
    auto standard = standard_collect(sim, ids, {}, 5);
    auto refs = select_references(standard, 5);
    auto exclusion = exclusion_collect(sim, standard, refs, 5);

    std::vector<double> est, truth;
    std::int64_t max_err = 0;
    for (const auto& rec : exclusion) {
        if (rec.attribute != Attribute::users || !rec.aggregate) continue;
        std::int64_t t = world.find(rec.municipality_id)->true_users;
        std::int64_t err = std::llabs(*rec.aggregate - t);
        max_err = std::max(max_err, err);
        est.push_back(static_cast<double>(*rec.aggregate));
        truth.push_back(static_cast<double>(t));
    }
    c.expect(est.size() >= 700, "expected >= 700 recovered cells, got " +
                                    std::to_string(est.size()));
    c.expect(max_err <= 2 * model.resolution,
             "recovery error " + std::to_string(max_err) + " exceeds 2*resolution");
    auto r = pearson(est, truth);
    c.expect(r.has_value() && *r >= 0.99,
             "pearson(est, truth) = " + (r ? fmt1(*r) : std::string("undefined")));
    c.note("recovered " + std::to_string(est.size()) + " cells, max error " +
           std::to_string(max_err) + ", r = " + (r ? fmt1(*r) : "n/a"));
    return c;
}

Check coverage_dominance(const World& world) {
    Check c;
    CensorModel model;
    model.noise_sigma = 0.0;
    SimulatorBackend sim(world, model);
    auto ids = ids_of(world);
    auto attrs = constrained_attributes();
    auto standard = standard_collect(sim, ids, attrs, 5);
    auto refs = select_references(standard, 5);
    auto exclusion = exclusion_collect(sim, standard, refs, 5);
    auto panel = merge_panel(standard, exclusion, model.censor_floor);
    auto index = build_index(world);

    auto cov_std = coverage(standard, index, 200, model.censor_floor);
    auto cov_exc = coverage(panel, index, 200, model.censor_floor);
    std::size_t cells = 0;
    for (const auto& cell : cov_exc.cells) {
        const auto* s = cov_std.find(cell.attribute, cell.degree, 200);
        if (!s) continue;
        ++cells;
        if (cell.fraction() + 1e-12 < s->fraction()) {
            c.expect(false, std::string("dominance violated for ") +
                                std::string(attribute_name(cell.attribute)) + "/" +
                                std::string(degree_name(cell.degree)));
        }
    }
    c.expect(cells >= kAttributeCount * 2, "too few comparable cells");

    // >= 50% of rural audiences lie in [200, 1000): require the structural
    // rural gain on the unconstrained audience
    const auto* rural_std = cov_std.find(Attribute::users, UrbanizationDegree::rural, 200);
    const auto* rural_exc = cov_exc.find(Attribute::users, UrbanizationDegree::rural, 200);
    c.expect(rural_std && rural_exc, "missing rural users coverage cells");
    if (rural_std && rural_exc) {
        c.expect(rural_exc->fraction() >= 2.0 * rural_std->fraction(),
                 "rural gain factor below 2");
        c.expect(rural_exc->fraction() >= 0.5, "rural exclusion coverage below 0.5");
        c.note("rural users coverage " + fmt1(rural_std->fraction()) + " -> " +
               fmt1(rural_exc->fraction()) + " over " + std::to_string(cells) + " cells");
    }
    return c;
}

Check stability_behavior() {
    Check c;
    WorldConfig cfg;
    cfg.municipality_counts = {15, 40, 120};
    cfg.mean_population = {15000.0, 3500.0, 700.0};
    cfg.provinces = 12;
    World world = simulate_world(cfg, 88);
    CensorModel model;
    model.noise_sigma = 0.05;
    SimulatorBackend sim(world, model);
    auto ids = ids_of(world);
    auto attrs = constrained_attributes();
    auto standard = standard_collect(sim, ids, attrs, 5);
    auto refs = select_references(standard, 5);
    auto exclusion = exclusion_collect(sim, standard, refs, 5);
    auto panel = merge_panel(standard, exclusion, model.censor_floor);
    auto index = build_index(world);

    std::vector<std::int64_t> pair = {100, 200};
    auto cells = variance_curve(panel, index, pair, model.censor_floor);
    std::map<std::pair<std::size_t, std::size_t>, double> at100, at200;
    for (const auto& cell : cells) {
        if (!cell.variance) continue;
        auto key = std::make_pair(attribute_index(cell.attribute), degree_index(cell.degree));
        (cell.threshold == 100 ? at100 : at200)[key] = *cell.variance;
    }
    int comparable = 0, improved = 0;
    for (const auto& [key, v100] : at100) {
        auto it = at200.find(key);
        if (it == at200.end()) continue;
        ++comparable;
        if (it->second <= v100 + 1e-15) ++improved;
    }
    c.expect(comparable >= 30, "too few comparable variance cells: " +
                                   std::to_string(comparable));
    double share = comparable ? static_cast<double>(improved) / comparable : 0.0;
    c.expect(share >= 0.80, "variance improved in only " + fmt1(share));

    auto thresholds = default_thresholds();
    auto curve = coverage_curve(panel, index, thresholds, model.censor_floor);
    std::map<std::pair<std::size_t, std::size_t>, double> last;
    bool monotone = true;
    for (std::int64_t t : thresholds) {
        for (const auto& cell : curve.cells) {
            if (cell.threshold != t) continue;
            auto key = std::make_pair(attribute_index(cell.attribute), degree_index(cell.degree));
            auto it = last.find(key);
            if (it != last.end() && cell.fraction() > it->second + 1e-12) monotone = false;
            last[key] = cell.fraction();
        }
    }
    c.expect(monotone, "coverage curve not monotone in some cell");
    c.note(fmt1(share) + " of " + std::to_string(comparable) +
           " cells improved, curves monotone");
    return c;
}

Check statistics_oracles() {
    Check c;
    // pearson vs two-pass brute force
    Rng rng(1337);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = static_cast<std::size_t>(rng.uniform_int(3, 60));
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform(-5.0, 5.0);
            y[i] = 0.7 * x[i] + rng.normal(0.0, 1.5);
        }
        auto r = pearson(x, y);
        if (!r) continue;
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        worst = std::max(worst, std::fabs(*r - sxy / std::sqrt(sxx * syy)));
    }
    c.expect(worst < 1e-12, "pearson oracle gap " + fmt1(worst));

    // OLS residual orthogonality on a unit-scale problem
    {
        auto make_col = [&](std::size_t n) {
            std::vector<double> col(n);
            for (auto& v : col) v = rng.normal(0.0, 1.0);
            return col;
        };
        DesignMatrix design;
        const std::size_t n = 400;
        design.features = {Attribute::male, Attribute::college, Attribute::ios,
                           Attribute::wifi, Attribute::cooking, Attribute::gambling};
        for (std::size_t j = 0; j < design.features.size(); ++j) {
            design.columns.push_back(zscore(make_col(n)));
        }
        design.target.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            design.target[i] = 0.8 * design.columns[0][i] - 0.5 * design.columns[1][i] +
                               rng.normal(0.0, 1.0);
        }
        design.row_ids.assign(n, "x");
        auto report = ols_fit(design);
        double max_dot = 0.0;
        for (const auto& col : design.columns) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += col[i] * report.residuals[i];
            max_dot = std::max(max_dot, std::fabs(dot));
        }
        double sum = 0.0;
        for (double r : report.residuals) sum += r;
        max_dot = std::max(max_dot, std::fabs(sum));
        c.expect(max_dot < 1e-8, "residual orthogonality " + fmt1(max_dot));
    }

    // adjusted R^2 hand values
    c.expect(std::fabs(*adjusted_r2(0.5, 12, 1) - 0.45) < 1e-12, "adjusted r2 spot value");
    c.expect(std::fabs(*adjusted_r2(0.0, 11, 5) + 1.0) < 1e-12, "adjusted r2 negative case");

    // null-model calibration: p < 0.05 must fire at the nominal rate
    int reject = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = 30;
        DesignMatrix design;
        design.features = {Attribute::male};
        std::vector<double> col(n);
        for (auto& v : col) v = rng.normal(0.0, 1.0);
        design.columns.push_back(zscore(col));
        design.target.resize(n);
        for (auto& v : design.target) v = rng.normal(0.0, 1.0);
        design.row_ids.assign(n, "x");
        auto report = ols_fit(design);
        if (report.coefficients[0].p_value < 0.05) ++reject;
    }
    double rate = static_cast<double>(reject) / trials;
    c.expect(rate >= 0.03 && rate <= 0.07, "null rejection rate " + fmt1(rate));
    c.note("oracle gap " + fmt1(worst) + ", null rate " + fmt1(rate));
    return c;
}

Check regression_recovery() {
    Check c;
    WorldConfig cfg;
    cfg.municipality_counts = {10, 40, 150};
    cfg.mean_population = {20000.0, 6000.0, 1500.0};
    cfg.provinces = 12;
    World world = simulate_world(cfg, 606);

    // design from the world's true proportions
    std::vector<Attribute> features = {Attribute::male,  Attribute::college,
                                       Attribute::ios,   Attribute::network_4g,
                                       Attribute::wifi,  Attribute::cooking};
    std::vector<FeatureRow> rows;
    for (const auto& wm : world.municipalities) {
        if (wm.true_users <= 0) continue;
        FeatureRow row;
        row.municipality_id = wm.info.id;
        for (Attribute a : features) {
            row.features[attribute_index(a)] =
                static_cast<double>(wm.true_counts[attribute_index(a)]) /
                static_cast<double>(wm.true_users);
        }
        row.target = 0.0;
        rows.push_back(std::move(row));
    }
    auto base = build_design(rows, features);
    const std::size_t n = base.n();
    const std::size_t p = base.p();
    c.expect(p == features.size(), "degenerate feature dropped unexpectedly");

    std::vector<double> beta = {800.0, -500.0, 300.0, -200.0, 150.0, 100.0};
    const double intercept = 17000.0, sigma = 400.0;
    Rng rng(909);
    std::vector<int> covered(p, 0);
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        DesignMatrix design = base;
        design.target.assign(n, intercept);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                design.target[i] += beta[j] * design.columns[j][i];
            }
            design.target[i] += rng.normal(0.0, sigma);
        }
        auto report = ols_fit(design);
        double df = static_cast<double>(n - p - 1);
        for (std::size_t j = 0; j < p; ++j) {
            const auto& est = report.coefficients[j];
            double t_stat = (est.value - beta[j]) / est.std_error;
            if (student_t_two_sided(t_stat, df) >= 0.05) covered[j]++;   // inside the 95% CI
        }
    }
    double worst_cover = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
        double share = static_cast<double>(covered[j]) / trials;
        worst_cover = std::min(worst_cover, share);
        c.expect(share >= 0.90, std::string(attribute_name(features[j])) +
                                    " CI coverage " + fmt1(share));
    }

    // exact complete-case counts under planted missingness
    std::vector<FeatureRow> planted = rows;
    std::size_t expect_b = 0, expect_c = 0, expect_bc = 0;
    for (std::size_t i = 0; i < planted.size(); ++i) {
        bool drop_b = (i % 10) < 3;   // 30% missing
        bool drop_c = (i % 2) == 0;   // 50% missing
        planted[i].target = 1000.0 +
                            5000.0 * *planted[i].features[attribute_index(Attribute::male)] +
                            2000.0 * *planted[i].features[attribute_index(Attribute::college)] +
                            500.0 * *planted[i].features[attribute_index(Attribute::ios)];
        if (drop_b) planted[i].features[attribute_index(Attribute::college)] = std::nullopt;
        if (drop_c) planted[i].features[attribute_index(Attribute::ios)] = std::nullopt;
        if (!drop_b) ++expect_b;
        if (!drop_c) ++expect_c;
        if (!drop_b && !drop_c) ++expect_bc;
    }
    std::vector<Attribute> three = {Attribute::male, Attribute::college, Attribute::ios};
    auto curve = tradeoff_curve(planted, three, planted.size());
    c.expect(!curve.univariate_fallback, "unexpected fallback ordering");
    bool order_ok = curve.feature_order ==
                    std::vector<Attribute>{Attribute::male, Attribute::college, Attribute::ios};
    c.expect(order_ok, "coefficient-magnitude ordering wrong");
    if (order_ok) {
        c.expect(curve.points[0].n == planted.size(), "k=1 count");
        c.expect(curve.points[1].n == expect_b, "k=2 count");
        c.expect(curve.points[2].n == expect_bc, "k=3 count");
    }
    c.note("worst CI coverage " + fmt1(worst_cover) + ", complete-case counts exact");
    return c;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string("\"") + AUDSCOPE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Check pipeline_determinism() {
    Check c;
    fs::path golden_dir = AUDSCOPE_GOLDEN_DIR;
    fs::path fixture = golden_dir / "fixture.cfg";
    if (!fs::exists(fixture)) {
        c.expect(false, "bundled fixture config missing: " + fixture.string());
        return c;
    }
    auto dir1 = fs::temp_directory_path() / "audscope_acc_run1";
    auto dir2 = fs::temp_directory_path() / "audscope_acc_run2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    for (const auto& dir : {dir1, dir2}) {
        std::string base = "--config " + fixture.string() + " --out " + dir.string() + " ";
        c.expect(run_cli(base + "simulate") == 0, "simulate failed");
        c.expect(run_cli(base + "collect") == 0, "collect failed");
        c.expect(run_cli(base + "estimate") == 0, "estimate failed");
        c.expect(run_cli(base + "report") == 0, "report failed");
    }
    if (!c.ok) return c;

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir1)) {
        auto name = entry.path().filename().string();
        if (name.rfind("manifest_", 0) == 0) {
            // manifests match up to the wall-clock stamp
            auto j1 = nlohmann::json::parse(slurp(entry.path()));
            auto j2 = nlohmann::json::parse(slurp(dir2 / name));
            j1.erase("created_unix");
            j2.erase("created_unix");
            c.expect(j1 == j2, "manifest drift in " + name);
            continue;
        }
        ++compared;
        if (slurp(entry.path()) != slurp(dir2 / name)) {
            c.expect(false, "rerun differs in " + name);
        }
    }
    c.expect(compared >= 15, "too few artifacts compared");

    // golden-file comparison against the frozen reference outputs
    fs::path expected_dir = golden_dir / "expected";
    std::size_t golden = 0;
    if (fs::exists(expected_dir)) {
        for (const auto& entry : fs::directory_iterator(expected_dir)) {
            ++golden;
            auto name = entry.path().filename().string();
            if (slurp(entry.path()) != slurp(dir1 / name)) {
                c.expect(false, "golden mismatch in " + name);
            }
        }
    }
    c.expect(golden >= 10, "golden reference incomplete");
    c.note(std::to_string(compared) + " artifacts byte-identical, " + std::to_string(golden) +
           " golden files matched");
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    return c;
}

/// Shared setup for the provincial-gap checks: a world with a configurable
/// urban-rural prevalence difference in `college`. Urban and rural sizes are
/// drawn from the same distribution so the comparison is exchangeable under
/// the null and both sides flow through the same estimation route.
GapDistribution gap_pipeline(std::uint64_t seed, double delta, int provinces, int urban_per,
                             int rural_per) {
    WorldConfig cfg;
    cfg.municipality_counts = {provinces * urban_per, 0, provinces * rural_per};
    cfg.mean_population = {6000.0, 6000.0, 6000.0};
    cfg.provinces = provinces;
    cfg.penetration = 0.6;
    cfg.population_sigma = 0.3;
    std::size_t idx = attribute_index(Attribute::college);
    cfg.prevalence[idx] = {0.20 + delta, 0.20, 0.20};
    World world = simulate_world(cfg, seed);
    CensorModel model;
    model.noise_sigma = 0.02;
    SimulatorBackend sim(world, model);
    auto ids = ids_of(world);
    std::vector<Attribute> attrs = {Attribute::college};
    auto standard = standard_collect(sim, ids, attrs, 5);
    auto refs = select_references(standard, 5);
    auto exclusion = exclusion_collect(sim, standard, refs, 5);
    auto panel = merge_panel(standard, exclusion, model.censor_floor);
    auto index = build_index(world);
    auto indices = proportion_indices(panel, 200, model.censor_floor);
    return provincial_gaps(indices, index, Attribute::college);
}

Check provincial_gap_correctness() {
    Check c;
    const double delta = 0.05;
    auto gaps = gap_pipeline(314, delta, 40, 2, 4);
    c.expect(gaps.n_provinces >= 30, "only " + std::to_string(gaps.n_provinces) +
                                         " provinces contributed");
    c.expect(std::fabs(gaps.mean - delta) <= 0.02,
             "mean gap " + fmt1(gaps.mean) + " not within 0.02 of " + fmt1(delta));
    c.expect(gaps.p_value && *gaps.p_value < 0.05,
             "planted effect not significant (p = " +
                 (gaps.p_value ? fmt1(*gaps.p_value) : std::string("n/a")) + ")");

    int null_ok = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        auto null_gaps = gap_pipeline(9000 + static_cast<std::uint64_t>(t), 0.0, 12, 2, 3);
        if (!null_gaps.p_value || *null_gaps.p_value > 0.05) ++null_ok;
    }
    double share = static_cast<double>(null_ok) / trials;
    c.expect(share >= 0.90, "null worlds significant too often (p>0.05 in " + fmt1(share) + ")");
    c.note("mean gap " + fmt1(gaps.mean) + ", p = " + fmt1(*gaps.p_value) +
           ", null clean share " + fmt1(share));
    return c;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Check()> run;
        double budget_seconds;
    };

    Rng world_rng(20200420);
    World shared = recovery_world(world_rng);

    std::vector<Criterion> criteria = {
        {1, "Censoring fidelity", censoring_fidelity, 1.0},
        {2, "Exclusion recovery", [&] { return exclusion_recovery(shared); }, 10.0},
        {3, "Coverage dominance", [&] { return coverage_dominance(shared); }, 10.0},
        {4, "Stability behavior", stability_behavior, 30.0},
        {5, "Statistics oracles", statistics_oracles, 20.0},
        {6, "Regression recovery", regression_recovery, 30.0},
        {7, "Pipeline determinism", pipeline_determinism, 30.0},
        {8, "Provincial gap correctness", provincial_gap_correctness, 20.0},
    };

    int failures = 0;
    double total = 0.0;
    for (auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        Check result;
        try {
            result = criterion.run();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail = std::string("exception: ") + e.what();
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        total += seconds;
        if (seconds > criterion.budget_seconds) {
            result.ok = false;
            result.detail += (result.detail.empty() ? "" : "; ") + std::string("runtime ") +
                             fmt1(seconds) + "s over budget " + fmt1(criterion.budget_seconds) +
                             "s";
        }
        if (!result.ok) ++failures;
        std::printf("%s  %d. %s (%.2fs)%s%s\n", result.ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, seconds, result.detail.empty() ? "" : " - ",
                    result.detail.c_str());
    }
    std::printf("%s: %d/%zu criteria passed in %.1fs\n", failures == 0 ? "SUCCESS" : "FAILURE",
                static_cast<int>(criteria.size()) - failures, criteria.size(), total);
    return failures == 0 ? 0 : 1;
}
