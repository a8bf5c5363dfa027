#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "audscope/attributes.hpp"
#include "audscope/errors.hpp"
#include "audscope/stats.hpp"
#include "audscope/types.hpp"

namespace audscope {

/// One municipality's regression inputs: the target and the feature values
/// that happen to be observed for it.
struct FeatureRow {
    std::string municipality_id;
    std::optional<double> target;
    std::array<std::optional<double>, kAttributeCount> features{};
};

/// Row subset with every requested feature and the target present.
inline std::vector<const FeatureRow*> complete_cases(const std::vector<FeatureRow>& rows,
                                                     std::span<const Attribute> features) {
    if (features.empty()) throw ConfigError("feature list must be non-empty");
    std::vector<const FeatureRow*> out;
    for (const auto& row : rows) {
        if (!row.target) continue;
        bool complete = true;
        for (Attribute a : features) {
            if (!row.features[attribute_index(a)]) {
                complete = false;
                break;
            }
        }
        if (complete) out.push_back(&row);
    }
    return out;
}

/// Z-scores a column in place: mean 0, unbiased (n-1) standard deviation 1.
inline std::vector<double> zscore(std::span<const double> column) {
    if (column.size() < 2) throw DegenerateFeatureError("zscore needs at least 2 values");
    double m = mean(column);
    auto sd = sample_sd(column);
    // relative floor: summation noise on a constant column is not variance
    if (!sd || *sd <= 1e-12 * (std::fabs(m) + 1.0)) {
        throw DegenerateFeatureError("constant column cannot be standardized");
    }
    std::vector<double> out(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) out[i] = (column[i] - m) / *sd;
    return out;
}

/// Fully observed, standardized design. Standardization is recomputed per
/// model on its own complete-case rows; constant columns are dropped and
/// reported, not fatal.
struct DesignMatrix {
    std::vector<std::string> row_ids;
    std::vector<Attribute> features;            // catalog columns actually kept
    std::vector<Attribute> dropped;             // constant on this row set
    std::vector<std::string> names;             // one per column; overrides catalog names
    std::vector<std::vector<double>> columns;   // standardized, one vector per feature
    std::vector<double> target;

    std::size_t n() const { return target.size(); }
    std::size_t p() const { return columns.size(); }

    std::string column_name(std::size_t j) const {
        if (j < names.size()) return names[j];
        return std::string(attribute_name(features[j]));
    }
};

inline DesignMatrix build_design(const std::vector<FeatureRow>& rows,
                                 std::span<const Attribute> features) {
    auto cases = complete_cases(rows, features);
    std::size_t n = cases.size();
    if (n < features.size() + 2) {
        throw InsufficientDataError("need at least p+2 complete rows, have " + std::to_string(n) +
                                    " for p=" + std::to_string(features.size()));
    }
    DesignMatrix design;
    design.row_ids.reserve(n);
    design.target.reserve(n);
    for (const FeatureRow* row : cases) {
        design.row_ids.push_back(row->municipality_id);
        design.target.push_back(*row->target);
    }
    for (Attribute a : features) {
        std::vector<double> raw(n);
        for (std::size_t i = 0; i < n; ++i) raw[i] = *cases[i]->features[attribute_index(a)];
        try {
            design.columns.push_back(zscore(raw));
            design.features.push_back(a);
            design.names.emplace_back(attribute_name(a));
        } catch (const DegenerateFeatureError&) {
            design.dropped.push_back(a);
        }
    }
    return design;
}

/// Design from arbitrary named columns (census baselines and the like).
/// Rows with a missing target or any missing column value are excluded.
inline DesignMatrix build_design_named(
    const std::vector<std::string>& row_ids, const std::vector<std::optional<double>>& target,
    const std::vector<std::pair<std::string, std::vector<std::optional<double>>>>& columns) {
    if (columns.empty()) throw ConfigError("feature list must be non-empty");
    const std::size_t total = row_ids.size();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < total; ++i) {
        if (!target[i]) continue;
        bool complete = true;
        for (const auto& [name, col] : columns) {
            if (!col[i]) {
                complete = false;
                break;
            }
        }
        if (complete) keep.push_back(i);
    }
    if (keep.size() < columns.size() + 2) {
        throw InsufficientDataError("need at least p+2 complete rows, have " +
                                    std::to_string(keep.size()) +
                                    " for p=" + std::to_string(columns.size()));
    }
    DesignMatrix design;
    for (std::size_t i : keep) {
        design.row_ids.push_back(row_ids[i]);
        design.target.push_back(*target[i]);
    }
    for (const auto& [name, col] : columns) {
        std::vector<double> raw;
        raw.reserve(keep.size());
        for (std::size_t i : keep) raw.push_back(*col[i]);
        try {
            design.columns.push_back(zscore(raw));
            design.names.push_back(name);
        } catch (const DegenerateFeatureError&) {
            // constant column: skipped, recorded by name only
        }
    }
    return design;
}

// ---------------------------------------------------------------------------
// Ordinary least squares

struct CoefficientEstimate {
    std::string name;
    double value = 0.0;
    double std_error = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
};

inline std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

/// Adjusted R^2 = 1 - (1-R^2)(n-1)/(n-p-1); absent when n <= p+1.
inline std::optional<double> adjusted_r2(double r2, std::size_t n, std::size_t p) {
    if (n <= p + 1) return std::nullopt;
    double nn = static_cast<double>(n);
    double pp = static_cast<double>(p);
    return 1.0 - (1.0 - r2) * (nn - 1.0) / (nn - pp - 1.0);
}

struct RegressionReport {
    std::string model;
    std::vector<CoefficientEstimate> coefficients;   // feature order of the design
    CoefficientEstimate intercept;
    std::size_t n = 0;
    double f = 0.0;   // complete-case share of the degree's municipalities
    double r2 = 0.0;
    std::optional<double> adj_r2;
    std::vector<double> fitted;
    std::vector<double> residuals;
};

/// Least squares by Householder QR with column pivoting. Rank deficiency
/// below tol = 1e-10 * max column norm raises CollinearityError naming the
/// dependent columns. Classical (non-robust) standard errors; two-sided
/// t-tests on n-p-1 degrees of freedom.
inline RegressionReport ols_fit(const DesignMatrix& design) {
    const std::size_t n = design.n();
    const std::size_t p = design.p();
    const std::size_t m = p + 1;   // + intercept
    if (n < m + 1) {
        throw InsufficientDataError("need more rows than columns to fit, n=" + std::to_string(n));
    }

    // Column-major working copy, intercept last.
    std::vector<std::vector<double>> a(m, std::vector<double>(n));
    for (std::size_t j = 0; j < p; ++j) a[j] = design.columns[j];
    a[p].assign(n, 1.0);
    std::vector<double> qty = design.target;

    std::vector<std::size_t> perm(m);
    for (std::size_t j = 0; j < m; ++j) perm[j] = j;

    auto col_norm_from = [&](std::size_t j, std::size_t row) {
        double s = 0.0;
        for (std::size_t i = row; i < n; ++i) s += a[j][i] * a[j][i];
        return std::sqrt(s);
    };

    double max_norm = 0.0;
    for (std::size_t j = 0; j < m; ++j) max_norm = std::max(max_norm, col_norm_from(j, 0));
    const double tol = 1e-10 * std::max(max_norm, 1.0);

    std::size_t rank = m;
    std::vector<std::vector<double>> r_upper(m, std::vector<double>(m, 0.0));
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t best = k;
        double best_norm = col_norm_from(k, k);
        for (std::size_t j = k + 1; j < m; ++j) {
            double nj = col_norm_from(j, k);
            if (nj > best_norm) {
                best_norm = nj;
                best = j;
            }
        }
        if (best != k) {
            std::swap(a[k], a[best]);
            std::swap(perm[k], perm[best]);
        }
        if (best_norm <= tol) {
            rank = k;
            break;
        }
        // Householder reflection zeroing column k below row k.
        double alpha = a[k][k] >= 0.0 ? -best_norm : best_norm;
        std::vector<double> v(n, 0.0);
        for (std::size_t i = k; i < n; ++i) v[i] = a[k][i];
        v[k] -= alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = k; i < n; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 > 0.0) {
            for (std::size_t j = k; j < m; ++j) {
                double dot = 0.0;
                for (std::size_t i = k; i < n; ++i) dot += v[i] * a[j][i];
                double scale = 2.0 * dot / vnorm2;
                for (std::size_t i = k; i < n; ++i) a[j][i] -= scale * v[i];
            }
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i] * qty[i];
            double scale = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) qty[i] -= scale * v[i];
        }
        a[k][k] = alpha;
        for (std::size_t i = k + 1; i < n; ++i) a[k][i] = 0.0;
    }
    if (rank < m) {
        std::vector<std::string> offenders;
        for (std::size_t j = rank; j < m; ++j) {
            offenders.push_back(perm[j] == p ? "(intercept)" : design.column_name(perm[j]));
        }
        std::string msg = "design matrix is rank deficient; dependent columns:";
        for (const auto& c : offenders) msg += " " + c;
        throw CollinearityError(msg, offenders);
    }
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = k; j < m; ++j) r_upper[k][j] = a[j][k];
    }

    // Back substitution for the pivoted coefficients.
    std::vector<double> beta_piv(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
        double s = qty[k];
        for (std::size_t j = k + 1; j < m; ++j) s -= r_upper[k][j] * beta_piv[j];
        beta_piv[k] = s / r_upper[k][k];
    }
    std::vector<double> beta(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) beta[perm[k]] = beta_piv[k];

    RegressionReport report;
    report.n = n;
    report.fitted.assign(n, beta[p]);   // intercept
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) report.fitted[i] += beta[j] * design.columns[j][i];
    }
    report.residuals.resize(n);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        report.residuals[i] = design.target[i] - report.fitted[i];
        rss += report.residuals[i] * report.residuals[i];
    }
    double ybar = mean(design.target);
    double tss = 0.0;
    for (double y : design.target) tss += (y - ybar) * (y - ybar);
    report.r2 = tss > 0.0 ? 1.0 - rss / tss : 0.0;
    report.adj_r2 = adjusted_r2(report.r2, n, p);

    // (X^T X)^{-1} diagonal through the inverse of R.
    const double df = static_cast<double>(n - m);
    const double sigma2 = rss / df;
    std::vector<std::vector<double>> r_inv(m, std::vector<double>(m, 0.0));
    for (std::size_t k = m; k-- > 0;) {
        r_inv[k][k] = 1.0 / r_upper[k][k];
        for (std::size_t j = k + 1; j < m; ++j) {
            double s = 0.0;
            for (std::size_t l = k + 1; l <= j; ++l) s += r_upper[k][l] * r_inv[l][j];
            r_inv[k][j] = -s / r_upper[k][k];
        }
    }
    std::vector<double> se(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        double s = 0.0;
        for (std::size_t j = k; j < m; ++j) s += r_inv[k][j] * r_inv[k][j];
        se[perm[k]] = std::sqrt(sigma2 * s);
    }

    auto make_estimate = [&](std::string name, double value, double stderr_) {
        CoefficientEstimate e;
        e.name = std::move(name);
        e.value = value;
        e.std_error = stderr_;
        e.t_stat = stderr_ > 0.0 ? value / stderr_ : 0.0;
        e.p_value = stderr_ > 0.0 ? student_t_two_sided(e.t_stat, df) : 1.0;
        return e;
    };
    for (std::size_t j = 0; j < p; ++j) {
        report.coefficients.push_back(make_estimate(design.column_name(j), beta[j], se[j]));
    }
    report.intercept = make_estimate("(intercept)", beta[p], se[p]);
    return report;
}

// ---------------------------------------------------------------------------
// Coverage vs performance trade-off

struct TradeoffPoint {
    int k = 0;
    Attribute feature_added = Attribute::users;
    std::size_t n = 0;
    double f = 0.0;
    std::optional<double> adj_r2;
};

struct CutoffChoice {
    int k = 1;
    bool warning = false;   // nothing met the coverage constraint
    std::string strategy;
};

struct TradeoffCurve {
    std::vector<Attribute> feature_order;   // by |coefficient| in the complete model
    std::vector<TradeoffPoint> points;
    bool univariate_fallback = false;       // complete model was unfittable
    std::optional<CutoffChoice> chosen;     // set once a cutoff has been selected
};

/// Orders features by coefficient magnitude in the all-features model, then
/// refits every prefix on that prefix's own complete-case rows. When the
/// complete model cannot be fitted the order falls back to univariate
/// correlation magnitude and the curve is flagged.
inline TradeoffCurve tradeoff_curve(const std::vector<FeatureRow>& rows,
                                    std::span<const Attribute> features,
                                    std::size_t degree_total) {
    if (degree_total == 0) throw ConfigError("degree_total must be positive");
    TradeoffCurve curve;

    std::unordered_map<std::size_t, double> magnitude;
    bool complete_ok = false;
    try {
        auto design = build_design(rows, features);
        auto report = ols_fit(design);
        for (std::size_t j = 0; j < design.features.size(); ++j) {
            magnitude[attribute_index(design.features[j])] =
                std::fabs(report.coefficients[j].value);
        }
        complete_ok = true;
    } catch (const Error&) {
        complete_ok = false;
    }
    if (!complete_ok) {
        curve.univariate_fallback = true;
        for (Attribute a : features) {
            std::vector<double> xs, ys;
            for (const auto& row : rows) {
                const auto& v = row.features[attribute_index(a)];
                if (v && row.target) {
                    xs.push_back(*v);
                    ys.push_back(*row.target);
                }
            }
            auto r = pearson(xs, ys);
            magnitude[attribute_index(a)] = r ? std::fabs(*r) : 0.0;
        }
    }

    curve.feature_order.assign(features.begin(), features.end());
    std::stable_sort(curve.feature_order.begin(), curve.feature_order.end(),
                     [&](Attribute a, Attribute b) {
                         double ma = magnitude.count(attribute_index(a))
                                         ? magnitude[attribute_index(a)]
                                         : 0.0;
                         double mb = magnitude.count(attribute_index(b))
                                         ? magnitude[attribute_index(b)]
                                         : 0.0;
                         if (ma != mb) return ma > mb;
                         return attribute_index(a) < attribute_index(b);   // catalog order
                     });

    for (std::size_t k = 1; k <= curve.feature_order.size(); ++k) {
        std::vector<Attribute> prefix(curve.feature_order.begin(),
                                      curve.feature_order.begin() + static_cast<std::ptrdiff_t>(k));
        TradeoffPoint point;
        point.k = static_cast<int>(k);
        point.feature_added = prefix.back();
        auto cases = complete_cases(rows, prefix);
        point.n = cases.size();
        point.f = static_cast<double>(point.n) / static_cast<double>(degree_total);
        try {
            auto design = build_design(rows, prefix);
            auto report = ols_fit(design);
            point.adj_r2 = report.adj_r2;
        } catch (const Error&) {
            // point stays without a fit
        }
        curve.points.push_back(point);
    }
    return curve;
}

/// Default cutoff rule: the largest prefix that still meets `min_coverage`
/// and actually produced a fit. The rule is pluggable because no single
/// metric fits every population being studied; the chosen strategy is
/// recorded in reports.
inline CutoffChoice select_cutoff(const TradeoffCurve& curve, double min_coverage = 0.40) {
    if (curve.points.empty()) throw ConfigError("tradeoff curve is empty");
    CutoffChoice choice;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "max_k_with_coverage>=%g", min_coverage);
    choice.strategy = buf;
    choice.k = 0;
    for (const auto& point : curve.points) {
        if (point.f >= min_coverage && point.adj_r2) choice.k = std::max(choice.k, point.k);
    }
    if (choice.k == 0) {
        choice.k = 1;
        choice.warning = true;
    }
    return choice;
}

}  // namespace audscope
