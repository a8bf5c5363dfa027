#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "audscope/errors.hpp"

namespace audscope {

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Unbiased sample variance (n-1 denominator). Absent for fewer than 2 points.
inline std::optional<double> sample_variance(std::span<const double> x) {
    if (x.size() < 2) return std::nullopt;
    double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

inline std::optional<double> sample_sd(std::span<const double> x) {
    auto v = sample_variance(x);
    if (!v) return std::nullopt;
    return std::sqrt(*v);
}

/// Conventional median of real values: midpoint of the two central order
/// statistics for even counts.
inline std::optional<double> median(std::vector<double> values) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Lower median (order statistic at index (n-1)/2). Keeps integer aggregates
/// on the reported-value grid.
inline std::optional<std::int64_t> lower_median(std::vector<std::int64_t> values) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

/// Pearson product-moment correlation via single-pass co-moment updates.
/// Absent when fewer than 3 pairs or either side has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("pearson: length mismatch");
    std::size_t n = x.size();
    if (n < 3) return std::nullopt;
    double mx = 0.0, my = 0.0, cxy = 0.0, cxx = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double k = 1.0 / static_cast<double>(i + 1);
        double dx = x[i] - mx;
        double dy = y[i] - my;
        mx += dx * k;
        my += dy * k;
        cxy += dx * (y[i] - my);
        cxx += dx * (x[i] - mx);
        cyy += dy * (y[i] - my);
    }
    if (cxx <= 0.0 || cyy <= 0.0) return std::nullopt;
    double r = cxy / std::sqrt(cxx * cyy);
    return std::clamp(r, -1.0, 1.0);
}

/// Slope/intercept of the least-squares line y = slope*x + intercept.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline std::optional<LineFit> fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return std::nullopt;
    double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return std::nullopt;
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

// ---------------------------------------------------------------------------
// Gaussian and Student-t tails

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

namespace detail {

/// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b), relative error ~1e-14.
inline double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log1p(-x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * detail::betacf(a, b, x) / a;
    }
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of a Student-t statistic with df degrees of freedom.
inline double student_t_two_sided(double t, double df) {
    if (df <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(t)) return 0.0;
    return ibeta(0.5 * df, 0.5, df / (df + t * t));
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test

struct WilcoxonResult {
    double statistic = 0.0;   // min(W+, W-)
    int n = 0;                // non-zero differences used
    std::optional<double> p_value;
    bool exact = false;
};

/// Two-sided signed-rank test of the differences against zero. Zeros are
/// dropped, ties receive midranks. Exact sign-permutation distribution for
/// n <= 25 (via rank-sum DP on doubled ranks), normal approximation with tie
/// correction and 0.5 continuity correction above.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs) {
    struct Item {
        double abs;
        bool positive;
    };
    std::vector<Item> items;
    for (double d : diffs) {
        if (d != 0.0) items.push_back({std::fabs(d), d > 0.0});
    }
    WilcoxonResult res;
    res.n = static_cast<int>(items.size());
    if (items.empty()) return res;

    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.abs < b.abs; });

    std::size_t n = items.size();
    std::vector<double> rank(n, 0.0);
    std::vector<std::size_t> tie_sizes;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && items[j].abs == items[i].abs) ++j;
        double mid = 0.5 * static_cast<double>(i + 1 + j);   // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) rank[k] = mid;
        tie_sizes.push_back(j - i);
        i = j;
    }

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (items[i].positive) w_plus += rank[i];
    }
    double total = static_cast<double>(n * (n + 1)) / 2.0;
    res.statistic = std::min(w_plus, total - w_plus);

    if (n <= 25) {
        // Doubling the midranks makes them integral; enumerate the rank-sum
        // distribution over all 2^n sign assignments.
        std::vector<std::int64_t> scaled(n);
        std::int64_t scaled_total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = static_cast<std::int64_t>(std::llround(2.0 * rank[i]));
            scaled_total += scaled[i];
        }
        std::vector<double> count(static_cast<std::size_t>(scaled_total) + 1, 0.0);
        count[0] = 1.0;
        std::int64_t reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            reach += scaled[i];
            for (std::int64_t s = reach; s >= scaled[i]; --s) {
                count[static_cast<std::size_t>(s)] +=
                    count[static_cast<std::size_t>(s - scaled[i])];
            }
        }
        double denom = std::ldexp(1.0, static_cast<int>(n));   // 2^n
        std::int64_t w_min_scaled = static_cast<std::int64_t>(std::llround(2.0 * res.statistic));
        double cdf = 0.0;
        for (std::int64_t s = 0; s <= w_min_scaled; ++s) cdf += count[static_cast<std::size_t>(s)];
        res.p_value = std::min(1.0, 2.0 * cdf / denom);
        res.exact = true;
    } else {
        double mn = total / 2.0;
        double var = static_cast<double>(n * (n + 1) * (2 * n + 1)) / 24.0;
        for (std::size_t t : tie_sizes) {
            double td = static_cast<double>(t);
            var -= (td * td * td - td) / 48.0;
        }
        double se = std::sqrt(var);
        if (se <= 0.0) {
            res.p_value = 1.0;
            return res;
        }
        double d = w_plus - mn;
        double correction = d > 0 ? 0.5 : (d < 0 ? -0.5 : 0.0);
        double z = (d - correction) / se;
        res.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
    }
    return res;
}

}  // namespace audscope
