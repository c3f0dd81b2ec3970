#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "alloclab/errors.hpp"

namespace alloclab {

/// Two-sided normal quantile for 99% intervals.
inline constexpr double kZ99 = 2.5758293035489004;

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for k successes in n trials.
inline ConfidenceInterval wilson(std::uint64_t k, std::uint64_t n, double z = kZ99) {
    detail::require(k <= n, "wilson: more successes than trials");
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
    if (x < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    detail::require(!a.empty() && !b.empty(), "ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

/// Survival fraction P(x > r) at each radius, with counts.
struct SurvivalPoint {
    double r = 0.0;
    std::uint64_t survivors = 0;
    double survival = 0.0;
    ConfidenceInterval ci;
};

inline std::vector<SurvivalPoint> survival_curve(std::vector<double> sample, const std::vector<double>& radii,
                                                 std::uint64_t n_total) {
    std::sort(sample.begin(), sample.end());
    std::vector<SurvivalPoint> out;
    out.reserve(radii.size());
    for (double r : radii) {
        const auto above = static_cast<std::uint64_t>(sample.end() - std::upper_bound(sample.begin(), sample.end(), r));
        SurvivalPoint p;
        p.r = r;
        p.survivors = above;
        p.survival = n_total ? static_cast<double>(above) / static_cast<double>(n_total) : 0.0;
        p.ci = wilson(above, n_total);
        out.push_back(p);
    }
    return out;
}

/// Ordinary least squares y = a + b x with R^2.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    detail::require(x.size() == y.size(), "least_squares: size mismatch");
    LinearFit f;
    f.n = x.size();
    if (x.size() < 2) return f;
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

/// Tail model fitted above x_min. For the power law `parameter` is the survival exponent a in
/// S(r) ~ r^-a; for the exponential it is the rate b in S(r) ~ e^{-b r}.
struct FitReport {
    std::string model;
    double parameter = 0.0;
    double intercept = 0.0;
    double log_likelihood = 0.0;
    double r2 = 0.0;
    bool preferred = false;
    double x_min = 0.0;
    std::size_t n_tail = 0;
};

struct TailComparison {
    FitReport power_law;
    FitReport exponential;
    double log_likelihood_ratio = 0.0;  ///< power law minus exponential
    double vuong_z = 0.0;
    bool power_law_preferred() const { return power_law.preferred; }
};

/// Maximum-likelihood Pareto and shifted-exponential fits on the sample tail above the
/// `tail_quantile` quantile. R^2 values come from the empirical survival on log-log and
/// log-linear axes, using only radii with at least 10 survivors.
inline TailComparison compare_tail_models(std::vector<double> sample, double tail_quantile = 0.9) {
    detail::require(tail_quantile >= 0.0 && tail_quantile < 1.0, "compare_tail_models: quantile outside [0,1)");
    sample.erase(std::remove_if(sample.begin(), sample.end(), [](double v) { return !std::isfinite(v); }),
                 sample.end());
    std::sort(sample.begin(), sample.end());
    const std::size_t n_all = sample.size();
    auto idx = static_cast<std::size_t>(std::floor(tail_quantile * static_cast<double>(n_all)));
    while (idx < n_all && !(sample[idx] > 0.0)) ++idx;
    detail::require(n_all >= 10 && n_all - idx >= 10, "compare_tail_models: fewer than 10 tail samples");
    const double xmin = sample[idx];
    std::vector<double> tail(sample.begin() + static_cast<std::ptrdiff_t>(idx), sample.end());
    const double n = static_cast<double>(tail.size());

    std::vector<double> lr(tail.size()), er(tail.size());
    double slog = 0.0, sexc = 0.0;
    for (double x : tail) {
        slog += std::log(x / xmin);
        sexc += x - xmin;
    }
    TailComparison c;
    const double a = slog > 0.0 ? n / slog : std::numeric_limits<double>::infinity();
    const double b = sexc > 0.0 ? n / sexc : std::numeric_limits<double>::infinity();
    double llp = 0.0, lle = 0.0;
    for (std::size_t i = 0; i < tail.size(); ++i) {
        const double x = tail[i];
        lr[i] = std::log(a) - std::log(xmin) - (a + 1.0) * std::log(x / xmin);
        er[i] = std::log(b) - b * (x - xmin);
        llp += lr[i];
        lle += er[i];
    }
    const double s_xmin = n / static_cast<double>(n_all);

    // empirical survival at the tail sample points with >= 10 survivors
    std::vector<double> lx, x, ly;
    for (std::size_t i = 0; i < tail.size(); ++i) {
        const double survivors = n - static_cast<double>(i + 1);
        if (survivors < 10.0) break;
        if (i + 1 < tail.size() && tail[i + 1] == tail[i]) continue;
        lx.push_back(std::log(tail[i]));
        x.push_back(tail[i]);
        ly.push_back(std::log(survivors / static_cast<double>(n_all)));
    }
    const auto fp = least_squares(lx, ly);
    const auto fe = least_squares(x, ly);

    c.power_law = {"power-law", a, std::log(s_xmin) + a * std::log(xmin), llp, fp.r2, false, xmin, tail.size()};
    c.exponential = {"exponential", b, std::log(s_xmin) + b * xmin, lle, fe.r2, false, xmin, tail.size()};
    c.log_likelihood_ratio = llp - lle;
    double mean = c.log_likelihood_ratio / n, var = 0.0;
    for (std::size_t i = 0; i < tail.size(); ++i) var += (lr[i] - er[i] - mean) * (lr[i] - er[i] - mean);
    var /= n;
    c.vuong_z = var > 0.0 ? c.log_likelihood_ratio / std::sqrt(n * var) : 0.0;
    c.power_law.preferred = llp > lle;
    c.exponential.preferred = !c.power_law.preferred;
    return c;
}

inline nlohmann::json to_json(const FitReport& f) {
    return {{"model", f.model}, {"parameter", f.parameter}, {"intercept", f.intercept},
            {"log_likelihood", f.log_likelihood}, {"r2", f.r2}, {"preferred", f.preferred},
            {"x_min", f.x_min}, {"n_tail", f.n_tail}};
}

inline nlohmann::json to_json(const TailComparison& c) {
    return {{"power_law", to_json(c.power_law)}, {"exponential", to_json(c.exponential)},
            {"log_likelihood_ratio", c.log_likelihood_ratio}, {"vuong_z", c.vuong_z}};
}

}  // namespace alloclab
