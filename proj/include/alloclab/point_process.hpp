#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "alloclab/errors.hpp"
#include "alloclab/geometry.hpp"
#include "alloclab/rng.hpp"

namespace alloclab {

/// A finite configuration of centres in the window [0, L)^d.
struct CenterSet {
    PointList points;
    double side = 1.0;    ///< torus side L
    double lambda = 1.0;  ///< intensity used to generate the configuration
    bool palm = false;    ///< points[0] is an added centre at the origin
    std::uint64_t seed = 0;
    /// Renewal samples only: length of the non-renewal gap across the torus seam (NaN otherwise).
    double seam_gap = std::numeric_limits<double>::quiet_NaN();

    int d() const { return points.d(); }
    std::size_t size() const { return points.size(); }
};

inline bool is_origin(std::span<const double> p) {
    for (double v : p)
        if (v != 0.0) return false;
    return true;
}

namespace detail {

inline double uniform_in(Rng& rng, double side) {
    const double x = uniform01(rng) * side;
    return x < side ? x : 0.0;
}

inline void append_uniform_points(PointList& pts, std::uint64_t count, double side, Rng& rng) {
    std::vector<double> p(static_cast<std::size_t>(pts.d()));
    for (std::uint64_t i = 0; i < count; ++i) {
        for (auto& v : p) v = uniform_in(rng, side);
        pts.push_back(p);
    }
}

inline std::uint64_t poisson_count(double mean, Rng& rng) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(rng);
}

}  // namespace detail

/// Homogeneous Poisson process of intensity `lambda` on the torus window of `dom`.
inline CenterSet sample_poisson(const Domain& dom, double lambda, std::uint64_t seed) {
    detail::require(lambda > 0.0 && std::isfinite(lambda), "sample_poisson: lambda must be positive");
    auto rng = make_rng(seed);
    CenterSet cs;
    cs.points = PointList(dom.d());
    cs.side = dom.side();
    cs.lambda = lambda;
    cs.seed = seed;
    const auto n = detail::poisson_count(lambda * dom.volume(), rng);
    detail::append_uniform_points(cs.points, n, dom.side(), rng);
    return cs;
}

/// Adds a centre at the origin (the Palm version of a Poisson configuration).
inline CenterSet palm_augment(CenterSet cs) {
    for (std::size_t i = 0; i < cs.size(); ++i)
        detail::require(!is_origin(cs.points[i]), "palm_augment: origin already present");
    std::vector<double> origin(static_cast<std::size_t>(cs.d()), 0.0);
    cs.points.insert_front(origin);
    cs.palm = true;
    return cs;
}

/// Named increment law for renewal processes. All offered laws have unit mean by default.
struct IncrementLaw {
    enum class Kind { Exponential, Uniform, Gamma, Deterministic };
    Kind kind = Kind::Exponential;
    double a = 0.0;      ///< uniform lower bound, or the deterministic value
    double b = 2.0;      ///< uniform upper bound
    double shape = 1.0;  ///< gamma shape k (scale 1/k)

    static IncrementLaw exponential() { return {}; }
    static IncrementLaw uniform(double lo = 0.0, double hi = 2.0) { return {Kind::Uniform, lo, hi, 1.0}; }
    static IncrementLaw gamma(double k) { return {Kind::Gamma, 0.0, 0.0, k}; }
    static IncrementLaw deterministic(double v = 1.0) { return {Kind::Deterministic, v, v, 1.0}; }

    /// Accepts "exponential", "uniform", "uniform(a,b)", "gamma2", "gamma4", "gamma(k)",
    /// "deterministic", "deterministic(v)".
    static IncrementLaw parse(const std::string& name) {
        auto args = [&](std::size_t open) {
            const auto close = name.find(')', open);
            detail::require(close != std::string::npos, "IncrementLaw: missing ')' in " + name);
            return name.substr(open + 1, close - open - 1);
        };
        if (name == "exponential" || name == "exp") return exponential();
        if (name == "uniform") return uniform();
        if (name == "deterministic") return deterministic();
        if (name == "gamma2") return gamma(2.0);
        if (name == "gamma4") return gamma(4.0);
        if (name.rfind("uniform(", 0) == 0) {
            const auto inner = args(7);
            const auto comma = inner.find(',');
            detail::require(comma != std::string::npos, "IncrementLaw: uniform(a,b) needs two bounds");
            return uniform(std::stod(inner.substr(0, comma)), std::stod(inner.substr(comma + 1)));
        }
        if (name.rfind("gamma(", 0) == 0) return gamma(std::stod(args(5)));
        if (name.rfind("deterministic(", 0) == 0) return deterministic(std::stod(args(13)));
        throw InvalidInput("IncrementLaw: unknown law '" + name + "'");
    }

    std::string name() const {
        switch (kind) {
            case Kind::Exponential: return "exponential";
            case Kind::Uniform: return "uniform(" + std::to_string(a) + "," + std::to_string(b) + ")";
            case Kind::Gamma: return "gamma(" + std::to_string(shape) + ")";
            case Kind::Deterministic: return "deterministic(" + std::to_string(a) + ")";
        }
        return "unknown";
    }

    double mean() const {
        switch (kind) {
            case Kind::Exponential: return 1.0;
            case Kind::Uniform: return 0.5 * (a + b);
            case Kind::Gamma: return 1.0;
            case Kind::Deterministic: return a;
        }
        return 0.0;
    }

    double variance() const {
        switch (kind) {
            case Kind::Exponential: return 1.0;
            case Kind::Uniform: return (b - a) * (b - a) / 12.0;
            case Kind::Gamma: return 1.0 / shape;
            case Kind::Deterministic: return 0.0;
        }
        return 0.0;
    }

    double min_support() const {
        switch (kind) {
            case Kind::Uniform: return a;
            case Kind::Deterministic: return a;
            default: return 0.0;
        }
    }

    double sample(Rng& rng) const {
        switch (kind) {
            case Kind::Exponential: return -std::log1p(-uniform01(rng));
            case Kind::Uniform: return a + (b - a) * uniform01(rng);
            case Kind::Gamma: {
                std::gamma_distribution<double> g(shape, 1.0 / shape);
                return g(rng);
            }
            case Kind::Deterministic: return a;
        }
        return 0.0;
    }

    void validate() const {
        detail::require(kind != Kind::Uniform || b > a, "IncrementLaw: uniform needs a < b");
        detail::require(kind != Kind::Gamma || shape > 0.0, "IncrementLaw: gamma shape must be positive");
    }
};

/// Palm renewal process on [-window, window): a two-sided walk from xi_0 = 0 with i.i.d.
/// unit-mean increments, stored on the torus of side 2*window (negative points shifted by 2*window).
inline CenterSet sample_renewal_palm(double window, const IncrementLaw& law, std::uint64_t seed) {
    law.validate();
    detail::require(window > 0.0, "sample_renewal_palm: window must be positive");
    detail::require(std::abs(law.mean() - 1.0) <= 1e-12, "sample_renewal_palm: increment law must have unit mean");
    detail::require(law.min_support() >= 0.0, "sample_renewal_palm: increments must be nonnegative");
    detail::require(law.kind == IncrementLaw::Kind::Deterministic || law.variance() > 0.0,
                    "sample_renewal_palm: degenerate law");
    auto rng = make_rng(seed);
    const double side = 2.0 * window;
    CenterSet cs;
    cs.points = PointList(1);
    cs.side = side;
    cs.lambda = 1.0;
    cs.palm = true;
    cs.seed = seed;
    cs.points.push_back(std::vector<double>{0.0});

    double last_right = 0.0;
    for (double x = law.sample(rng); x < window; x += law.sample(rng)) {
        if (x <= last_right) continue;  // zero-length increment: keep the process simple
        cs.points.push_back(std::vector<double>{x});
        last_right = x;
    }
    double last_left = 0.0;
    for (double x = -law.sample(rng); x >= -window; x -= law.sample(rng)) {
        if (x >= last_left) continue;
        cs.points.push_back(std::vector<double>{x + side});
        last_left = x;
    }
    cs.seam_gap = (window - last_right) + (last_left + window);
    return cs;
}

/// Monotone superposition coupling: Pi_lambda = Pi_1 + Pi_beta with beta = lambda - 1.
/// The first |Pi_1| points of the second set are exactly Pi_1.
inline std::pair<CenterSet, CenterSet> sample_coupled(const Domain& dom, double lambda, std::uint64_t seed) {
    detail::require(lambda > 1.0 && std::isfinite(lambda), "sample_coupled: lambda must exceed 1");
    CenterSet base = sample_poisson(dom, 1.0, seed);
    auto rng = make_rng(splitmix64(seed ^ 0x5eedc0de5eedc0deULL));
    CenterSet high = base;
    high.lambda = lambda;
    const auto extra = detail::poisson_count((lambda - 1.0) * dom.volume(), rng);
    detail::append_uniform_points(high.points, extra, dom.side(), rng);
    return {std::move(base), std::move(high)};
}

/// Nested family of coupled configurations Pi_lambda, 1 <= lambda <= lambda_max, from one
/// unit-intensity base and one marked extra process (a mark u < lambda - 1 keeps the point).
struct CoupledFamily {
    CenterSet base;
    PointList extra;
    std::vector<double> marks;
    double lambda_max = 1.0;

    CenterSet at(double lambda) const {
        detail::require(lambda >= 1.0 && lambda <= lambda_max, "CoupledFamily: lambda out of range");
        CenterSet out = base;
        out.lambda = lambda;
        for (std::size_t i = 0; i < extra.size(); ++i)
            if (marks[i] < lambda - 1.0) out.points.push_back(extra[i]);
        return out;
    }
};

inline CoupledFamily sample_coupled_family(const Domain& dom, double lambda_max, std::uint64_t seed) {
    detail::require(lambda_max >= 1.0, "sample_coupled_family: lambda_max must be at least 1");
    CoupledFamily fam;
    fam.base = sample_poisson(dom, 1.0, seed);
    fam.lambda_max = lambda_max;
    fam.extra = PointList(dom.d());
    const double beta = lambda_max - 1.0;
    if (beta > 0.0) {
        auto rng = make_rng(splitmix64(seed ^ 0x5eedc0de5eedc0deULL));
        const auto extra = detail::poisson_count(beta * dom.volume(), rng);
        detail::append_uniform_points(fam.extra, extra, dom.side(), rng);
        fam.marks.resize(extra);
        for (auto& m : fam.marks) m = beta * uniform01(rng);
    }
    return fam;
}

inline nlohmann::json to_json(const CenterSet& cs) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < cs.size(); ++i) {
        auto p = cs.points[i];
        pts.push_back(std::vector<double>(p.begin(), p.end()));
    }
    return {{"d", cs.d()}, {"L", cs.side}, {"lambda", cs.lambda}, {"palm", cs.palm},
            {"seed", cs.seed}, {"points", std::move(pts)}};
}

inline CenterSet center_set_from_json(const nlohmann::json& j) {
    CenterSet cs;
    const int d = j.at("d").get<int>();
    detail::require(d >= 1, "CenterSet json: d must be positive");
    cs.side = j.at("L").get<double>();
    cs.lambda = j.at("lambda").get<double>();
    cs.palm = j.at("palm").get<bool>();
    cs.seed = j.at("seed").get<std::uint64_t>();
    cs.points = PointList(d);
    for (const auto& p : j.at("points")) {
        auto v = p.get<std::vector<double>>();
        detail::require(static_cast<int>(v.size()) == d, "CenterSet json: point dimension mismatch");
        for (double x : v) detail::require(x >= 0.0 && x < cs.side, "CenterSet json: point outside window");
        cs.points.push_back(v);
    }
    detail::require(!cs.palm || (cs.size() > 0 && is_origin(cs.points[0])),
                    "CenterSet json: palm flag without origin first");
    return cs;
}

}  // namespace alloclab
