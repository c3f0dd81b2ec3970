#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "alloclab/alloc_1d.hpp"
#include "alloclab/alloc_grid.hpp"
#include "alloclab/analytic_bounds.hpp"
#include "alloclab/errors.hpp"
#include "alloclab/parallel.hpp"
#include "alloclab/point_process.hpp"
#include "alloclab/stats.hpp"

namespace alloclab {

enum class Statistic { X, RStar };

inline std::string to_string(Statistic s) { return s == Statistic::X ? "X" : "R*"; }

inline Statistic parse_statistic(const std::string& s) {
    if (s == "X" || s == "x") return Statistic::X;
    if (s == "R*" || s == "R" || s == "Rstar" || s == "rstar") return Statistic::RStar;
    throw InvalidInput("unknown statistic '" + s + "'");
}

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

struct TailConfig {
    Statistic statistic = Statistic::RStar;
    int d = 1;
    double L = 2000.0;
    double eps = 0.05;  ///< grid resolution; unused in d = 1, where the exact solver runs
    double alpha = 1.0;
    double lambda = 1.0;
    std::uint64_t replicates = 1000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::vector<double> radii;                 ///< empty: 50 evenly spaced radii up to the sample maximum
    std::optional<IncrementLaw> renewal;       ///< d = 1, R* only: Palm renewal centres instead of Poisson
};

inline nlohmann::json to_json(const TailConfig& c) {
    nlohmann::json j{{"statistic", to_string(c.statistic)}, {"d", c.d}, {"L", c.L}, {"eps", c.eps},
                     {"alpha", c.alpha}, {"lambda", c.lambda}, {"replicates", c.replicates}, {"seed", c.seed}};
    if (c.renewal) j["renewal"] = c.renewal->name();
    return j;
}

/// Empirical survival of X (conditional on X < inf) or R*.
struct TailEstimate {
    TailConfig config;
    std::vector<double> samples;        ///< finite outcomes, in replicate order
    std::vector<double> owner_radius;   ///< X runs: radius of the territory containing the origin
    std::uint64_t infinite = 0;         ///< X runs: replicates with the origin unclaimed
    std::uint64_t excluded = 0;         ///< renewal runs: origin territory touching the seam
    std::vector<SurvivalPoint> curve;

    std::uint64_t n() const { return samples.size(); }
    double infinite_fraction() const {
        const auto total = samples.size() + infinite;
        return total ? static_cast<double>(infinite) / static_cast<double>(total) : 0.0;
    }
};

namespace detail {

struct ReplicateOutcome {
    double value = 0.0;
    double owner_radius = 0.0;
    bool infinite = false;
    bool excluded = false;
};

inline ReplicateOutcome origin_outcome_1d(const IntervalAllocation& a, Statistic stat) {
    ReplicateOutcome out;
    if (stat == Statistic::RStar) {
        detail::require(a.origin >= 0, "tail_experiment: Palm centre missing");
        const auto o = static_cast<std::size_t>(a.origin);
        out.value = a.radius(o);
        out.excluded = a.seam[o] != 0;
        return out;
    }
    const OwnerIndex idx(a);
    const auto o = idx.owner(0.0);
    if (o < 0) {
        out.infinite = true;
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    const double x = std::abs(a.centers[static_cast<std::size_t>(o)]);
    out.value = std::min(x, a.side - x);
    out.owner_radius = a.radius(static_cast<std::size_t>(o));
    return out;
}

inline ReplicateOutcome origin_outcome_grid(const Allocation& a, Statistic stat) {
    ReplicateOutcome out;
    if (stat == Statistic::RStar) {
        out.value = measure_radius(a, 0).radius;
        return out;
    }
    out.value = measure_X(a);
    if (std::isinf(out.value)) {
        out.infinite = true;
        return out;
    }
    const std::vector<double> origin(static_cast<std::size_t>(a.dom.d()), 0.0);
    const auto owner = a.assignment[a.dom.cell_of(origin)];
    out.owner_radius = measure_radius(a, static_cast<std::size_t>(owner)).radius;
    return out;
}

inline std::vector<double> default_radii(const std::vector<double>& samples, std::size_t count = 50) {
    double hi = 0.0;
    for (double v : samples) hi = std::max(hi, v);
    std::vector<double> r(count);
    for (std::size_t i = 0; i < count; ++i) r[i] = hi * static_cast<double>(i) / static_cast<double>(count);
    return r;
}

}  // namespace detail

/// Monte Carlo tail of X or R* from independent replicates (seed of replicate i derived from cfg.seed).
inline TailEstimate tail_experiment(const TailConfig& cfg, const ProgressFn& progress = {}) {
    detail::require(cfg.replicates >= 100, "tail_experiment: at least 100 replicates are required");
    detail::require(cfg.d >= 1, "tail_experiment: dimension must be positive");
    detail::require(cfg.alpha > 0.0 && cfg.lambda > 0.0, "tail_experiment: alpha and lambda must be positive");
    detail::require(!cfg.renewal || (cfg.d == 1 && cfg.statistic == Statistic::RStar),
                    "tail_experiment: renewal centres need d = 1 and statistic R*");
    const Domain dom = cfg.d == 1 ? Domain::continuum(1, cfg.L) : Domain(cfg.d, cfg.L, cfg.eps);

    auto outcomes = parallel_map<detail::ReplicateOutcome>(
        cfg.replicates, cfg.workers,
        [&](std::size_t i) {
            const auto s = derive_seed(cfg.seed, i);
            CenterSet cs;
            if (cfg.renewal) {
                cs = sample_renewal_palm(0.5 * cfg.L, *cfg.renewal, s);
            } else {
                cs = sample_poisson(dom, cfg.lambda, s);
                if (cfg.statistic == Statistic::RStar) cs = palm_augment(std::move(cs));
            }
            if (cfg.d == 1) {
                auto out = detail::origin_outcome_1d(solve_1d(cs, cfg.alpha), cfg.statistic);
                if (!cfg.renewal) out.excluded = false;
                return out;
            }
            if (cs.size() == 0) {
                detail::ReplicateOutcome out;
                out.infinite = true;
                out.value = std::numeric_limits<double>::infinity();
                return out;
            }
            return detail::origin_outcome_grid(solve_grid(cs, cfg.alpha, dom), cfg.statistic);
        },
        progress ? std::function<void(std::size_t)>([&](std::size_t d) { progress(d, cfg.replicates); })
                 : std::function<void(std::size_t)>{});

    TailEstimate est;
    est.config = cfg;
    for (const auto& o : outcomes) {
        if (o.excluded) {
            ++est.excluded;
        } else if (o.infinite) {
            ++est.infinite;
        } else {
            est.samples.push_back(o.value);
            if (cfg.statistic == Statistic::X) est.owner_radius.push_back(o.owner_radius);
        }
    }
    if (est.config.radii.empty()) est.config.radii = detail::default_radii(est.samples);
    est.curve = survival_curve(est.samples, est.config.radii, est.samples.size());
    return est;
}

/// Radii (with at least `min_survivors` survivors) where the lower confidence limit exceeds the bound.
inline std::vector<double> bound_violations(const TailEstimate& est, const std::function<double(double)>& bound,
                                            std::uint64_t min_survivors = 10) {
    std::vector<double> bad;
    for (const auto& p : est.curve) {
        if (p.survivors < min_survivors) continue;
        if (p.ci.lo > bound(p.r)) bad.push_back(p.r);
    }
    return bad;
}

inline TailComparison fit_tail(const TailEstimate& est, double tail_quantile = 0.9) {
    return compare_tail_models(est.samples, tail_quantile);
}

/// Two-sample KS on values snapped to a 1e-9 grid, so rounding noise does not split atoms.
inline KsResult distribution_compare(std::vector<double> a, std::vector<double> b) {
    for (auto* v : {&a, &b})
        for (double& x : *v)
            if (std::isfinite(x)) x = std::round(x * 1e9) * 1e-9;
    return ks_two_sample(std::move(a), std::move(b));
}

/// Fraction of radii at which S_a(r) exceeds S_b(r) beyond both 99% intervals.
inline double ordering_violation_fraction(const std::vector<double>& a, const std::vector<double>& b,
                                          const std::vector<double>& radii) {
    detail::require(!radii.empty(), "ordering_violation_fraction: empty radius grid");
    const auto ca = survival_curve(a, radii, a.size());
    const auto cb = survival_curve(b, radii, b.size());
    std::size_t bad = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) bad += ca[i].ci.lo > cb[i].ci.hi;
    return static_cast<double>(bad) / static_cast<double>(radii.size());
}

inline void write_tails_csv(std::ostream& os, const TailEstimate& est, bool header = true) {
    const auto& c = est.config;
    if (header) os << "statistic,d,L,eps,alpha,lambda,r,survival,ci_lo,ci_hi,n\n";
    os << std::setprecision(10);
    for (const auto& p : est.curve) {
        os << to_string(c.statistic) << ',' << c.d << ',' << c.L << ',' << c.eps << ',' << c.alpha << ',' << c.lambda
           << ',' << p.r << ',' << p.survival << ',' << p.ci.lo << ',' << p.ci.hi << ',' << est.n() << '\n';
    }
}

/// Fraction of grid cells whose grid owner differs from the exact interval owner of the cell centre.
inline double cross_solver_disagreement(const IntervalAllocation& exact, const Allocation& grid) {
    detail::require(grid.dom.d() == 1, "cross_solver_disagreement: needs d = 1");
    detail::require(grid.dom.side() == exact.side, "cross_solver_disagreement: window mismatch");
    const OwnerIndex idx(exact);
    std::vector<double> x(1);
    std::size_t differ = 0;
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        grid.dom.cell_center(c, x);
        const auto o = idx.owner(signed_coordinate(x[0], exact.side));
        const auto want = o < 0 ? kUnclaimed : static_cast<std::int32_t>(exact.source[static_cast<std::size_t>(o)]);
        differ += want != grid.assignment[c];
    }
    return static_cast<double>(differ) / static_cast<double>(grid.cell_count());
}

// ---------------------------------------------------------------------------------------------
// rigidity

struct RigidityConfig {
    int d = 1;
    double L = 2000.0;
    double eps = 0.05;
    std::uint64_t replicates = 2000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    /// Coupled: one unit-intensity base shared by all alpha, read at intensity alpha with appetite 1
    /// (the rescaled picture). Otherwise independent unit-intensity samples with appetite alpha.
    bool coupled = true;
};

struct RigidityPoint {
    double alpha = 0.0;
    std::uint64_t unsated = 0;
    std::uint64_t n = 0;
    double frequency = 0.0;
    ConfidenceInterval ci;
};

inline std::vector<RigidityPoint> rigidity_experiment(const std::vector<double>& alphas, const RigidityConfig& cfg,
                                                      const ProgressFn& progress = {}) {
    detail::require(!alphas.empty(), "rigidity_experiment: empty alpha list");
    for (double a : alphas) detail::require(a > 1.0 && std::isfinite(a), "rigidity_experiment: every alpha must exceed 1");
    detail::require(cfg.replicates > 0, "rigidity_experiment: no replicates");
    const Domain dom = cfg.d == 1 ? Domain::continuum(1, cfg.L) : Domain(cfg.d, cfg.L, cfg.eps);
    const double amax = *std::max_element(alphas.begin(), alphas.end());

    auto origin_unsated = [&](const CenterSet& cs, double appetite) {
        if (cfg.d == 1) {
            const auto a = solve_1d(cs, appetite);
            return a.sated[static_cast<std::size_t>(a.origin)] == 0;
        }
        const auto a = solve_grid(cs, appetite, dom);
        std::int64_t held = 0;
        for (auto v : a.assignment) held += v == 0;
        return held < a.kappa;
    };

    auto flags = parallel_map<std::vector<char>>(
        cfg.replicates, cfg.workers,
        [&](std::size_t i) {
            const auto s = derive_seed(cfg.seed, i);
            std::vector<char> f(alphas.size());
            if (cfg.coupled) {
                const auto fam = sample_coupled_family(dom, amax, s);
                for (std::size_t k = 0; k < alphas.size(); ++k)
                    f[k] = origin_unsated(palm_augment(fam.at(alphas[k])), 1.0);
            } else {
                const auto cs = palm_augment(sample_poisson(dom, 1.0, s));
                for (std::size_t k = 0; k < alphas.size(); ++k) f[k] = origin_unsated(cs, alphas[k]);
            }
            return f;
        },
        progress ? std::function<void(std::size_t)>([&](std::size_t d) { progress(d, cfg.replicates); })
                 : std::function<void(std::size_t)>{});

    std::vector<RigidityPoint> out;
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        RigidityPoint p;
        p.alpha = alphas[k];
        p.n = cfg.replicates;
        for (const auto& f : flags) p.unsated += f[k] != 0;
        p.frequency = static_cast<double>(p.unsated) / static_cast<double>(p.n);
        p.ci = wilson(p.unsated, p.n);
        out.push_back(p);
    }
    return out;
}

/// Frequencies nonincreasing within CI (no later lower limit above an earlier upper limit) and the
/// last frequency below half the first.
struct RigidityVerdict {
    bool nonincreasing = false;
    bool halved = false;
    bool pass() const { return nonincreasing && halved; }
};

inline RigidityVerdict assess_rigidity(const std::vector<RigidityPoint>& pts) {
    detail::require(!pts.empty(), "assess_rigidity: no points");
    RigidityVerdict v;
    v.nonincreasing = true;
    for (std::size_t k = 1; k < pts.size(); ++k)
        for (std::size_t j = 0; j < k; ++j) v.nonincreasing &= pts[k].ci.lo <= pts[j].ci.hi;
    v.halved = pts.back().frequency < 0.5 * pts.front().frequency;
    return v;
}

// ---------------------------------------------------------------------------------------------
// continuity and box probes

struct ContinuityConfig {
    int d = 2;
    double window = 20.0;  ///< torus side; boxes are centred at the origin
    double eps = 0.1;
    double alpha = 1.0;
    double lambda = 1.0;
    std::uint64_t resamples = 20;  ///< per base configuration and L
    std::uint64_t bases = 1;       ///< independent base configurations
    std::uint64_t seed = 1;
    unsigned workers = 1;
    double probe_half_side = 1.0;  ///< changed mass is measured in [-h, h)^d
};

struct ContinuityPoint {
    double L = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::uint64_t n = 0;
    double probe_volume = 0.0;
};

namespace detail {

inline bool inside_box(std::span<const double> x, double side, double half) {
    for (double v : x) {
        const double s = signed_coordinate(v, side);
        if (!(s >= -half && s < half)) return false;
    }
    return true;
}

/// Cells of the probe box (row-major indices).
inline std::vector<std::size_t> box_cells(const Domain& dom, double half) {
    std::vector<std::size_t> cells;
    std::vector<double> x(static_cast<std::size_t>(dom.d()));
    for (std::size_t c = 0; c < dom.cell_count(); ++c) {
        dom.cell_center(c, x);
        if (inside_box(x, dom.side(), half)) cells.push_back(c);
    }
    return cells;
}

/// Keeps the centres inside [-half, half)^d and replaces the rest by fresh Poisson points.
inline CenterSet resample_outside(const CenterSet& base, const Domain& dom, double half, double lambda,
                                  std::uint64_t seed) {
    CenterSet out = base;
    out.points = PointList(base.d());
    out.seed = seed;
    for (std::size_t i = 0; i < base.size(); ++i)
        if (inside_box(base.points[i], base.side, half)) out.points.push_back(base.points[i]);
    const auto fresh = sample_poisson(dom, lambda, seed);
    for (std::size_t i = 0; i < fresh.size(); ++i)
        if (!inside_box(fresh.points[i], base.side, half)) out.points.push_back(fresh.points[i]);
    return out;
}

/// Position of the centre owning each listed cell (NaN coordinates when unclaimed).
inline std::vector<double> owner_positions(const CenterSet& cs, double alpha, const Domain& dom,
                                           const std::vector<std::size_t>& cells) {
    const auto d = static_cast<std::size_t>(dom.d());
    std::vector<double> out(cells.size() * d, std::numeric_limits<double>::quiet_NaN());
    if (cs.size() == 0) return out;
    if (dom.d() == 1) {
        const auto a = solve_1d(cs, alpha);
        const OwnerIndex idx(a);
        std::vector<double> x(1);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            dom.cell_center(cells[k], x);
            const auto o = idx.owner(signed_coordinate(x[0], dom.side()));
            if (o >= 0) out[k] = cs.points[a.source[static_cast<std::size_t>(o)]][0];
        }
        return out;
    }
    const auto a = solve_grid(cs, alpha, dom);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto o = a.assignment[cells[k]];
        if (o < 0) continue;
        const auto p = cs.points[static_cast<std::size_t>(o)];
        std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(k * d));
    }
    return out;
}

inline std::size_t changed_cells(const std::vector<double>& a, const std::vector<double>& b, std::size_t d) {
    std::size_t changed = 0;
    for (std::size_t k = 0; k * d < a.size(); ++k) {
        bool same = true;
        for (std::size_t j = 0; j < d; ++j) {
            const double x = a[k * d + j], y = b[k * d + j];
            if (!(x == y || (std::isnan(x) && std::isnan(y)))) same = false;
        }
        changed += !same;
    }
    return changed;
}

}  // namespace detail

/// For each half-side L: fix the base centres inside [-L, L)^d, resample the outside, re-solve and
/// record the volume of probe-box cells whose centre changed. With several bases the mean runs over
/// bases and resamples and the interval comes from the spread of the per-base means.
inline std::vector<ContinuityPoint> continuity_experiment(const std::vector<double>& L_list, const ContinuityConfig& cfg,
                                                          const ProgressFn& progress = {}) {
    detail::require(!L_list.empty(), "continuity_experiment: empty L list");
    for (std::size_t i = 1; i < L_list.size(); ++i)
        detail::require(L_list[i] > L_list[i - 1], "continuity_experiment: L list must be increasing");
    detail::require(L_list.front() > 0.0, "continuity_experiment: L must be positive");
    detail::require(cfg.resamples >= 20, "continuity_experiment: at least 20 resamples per L");
    detail::require(cfg.bases >= 1, "continuity_experiment: at least one base configuration");
    const Domain dom(cfg.d, cfg.window, cfg.eps);
    const auto d = static_cast<std::size_t>(cfg.d);
    const auto cells = detail::box_cells(dom, cfg.probe_half_side);

    std::vector<CenterSet> bases;
    std::vector<std::vector<double>> base_owner;
    for (std::uint64_t b = 0; b < cfg.bases; ++b) {
        bases.push_back(sample_poisson(dom, cfg.lambda, derive_seed(derive_seed(cfg.seed, b), 0)));
        base_owner.push_back(detail::owner_positions(bases.back(), cfg.alpha, dom, cells));
    }

    const std::size_t per_base = L_list.size() * cfg.resamples;
    const std::size_t total = cfg.bases * per_base;
    auto changed = parallel_map<double>(
        total, cfg.workers,
        [&](std::size_t job) {
            const std::size_t b = job / per_base, j = job % per_base;
            const double L = L_list[j / cfg.resamples];
            if (L >= 0.5 * cfg.window) return 0.0;
            const auto cs =
                detail::resample_outside(bases[b], dom, L, cfg.lambda, derive_seed(derive_seed(cfg.seed, b), 1 + j));
            const auto owner = detail::owner_positions(cs, cfg.alpha, dom, cells);
            return static_cast<double>(detail::changed_cells(base_owner[b], owner, d)) * dom.cell_volume();
        },
        progress ? std::function<void(std::size_t)>([&](std::size_t n) { progress(n, total); })
                 : std::function<void(std::size_t)>{});

    const auto mean_sd = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        double s = 0.0, s2 = 0.0;
        for (double x : v) {
            s += x;
            s2 += x * x;
        }
        const double m = s / n;
        return std::pair{m, n > 1.0 ? std::sqrt(std::max(0.0, s2 / n - m * m) * n / (n - 1.0)) : 0.0};
    };

    std::vector<ContinuityPoint> out;
    for (std::size_t k = 0; k < L_list.size(); ++k) {
        ContinuityPoint p;
        p.L = L_list[k];
        p.n = cfg.bases * cfg.resamples;
        p.probe_volume = static_cast<double>(cells.size()) * dom.cell_volume();
        std::vector<double> all, per;
        for (std::size_t b = 0; b < cfg.bases; ++b) {
            std::vector<double> v(changed.begin() + static_cast<std::ptrdiff_t>(b * per_base + k * cfg.resamples),
                                  changed.begin() + static_cast<std::ptrdiff_t>(b * per_base + (k + 1) * cfg.resamples));
            per.push_back(mean_sd(v).first);
            all.insert(all.end(), v.begin(), v.end());
        }
        std::tie(p.mean, p.sd) = mean_sd(all);
        const double se = cfg.bases > 1 ? mean_sd(per).second / std::sqrt(static_cast<double>(cfg.bases))
                                        : p.sd / std::sqrt(static_cast<double>(p.n));
        p.ci_lo = std::max(0.0, p.mean - kZ99 * se);
        p.ci_hi = p.mean + kZ99 * se;
        out.push_back(p);
    }
    return out;
}

struct ContinuityVerdict {
    bool decreasing = false;
    double final_fraction = 0.0;  ///< changed mass over probe volume at the largest L
    double threshold = 0.01;
    bool pass() const { return decreasing && final_fraction < threshold; }
};

/// Decreasing within CI: no mean exceeds an earlier upper limit and no lower limit exceeds an earlier mean.
inline ContinuityVerdict assess_continuity(const std::vector<ContinuityPoint>& pts, double threshold = 0.01) {
    detail::require(!pts.empty(), "assess_continuity: no points");
    ContinuityVerdict v;
    v.threshold = threshold;
    v.decreasing = true;
    for (std::size_t k = 1; k < pts.size(); ++k)
        for (std::size_t j = 0; j < k; ++j) v.decreasing &= pts[k].mean <= pts[j].ci_hi && pts[k].ci_lo <= pts[j].mean;
    v.final_fraction = pts.back().probe_volume > 0.0 ? pts.back().mean / pts.back().probe_volume : 0.0;
    return v;
}

enum class ProbeKind { Replete, Decisive };

struct BoxProbeConfig {
    int d = 1;
    double window = 200.0;
    double eps = 0.05;
    double alpha = 0.8;
    double lambda = 1.0;
    std::uint64_t resamples = 50;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    double boundary_layer = 1.0;  ///< replete probes: centres this close to the box edge form the boundary stratum
};

struct BoxProbePoint {
    double M = 0.0;
    double failure_rate = 0.0;     ///< replete: failing centres per resample; decisive: changed volume per resample
    double per_volume = 0.0;       ///< failure_rate / (2M)^d
    ConfidenceInterval ci;         ///< for the per-probe failure frequency
    double frequency = 0.0;        ///< failures / probes
    std::uint64_t probes = 0;
    std::uint64_t failures = 0;
    double boundary_frequency = 0.0;  ///< replete only
    double central_frequency = 0.0;   ///< replete only
    std::uint64_t boundary_probes = 0;
    std::uint64_t central_probes = 0;
};

namespace detail {

struct ProbeCounts {
    std::uint64_t failures = 0, probes = 0;
    std::uint64_t bfail = 0, bprobes = 0, cfail = 0, cprobes = 0;
};

/// Replete failures: centres of the box that are unsated or hold a cell outside the box.
inline ProbeCounts replete_counts(const CenterSet& cs, double alpha, const Domain& dom, double M, double layer) {
    ProbeCounts pc;
    std::vector<char> inside(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) inside[i] = inside_box(cs.points[i], cs.side, M);
    std::vector<char> fail(cs.size(), 0);
    if (dom.d() == 1) {
        const auto a = solve_1d(cs, alpha);
        for (std::size_t k = 0; k < a.size(); ++k) {
            const auto i = a.source[k];
            if (!inside[i]) continue;
            bool ok = a.sated[k] != 0;
            for (const auto& iv : a.territory[k]) ok = ok && iv.lo >= -M && iv.hi <= M;
            fail[i] = !ok;
        }
    } else {
        const auto a = solve_grid(cs, alpha, dom);
        std::vector<std::int64_t> held(cs.size(), 0);
        std::vector<double> x(static_cast<std::size_t>(dom.d()));
        for (std::size_t c = 0; c < a.cell_count(); ++c) {
            const auto o = a.assignment[c];
            if (o < 0) continue;
            ++held[static_cast<std::size_t>(o)];
            dom.cell_center(c, x);
            if (!inside_box(x, dom.side(), M)) fail[static_cast<std::size_t>(o)] = 1;
        }
        for (std::size_t i = 0; i < cs.size(); ++i)
            if (held[i] < a.kappa) fail[i] = 1;
    }
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!inside[i]) continue;
        double edge = std::numeric_limits<double>::infinity();
        for (double v : cs.points[i]) edge = std::min(edge, M - std::abs(signed_coordinate(v, cs.side)));
        const bool boundary = edge < layer;
        ++pc.probes;
        pc.failures += fail[i];
        (boundary ? pc.bprobes : pc.cprobes) += 1;
        (boundary ? pc.bfail : pc.cfail) += fail[i];
    }
    return pc;
}

}  // namespace detail

/// Empirical replete / decisive failure frequencies of boxes [-M, M)^d under outside resampling.
inline std::vector<BoxProbePoint> box_probe(const BoxProbeConfig& cfg, const std::vector<double>& M_list, ProbeKind kind,
                                            const ProgressFn& progress = {}) {
    detail::require(!M_list.empty(), "box_probe: empty box list");
    for (std::size_t i = 1; i < M_list.size(); ++i)
        detail::require(M_list[i] > M_list[i - 1], "box_probe: box list must be increasing");
    detail::require(cfg.resamples > 0, "box_probe: no resamples");
    if (kind == ProbeKind::Replete)
        detail::require_applicable(cfg.lambda * cfg.alpha <= 1.0, "box_probe: replete probes need lambda * alpha <= 1");
    else
        detail::require_applicable(cfg.lambda >= 1.0 && cfg.alpha == 1.0,
                                   "box_probe: decisive probes need lambda >= 1 and alpha = 1");
    const Domain dom(cfg.d, cfg.window, cfg.eps);
    const auto d = static_cast<std::size_t>(cfg.d);
    const auto base = sample_poisson(dom, cfg.lambda, derive_seed(cfg.seed, 0));

    std::vector<std::vector<std::size_t>> cells(M_list.size());
    std::vector<std::vector<double>> base_owner(M_list.size());
    if (kind == ProbeKind::Decisive) {
        for (std::size_t k = 0; k < M_list.size(); ++k) {
            cells[k] = detail::box_cells(dom, M_list[k]);
            base_owner[k] = detail::owner_positions(base, cfg.alpha, dom, cells[k]);
        }
    }

    const std::size_t total = M_list.size() * cfg.resamples;
    auto counts = parallel_map<detail::ProbeCounts>(
        total, cfg.workers,
        [&](std::size_t job) {
            const std::size_t k = job / cfg.resamples;
            const double M = M_list[k];
            const auto cs = M >= 0.5 * cfg.window ? base
                                                  : detail::resample_outside(base, dom, M, cfg.lambda, derive_seed(cfg.seed, 1 + job));
            if (kind == ProbeKind::Replete) return detail::replete_counts(cs, cfg.alpha, dom, M, cfg.boundary_layer);
            detail::ProbeCounts pc;
            const auto owner = detail::owner_positions(cs, cfg.alpha, dom, cells[k]);
            pc.failures = detail::changed_cells(base_owner[k], owner, d);
            pc.probes = cells[k].size();
            return pc;
        },
        progress ? std::function<void(std::size_t)>([&](std::size_t n) { progress(n, total); })
                 : std::function<void(std::size_t)>{});

    std::vector<BoxProbePoint> out;
    for (std::size_t k = 0; k < M_list.size(); ++k) {
        detail::ProbeCounts sum;
        for (std::size_t r = 0; r < cfg.resamples; ++r) {
            const auto& c = counts[k * cfg.resamples + r];
            sum.failures += c.failures;
            sum.probes += c.probes;
            sum.bfail += c.bfail;
            sum.bprobes += c.bprobes;
            sum.cfail += c.cfail;
            sum.cprobes += c.cprobes;
        }
        BoxProbePoint p;
        p.M = M_list[k];
        p.failures = sum.failures;
        p.probes = sum.probes;
        const double per_resample = static_cast<double>(sum.failures) / static_cast<double>(cfg.resamples);
        p.failure_rate = kind == ProbeKind::Decisive ? per_resample * dom.cell_volume() : per_resample;
        p.per_volume = p.failure_rate / std::pow(2.0 * p.M, cfg.d);
        p.frequency = sum.probes ? static_cast<double>(sum.failures) / static_cast<double>(sum.probes) : 0.0;
        p.ci = wilson(sum.failures, sum.probes);
        p.boundary_probes = sum.bprobes;
        p.central_probes = sum.cprobes;
        p.boundary_frequency = sum.bprobes ? static_cast<double>(sum.bfail) / static_cast<double>(sum.bprobes) : 0.0;
        p.central_frequency = sum.cprobes ? static_cast<double>(sum.cfail) / static_cast<double>(sum.cprobes) : 0.0;
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// rendering

struct RenderOptions {
    bool annuli = true;
    double ring_width = 0.25;  ///< annulus width in length units
};

/// Binary PPM (P6), one pixel per cell; rows follow the first coordinate. Territories get a colour
/// hashed from the centre index, darkened on alternate annuli; unclaimed cells are black.
inline void render_territories(std::ostream& os, const Allocation& a, const RenderOptions& opt = {}) {
    detail::require_applicable(a.dom.d() == 2, "render_territories: only d = 2 can be rendered");
    detail::require(opt.ring_width > 0.0, "render_territories: ring width must be positive");
    const std::size_t n = a.dom.per_axis();
    os << "P6\n" << n << ' ' << n << "\n255\n";
    std::vector<double> x(2);
    std::vector<char> row(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t c = i * n + j;
            const auto o = a.assignment[c];
            unsigned char rgb[3] = {0, 0, 0};
            if (o >= 0) {
                const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(o) + 1);
                for (int k = 0; k < 3; ++k) rgb[k] = static_cast<unsigned char>(80 + ((h >> (8 * k)) & 0xff) % 176);
                if (opt.annuli) {
                    a.dom.cell_center(c, x);
                    const double r = std::sqrt(torus_distance2(x, a.centers.points[static_cast<std::size_t>(o)], a.dom.side()));
                    if (static_cast<std::int64_t>(std::floor(r / opt.ring_width)) % 2 == 1)
                        for (auto& v : rgb) v = static_cast<unsigned char>(v * 3 / 5);
                }
            }
            for (int k = 0; k < 3; ++k) row[3 * j + static_cast<std::size_t>(k)] = static_cast<char>(rgb[k]);
        }
        os.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
}

}  // namespace alloclab
