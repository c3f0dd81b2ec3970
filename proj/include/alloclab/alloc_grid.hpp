#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <vector>

#include "alloclab/errors.hpp"
#include "alloclab/geometry.hpp"
#include "alloclab/point_process.hpp"
#include "alloclab/spatial_index.hpp"

namespace alloclab {

inline constexpr std::int32_t kUnclaimed = -1;

/// Discretised allocation: every grid cell maps to a centre index or kUnclaimed.
struct Allocation {
    Domain dom;
    CenterSet centers;
    double alpha = 0.0;
    std::int64_t kappa = 0;  ///< per-centre cell capacity
    double alpha_hat = 0.0;  ///< kappa * eps^d
    std::vector<std::int32_t> assignment;
    std::uint64_t proposals = 0;

    std::size_t cell_count() const { return assignment.size(); }

    /// Number of cells held by each centre.
    std::vector<std::int64_t> territory_sizes() const {
        std::vector<std::int64_t> n(centers.size(), 0);
        for (auto a : assignment)
            if (a >= 0) ++n[static_cast<std::size_t>(a)];
        return n;
    }
};

inline std::int64_t capacity_for(double alpha, const Domain& dom) {
    return static_cast<std::int64_t>(std::llround(alpha / dom.cell_volume()));
}

/// Cell-proposing deferred acceptance on the eps-grid.
///
/// Each free cell proposes to its nearest centre that has not yet rejected it, ranking centres
/// by (distance, centre index). A centre keeps its kappa best proposers ranked by
/// (distance, cell index) and rejects the rest. Cells rejected by every centre stay unclaimed.
/// The outcome is the cell-optimal stable matching and does not depend on proposal order.
inline Allocation solve_grid(const CenterSet& centers, double alpha, const Domain& dom) {
    detail::require(alpha > 0.0 && std::isfinite(alpha), "solve_grid: alpha must be positive");
    detail::require(centers.size() > 0, "solve_grid: no centres");
    detail::require(centers.d() == dom.d(), "solve_grid: dimension mismatch");
    detail::require(centers.side == dom.side(), "solve_grid: window mismatch");
    detail::require(centers.size() < static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()),
                    "solve_grid: too many centres");

    Allocation out;
    out.dom = dom;
    out.centers = centers;
    out.alpha = alpha;
    out.kappa = capacity_for(alpha, dom);
    detail::require(out.kappa >= 1, "solve_grid: appetite rounds to zero cells at this resolution");
    out.alpha_hat = static_cast<double>(out.kappa) * dom.cell_volume();

    const std::size_t ncell = dom.cell_count();
    const std::size_t m = centers.size();
    const auto d = static_cast<std::size_t>(dom.d());
    const PointList sites = cell_centers(dom);
    const double intensity = static_cast<double>(m) / dom.volume();
    const BucketIndex index(centers.points, dom.side(), std::pow(1.0 / intensity, 1.0 / dom.d()));

    struct Held {
        double dist2;
        std::uint32_t cell;
        bool operator<(const Held& o) const { return dist2 < o.dist2 || (dist2 == o.dist2 && cell < o.cell); }
    };
    std::vector<std::vector<Held>> held(m);
    // Per-cell candidate list, refilled in shells [lo, hi) of doubling radius.
    struct Queue {
        std::vector<CenterKey> keys;
        std::size_t pos = 0;
        double radius = 0.0;
    };
    std::vector<Queue> queue(ncell);
    out.assignment.assign(ncell, kUnclaimed);
    const auto kappa = static_cast<std::size_t>(std::min<std::int64_t>(out.kappa, static_cast<std::int64_t>(ncell)));
    const std::uint64_t proposal_bound = static_cast<std::uint64_t>(ncell) * m;
    std::uint64_t proposals = 0;

    std::size_t full_centers = 0;
    const double full_reach = 0.5 * dom.side() * std::sqrt(static_cast<double>(dom.d()));
    const double first_radius =
        std::min(full_reach * 1.0001, 1.5 * std::pow(6.0 / (intensity * unit_ball_volume(dom.d())), 1.0 / dom.d()));

    auto site = [&](std::uint32_t c) { return std::span<const double>{sites.coords().data() + c * d, d}; };

    // Free cells ordered by their next proposal (distance^2, cell, centre). Proposals are thus made
    // in increasing global distance order, a valid deferred-acceptance schedule in which every
    // proposal reaching a full centre ranks below all of that centre's holdings.
    struct Pending {
        double dist2;
        std::uint32_t cell;
        std::int32_t center;
        bool operator>(const Pending& o) const {
            if (dist2 != o.dist2) return dist2 > o.dist2;
            if (cell != o.cell) return cell > o.cell;
            return center > o.center;
        }
    };
    std::vector<Pending> free_cells;
    free_cells.reserve(ncell);
    auto next_key = [&](std::uint32_t c) -> CenterKey {
        auto& q = queue[c];
        while (q.pos == q.keys.size()) {
            if (q.radius > full_reach) return {};
            const double lo = q.radius;
            const double hi = lo == 0.0 ? first_radius : 2.0 * lo;
            q.keys.clear();
            q.pos = 0;
            index.for_each_within(site(c), hi, [&](std::int32_t j, double d2) {
                if (d2 >= lo * lo) q.keys.push_back({d2, j});
            });
            std::sort(q.keys.begin(), q.keys.end());
            q.radius = hi;
        }
        return q.keys[q.pos++];
    };
    auto enqueue = [&](std::uint32_t c) {
        const CenterKey k = next_key(c);
        if (k.index < 0) {
            out.assignment[c] = kUnclaimed;
            return;
        }
        free_cells.push_back({k.dist2, c, k.index});
        std::push_heap(free_cells.begin(), free_cells.end(), std::greater<>{});
    };
    for (std::size_t c = 0; c < ncell; ++c) enqueue(static_cast<std::uint32_t>(c));

    while (!free_cells.empty() && full_centers < m) {
        std::pop_heap(free_cells.begin(), free_cells.end(), std::greater<>{});
        const Pending p = free_cells.back();
        free_cells.pop_back();
        ++proposals;
        auto& h = held[static_cast<std::size_t>(p.center)];
        const Held cand{p.dist2, p.cell};
        if (h.size() < kappa) {
            h.push_back(cand);
            std::push_heap(h.begin(), h.end());
            if (h.size() == kappa) ++full_centers;
            out.assignment[p.cell] = p.center;
        } else if (cand < h.front()) {
            std::pop_heap(h.begin(), h.end());
            const std::uint32_t evicted = h.back().cell;
            h.back() = cand;
            std::push_heap(h.begin(), h.end());
            out.assignment[p.cell] = p.center;
            out.assignment[evicted] = kUnclaimed;
            enqueue(evicted);
        } else {
            enqueue(p.cell);
        }
    }
    // every centre is full: remaining proposals all rank below current holdings
    for (const auto& p : free_cells) out.assignment[p.cell] = kUnclaimed;
    if (proposals > proposal_bound) throw std::logic_error("solve_grid: proposal bound exceeded");
    out.proposals = proposals;
    return out;
}

/// A (cell, centre) pair violating stability.
struct UnstablePair {
    std::size_t cell;
    std::int32_t center;
    bool operator==(const UnstablePair&) const = default;
};

/// All delta-unstable pairs: the cell is closer to the centre than to its own centre by more
/// than delta (or is unclaimed), and the centre is unsated or holds a cell farther than the
/// candidate by more than delta.
inline std::vector<UnstablePair> check_stability(const Allocation& alloc, double delta) {
    detail::require(delta >= 0.0, "check_stability: negative slack");
    const auto& dom = alloc.dom;
    const auto& pts = alloc.centers.points;
    const std::size_t m = alloc.centers.size();
    const auto d = static_cast<std::size_t>(dom.d());
    const PointList sites = cell_centers(dom);

    std::vector<std::int64_t> count(m, 0);
    std::vector<double> radius(m, 0.0);
    for (std::size_t c = 0; c < alloc.cell_count(); ++c) {
        const auto a = alloc.assignment[c];
        if (a < 0) continue;
        const auto ai = static_cast<std::size_t>(a);
        ++count[ai];
        radius[ai] = std::max(radius[ai], std::sqrt(torus_distance2(sites[c], pts[ai], dom.side())));
    }
    bool any_unsated = false;
    double max_radius = 0.0;
    std::vector<char> unsated(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        unsated[i] = count[i] < alloc.kappa;
        any_unsated = any_unsated || unsated[i];
        max_radius = std::max(max_radius, radius[i]);
    }

    const double intensity = static_cast<double>(m) / dom.volume();
    const BucketIndex index(pts, dom.side(), std::pow(1.0 / intensity, 1.0 / dom.d()));
    std::vector<UnstablePair> bad;
    for (std::size_t c = 0; c < alloc.cell_count(); ++c) {
        const auto a = alloc.assignment[c];
        const std::span<const double> x{sites.coords().data() + c * d, d};
        const double own = a >= 0 ? std::sqrt(torus_distance2(x, pts[static_cast<std::size_t>(a)], dom.side()))
                                  : std::numeric_limits<double>::infinity();
        double reach = any_unsated ? own : std::min(own, max_radius);
        reach -= delta;
        if (!(reach > 0.0)) continue;
        auto test = [&](std::int32_t j, double d2) {
            if (j == a) return;
            const double dist = std::sqrt(d2);
            if (a >= 0 && !(dist < own - delta)) return;
            const auto ji = static_cast<std::size_t>(j);
            if (unsated[ji] || dist < radius[ji] - delta) bad.push_back({c, j});
        };
        if (std::isinf(reach)) {
            for (std::size_t j = 0; j < m; ++j) test(static_cast<std::int32_t>(j), torus_distance2(x, pts[j], dom.side()));
        } else {
            index.for_each_within(x, reach, test);
        }
    }
    std::sort(bad.begin(), bad.end(), [](const UnstablePair& l, const UnstablePair& r) {
        return l.cell < r.cell || (l.cell == r.cell && l.center < r.center);
    });
    return bad;
}

/// Distance from the cell containing the origin to its centre; +infinity when unclaimed.
inline double measure_X(const Allocation& alloc) {
    const std::vector<double> origin(static_cast<std::size_t>(alloc.dom.d()), 0.0);
    const std::size_t c = alloc.dom.cell_of(origin);
    const auto a = alloc.assignment[c];
    if (a < 0) return std::numeric_limits<double>::infinity();
    std::vector<double> x(static_cast<std::size_t>(alloc.dom.d()));
    alloc.dom.cell_center(c, x);
    return std::sqrt(torus_distance2(x, alloc.centers.points[static_cast<std::size_t>(a)], alloc.dom.side()));
}

struct RadiusResult {
    double radius = 0.0;
    bool empty = true;
};

/// Maximum torus distance from centre `xi` to a cell of its territory.
inline RadiusResult measure_radius(const Allocation& alloc, std::size_t xi) {
    detail::require(xi < alloc.centers.size(), "measure_radius: centre index out of range");
    RadiusResult r;
    std::vector<double> x(static_cast<std::size_t>(alloc.dom.d()));
    const auto target = static_cast<std::int32_t>(xi);
    for (std::size_t c = 0; c < alloc.cell_count(); ++c) {
        if (alloc.assignment[c] != target) continue;
        alloc.dom.cell_center(c, x);
        r.radius = std::max(r.radius, std::sqrt(torus_distance2(x, alloc.centers.points[xi], alloc.dom.side())));
        r.empty = false;
    }
    return r;
}

/// Radius of every territory (0 for empty territories).
inline std::vector<double> territory_radii(const Allocation& alloc) {
    std::vector<double> r(alloc.centers.size(), 0.0);
    std::vector<double> x(static_cast<std::size_t>(alloc.dom.d()));
    for (std::size_t c = 0; c < alloc.cell_count(); ++c) {
        const auto a = alloc.assignment[c];
        if (a < 0) continue;
        alloc.dom.cell_center(c, x);
        auto& slot = r[static_cast<std::size_t>(a)];
        slot = std::max(slot, std::sqrt(torus_distance2(x, alloc.centers.points[static_cast<std::size_t>(a)],
                                                        alloc.dom.side())));
    }
    return r;
}

struct PhaseStats {
    double claimed_fraction = 0.0;
    double unsated_fraction = 0.0;
    double unclaimed_volume = 0.0;
};

inline PhaseStats phase_stats(const Allocation& alloc) {
    PhaseStats s;
    std::size_t claimed = 0;
    for (auto a : alloc.assignment) claimed += a >= 0;
    const auto sizes = alloc.territory_sizes();
    std::size_t unsated = 0;
    for (auto n : sizes) unsated += n < alloc.kappa;
    const auto total = static_cast<double>(alloc.cell_count());
    s.claimed_fraction = static_cast<double>(claimed) / total;
    s.unsated_fraction = sizes.empty() ? 0.0 : static_cast<double>(unsated) / static_cast<double>(sizes.size());
    s.unclaimed_volume = static_cast<double>(alloc.cell_count() - claimed) * alloc.dom.cell_volume();
    return s;
}

// Binary grid file: little-endian header
//   u32 d | f64 L | f64 eps | f64 alpha | i64 kappa | u64 center count | u64 seed
// followed by one i32 per cell in row-major order (-1 = unclaimed).

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U u = std::bit_cast<U>(v);
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    os.write(buf, sizeof(U));
}

template <typename T>
T get_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    unsigned char buf[sizeof(U)];
    is.read(reinterpret_cast<char*>(buf), sizeof(U));
    require(static_cast<bool>(is), "allocation file: truncated");
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) u |= static_cast<U>(buf[i]) << (8 * i);
    return std::bit_cast<T>(u);
}

}  // namespace detail

inline void write_allocation(std::ostream& os, const Allocation& a) {
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.dom.d()));
    detail::put_le<double>(os, a.dom.side());
    detail::put_le<double>(os, a.dom.eps());
    detail::put_le<double>(os, a.alpha);
    detail::put_le<std::int64_t>(os, a.kappa);
    detail::put_le<std::uint64_t>(os, a.centers.size());
    detail::put_le<std::uint64_t>(os, a.centers.seed);
    for (auto v : a.assignment) detail::put_le<std::int32_t>(os, v);
}

/// Header and assignment of a grid file (centre coordinates are not stored).
struct GridFile {
    Domain dom;
    double alpha = 0.0;
    std::int64_t kappa = 0;
    std::uint64_t center_count = 0;
    std::uint64_t seed = 0;
    std::vector<std::int32_t> assignment;
};

inline GridFile read_allocation(std::istream& is) {
    GridFile g;
    const auto d = detail::get_le<std::uint32_t>(is);
    const double side = detail::get_le<double>(is);
    const double eps = detail::get_le<double>(is);
    g.dom = Domain(static_cast<int>(d), side, eps);
    g.alpha = detail::get_le<double>(is);
    g.kappa = detail::get_le<std::int64_t>(is);
    g.center_count = detail::get_le<std::uint64_t>(is);
    g.seed = detail::get_le<std::uint64_t>(is);
    g.assignment.resize(g.dom.cell_count());
    for (auto& v : g.assignment) {
        v = detail::get_le<std::int32_t>(is);
        detail::require(v >= -1 && static_cast<std::uint64_t>(v + 1) <= g.center_count, "allocation file: bad index");
    }
    return g;
}

}  // namespace alloclab
