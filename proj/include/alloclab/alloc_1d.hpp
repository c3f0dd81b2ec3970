#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include <json.hpp>

#include "alloclab/errors.hpp"
#include "alloclab/parallel.hpp"
#include "alloclab/point_process.hpp"
#include "alloclab/rng.hpp"
#include "alloclab/stats.hpp"

namespace alloclab {

/// Half-open interval [lo, hi) on the line.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

/// Maps a torus coordinate in [0, W) to the signed frame [-W/2, W/2).
inline double signed_coordinate(double x, double side) { return x < 0.5 * side ? x : x - side; }

/// The sawtooth F with F(0) = 1, unit jumps at the centres and slope -1 elsewhere.
/// Values are computed from integer counts, so no drift accumulates along the path.
class FPath {
public:
    FPath() = default;

    /// `jumps` must be strictly increasing. F is only meaningful on [lo, hi).
    explicit FPath(std::vector<double> jumps, double lo = -std::numeric_limits<double>::infinity(),
                   double hi = std::numeric_limits<double>::infinity())
        : jumps_(std::move(jumps)), lo_(lo), hi_(hi) {
        for (std::size_t i = 1; i < jumps_.size(); ++i)
            detail::require(jumps_[i - 1] < jumps_[i], "FPath: centres must be strictly increasing");
        for (double x : jumps_) detail::require(std::isfinite(x), "FPath: non-finite centre");
        detail::require(lo_ < hi_, "FPath: empty window");
        base_ = upper(0.0);
    }

    const std::vector<double>& jumps() const { return jumps_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    /// N(s, t]: number of centres in the half-open interval.
    std::int64_t count(double s, double t) const { return t <= s ? 0 : upper(t) - upper(s); }

    double value(double t) const { return 1.0 + static_cast<double>(upper(t) - base_) - t; }
    double left_limit(double t) const { return 1.0 + static_cast<double>(lower(t) - base_) - t; }

    bool contains_center(double x) const { return std::binary_search(jumps_.begin(), jumps_.end(), x); }

private:
    std::int64_t upper(double t) const {
        return static_cast<std::int64_t>(std::upper_bound(jumps_.begin(), jumps_.end(), t) - jumps_.begin());
    }
    std::int64_t lower(double t) const {
        return static_cast<std::int64_t>(std::lower_bound(jumps_.begin(), jumps_.end(), t) - jumps_.begin());
    }

    std::vector<double> jumps_;
    double lo_ = -std::numeric_limits<double>::infinity();
    double hi_ = std::numeric_limits<double>::infinity();
    std::int64_t base_ = 0;
};

inline FPath build_F(std::vector<double> sorted_centers, double lo = -std::numeric_limits<double>::infinity(),
                     double hi = std::numeric_limits<double>::infinity()) {
    return FPath(std::move(sorted_centers), lo, hi);
}

/// F for a 1D configuration, read in the signed frame [-L/2, L/2).
inline FPath build_F(const CenterSet& cs) {
    detail::require(cs.d() == 1, "build_F: configuration must be one-dimensional");
    std::vector<double> x;
    x.reserve(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) x.push_back(signed_coordinate(cs.points[i][0], cs.side));
    std::sort(x.begin(), x.end());
    detail::require(std::adjacent_find(x.begin(), x.end()) == x.end(), "build_F: duplicate centres");
    return FPath(std::move(x), -0.5 * cs.side, 0.5 * cs.side);
}

/// Continuum allocation of a circle of length `side` in line coordinates.
/// Centres sit in the signed frame; a territory may run past +-side/2, in which case it wraps.
struct IntervalAllocation {
    double side = 0.0;
    double alpha = 1.0;
    std::vector<double> centers;                    ///< ascending, signed frame
    std::vector<std::size_t> source;                ///< index of each centre in the originating CenterSet
    std::vector<std::vector<Interval>> territory;   ///< sorted, merged, line coordinates
    std::vector<char> sated;
    std::vector<char> seam;                         ///< territory leaves [centers.front(), centers.back()]
    std::ptrdiff_t origin = -1;                     ///< centre at 0, if any

    std::size_t size() const { return centers.size(); }

    double mass(std::size_t i) const {
        double m = 0.0;
        for (const auto& iv : territory[i]) m += iv.length();
        return m;
    }

    /// Supremum distance from centre i to its territory (0 if empty).
    double radius(std::size_t i) const {
        double r = 0.0;
        for (const auto& iv : territory[i]) r = std::max({r, centers[i] - iv.lo, iv.hi - centers[i]});
        return r;
    }

    double claimed_length() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m += mass(i);
        return m;
    }
};

/// Owner lookup on the circle for an IntervalAllocation.
class OwnerIndex {
public:
    explicit OwnerIndex(const IntervalAllocation& a) : side_(a.side) {
        const double h = 0.5 * side_;
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (const auto& iv : a.territory[i]) {
                // split at the frame boundary so every stored piece lies in [-W/2, W/2)
                double lo = iv.lo;
                const double hi = iv.hi;
                while (lo < hi) {
                    const double shift = std::floor((lo + h) / side_) * side_;
                    const double l = lo - shift;
                    const double r = std::min(hi - shift, h);
                    if (r > l) pieces_.push_back({l, r, static_cast<std::int32_t>(i)});
                    lo = r + shift;
                }
            }
        }
        std::sort(pieces_.begin(), pieces_.end(), [](const Piece& x, const Piece& y) { return x.lo < y.lo; });
    }

    /// Centre index owning site x (any real), or -1.
    std::int32_t owner(double x) const {
        const double h = 0.5 * side_;
        x -= std::floor((x + h) / side_) * side_;
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x, [](double v, const Piece& p) { return v < p.lo; });
        if (it == pieces_.begin()) return -1;
        --it;
        return x < it->hi ? it->center : -1;
    }

private:
    struct Piece {
        double lo, hi;
        std::int32_t center;
    };
    double side_;
    std::vector<Piece> pieces_;
};

namespace detail {

/// Subset of {0..n-1} that only loses elements, with circular successor/predecessor queries
/// answered by path-halving union-find.
class ShrinkingSet {
public:
    explicit ShrinkingSet(int n = 0) : n_(n), size_(n), nx_(static_cast<std::size_t>(n) + 1), pv_(static_cast<std::size_t>(n) + 1) {
        for (int i = 0; i <= n; ++i) {
            nx_[static_cast<std::size_t>(i)] = i;
            pv_[static_cast<std::size_t>(i)] = i;
        }
    }

    bool empty() const { return size_ == 0; }
    bool contains(int i) const { return nx_[static_cast<std::size_t>(i)] == i; }

    void erase(int i) {
        if (!contains(i)) return;
        nx_[static_cast<std::size_t>(i)] = i + 1;
        pv_[static_cast<std::size_t>(i) + 1] = i;
        --size_;
    }

    /// Smallest element >= i, wrapping around; -1 if empty.
    int next(int i) {
        if (size_ == 0) return -1;
        int j = find(nx_, i);
        return j < n_ ? j : find(nx_, 0);
    }
    /// Largest element <= i, wrapping around; -1 if empty.
    int prev(int i) {
        if (size_ == 0) return -1;
        int j = find(pv_, i + 1) - 1;
        return j >= 0 ? j : find(pv_, n_) - 1;
    }

private:
    static int find(std::vector<int>& parent, int i) {
        while (parent[static_cast<std::size_t>(i)] != i) {
            auto& p = parent[static_cast<std::size_t>(i)];
            p = parent[static_cast<std::size_t>(p)];
            i = p;
        }
        return i;
    }

    int n_;
    int size_;
    std::vector<int> nx_;
    std::vector<int> pv_;  // shifted by one: slot i + 1 stands for element i, slot 0 for "none"
};

/// Event-driven ball growth on a circle: all unsated centres grow at unit speed and claim the
/// unclaimed sites their balls reach; a centre stops once it holds `alpha`. Unclaimed sites form
/// gaps between consecutive centres that only shrink from their ends, so each gap end is eaten by
/// the nearest active centre on that side.
class CircleSolver {
public:
    CircleSolver(std::vector<double> pos, double side, double alpha)
        : p_(std::move(pos)), W_(side), alpha_(alpha), n_(static_cast<int>(p_.size())) {
        tol_ = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, W_);
        len_.resize(n_);
        for (int g = 0; g < n_; ++g) len_[g] = g + 1 < n_ ? p_[g + 1] - p_[g] : p_[0] + W_ - p_[n_ - 1];
        gaps_.resize(n_);
        for (int g = 0; g < n_; ++g) {
            gaps_[g].A = 0.0;
            gaps_[g].B = len_[g];
        }
        open_ = ShrinkingSet(n_);
        active_ = ShrinkingSet(n_);
        cs_.resize(n_);
        pieces_.resize(n_);
    }

    void run() {
        if (n_ == 0) return;
        std::vector<int> work(static_cast<std::size_t>(n_));
        for (int c = 0; c < n_; ++c) work[static_cast<std::size_t>(c)] = c;
        settle(work, 0.0);
        while (!pq_.empty()) {
            const Event e = pq_.top();
            pq_.pop();
            if (e.version != cs_[e.center].version) continue;
            work_.assign(1, e.center);
            settle(work_, e.time);
        }
    }

    bool sated(int c) const { return cs_[c].sated; }
    const std::vector<Interval>& pieces(int c) const { return pieces_[c]; }

private:
    struct Gap {
        double A = 0.0, B = 0.0;       // open part in gap coordinates (0 at the left centre)
        int eatL = -1, eatR = -1;      // centres currently eating each end
        double PL = 0.0, PR = 0.0;     // eater front offsets: left end at PL + t, right end at PR - t
        double startA = 0.0, startB = 0.0;
    };
    struct CenterState {
        double v = 0.0, tv = 0.0;
        int rate = 0;
        int target[2] = {-1, -1};  // 0 = left, 1 = right
        bool sated = false;
        std::uint64_t version = 0;
    };
    struct Event {
        double time;
        int center;
        std::uint64_t version;
        bool operator>(const Event& o) const { return time > o.time || (time == o.time && center > o.center); }
    };

    int next_active(int c) { return active_.next(wrap(c + 1)); }
    int prev_active(int c) { return active_.prev(wrap(c - 1)); }
    double fwd(int from, int to) const { return to >= from ? p_[to] - p_[from] : p_[to] + W_ - p_[from]; }
    int wrap(int i) const { return ((i % n_) + n_) % n_; }

    double posA(const Gap& g, double t) const { return g.eatL >= 0 ? g.PL + t : g.A; }
    double posB(const Gap& g, double t) const { return g.eatR >= 0 ? g.PR - t : g.B; }

    void advance(int c, double t) {
        auto& s = cs_[c];
        s.v += s.rate * (t - s.tv);
        s.tv = t;
    }

    void record(int c, double lo, double hi) {
        if (hi > lo) pieces_[c].push_back({lo, hi});
    }

    // stop the eater of gap g's left/right end at time t, freezing the end
    void stop_left(int gi, double t) {
        auto& g = gaps_[gi];
        if (g.eatL < 0) return;
        const int c = g.eatL;
        advance(c, t);
        g.A = std::min(g.PL + t, g.B);
        record(c, g.startA - g.PL, g.A - g.PL);
        g.eatL = -1;
        --cs_[c].rate;
        cs_[c].target[1] = -1;
    }
    void stop_right(int gi, double t) {
        auto& g = gaps_[gi];
        if (g.eatR < 0) return;
        const int c = g.eatR;
        advance(c, t);
        g.B = std::max(g.PR - t, g.A);
        record(c, g.B - g.PR, g.startB - g.PR);
        g.eatR = -1;
        --cs_[c].rate;
        cs_[c].target[0] = -1;
    }

    double closure_time(const Gap& g) const {
        if (g.eatL >= 0 && g.eatR >= 0) return 0.5 * (g.PR - g.PL);
        if (g.eatL >= 0) return g.B - g.PL;
        if (g.eatR >= 0) return g.PR - g.A;
        return std::numeric_limits<double>::infinity();
    }

    int find_right_target(int c) {
        if (open_.empty()) return -1;
        const int g = open_.next(c);
        const int nact = next_active(c);
        int range = wrap(nact - c);
        if (range == 0) range = n_;
        return wrap(g - c) < range ? g : -1;
    }
    int find_left_target(int c) {
        if (open_.empty()) return -1;
        const int q = wrap(c - 1);
        const int g = open_.prev(q);
        const int pact = prev_active(c);
        int range = wrap(c - pact);
        if (range == 0) range = n_;
        return wrap(q - g) < range ? g : -1;
    }

    void settle(std::vector<int>& work, double t) {
        while (!work.empty()) {
            const int c = work.back();
            work.pop_back();
            auto& s = cs_[c];
            advance(c, t);
            // gap closures
            for (int side = 0; side < 2; ++side) {
                const int gi = s.target[side];
                if (gi < 0 || !open_.contains(gi)) continue;
                auto& g = gaps_[gi];
                const bool eating = side == 1 ? g.eatL == c : g.eatR == c;
                if (!eating) continue;
                const double a = posA(g, t), b = posB(g, t);
                if (b - a > tol_) continue;
                const double m = g.eatL >= 0 && g.eatR >= 0 ? 0.5 * (a + b) : (g.eatL >= 0 ? g.B : g.A);
                const int l = g.eatL, r = g.eatR;
                if (l >= 0) {
                    advance(l, t);
                    record(l, g.startA - g.PL, m - g.PL);
                    --cs_[l].rate;
                    cs_[l].target[1] = -1;
                    work.push_back(l);
                }
                if (r >= 0) {
                    advance(r, t);
                    record(r, m - g.PR, g.startB - g.PR);
                    --cs_[r].rate;
                    cs_[r].target[0] = -1;
                    work.push_back(r);
                }
                g.A = g.B = m;
                g.eatL = g.eatR = -1;
                open_.erase(gi);
            }
            if (s.sated) continue;
            // sating
            if (s.v >= alpha_ - tol_) {
                s.v = alpha_;
                if (s.target[1] >= 0 && gaps_[s.target[1]].eatL == c) {
                    const int other = gaps_[s.target[1]].eatR;
                    stop_left(s.target[1], t);
                    if (other >= 0) work.push_back(other);
                }
                if (s.target[0] >= 0 && gaps_[s.target[0]].eatR == c) {
                    const int other = gaps_[s.target[0]].eatL;
                    stop_right(s.target[0], t);
                    if (other >= 0) work.push_back(other);
                }
                s.target[0] = s.target[1] = -1;
                s.sated = true;
                ++s.version;
                active_.erase(c);
                if (!active_.empty()) {
                    work.push_back(prev_active(c));
                    work.push_back(next_active(c));
                }
                continue;
            }
            // targets
            const int rt = find_right_target(c);
            if (rt != s.target[1]) {
                if (s.target[1] >= 0 && open_.contains(s.target[1]) && gaps_[s.target[1]].eatL == c) stop_left(s.target[1], t);
                s.target[1] = rt;
            }
            if (rt >= 0 && gaps_[rt].eatL != c) {
                auto& g = gaps_[rt];
                const double PL = -fwd(c, rt);
                if (PL + t >= g.A - tol_) {
                    g.eatL = c;
                    g.PL = PL;
                    g.startA = g.A;
                    ++s.rate;
                    if (g.eatR >= 0) work.push_back(g.eatR);
                }
            }
            const int lt = find_left_target(c);
            if (lt != s.target[0]) {
                if (s.target[0] >= 0 && open_.contains(s.target[0]) && gaps_[s.target[0]].eatR == c) stop_right(s.target[0], t);
                s.target[0] = lt;
            }
            if (lt >= 0 && gaps_[lt].eatR != c) {
                auto& g = gaps_[lt];
                const double PR = len_[lt] + fwd(wrap(lt + 1), c);
                if (PR - t <= g.B + tol_) {
                    g.eatR = c;
                    g.PR = PR;
                    g.startB = g.B;
                    ++s.rate;
                    if (g.eatL >= 0) work.push_back(g.eatL);
                }
            }
            schedule(c);
        }
    }

    void schedule(int c) {
        auto& s = cs_[c];
        ++s.version;
        double next = std::numeric_limits<double>::infinity();
        if (s.rate > 0) next = s.tv + (alpha_ - s.v) / s.rate;
        if (s.target[1] >= 0) {
            const auto& g = gaps_[s.target[1]];
            next = std::min(next, g.eatL == c ? closure_time(g) : g.A + fwd(c, s.target[1]));
        }
        if (s.target[0] >= 0) {
            const auto& g = gaps_[s.target[0]];
            const double PR = len_[s.target[0]] + fwd(wrap(s.target[0] + 1), c);
            next = std::min(next, g.eatR == c ? closure_time(g) : PR - g.B);
        }
        if (std::isfinite(next)) pq_.push({std::max(next, s.tv), c, s.version});
    }

    std::vector<double> p_;
    double W_;
    double alpha_;
    int n_;
    double tol_;
    std::vector<double> len_;
    std::vector<Gap> gaps_;
    std::vector<CenterState> cs_;
    ShrinkingSet open_;
    ShrinkingSet active_;
    std::vector<int> work_;
public:
    std::vector<std::vector<Interval>> pieces_;  // offsets relative to the centre
    std::priority_queue<Event, std::vector<Event>, std::greater<>> pq_;
};

inline std::vector<Interval> merge_intervals(std::vector<Interval> v, double tol) {
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    for (const auto& iv : v) {
        if (!out.empty() && iv.lo <= out.back().hi + tol)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}

}  // namespace detail

/// Exact stable allocation of the circle of length cs.side to a 1D configuration.
inline IntervalAllocation solve_1d(const CenterSet& cs, double alpha = 1.0) {
    detail::require(cs.d() == 1, "solve_1d: configuration must be one-dimensional");
    detail::require(alpha > 0.0 && std::isfinite(alpha), "solve_1d: alpha must be positive");
    const std::size_t n = cs.size();
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = {signed_coordinate(cs.points[i][0], cs.side), i};
    std::sort(order.begin(), order.end());
    for (std::size_t i = 1; i < n; ++i)
        detail::require(order[i - 1].first < order[i].first, "solve_1d: duplicate centres");

    IntervalAllocation out;
    out.side = cs.side;
    out.alpha = alpha;
    out.centers.resize(n);
    out.source.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.centers[i] = order[i].first;
        out.source[i] = order[i].second;
        if (order[i].first == 0.0) out.origin = static_cast<std::ptrdiff_t>(i);
    }
    out.territory.resize(n);
    out.sated.assign(n, 0);
    out.seam.assign(n, 0);
    if (n == 0) return out;

    detail::CircleSolver solver(out.centers, cs.side, alpha);
    solver.run();
    const double tol = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, cs.side);
    for (std::size_t i = 0; i < n; ++i) {
        auto pieces = solver.pieces(static_cast<int>(i));
        for (auto& iv : pieces) {
            iv.lo += out.centers[i];
            iv.hi += out.centers[i];
        }
        out.territory[i] = detail::merge_intervals(std::move(pieces), tol);
        out.sated[i] = solver.sated(static_cast<int>(i));
        for (const auto& iv : out.territory[i])
            if (iv.lo < out.centers.front() || iv.hi > out.centers.back()) out.seam[i] = 1;
    }
    return out;
}

inline nlohmann::json to_json(const IntervalAllocation& a) {
    nlohmann::json terr = nlohmann::json::array();
    for (const auto& t : a.territory) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& iv : t) list.push_back({iv.lo, iv.hi});
        terr.push_back(std::move(list));
    }
    std::vector<bool> sated(a.sated.begin(), a.sated.end());
    return {{"L", a.side}, {"alpha", a.alpha}, {"centers", a.centers}, {"sated", sated}, {"territories", std::move(terr)}};
}

inline IntervalAllocation interval_allocation_from_json(const nlohmann::json& j) {
    IntervalAllocation a;
    a.side = j.at("L").get<double>();
    a.alpha = j.at("alpha").get<double>();
    a.centers = j.at("centers").get<std::vector<double>>();
    const auto& terr = j.at("territories");
    detail::require(terr.size() == a.centers.size(), "interval allocation json: territory count mismatch");
    a.source.resize(a.centers.size());
    for (std::size_t i = 0; i < a.centers.size(); ++i) {
        a.source[i] = i;
        if (a.centers[i] == 0.0) a.origin = static_cast<std::ptrdiff_t>(i);
        std::vector<Interval> t;
        for (const auto& p : terr[i]) t.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        a.territory.push_back(std::move(t));
    }
    if (j.contains("sated")) {
        for (bool s : j.at("sated").get<std::vector<bool>>()) a.sated.push_back(s);
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) a.sated.push_back(std::abs(a.mass(i) - a.alpha) <= 1e-9);
    }
    a.seam.assign(a.size(), 0);
    return a;
}

namespace detail {

/// Territory of centre i cut at every centre position, so F is linear on each piece.
inline std::vector<Interval> linear_pieces(const IntervalAllocation& a, const FPath& F, std::size_t i) {
    std::vector<Interval> out;
    const auto& J = F.jumps();
    for (const auto& iv : a.territory[i]) {
        double lo = iv.lo;
        auto it = std::upper_bound(J.begin(), J.end(), lo);
        for (; it != J.end() && *it < iv.hi; ++it) {
            if (*it > lo) out.push_back({lo, *it});
            lo = *it;
        }
        if (iv.hi > lo) out.push_back({lo, iv.hi});
    }
    return out;
}

/// F(a) and F(b-) on a piece where F is linear, read from the midpoint.
inline std::pair<double, double> piece_values(const FPath& F, const Interval& iv) {
    const double m = 0.5 * (iv.lo + iv.hi);
    const double fm = F.value(m);
    return {fm + (m - iv.lo), fm - (iv.hi - m)};
}

inline bool checkable(const IntervalAllocation& a, const FPath& F, std::size_t i) {
    if (a.seam[i]) return false;
    for (const auto& iv : a.territory[i])
        if (iv.lo < F.lo() || iv.hi > F.hi()) return false;
    return true;
}

}  // namespace detail

/// Largest distance from F(x) to [F(xi-), F(xi)] over allocated sites x of seam-free territories.
inline double check_same_level(const IntervalAllocation& a, const FPath& F) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!detail::checkable(a, F, i)) continue;
        const double lo = F.left_limit(a.centers[i]);
        const double hi = F.value(a.centers[i]);
        for (const auto& piece : detail::linear_pieces(a, F, i)) {
            const auto [fa, fb] = detail::piece_values(F, piece);
            for (double v : {fa, fb}) worst = std::max(worst, std::max({lo - v, v - hi, 0.0}));
        }
    }
    return worst;
}

/// Integral of |h - 1_[F(xi-), F(xi)]| where h is the density of F pushed forward from the territory.
inline double check_measure_preserving(const IntervalAllocation& a, const FPath& F, std::size_t i) {
    detail::require(i < a.size(), "check_measure_preserving: centre index out of range");
    detail::require_applicable(a.sated[i] != 0, "check_measure_preserving: centre is not sated");
    const double lo = F.left_limit(a.centers[i]);
    const double hi = F.value(a.centers[i]);
    std::vector<std::pair<double, int>> ev{{lo, 0}, {hi, 0}};
    for (const auto& piece : detail::linear_pieces(a, F, i)) {
        const auto [fa, fb] = detail::piece_values(F, piece);
        ev.push_back({fb, +1});
        ev.push_back({fa, -1});
    }
    std::sort(ev.begin(), ev.end());
    double defect = 0.0;
    int h = 0;
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
        h += ev[k].second;
        const double x0 = ev[k].first, x1 = ev[k + 1].first;
        if (x1 <= x0) continue;
        const double mid = 0.5 * (x0 + x1);
        const int target = mid > lo && mid < hi ? 1 : 0;
        defect += std::abs(h - target) * (x1 - x0);
    }
    return defect;
}

/// Largest residual of F(t) = F(xi) - beta (t > xi) and F(s) = F(xi-) + gamma (s < xi), where beta and
/// gamma are the territory masses between the site and its centre.
inline double lmeasure_residual(const IntervalAllocation& a, const FPath& F) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!detail::checkable(a, F, i)) continue;
        const double x = a.centers[i];
        const double fx = F.value(x);
        const double fxm = F.left_limit(x);
        auto mass_between = [&](double s, double t) {
            double m = 0.0;
            for (const auto& iv : a.territory[i]) m += std::max(0.0, std::min(iv.hi, t) - std::max(iv.lo, s));
            return m;
        };
        for (const auto& piece : detail::linear_pieces(a, F, i)) {
            const auto [fa, fb] = detail::piece_values(F, piece);
            if (piece.lo >= x) {
                worst = std::max(worst, std::abs(fa - (fx - mass_between(x, piece.lo))));
                worst = std::max(worst, std::abs(fb - (fx - mass_between(x, piece.hi))));
            } else {
                worst = std::max(worst, std::abs(fa - (fxm + mass_between(piece.lo, x))));
                worst = std::max(worst, std::abs(fb - (fxm + mass_between(piece.hi, x))));
            }
        }
    }
    return worst;
}

namespace detail {

/// Smallest x > 0 with F < 0 on (x, 2x), looking only at t >= 0 of an F anchored at a centre at 0.
inline std::optional<double> positive_axis_bound(const FPath& F, double limit) {
    const auto& J = F.jumps();
    auto it = std::lower_bound(J.begin(), J.end(), 0.0);
    const double end = std::min(limit, 0.5 * F.hi());
    double cur = -1.0;  // end of the current closed block where F >= 0
    for (; it != J.end(); ++it) {
        const double s = *it;
        const double f = F.value(s);
        if (f < 0.0) continue;
        if (cur >= 0.0 && s >= 2.0 * cur) break;
        cur = std::max(cur, s + f);
    }
    if (cur < 0.0 || cur > end) return std::nullopt;
    if (it == J.end() && 2.0 * cur > F.hi()) return std::nullopt;
    return cur;
}

}  // namespace detail

/// Certified upper bound on R(0): the smallest x with F < 0 on (x, 2x) on either axis.
inline std::optional<double> radius_bound_from_F(const FPath& F, double search_limit) {
    detail::require(F.contains_center(0.0), "radius_bound_from_F: no centre at the origin");
    detail::require(search_limit > 0.0, "radius_bound_from_F: search limit must be positive");
    std::vector<double> mirrored;
    mirrored.reserve(F.jumps().size());
    for (auto it = F.jumps().rbegin(); it != F.jumps().rend(); ++it) mirrored.push_back(-*it);
    const FPath G(std::move(mirrored), -F.hi(), -F.lo());
    const auto a = detail::positive_axis_bound(F, search_limit);
    const auto b = detail::positive_axis_bound(G, search_limit);
    if (a && b) return std::min(*a, *b);
    return a ? a : b;
}

/// Monte Carlo estimate of P(D_m), D_m the event that none of A_1..A_m occurs, where
/// A_k = {S_j > 1 for all j in [2^{3k-1}, 2^{3k})} for the walk with increments (law - 1).
struct WalkEstimate {
    std::vector<int> m;
    std::vector<double> p;
    std::vector<double> ci_lo;
    std::vector<double> ci_hi;
    std::vector<std::uint64_t> count;
    std::uint64_t replicates = 0;
    double theta_hat = 0.0;
};

/// Increments are `law` minus its unit mean, so the law must be supported on [0, inf).
inline WalkEstimate walk_event_sim(const IncrementLaw& law, int m_max, std::uint64_t replicates, std::uint64_t seed,
                                   unsigned workers = 1) {
    law.validate();
    detail::require(std::abs(law.mean() - 1.0) <= 1e-12, "walk_event_sim: increment law must have unit mean");
    detail::require(law.min_support() >= 0.0, "walk_event_sim: increments must be at least -1");
    detail::require(m_max >= 1 && m_max <= 8, "walk_event_sim: m_max must lie in [1, 8]");
    detail::require(replicates > 0, "walk_event_sim: no replicates");

    // first k for which A_k occurs, or m_max + 1
    auto first = parallel_map<int>(replicates, workers, [&](std::size_t i) {
        auto rng = make_rng(derive_seed(seed, i));
        double s = 0.0;
        std::uint64_t j = 0;
        for (int k = 1; k <= m_max; ++k) {
            const std::uint64_t lo = std::uint64_t{1} << (3 * k - 1);
            const std::uint64_t hi = std::uint64_t{1} << (3 * k);
            while (j < lo) {
                s += law.sample(rng) - 1.0;
                ++j;
            }
            bool all_above = true;
            for (; j < hi; ) {
                if (!(s > 1.0)) all_above = false;
                if (j + 1 == hi) break;
                s += law.sample(rng) - 1.0;
                ++j;
            }
            if (all_above) return k;
        }
        return m_max + 1;
    });

    WalkEstimate w;
    w.replicates = replicates;
    std::vector<double> xs, ys;
    for (int m = 1; m <= m_max; ++m) {
        const auto c = static_cast<std::uint64_t>(std::count_if(first.begin(), first.end(), [m](int f) { return f > m; }));
        const auto ci = wilson(c, replicates);
        w.m.push_back(m);
        w.count.push_back(c);
        w.p.push_back(static_cast<double>(c) / static_cast<double>(replicates));
        w.ci_lo.push_back(ci.lo);
        w.ci_hi.push_back(ci.hi);
        if (c > 0) {
            xs.push_back(m);
            ys.push_back(std::log(w.p.back()));
        }
    }
    w.theta_hat = xs.size() >= 2 ? std::exp(least_squares(xs, ys).slope) : std::numeric_limits<double>::quiet_NaN();
    return w;
}

}  // namespace alloclab
