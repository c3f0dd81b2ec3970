#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "alloclab/geometry.hpp"

namespace alloclab {

/// Ordering key used by sites when ranking centres: (squared distance, centre index).
struct CenterKey {
    double dist2 = -1.0;
    std::int32_t index = -1;

    friend bool operator<(const CenterKey& a, const CenterKey& b) {
        return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    }
};

/// Bucket grid over a set of points on a torus, supporting ring-expansion queries.
/// Buckets at Chebyshev offset s from the query bucket are visited shell by shell; once
/// the shells stop being disjoint on the torus the remaining work falls back to a full scan.
class BucketIndex {
public:
    static constexpr int kMaxDim = 8;
    using Coords = std::array<int, kMaxDim>;

    BucketIndex(const PointList& pts, double side, double target_bucket_side)
        : pts_(&pts), d_(pts.d()), side_(side) {
        detail::require(d_ <= kMaxDim, "BucketIndex: dimension above 8 not supported");
        const auto nb = static_cast<std::int64_t>(std::floor(side / std::max(target_bucket_side, 1e-12)));
        nb_ = static_cast<int>(std::clamp<std::int64_t>(nb, 1, 1 << 20));
        // keep the bucket table modest in high dimension
        while (nb_ > 1 && std::pow(static_cast<double>(nb_), d_) > 4.0e6) --nb_;
        bs_ = side_ / nb_;
        max_disjoint_shell_ = (nb_ - 1) / 2;
        std::size_t total = 1;
        for (int k = 0; k < d_; ++k) total *= static_cast<std::size_t>(nb_);
        start_.assign(total + 1, 0);
        std::vector<std::size_t> bucket(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            bucket[i] = bucket_of(pts[i]);
            ++start_[bucket[i] + 1];
        }
        for (std::size_t b = 0; b < total; ++b) start_[b + 1] += start_[b];
        items_.resize(pts.size());
        auto fill = start_;
        for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[bucket[i]]++] = static_cast<std::int32_t>(i);
    }

    double bucket_side() const { return bs_; }

    /// Smallest key strictly greater than `after`; index -1 if none exists.
    CenterKey next_after(std::span<const double> x, CenterKey after) const {
        CenterKey best{std::numeric_limits<double>::infinity(), -1};
        auto consider = [&](std::int32_t i) {
            CenterKey k{torus_distance2(x, (*pts_)[static_cast<std::size_t>(i)], side_), i};
            if (after < k && k < best) best = k;
        };
        Coords home{};
        coords_of(x, home);
        for (int s = 0;; ++s) {
            if (s > max_disjoint_shell_) {
                best = CenterKey{std::numeric_limits<double>::infinity(), -1};
                for (std::size_t i = 0; i < pts_->size(); ++i) consider(static_cast<std::int32_t>(i));
                return best;
            }
            visit_shell(home, s, consider);
            if (best.index >= 0) {
                const double reach = s * bs_;
                if (best.dist2 < reach * reach) return best;
            }
        }
    }

    /// All point indices with torus distance strictly less than `radius` (unsorted).
    template <typename Fn>
    void for_each_within(std::span<const double> x, double radius, Fn&& fn) const {
        if (!(radius > 0.0)) return;
        const double r2 = radius * radius;
        auto consider = [&](std::int32_t i) {
            const double d2 = torus_distance2(x, (*pts_)[static_cast<std::size_t>(i)], side_);
            if (d2 < r2) fn(i, d2);
        };
        Coords home{};
        coords_of(x, home);
        for (int s = 0;; ++s) {
            if (s > 0 && (s - 1) * bs_ >= radius) return;
            if (s > max_disjoint_shell_) {
                // shells already visited are exactly the buckets at Chebyshev offset < s
                for (std::size_t i = 0; i < pts_->size(); ++i) {
                    if (chebyshev_bucket_offset(home, (*pts_)[i]) >= s) consider(static_cast<std::int32_t>(i));
                }
                return;
            }
            visit_shell(home, s, consider);
        }
    }

private:
    std::size_t bucket_of(std::span<const double> x) const {
        std::size_t b = 0;
        for (int k = 0; k < d_; ++k) {
            auto c = static_cast<int>(std::floor(x[k] / bs_));
            c = std::clamp(c, 0, nb_ - 1);
            b = b * static_cast<std::size_t>(nb_) + static_cast<std::size_t>(c);
        }
        return b;
    }

    void coords_of(std::span<const double> x, Coords& out) const {
        for (int k = 0; k < d_; ++k)
            out[static_cast<std::size_t>(k)] = std::clamp(static_cast<int>(std::floor(x[k] / bs_)), 0, nb_ - 1);
    }

    int chebyshev_bucket_offset(const Coords& home, std::span<const double> p) const {
        int m = 0;
        for (int k = 0; k < d_; ++k) {
            int c = std::clamp(static_cast<int>(std::floor(p[k] / bs_)), 0, nb_ - 1);
            int o = std::abs(c - home[static_cast<std::size_t>(k)]);
            o = std::min(o, nb_ - o);
            m = std::max(m, o);
        }
        return m;
    }

    const std::vector<std::vector<int>>& shell(int s) const {
        while (static_cast<int>(shells_.size()) <= s) {
            const int t = static_cast<int>(shells_.size());
            std::vector<std::vector<int>> offs;
            std::vector<int> o(static_cast<std::size_t>(d_), -t);
            while (true) {
                int m = 0;
                for (int v : o) m = std::max(m, std::abs(v));
                if (m == t) offs.push_back(o);
                int k = d_ - 1;
                while (k >= 0 && o[static_cast<std::size_t>(k)] == t) {
                    o[static_cast<std::size_t>(k)] = -t;
                    --k;
                }
                if (k < 0) break;
                ++o[static_cast<std::size_t>(k)];
            }
            shells_.push_back(std::move(offs));
        }
        return shells_[static_cast<std::size_t>(s)];
    }

    template <typename Fn>
    void visit_shell(const Coords& home, int s, Fn& fn) const {
        for (const auto& off : shell(s)) {
            std::size_t b = 0;
            for (int k = 0; k < d_; ++k) {
                int c = (home[static_cast<std::size_t>(k)] + off[static_cast<std::size_t>(k)]) % nb_;
                if (c < 0) c += nb_;
                b = b * static_cast<std::size_t>(nb_) + static_cast<std::size_t>(c);
            }
            for (std::size_t j = start_[b]; j < start_[b + 1]; ++j) fn(items_[j]);
        }
    }

    const PointList* pts_;
    int d_;
    double side_;
    int nb_ = 1;
    double bs_ = 1.0;
    int max_disjoint_shell_ = 0;
    std::vector<std::size_t> start_;
    std::vector<std::int32_t> items_;
    mutable std::vector<std::vector<std::vector<int>>> shells_;
};

}  // namespace alloclab
