#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "alloclab/errors.hpp"

namespace alloclab {

/// Periodic simulation window [0, L)^d discretised into cubic cells of side eps.
class Domain {
public:
    Domain() = default;

    Domain(int d, double side, double eps) : d_(d), side_(side), eps_(eps) {
        detail::require(d >= 1, "Domain: dimension must be positive");
        detail::require(side > 0.0 && std::isfinite(side), "Domain: L must be positive");
        detail::require(eps > 0.0 && std::isfinite(eps), "Domain: eps must be positive");
        const double ratio = side / eps;
        const auto n = std::llround(ratio);
        detail::require(n >= 1 && std::abs(ratio - static_cast<double>(n)) <= 1e-9 * ratio,
                        "Domain: L/eps must be an integer");
        detail::require(n >= 20, "Domain: eps must be at most L/20");
        per_axis_ = static_cast<std::size_t>(n);
        cells_ = 1;
        for (int k = 0; k < d; ++k) cells_ *= per_axis_;
    }

    /// Window without a grid (eps = L/20 placeholder); used where only the metric matters.
    static Domain continuum(int d, double side) { return Domain(d, side, side / 20.0); }

    int d() const { return d_; }
    double side() const { return side_; }
    double eps() const { return eps_; }
    std::size_t per_axis() const { return per_axis_; }
    std::size_t cell_count() const { return cells_; }
    double cell_volume() const { return std::pow(eps_, d_); }
    double volume() const { return std::pow(side_, d_); }

    /// Row-major cell index of the cell containing `x` (first coordinate slowest).
    std::size_t cell_of(std::span<const double> x) const {
        std::size_t idx = 0;
        for (int k = 0; k < d_; ++k) {
            auto i = static_cast<std::int64_t>(std::floor(x[k] / eps_));
            const auto n = static_cast<std::int64_t>(per_axis_);
            i = ((i % n) + n) % n;
            idx = idx * per_axis_ + static_cast<std::size_t>(i);
        }
        return idx;
    }

    /// Writes the centre of cell `idx` into `out` (size d).
    void cell_center(std::size_t idx, std::span<double> out) const {
        for (int k = d_ - 1; k >= 0; --k) {
            out[k] = (static_cast<double>(idx % per_axis_) + 0.5) * eps_;
            idx /= per_axis_;
        }
    }

    bool operator==(const Domain&) const = default;

private:
    int d_ = 1;
    double side_ = 1.0;
    double eps_ = 0.05;
    std::size_t per_axis_ = 20;
    std::size_t cells_ = 20;
};

/// Flat list of d-dimensional points.
class PointList {
public:
    PointList() = default;
    explicit PointList(int d) : d_(d) {}
    PointList(int d, std::vector<double> coords) : d_(d), coords_(std::move(coords)) {
        detail::require(d >= 1 && coords_.size() % static_cast<std::size_t>(d) == 0,
                        "PointList: coordinate count not a multiple of d");
    }

    int d() const { return d_; }
    std::size_t size() const { return coords_.size() / static_cast<std::size_t>(d_); }
    bool empty() const { return coords_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {coords_.data() + i * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_)};
    }
    std::span<double> operator[](std::size_t i) {
        return {coords_.data() + i * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_)};
    }

    void push_back(std::span<const double> p) {
        detail::require(p.size() == static_cast<std::size_t>(d_), "PointList: dimension mismatch");
        coords_.insert(coords_.end(), p.begin(), p.end());
    }
    void insert_front(std::span<const double> p) {
        detail::require(p.size() == static_cast<std::size_t>(d_), "PointList: dimension mismatch");
        coords_.insert(coords_.begin(), p.begin(), p.end());
    }

    const std::vector<double>& coords() const { return coords_; }
    bool operator==(const PointList&) const = default;

private:
    int d_ = 1;
    std::vector<double> coords_;
};

/// Minimal-image difference along one axis of a torus of side `side`.
inline double periodic_delta(double a, double b, double side) {
    double dx = std::abs(a - b);
    if (dx > side) dx = std::fmod(dx, side);
    return dx > 0.5 * side ? side - dx : dx;
}

inline double torus_distance2(std::span<const double> x, std::span<const double> y, double side) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = periodic_delta(x[k], y[k], side);
        s += dx * dx;
    }
    return s;
}

inline double torus_distance(std::span<const double> x, std::span<const double> y, const Domain& dom) {
    detail::require(x.size() == static_cast<std::size_t>(dom.d()) && y.size() == x.size(),
                    "torus_distance: dimension mismatch");
    return std::sqrt(torus_distance2(x, y, dom.side()));
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
    detail::require(d >= 1, "unit_ball_volume: dimension must be positive");
    const double half = 0.5 * d;
    return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

inline double ball_volume(int d, double r) {
    detail::require(r >= 0.0, "ball_volume: negative radius");
    return unit_ball_volume(d) * std::pow(r, d);
}

/// Centres of all (L/eps)^d cells in row-major order.
inline PointList cell_centers(const Domain& dom) {
    std::vector<double> coords(dom.cell_count() * static_cast<std::size_t>(dom.d()));
    for (std::size_t i = 0; i < dom.cell_count(); ++i) {
        dom.cell_center(i, {coords.data() + i * static_cast<std::size_t>(dom.d()),
                            static_cast<std::size_t>(dom.d())});
    }
    return PointList(dom.d(), std::move(coords));
}

}  // namespace alloclab
