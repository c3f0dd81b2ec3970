#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "alloclab/errors.hpp"
#include "alloclab/geometry.hpp"

namespace alloclab {

/// Survival exponent of the critical 1D reference curve and the matching moment exponent.
inline constexpr double kCriticalTailExponent = 1.0 / 17.6;
inline constexpr double kCriticalMomentExponent = 1.0 / 18.0;

/// Per-step ratio of the walk estimate, 8^(-1/35.2).
inline double walk_theta_bound() { return std::pow(8.0, -1.0 / 35.2); }

/// Large-deviation rate q(x) = (x - 1 - ln x) / x.
inline double q(double x) {
    detail::require(x > 0.0 && std::isfinite(x), "q: argument must be positive");
    return (x - 1.0 - std::log(x)) / x;
}

/// P(Z >= b) <= exp(-gamma q(gamma/b)) for Z ~ Poisson(gamma), b > gamma.
inline double poisson_tail_upper(double gamma, double b) {
    detail::require(gamma > 0.0 && b > gamma, "poisson_tail_upper: needs b > gamma > 0");
    return std::exp(-gamma * q(gamma / b));
}

/// P(Z <= a) <= exp(-gamma q(gamma/a)) for Z ~ Poisson(gamma), 0 < a < gamma.
inline double poisson_tail_lower(double gamma, double a) {
    detail::require(a > 0.0 && a < gamma, "poisson_tail_lower: needs 0 < a < gamma");
    return std::exp(-gamma * q(gamma / a));
}

/// Exact P(Z <= k) for Z ~ Poisson(gamma), summed in log space.
inline double poisson_cdf(double gamma, long k) {
    detail::require(gamma >= 0.0, "poisson_cdf: negative mean");
    if (k < 0) return 0.0;
    if (gamma == 0.0) return 1.0;
    double sum = 0.0;
    for (long i = 0; i <= k; ++i)
        sum += std::exp(static_cast<double>(i) * std::log(gamma) - gamma - std::lgamma(static_cast<double>(i) + 1.0));
    return std::min(1.0, sum);
}

/// Exact P(Z >= k).
inline double poisson_sf(double gamma, long k) { return k <= 0 ? 1.0 : std::max(0.0, 1.0 - poisson_cdf(gamma, k - 1)); }

enum class TailTarget { X, RStar };

/// Which of the two forms of an explicit-constant bound to evaluate: the closed form exp(-c r^d)
/// with c at 0.99 of its supremum, or the Poisson large-deviation expression it is derived from.
enum class BoundForm { Theorem, Proof };

/// Supremum of admissible decay constants c in exp(-c r^d) for extreme appetites.
inline double extreme_alpha_supremum(int d, double alpha, TailTarget target) {
    detail::require(d >= 1, "extreme_alpha_supremum: dimension must be positive");
    detail::require(alpha > 0.0, "extreme_alpha_supremum: alpha must be positive");
    const double two_d = std::pow(2.0, d);
    if (target == TailTarget::X) {
        detail::require_applicable(alpha > two_d, "extreme-alpha bound for X needs alpha > 2^d");
        return unit_ball_volume(d) * q(alpha / two_d);
    }
    detail::require_applicable(alpha < 1.0 / two_d, "extreme-alpha bound for R* needs alpha < 2^-d");
    return two_d * unit_ball_volume(d) * q(alpha * two_d);
}

inline double bound_extreme_alpha(int d, double alpha, double r, TailTarget target,
                                  BoundForm form = BoundForm::Theorem) {
    detail::require(r >= 0.0, "bound_extreme_alpha: negative radius");
    const double sup = extreme_alpha_supremum(d, alpha, target);
    if (form == BoundForm::Theorem) return std::exp(-0.99 * sup * std::pow(r, d));
    const double w = unit_ball_volume(d);
    const double two_d = std::pow(2.0, d);
    if (target == TailTarget::X) {
        // P(X > r) <= P(Z <= w r^d 2^d / alpha), Z ~ Poisson(w r^d)
        const double gamma = w * std::pow(r, d);
        const double a = gamma * two_d / alpha;
        if (!(a > 0.0 && a < gamma)) return 1.0;
        return poisson_tail_lower(gamma, a);
    }
    // P*(R* > r) <= P(Z' - 1 >= w r^d / alpha - 1), Z' - 1 ~ Poisson(w 2^d r^d)
    const double gamma = w * two_d * std::pow(r, d);
    const double b = w * std::pow(r, d) / alpha - 1.0;
    if (!(gamma > 0.0 && b > gamma)) return 1.0;
    return poisson_tail_upper(gamma, b);
}

/// One-dimensional explicit bounds at unit intensity: P(r < X < inf) <= 2(1 v 1/alpha) e^{-q(alpha) r}
/// and P*(R* > r) <= 2(1 v 1/alpha^2) e^{-q(alpha) r}.
inline double bound_1d(double alpha, double r, TailTarget target) {
    detail::require(alpha > 0.0 && std::isfinite(alpha), "bound_1d: alpha must be positive");
    detail::require(r >= 0.0, "bound_1d: negative radius");
    detail::require_applicable(alpha != 1.0, "bound_1d: alpha = 1 is critical");
    const double pre = target == TailTarget::X ? std::max(1.0, 1.0 / alpha) : std::max(1.0, 1.0 / (alpha * alpha));
    return 2.0 * pre * std::exp(-q(alpha) * r);
}

/// Reference shape r^(-1/17.6) for the critical 1D tail; the constant in front is unknown.
inline double critical_shape(double r) {
    detail::require_applicable(r > 1.0, "critical_shape: defined for r > 1");
    return std::pow(r, -kCriticalTailExponent);
}

/// Bounds on Poisson path deviations at intensity lambda:
/// lambda > 1: P(exists t >= r: N(0,t] <= t + a) <= lambda^a e^{-q(lambda) lambda r};
/// lambda < 1: P(exists t >= r: N(0,t] >= t - a) <= lambda^-a e^{-q(lambda) lambda r}.
inline double pp_deviation_bound(double lambda, double r, double a) {
    detail::require(lambda > 0.0 && std::isfinite(lambda), "pp_deviation_bound: lambda must be positive");
    detail::require(r >= 0.0 && a >= 0.0, "pp_deviation_bound: r and a must be nonnegative");
    detail::require_applicable(lambda != 1.0, "pp_deviation_bound: lambda = 1");
    const double pre = lambda > 1.0 ? std::pow(lambda, a) : std::pow(lambda, -a);
    return pre * std::exp(-q(lambda) * lambda * r);
}

enum class BoundKind {
    PoissonUpper,
    PoissonLower,
    ExtremeAlphaX,
    ExtremeAlphaR,
    OnedX,
    OnedR,
    CriticalShape,
    WalkTheta
};

inline std::string to_string(BoundKind k) {
    switch (k) {
        case BoundKind::PoissonUpper: return "poisson-upper";
        case BoundKind::PoissonLower: return "poisson-lower";
        case BoundKind::ExtremeAlphaX: return "extreme-alpha-X";
        case BoundKind::ExtremeAlphaR: return "extreme-alpha-R";
        case BoundKind::OnedX: return "oned-X";
        case BoundKind::OnedR: return "oned-R";
        case BoundKind::CriticalShape: return "critical-shape";
        case BoundKind::WalkTheta: return "walk-theta";
    }
    return "unknown";
}

inline BoundKind parse_bound_kind(const std::string& s) {
    for (auto k : {BoundKind::PoissonUpper, BoundKind::PoissonLower, BoundKind::ExtremeAlphaX, BoundKind::ExtremeAlphaR,
                   BoundKind::OnedX, BoundKind::OnedR, BoundKind::CriticalShape, BoundKind::WalkTheta})
        if (to_string(k) == s) return k;
    throw InvalidInput("unknown bound kind '" + s + "'");
}

/// A bound evaluated on a radius grid. For the Poisson kinds r is the threshold and lambda the
/// mean; for walk-theta r is the level m.
struct BoundCurve {
    BoundKind kind = BoundKind::OnedX;
    int d = 1;
    double alpha = 1.0;
    double lambda = 1.0;
    BoundForm form = BoundForm::Proof;
    std::vector<double> r;
    std::vector<double> value;
};

inline double evaluate_bound(const BoundCurve& c, double r) {
    switch (c.kind) {
        case BoundKind::PoissonUpper: return r > c.lambda ? poisson_tail_upper(c.lambda, r) : 1.0;
        case BoundKind::PoissonLower: return r > 0.0 && r < c.lambda ? poisson_tail_lower(c.lambda, r) : 1.0;
        case BoundKind::ExtremeAlphaX: return bound_extreme_alpha(c.d, c.alpha, r, TailTarget::X, c.form);
        case BoundKind::ExtremeAlphaR: return bound_extreme_alpha(c.d, c.alpha, r, TailTarget::RStar, c.form);
        case BoundKind::OnedX: return bound_1d(c.alpha, r, TailTarget::X);
        case BoundKind::OnedR: return bound_1d(c.alpha, r, TailTarget::RStar);
        case BoundKind::CriticalShape: return critical_shape(r);
        case BoundKind::WalkTheta: return std::pow(walk_theta_bound(), r);
    }
    return 1.0;
}

inline BoundCurve make_bound_curve(BoundCurve spec, const std::vector<double>& radii) {
    spec.r = radii;
    spec.value.clear();
    for (double r : radii) spec.value.push_back(evaluate_bound(spec, r));
    return spec;
}

inline void write_bound_csv(std::ostream& os, const BoundCurve& c) {
    os << "r,bound\n" << std::setprecision(17);
    for (std::size_t i = 0; i < c.r.size(); ++i) os << c.r[i] << ',' << c.value[i] << '\n';
}

}  // namespace alloclab
