#pragma once

// Quadrature over intervals, balls and boxes, including rules recentred on a
// weakly singular point (|y - s|^-1 or |y - s|^-2 kernels).

#include "smallscat/core_types.hpp"

#include <sstream>
#include <type_traits>
#include <vector>

namespace smallscat {

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [lo, hi].
GaussRule gauss_legendre(int n, double lo = -1.0, double hi = 1.0);

namespace detail {

inline bool finite_value(double v) { return std::isfinite(v); }
inline bool finite_value(const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }
inline bool finite_value(const CVec3& v) { return v.finite(); }

[[noreturn]] void throw_non_finite(const Vec3& node);
[[noreturn]] void throw_non_finite(double node);

template <class T>
double magnitude(const T& v)
{
    if constexpr (std::is_same_v<T, CVec3>) {
        return norm(v);
    } else {
        return std::abs(v);
    }
}

} // namespace detail

template <class F>
auto integrate_interval(F&& f, double lo, double hi, const GaussRule& unit)
{
    using T = std::decay_t<decltype(f(0.0))>;
    T sum{};
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
        const double x = mid + half * unit.nodes[i];
        const T v = f(x);
        if (!detail::finite_value(v)) {
            detail::throw_non_finite(x);
        }
        sum += v * (unit.weights[i] * half);
    }
    return sum;
}

/// Composite Gauss rule on [lo, hi] with panels graded geometrically toward
/// `hi` (panel edges hi - (hi-lo) 2^-j). Resolves boundary layers of width
/// down to (hi-lo) 2^-levels.
template <class F>
auto integrate_graded(F&& f, double lo, double hi, int levels = 48, int points = 16)
{
    const GaussRule unit = gauss_legendre(points);
    using T = std::decay_t<decltype(f(0.0))>;
    T sum{};
    double left = lo;
    for (int j = 1; j <= levels; ++j) {
        const double right = hi - (hi - lo) * std::ldexp(1.0, -j);
        sum += integrate_interval(f, left, right, unit);
        left = right;
    }
    sum += integrate_interval(f, left, hi, unit);
    return sum;
}

/// Product rule on the unit ball: Gauss-Legendre in the radius, Gauss-Legendre
/// in cos(theta), trapezoid in phi. Weights include the r^2 sin(theta) Jacobian.
class BallRule {
public:
    explicit BallRule(int n_r = 24, int n_theta = 24, int n_phi = 48);

    int n_r() const { return n_r_; }
    int n_theta() const { return n_theta_; }
    int n_phi() const { return n_phi_; }

    /// Radial nodes t in (0,1) with plain Gauss weights (no t^2).
    const GaussRule& radial() const { return radial_; }
    /// Unit directions with weights summing to 4 pi.
    const std::vector<Vec3>& directions() const { return directions_; }
    const std::vector<double>& direction_weights() const { return direction_weights_; }

    /// Same rule with every order halved (at least 2); used for error estimates.
    BallRule coarser() const;

private:
    int n_r_, n_theta_, n_phi_;
    GaussRule radial_;
    std::vector<Vec3> directions_;
    std::vector<double> direction_weights_;
};

/// Integral of f over the ball B(center, radius).
template <class F>
auto integrate_ball(F&& f, const Vec3& center, double radius, const BallRule& rule)
{
    using T = std::decay_t<decltype(f(Vec3{}))>;
    T sum{};
    const auto& rad = rule.radial();
    const auto& dirs = rule.directions();
    const auto& dw = rule.direction_weights();
    const double a3 = radius * radius * radius;
    for (std::size_t i = 0; i < rad.nodes.size(); ++i) {
        const double t = rad.nodes[i];
        const double wr = rad.weights[i] * t * t * a3;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const Vec3 y = center + (radius * t) * dirs[d];
            const T v = f(y);
            if (!detail::finite_value(v)) {
                detail::throw_non_finite(y);
            }
            sum += v * (wr * dw[d]);
        }
    }
    return sum;
}

template <class T>
struct Estimated {
    T value;
    double error;
};

/// integrate_ball plus an error estimate from the same rule at halved order.
template <class F>
auto integrate_ball_estimated(F&& f, const Vec3& center, double radius, const BallRule& rule)
{
    auto fine = integrate_ball(f, center, radius, rule);
    auto coarse = integrate_ball(f, center, radius, rule.coarser());
    using T = decltype(fine);
    return Estimated<T>{fine, detail::magnitude(T(fine - coarse))};
}

/// Integral over the ball B(center, radius) of h, evaluated in spherical
/// coordinates centred at `s` (which must lie in the closed ball). The r^2
/// Jacobian cancels integrable |y - s|^-1 and |y - s|^-2 singularities of h.
template <class F>
auto integrate_ball_around(F&& h, const Vec3& s, const Vec3& center, double radius,
                           const BallRule& rule)
{
    using T = std::decay_t<decltype(h(Vec3{}))>;
    const Vec3 off = s - center;
    const double c = dot(off, off) - radius * radius;
    if (c > 1e-12 * radius * radius) {
        throw ValidationError("integrate_ball_around: recentring point lies outside the ball");
    }
    T sum{};
    const auto& rad = rule.radial();
    const auto& dirs = rule.directions();
    const auto& dw = rule.direction_weights();
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const double b = dot(dirs[d], off);
        const double reach = -b + std::sqrt(std::max(0.0, b * b - c));
        if (reach <= 0.0) {
            continue;
        }
        T ray{};
        for (std::size_t i = 0; i < rad.nodes.size(); ++i) {
            const double t = reach * rad.nodes[i];
            const Vec3 y = s + t * dirs[d];
            const T v = h(y);
            if (!detail::finite_value(v)) {
                detail::throw_non_finite(y);
            }
            ray += v * (rad.weights[i] * t * t);
        }
        sum += ray * (reach * dw[d]);
    }
    return sum;
}

/// Beyond this many radii from the ball center the singular point is treated
/// as far and the plain ball rule is used.
inline constexpr double kSingularFarRadii = 10.0;

/// Integral over the ball of f_smooth(y) g(y, s) with g the Helmholtz kernel
/// exp(ik|y-s|)/(4 pi |y-s|). Recentred at s when s lies in the ball; the
/// plain rule otherwise (the kernel is smooth on the ball then).
template <class F>
auto integrate_ball_singular(F&& f_smooth, const Vec3& s, const Vec3& center, double radius,
                             double k, const BallRule& rule)
{
    auto integrand = [&](const Vec3& y) {
        const double r = norm(y - s);
        return f_smooth(y) * (std::exp(cplx(0.0, k * r)) / (4.0 * kPi * r));
    };
    if (norm(s - center) <= radius) {
        return integrate_ball_around(integrand, s, center, radius, rule);
    }
    return integrate_ball(integrand, center, radius, rule);
}

/// Tensor Gauss-Legendre rule, n points per axis.
class BoxRule {
public:
    explicit BoxRule(int n = 16) : n_(n), unit_(gauss_legendre(n)) {}
    int order() const { return n_; }
    const GaussRule& unit() const { return unit_; }

private:
    int n_;
    GaussRule unit_;
};

template <class F>
auto integrate_box(F&& f, const Box& box, const BoxRule& rule)
{
    using T = std::decay_t<decltype(f(Vec3{}))>;
    const auto& u = rule.unit();
    const Vec3 half = 0.5 * box.extent();
    const Vec3 mid = box.center();
    const double jac = half.x * half.y * half.z;
    T sum{};
    for (std::size_t i = 0; i < u.nodes.size(); ++i) {
        for (std::size_t j = 0; j < u.nodes.size(); ++j) {
            for (std::size_t l = 0; l < u.nodes.size(); ++l) {
                const Vec3 y{mid.x + half.x * u.nodes[i], mid.y + half.y * u.nodes[j],
                             mid.z + half.z * u.nodes[l]};
                const T v = f(y);
                if (!detail::finite_value(v)) {
                    detail::throw_non_finite(y);
                }
                sum += v * (u.weights[i] * u.weights[j] * u.weights[l] * jac);
            }
        }
    }
    return sum;
}

/// Integral of h over the box, split into six pyramids with apex at `s`
/// (inside the box). Each pyramid is mapped with a Duffy-type collapse so
/// that |y - s|^-1 singularities of h are integrated to full order.
template <class F>
auto integrate_box_around(F&& h, const Box& box, const Vec3& s, const BoxRule& rule)
{
    using T = std::decay_t<decltype(h(Vec3{}))>;
    if (!box.contains(s)) {
        throw ValidationError("integrate_box_around: apex outside the box");
    }
    const auto& u = rule.unit();
    T sum{};
    for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3;
        const int a2 = (axis + 2) % 3;
        for (int side = 0; side < 2; ++side) {
            const double plane = side == 0 ? box.lo[axis] : box.hi[axis];
            const double height = std::abs(plane - s[axis]);
            if (height <= 0.0) {
                continue;
            }
            const double lo1 = box.lo[a1], hi1 = box.hi[a1];
            const double lo2 = box.lo[a2], hi2 = box.hi[a2];
            const double h1 = 0.5 * (hi1 - lo1), h2 = 0.5 * (hi2 - lo2);
            for (std::size_t i = 0; i < u.nodes.size(); ++i) {
                for (std::size_t j = 0; j < u.nodes.size(); ++j) {
                    Vec3 face;
                    face[axis] = plane;
                    face[a1] = 0.5 * (lo1 + hi1) + h1 * u.nodes[i];
                    face[a2] = 0.5 * (lo2 + hi2) + h2 * u.nodes[j];
                    const Vec3 span = face - s;
                    T ray{};
                    for (std::size_t l = 0; l < u.nodes.size(); ++l) {
                        const double sigma = 0.5 * (1.0 + u.nodes[l]);
                        const Vec3 y = s + sigma * span;
                        const T v = h(y);
                        if (!detail::finite_value(v)) {
                            detail::throw_non_finite(y);
                        }
                        ray += v * (0.5 * u.weights[l] * sigma * sigma);
                    }
                    sum += ray * (u.weights[i] * u.weights[j] * h1 * h2 * height);
                }
            }
        }
    }
    return sum;
}

} // namespace smallscat
