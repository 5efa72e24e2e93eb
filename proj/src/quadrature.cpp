#include "smallscat/quadrature.hpp"

namespace smallscat {

GaussRule gauss_legendre(int n, double lo, double hi)
{
    if (n < 1) {
        throw ValidationError("gauss_legendre: order must be >= 1");
    }
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton on P_n starting from the Chebyshev-like guess.
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // Recompute derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.0;
    }
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

BallRule::BallRule(int n_r, int n_theta, int n_phi)
    : n_r_(n_r), n_theta_(n_theta), n_phi_(n_phi), radial_(gauss_legendre(n_r, 0.0, 1.0))
{
    if (n_r < 1 || n_theta < 1 || n_phi < 1) {
        throw ValidationError("BallRule: orders must be >= 1");
    }
    const GaussRule mu = gauss_legendre(n_theta);
    directions_.reserve(static_cast<std::size_t>(n_theta) * n_phi);
    direction_weights_.reserve(directions_.capacity());
    const double dphi = 2.0 * kPi / n_phi;
    for (int i = 0; i < n_theta; ++i) {
        const double c = mu.nodes[i];
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (int j = 0; j < n_phi; ++j) {
            // Half-step offset keeps nodes off the phi = 0 half-plane.
            const double phi = (j + 0.5) * dphi;
            directions_.push_back({s * std::cos(phi), s * std::sin(phi), c});
            direction_weights_.push_back(mu.weights[i] * dphi);
        }
    }
}

BallRule BallRule::coarser() const
{
    return BallRule(std::max(2, n_r_ / 2), std::max(2, n_theta_ / 2), std::max(2, n_phi_ / 2));
}

namespace detail {

void throw_non_finite(const Vec3& node)
{
    std::ostringstream os;
    os << "quadrature: non-finite integrand at node (" << node.x << ", " << node.y << ", "
       << node.z << ")";
    throw NumericalError(os.str());
}

void throw_non_finite(double node)
{
    std::ostringstream os;
    os << "quadrature: non-finite integrand at node " << node;
    throw NumericalError(os.str());
}

} // namespace detail

} // namespace smallscat
