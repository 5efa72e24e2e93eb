#pragma once

// Scatterer potential p(r) = gamma/(4 pi a^kappa) (1 - r/a)^2 h(r/a) on each
// ball, the derived field q = grad K^2 / K^2 with K^2 = k^2 + p, and the
// ball moments of p and q.

#include "smallscat/core_types.hpp"
#include "smallscat/quadrature.hpp"

#include <span>
#include <vector>

namespace smallscat {

/// |K^2| below this is a degenerate potential.
inline constexpr double kDegenerateK2 = 1e-12;
/// Radial samples used to pre-scan k^2 + p for zeros.
inline constexpr int kDenominatorScanSamples = 1024;

class RadialProfile {
public:
    RadialProfile(cplx gamma, double kappa, double radius,
                  RadialShape shape = RadialShape::constant_one());
    static RadialProfile of(const Particle& particle);

    cplx gamma() const { return gamma_; }
    double kappa() const { return kappa_; }
    double radius() const { return radius_; }
    const RadialShape& shape() const { return shape_; }

    /// gamma / (4 pi a^kappa), the value at the center for h(0) = 1.
    cplx amplitude() const { return amplitude_; }

    cplx value(double r) const;
    /// dp/dr; zero outside the ball.
    cplx derivative(double r) const;

    /// Throws NumericalError if k^2 + p(r) comes within kDegenerateK2 of zero
    /// on any of kDenominatorScanSamples radii in [0, a].
    void check_denominator(double k) const;

private:
    cplx gamma_;
    double kappa_;
    double radius_;
    RadialShape shape_;
    cplx amplitude_;
};

cplx p_of(double r, const RadialProfile& profile);

/// p, grad p, q and K^2 for a set of disjoint ball scatterers in a
/// background of wavenumber k.
class PotentialField {
public:
    PotentialField(std::span<const Particle> particles, double k);

    double k() const { return k_; }
    const std::vector<Particle>& particles() const { return particles_; }

    /// Index of the particle whose closed ball contains y, or -1.
    int locate(const Vec3& y) const;

    cplx p(const Vec3& y) const;
    CVec3 grad_p(const Vec3& y) const;
    cplx K2(const Vec3& y) const { return k_ * k_ + p(y); }
    /// grad K^2 / K^2; zero outside the particles and at their centers.
    CVec3 q(const Vec3& y) const;

private:
    std::vector<Particle> particles_;
    std::vector<RadialProfile> profiles_;
    double k_;
};

CVec3 q_of(const Vec3& y, const PotentialField& field);

/// Ball moment of p from the closed form gamma m(h) a^(3 - kappa), where
/// m(h) = int_0^1 (1-t)^2 h t^2 dt (1/30 for h == 1).
cplx potential_moment_analytic(const RadialProfile& profile);

/// The same moment by ball quadrature.
cplx potential_moment_quadrature(const RadialProfile& profile, const BallRule& rule = BallRule());

/// I(a) = int_0^1 t^3 u'(t) / (nu + u(t)) dt with u = gamma (1-t)^2 h(t) and
/// nu = 4 pi k^2 a^kappa. Behaves like kappa ln a as a -> 0.
cplx log_moment(const RadialProfile& profile, double k);

/// I(a) through the integrated-by-parts form
/// ln(nu + u(1)) - 3 int_0^1 t^2 ln(nu + u(t)) dt.
cplx log_moment_by_parts(const RadialProfile& profile, double k);

/// Coefficient L with Z ~ L div E(x_m): L = (4 pi / 3) a^3 I(a).
cplx divergence_law(const RadialProfile& profile, double k);

/// Z = int_B grad p . E / (k^2 + p) dy over the particle ball by quadrature.
cplx divergence_moment_quadrature(const Particle& particle, const VectorField& field, double k,
                                  const BallRule& rule = BallRule());

/// T_ij = int_B p'(r) r r0_i r0_j / (k^2 + p) dy by 3-D ball quadrature.
/// Diagonal entries are the axis moments; off-diagonal ones vanish.
cplx gradient_tensor_moment(const RadialProfile& profile, double k, int i, int j,
                            const BallRule& rule = BallRule());

/// Axis moment split into its radial integral int_0^a r^3 p'/(k^2+p) dr and
/// the angular factor int_{S^2} r0_i^2 (4 pi / 3 exactly).
struct AxisMoment {
    cplx radial;
    double angular;
    cplx value;
};
AxisMoment axis_moment(const RadialProfile& profile, double k, int axis,
                       const BallRule& rule = BallRule());

} // namespace smallscat
