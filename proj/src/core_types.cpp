#include "smallscat/core_types.hpp"
#include "smallscat/quadrature.hpp"

#include <sstream>

namespace smallscat {

PlaneWave PlaneWave::make(const CVec3& amplitude, const Vec3& direction, double k)
{
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw ValidationError("plane wave: wavenumber must be positive and finite");
    }
    if (!amplitude.finite() || !direction.finite()) {
        throw ValidationError("plane wave: non-finite amplitude or direction");
    }
    if (std::abs(norm(direction) - 1.0) > kPlaneWaveTolerance) {
        std::ostringstream os;
        os << "plane wave: direction is not a unit vector (|alpha| = " << norm(direction) << ")";
        throw ValidationError(os.str());
    }
    const double t = std::abs(dot(amplitude, direction));
    if (t > kPlaneWaveTolerance) {
        std::ostringstream os;
        os << "plane wave: transversality violated, |E.alpha| = " << t;
        throw ValidationError(os.str());
    }
    return PlaneWave(amplitude, direction, k);
}

CVec3 PlaneWave::operator()(const Vec3& x) const
{
    return amplitude_ * std::exp(cplx(0.0, k_ * dot(direction_, x)));
}

CVec3 PlaneWave::curl(const Vec3& x) const
{
    return cplx(0.0, k_) * cross(direction_, (*this)(x));
}

PlaneWave PlaneWave::scaled(cplx s) const
{
    return PlaneWave(amplitude_ * s, direction_, k_);
}

namespace {

double shape_mass_factor(const std::function<double(double)>& h)
{
    return integrate_interval([&](double t) { return (1.0 - t) * (1.0 - t) * h(t) * t * t; },
                              0.0, 1.0, gauss_legendre(40));
}

} // namespace

RadialShape RadialShape::custom(std::function<double(double)> h, std::function<double(double)> dh)
{
    if (!h) {
        throw ValidationError("radial shape: empty profile function");
    }
    RadialShape s;
    s.kind_ = Kind::custom;
    s.h_ = std::move(h);
    s.dh_ = std::move(dh);
    for (int i = 0; i <= 64; ++i) {
        if (!std::isfinite(s.h_(i / 64.0))) {
            throw ValidationError("radial shape: profile is not finite on [0,1]");
        }
    }
    s.mass_factor_ = shape_mass_factor(s.h_);
    return s;
}

double RadialShape::value(double t) const
{
    return kind_ == Kind::constant_one ? 1.0 : h_(t);
}

double RadialShape::derivative(double t) const
{
    if (kind_ == Kind::constant_one) {
        return 0.0;
    }
    if (dh_) {
        return dh_(t);
    }
    constexpr double step = 1e-6;
    return (h_(t + step) - h_(t - step)) / (2.0 * step);
}

void validate(const Particle& particle)
{
    if (!particle.center.finite()) {
        throw ValidationError("particle: non-finite center");
    }
    if (!(particle.radius > 0.0) || !std::isfinite(particle.radius)) {
        throw ValidationError("particle: radius must be positive");
    }
    if (!std::isfinite(particle.gamma.real()) || !std::isfinite(particle.gamma.imag())) {
        throw ValidationError("particle: non-finite gamma");
    }
    if (particle.gamma.imag() < 0.0) {
        throw ValidationError("particle: Im gamma must be >= 0");
    }
    if (!(particle.kappa > 0.0 && particle.kappa < 3.0)) {
        throw ValidationError("kappa out of (0,3)");
    }
}

Particle make_particle(const Vec3& center, double radius, cplx gamma, double kappa,
                       RadialShape shape)
{
    Particle p{center, radius, gamma, kappa, std::move(shape)};
    validate(p);
    return p;
}

void validate(const MediumSpec& medium)
{
    if (!(medium.k > 0.0)) {
        throw ValidationError("medium: wavenumber must be positive");
    }
    const Vec3 e = medium.domain.extent();
    if (!(e.x > 0.0 && e.y > 0.0 && e.z > 0.0)) {
        throw ValidationError("medium: degenerate domain box");
    }
    if (!medium.density) {
        throw ValidationError("medium: missing density function");
    }
    constexpr int n = 8;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            for (int l = 0; l <= n; ++l) {
                const Vec3 x = medium.domain.lo + Vec3{e.x * i / n, e.y * j / n, e.z * l / n};
                if (!(medium.density(x) >= 0.0)) {
                    throw ValidationError("medium: density must be non-negative on the domain");
                }
            }
        }
    }
}

} // namespace smallscat
