#include "smallscat/potential.hpp"

#include <sstream>

namespace smallscat {

RadialProfile::RadialProfile(cplx gamma, double kappa, double radius, RadialShape shape)
    : gamma_(gamma), kappa_(kappa), radius_(radius), shape_(std::move(shape))
{
    validate(Particle{{}, radius, gamma, kappa, shape_});
    amplitude_ = gamma_ / (4.0 * kPi * std::pow(radius_, kappa_));
    if (gamma_.imag() > 0.0 && shape_.kind() == RadialShape::Kind::custom) {
        for (int i = 0; i <= 256; ++i) {
            if (shape_.value(i / 256.0) < 0.0) {
                throw ValidationError("radial profile: h < 0 with Im gamma > 0 gives Im p < 0");
            }
        }
    }
}

RadialProfile RadialProfile::of(const Particle& particle)
{
    return RadialProfile(particle.gamma, particle.kappa, particle.radius, particle.shape);
}

cplx RadialProfile::value(double r) const
{
    const double t = r / radius_;
    if (t >= 1.0) {
        return 0.0;
    }
    return amplitude_ * ((1.0 - t) * (1.0 - t) * shape_.value(t));
}

cplx RadialProfile::derivative(double r) const
{
    const double t = r / radius_;
    if (t >= 1.0) {
        return 0.0;
    }
    const double s = 1.0 - t;
    return amplitude_ / radius_ * (-2.0 * s * shape_.value(t) + s * s * shape_.derivative(t));
}

void RadialProfile::check_denominator(double k) const
{
    const double scale = std::max(1.0, k * k + std::abs(amplitude_));
    double previous = 0.0;
    for (int i = 0; i <= kDenominatorScanSamples; ++i) {
        const double r = radius_ * i / kDenominatorScanSamples;
        const cplx K2 = k * k + value(r);
        // For real gamma the denominator is real and can cross zero between
        // samples; a sign change counts as a zero.
        const bool real = std::abs(K2.imag()) <= kDegenerateK2 * scale;
        const bool crossed = real && previous != 0.0 && K2.real() * previous < 0.0;
        if (std::abs(K2) < kDegenerateK2 * scale || crossed) {
            std::ostringstream os;
            os << "singular profile: k^2 + p vanishes near r = " << r;
            throw NumericalError(os.str());
        }
        previous = real ? K2.real() : 0.0;
    }
}

cplx p_of(double r, const RadialProfile& profile)
{
    if (r < 0.0) {
        throw ValidationError("p_of: negative radius");
    }
    return profile.value(r);
}

PotentialField::PotentialField(std::span<const Particle> particles, double k)
    : particles_(particles.begin(), particles.end()), k_(k)
{
    if (!(k > 0.0)) {
        throw ValidationError("potential field: k must be positive");
    }
    profiles_.reserve(particles_.size());
    for (const auto& p : particles_) {
        profiles_.push_back(RadialProfile::of(p));
    }
}

int PotentialField::locate(const Vec3& y) const
{
    for (std::size_t m = 0; m < particles_.size(); ++m) {
        if (norm(y - particles_[m].center) <= particles_[m].radius) {
            return static_cast<int>(m);
        }
    }
    return -1;
}

cplx PotentialField::p(const Vec3& y) const
{
    const int m = locate(y);
    return m < 0 ? cplx{} : profiles_[m].value(norm(y - particles_[m].center));
}

CVec3 PotentialField::grad_p(const Vec3& y) const
{
    const int m = locate(y);
    if (m < 0) {
        return {};
    }
    const Vec3 d = y - particles_[m].center;
    const double r = norm(d);
    if (r == 0.0) {
        return {};
    }
    return profiles_[m].derivative(r) * (d / r);
}

CVec3 PotentialField::q(const Vec3& y) const
{
    const int m = locate(y);
    if (m < 0) {
        return {};
    }
    const Vec3 d = y - particles_[m].center;
    const double r = norm(d);
    const cplx k2 = k_ * k_ + profiles_[m].value(r);
    if (std::abs(k2) < kDegenerateK2) {
        throw NumericalError("degenerate potential: K^2 = 0");
    }
    if (r == 0.0) {
        return {};
    }
    return (profiles_[m].derivative(r) / k2) * (d / r);
}

CVec3 q_of(const Vec3& y, const PotentialField& field)
{
    return field.q(y);
}

cplx potential_moment_analytic(const RadialProfile& profile)
{
    return profile.gamma() * profile.shape().mass_factor() *
           std::pow(profile.radius(), 3.0 - profile.kappa());
}

cplx potential_moment_quadrature(const RadialProfile& profile, const BallRule& rule)
{
    return integrate_ball([&](const Vec3& y) { return profile.value(norm(y)); }, Vec3{},
                          profile.radius(), rule);
}

namespace {

double log_nu(const RadialProfile& profile, double k)
{
    if (!(k > 0.0)) {
        throw ValidationError("log moment: k must be positive");
    }
    return 4.0 * kPi * k * k * std::pow(profile.radius(), profile.kappa());
}

} // namespace

cplx log_moment(const RadialProfile& profile, double k)
{
    const double nu = log_nu(profile, k);
    const cplx g = profile.gamma();
    if (g == cplx{}) {
        return 0.0;
    }
    // nu + u = 4 pi a^kappa (k^2 + p(a t))
    profile.check_denominator(k);
    const auto& h = profile.shape();
    return integrate_graded(
        [&](double t) {
            const double s = 1.0 - t;
            const cplx u = g * s * s * h.value(t);
            const cplx du = g * (-2.0 * s * h.value(t) + s * s * h.derivative(t));
            return t * t * t * du / (nu + u);
        },
        0.0, 1.0);
}

cplx log_moment_by_parts(const RadialProfile& profile, double k)
{
    const double nu = log_nu(profile, k);
    const cplx g = profile.gamma();
    if (g == cplx{}) {
        return 0.0;
    }
    // nu + u = 4 pi a^kappa (k^2 + p(a t))
    profile.check_denominator(k);
    const auto& h = profile.shape();
    const cplx tail = integrate_graded(
        [&](double t) {
            const double s = 1.0 - t;
            return t * t * std::log(nu + g * s * s * h.value(t));
        },
        0.0, 1.0);
    // u(1) = 0, and the t = 0 end contributes nothing.
    return std::log(cplx(nu)) - 3.0 * tail;
}

cplx divergence_law(const RadialProfile& profile, double k)
{
    const double a = profile.radius();
    return 4.0 * kPi / 3.0 * a * a * a * log_moment(profile, k);
}

cplx divergence_moment_quadrature(const Particle& particle, const VectorField& field, double k,
                                  const BallRule& rule)
{
    const RadialProfile profile = RadialProfile::of(particle);
    profile.check_denominator(k);
    const Vec3 c = particle.center;
    return integrate_ball(
        [&](const Vec3& y) {
            const Vec3 d = y - c;
            const double r = norm(d);
            const cplx w = profile.derivative(r) / (k * k + profile.value(r));
            return w * dot(d / r, field(y));
        },
        c, particle.radius, rule);
}

cplx gradient_tensor_moment(const RadialProfile& profile, double k, int i, int j,
                            const BallRule& rule)
{
    profile.check_denominator(k);
    return integrate_ball(
        [&](const Vec3& y) {
            const double r = norm(y);
            return profile.derivative(r) * r * (y[i] / r) * (y[j] / r) /
                   (k * k + profile.value(r));
        },
        Vec3{}, profile.radius(), rule);
}

AxisMoment axis_moment(const RadialProfile& profile, double k, int axis, const BallRule& rule)
{
    if (axis < 0 || axis > 2) {
        throw ValidationError("axis_moment: axis must be 0, 1 or 2");
    }
    profile.check_denominator(k);
    const double a = profile.radius();
    const cplx radial = integrate_graded(
        [&](double r) {
            return r * r * r * profile.derivative(r) / (k * k + profile.value(r));
        },
        0.0, a);
    double angular = 0.0;
    const auto& dirs = rule.directions();
    const auto& w = rule.direction_weights();
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        angular += w[d] * dirs[d][axis] * dirs[d][axis];
    }
    return {radial, angular, radial * angular};
}

} // namespace smallscat
