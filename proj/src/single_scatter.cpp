#include "smallscat/single_scatter.hpp"

#include "smallscat/green.hpp"
#include "smallscat/parallel.hpp"

#include <Eigen/Dense>

#include <sstream>

namespace smallscat {

SingleCoefficients single_coefficients(const Particle& particle, double k, const BallRule& rule)
{
    validate(particle);
    const RadialProfile profile = RadialProfile::of(particle);
    profile.check_denominator(k);
    const Vec3 c = particle.center;
    const double a = particle.radius;

    auto radial = [&](const Vec3& y) { return y - c; };
    SingleCoefficients out;
    out.a = integrate_ball_singular(
        [&](const Vec3& y) { return profile.value(norm(radial(y))); }, c, c, a, k, rule);
    out.A = integrate_ball_around(
        [&](const Vec3& y) { return profile.value(norm(radial(y))) * grad_x_green(y, c, k); }, c,
        c, a, rule);
    auto q = [&](const Vec3& y) -> CVec3 {
        const Vec3 d = radial(y);
        const double r = norm(d);
        const cplx w = profile.derivative(r) / (k * k + profile.value(r));
        return w * (d / r);
    };
    out.B = integrate_ball_around([&](const Vec3& y) { return q(y) * green(y, c, k); }, c, c, a,
                                  rule);
    out.b = integrate_ball_around([&](const Vec3& y) { return dot(q(y), grad_x_green(y, c, k)); },
                                  c, c, a, rule);
    return out;
}

SingleMoments solve_moments(const SingleCoefficients& coeffs, const CVec3& V0, cplx nu0)
{
    SingleMoments m;
    m.coeffs = coeffs;
    m.V0 = V0;
    m.nu0 = nu0;
    if (std::abs(coeffs.a) >= 1.0) {
        std::ostringstream os;
        os << "body not small: |a_m| = " << std::abs(coeffs.a) << " >= 1";
        throw NumericalError(os.str());
    }
    if (std::abs(coeffs.b) >= 1.0) {
        std::ostringstream os;
        os << "|b_m| = " << std::abs(coeffs.b) << " >= 1 (moment formulas outside their regime)";
        m.warnings.push_back(os.str());
    }
    const cplx one_a = 1.0 - coeffs.a;
    const cplx det = one_a * (1.0 - coeffs.b) - dot(coeffs.B, coeffs.A);
    if (std::abs(det) < kResonanceThreshold) {
        std::ostringstream os;
        os << "resonance: moment system determinant |" << det << "| below threshold";
        throw NumericalError(os.str());
    }
    m.nu = (one_a * nu0 + dot(coeffs.B, V0)) / det;
    m.V = V0 / one_a + coeffs.A * (m.nu / one_a);
    return m;
}

SingleMoments solve_single(const Particle& particle, const PlaneWave& incident,
                           const BallRule& rule)
{
    const double k = incident.wavenumber();
    const SingleCoefficients coeffs = single_coefficients(particle, k, rule);
    const RadialProfile profile = RadialProfile::of(particle);
    const Vec3 c = particle.center;
    const CVec3 V0 = integrate_ball(
        [&](const Vec3& y) { return profile.value(norm(y - c)) * incident(y); }, c,
        particle.radius, rule);
    const cplx nu0 = integrate_ball(
        [&](const Vec3& y) {
            const Vec3 d = y - c;
            const double r = norm(d);
            const cplx w = profile.derivative(r) / (k * k + profile.value(r));
            return w * dot(d / r, incident(y));
        },
        c, particle.radius, rule);
    return solve_moments(coeffs, V0, nu0);
}

CVec3 eval_field_single(const Vec3& x, const Particle& particle, const SingleMoments& moments,
                        const PlaneWave& incident, std::vector<std::string>* warnings)
{
    const double d = norm(x - particle.center);
    if (!(d > 2.0 * particle.radius)) {
        throw ValidationError("eval_field_single: evaluation point within 2a of the particle");
    }
    if (warnings && d < kFarZoneRadii * particle.radius) {
        std::ostringstream os;
        os << "field point at distance " << d << " < 10a from the particle";
        warnings->push_back(os.str());
    }
    const double k = incident.wavenumber();
    return incident(x) + green(x, particle.center, k) * moments.V +
           grad_x_green(x, particle.center, k) * moments.nu;
}

CVec3 curl_fd(const VectorField& field, const Vec3& x, double step)
{
    CVec3 d[3]; // d[j] = dE/dx_j
    for (int j = 0; j < 3; ++j) {
        Vec3 e;
        e[j] = step;
        d[j] = (field(x + e) - field(x - e)) * (0.5 / step);
    }
    return {d[1].z - d[2].y, d[2].x - d[0].z, d[0].y - d[1].x};
}

CVec3 compute_H(const VectorField& field, const Vec3& x, double omega, double mu, double step)
{
    if (!(omega > 0.0) || !(mu > 0.0)) {
        throw ValidationError("compute_H: omega and mu must be positive");
    }
    return curl_fd(field, x, step) / cplx(0.0, omega * mu);
}

CVec3 OracleSolution::field_at(const Vec3& x) const
{
    CVec3 e = incident(x);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        e += (weights[j] * p[j] * green(x, nodes[j], k)) * field[j];
        e += (weights[j] * dot(q[j], field[j])) * grad_x_green(x, nodes[j], k);
    }
    return e;
}

CVec3 OracleSolution::moment_V(int m) const
{
    CVec3 v;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (owner[j] == m) {
            v += (weights[j] * p[j]) * field[j];
        }
    }
    return v;
}

cplx OracleSolution::moment_nu(int m) const
{
    cplx v{};
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        if (owner[j] == m) {
            v += weights[j] * dot(q[j], field[j]);
        }
    }
    return v;
}

namespace {

void check_disjoint(std::span<const Particle> particles)
{
    for (std::size_t i = 0; i < particles.size(); ++i) {
        for (std::size_t j = i + 1; j < particles.size(); ++j) {
            const double d = norm(particles[i].center - particles[j].center);
            if (d < particles[i].radius + particles[j].radius) {
                std::ostringstream os;
                os << "overlapping particles " << i << " and " << j;
                throw ValidationError(os.str());
            }
        }
    }
}

} // namespace

OracleSolution oracle_solve(std::span<const Particle> particles, const PlaneWave& incident,
                            const OracleOptions& options)
{
    if (options.nodes_across < 8) {
        throw ValidationError("oracle: mesh must have at least 8 cells across a diameter");
    }
    if (particles.empty()) {
        throw ValidationError("oracle: no particles");
    }
    for (const auto& p : particles) {
        validate(p);
    }
    check_disjoint(particles);

    const double k = incident.wavenumber();
    OracleSolution sol{.k = k, .incident = incident, .cell = 0.0, .nodes = {}, .weights = {},
                       .owner = {}, .field = {}, .p = {}, .q = {}, .residual = 0.0};
    const int n = options.nodes_across;
    std::vector<cplx> self_cell;
    for (std::size_t m = 0; m < particles.size(); ++m) {
        const Particle& part = particles[m];
        const RadialProfile profile = RadialProfile::of(part);
        profile.check_denominator(k);
        const double h = 2.0 * part.radius / n;
        sol.cell = std::max(sol.cell, h);
        const Box cellbox{{-0.5 * h, -0.5 * h, -0.5 * h}, {0.5 * h, 0.5 * h, 0.5 * h}};
        self_cell.push_back(integrate_box_around(
            [&](const Vec3& y) { return green(Vec3{}, y, k); }, cellbox, Vec3{},
            BoxRule(options.self_cell_order)));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                for (int l = 0; l < n; ++l) {
                    const Vec3 off{(i + 0.5) * h - part.radius, (j + 0.5) * h - part.radius,
                                   (l + 0.5) * h - part.radius};
                    const double r = norm(off);
                    if (r >= part.radius) {
                        continue;
                    }
                    sol.nodes.push_back(part.center + off);
                    sol.weights.push_back(h * h * h);
                    sol.owner.push_back(static_cast<int>(m));
                    const cplx pv = profile.value(r);
                    sol.p.push_back(pv);
                    sol.q.push_back(r > 0.0 ? (profile.derivative(r) / (k * k + pv)) * (off / r)
                                            : CVec3{});
                }
            }
        }
    }

    const Eigen::Index count = static_cast<Eigen::Index>(sol.nodes.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(3 * count, 3 * count);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
        for (Eigen::Index j = 0; j < count; ++j) {
            cplx gw;
            CVec3 ggw;
            if (static_cast<Eigen::Index>(i) == j) {
                gw = self_cell[sol.owner[j]];
            } else {
                gw = sol.weights[j] * green(sol.nodes[i], sol.nodes[j], k);
                ggw = sol.weights[j] * grad_x_green(sol.nodes[i], sol.nodes[j], k);
            }
            for (int al = 0; al < 3; ++al) {
                A(3 * i + al, 3 * j + al) -= gw * sol.p[j];
                for (int be = 0; be < 3; ++be) {
                    A(3 * i + al, 3 * j + be) -= ggw[al] * sol.q[j][be];
                }
            }
        }
    });

    Eigen::VectorXcd rhs(3 * count);
    for (Eigen::Index i = 0; i < count; ++i) {
        const CVec3 e0 = incident(sol.nodes[i]);
        for (int al = 0; al < 3; ++al) {
            rhs(3 * i + al) = e0[al];
        }
    }
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream os;
        os << "oracle: discrete system is singular (rcond = " << rcond << "), mesh degenerate";
        throw NumericalError(os.str());
    }
    const Eigen::VectorXcd x = lu.solve(rhs);
    sol.residual = (A * x - rhs).norm() / rhs.norm();
    if (!(sol.residual <= options.tolerance)) {
        std::ostringstream os;
        os << "oracle: residual " << sol.residual << " above tolerance " << options.tolerance;
        throw NumericalError(os.str());
    }
    sol.field.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        sol.field[i] = {x(3 * i), x(3 * i + 1), x(3 * i + 2)};
    }
    return sol;
}

} // namespace smallscat
