#include "smallscat/multi_scatter.hpp"

#include "smallscat/green.hpp"
#include "smallscat/krylov.hpp"
#include "smallscat/parallel.hpp"

#include <algorithm>
#include <sstream>

namespace smallscat {

CouplingFactors coupling_factors(const RadialProfile& profile, double k)
{
    profile.check_denominator(k);
    const double a = profile.radius();
    auto qr = [&](double r) { return profile.derivative(r) / (k * k + profile.value(r)); };
    CouplingFactors f;
    f.mean_p = integrate_graded(
        [&](double r) { return profile.value(r) * (4.0 * kPi * r * r * sinc(k * r)); }, 0.0, a,
        24);
    f.mean_q = integrate_graded(
        [&](double r) { return qr(r) * (4.0 * kPi * r * r * spherical_j1(k * r) / k); }, 0.0, a,
        24);
    f.self_a = integrate_graded(
        [&](double r) { return profile.value(r) * std::exp(cplx(0.0, k * r)) * r; }, 0.0, a, 24);
    f.self_d = integrate_graded(
        [&](double r) {
            return qr(r) * std::exp(cplx(0.0, k * r)) * cplx(-1.0, k * r);
        },
        0.0, a, 24);
    return f;
}

PairCoefficients LasSystem::pair(std::size_t j, std::size_t m) const
{
    if (!table_.empty()) {
        return table_[j * size() + m];
    }
    const CouplingFactors& f = factors_[j];
    if (j == m) {
        return {f.self_a, {}, {}, f.self_d};
    }
    const auto [g, gg] = green_with_gradient(centers_[j], centers_[m], k_);
    return {f.mean_p * g, f.mean_p * gg, f.mean_q * gg, -k_ * k_ * f.mean_q * g};
}

void LasSystem::apply_coupling(std::span<const cplx> x, std::span<cplx> y) const
{
    const std::size_t M = size();
    if (x.size() != 4 * M || y.size() != 4 * M) {
        throw ValidationError("apply_coupling: vector size mismatch");
    }
    parallel_for(M, [&](std::size_t j) {
        CVec3 v;
        cplx nu{};
        for (std::size_t m = 0; m < M; ++m) {
            const PairCoefficients c = pair(j, m);
            const CVec3 Vm{x[3 * m], x[3 * m + 1], x[3 * m + 2]};
            const cplx num = x[3 * M + m];
            v += c.a * Vm + c.B * num;
            nu += dot(c.C, Vm) + c.d * num;
        }
        y[3 * j] = v.x;
        y[3 * j + 1] = v.y;
        y[3 * j + 2] = v.z;
        y[3 * M + j] = nu;
    });
}

Eigen::MatrixXcd LasSystem::coupling_matrix() const
{
    const Eigen::Index M = static_cast<Eigen::Index>(size());
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(4 * M, 4 * M);
    parallel_for(size(), [&](std::size_t js) {
        const Eigen::Index j = static_cast<Eigen::Index>(js);
        for (Eigen::Index m = 0; m < M; ++m) {
            const PairCoefficients c = pair(js, static_cast<std::size_t>(m));
            for (int al = 0; al < 3; ++al) {
                K(3 * j + al, 3 * m + al) = c.a;
                K(3 * j + al, 3 * M + m) = c.B[al];
                K(3 * M + j, 3 * m + al) = c.C[al];
            }
            K(3 * M + j, 3 * M + m) = c.d;
        }
    });
    return K;
}

std::vector<cplx> LasSystem::stacked_source() const
{
    const std::size_t M = size();
    std::vector<cplx> s(4 * M);
    for (std::size_t j = 0; j < M; ++j) {
        s[3 * j] = V0_[j].x;
        s[3 * j + 1] = V0_[j].y;
        s[3 * j + 2] = V0_[j].z;
        s[3 * M + j] = nu0_[j];
    }
    return s;
}

namespace {

PairCoefficients pair_by_quadrature(const Particle& pj, const RadialProfile& prof,
                                    const Vec3& xm, bool self, double k, const BallRule& rule)
{
    const Vec3 c = pj.center;
    const double a = pj.radius;
    auto p = [&](const Vec3& y) { return prof.value(norm(y - c)); };
    auto q = [&](const Vec3& y) -> CVec3 {
        const Vec3 d = y - c;
        const double r = norm(d);
        return (prof.derivative(r) / (k * k + prof.value(r))) * (d / r);
    };
    auto pg = [&](const Vec3& y) { return p(y) * green(y, xm, k); };
    auto pgg = [&](const Vec3& y) { return p(y) * grad_x_green(y, xm, k); };
    auto qg = [&](const Vec3& y) { return q(y) * green(y, xm, k); };
    auto qgg = [&](const Vec3& y) { return dot(q(y), grad_x_green(y, xm, k)); };
    if (self) {
        return {integrate_ball_singular(p, xm, c, a, k, rule),
                integrate_ball_around(pgg, xm, c, a, rule),
                integrate_ball_around(qg, xm, c, a, rule),
                integrate_ball_around(qgg, xm, c, a, rule)};
    }
    return {integrate_ball(pg, c, a, rule), integrate_ball(pgg, c, a, rule),
            integrate_ball(qg, c, a, rule), integrate_ball(qgg, c, a, rule)};
}

} // namespace

LasSystem assemble_las(std::span<const Particle> particles, const PlaneWave& incident,
                       const BallRule& rule, AssemblyMethod method)
{
    const double k = incident.wavenumber();
    const std::size_t M = particles.size();
    LasSystem sys;
    sys.k_ = k;
    sys.method_ = method;
    sys.centers_.reserve(M);
    std::vector<RadialProfile> profiles;
    profiles.reserve(M);
    for (const auto& p : particles) {
        validate(p);
        sys.centers_.push_back(p.center);
        profiles.push_back(RadialProfile::of(p));
    }
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = i + 1; j < M; ++j) {
            const double d = norm(particles[i].center - particles[j].center);
            if (d < particles[i].radius + particles[j].radius) {
                std::ostringstream os;
                os << "overlapping particles " << i << " and " << j;
                throw ValidationError(os.str());
            }
            const double a = std::max(particles[i].radius, particles[j].radius);
            if (d < kCloseSeparationRadii * a) {
                std::ostringstream os;
                os << "particles " << i << " and " << j << " closer than 2a (d = " << d << ")";
                sys.warnings_.push_back(os.str());
            }
        }
    }

    sys.factors_.resize(M);
    parallel_for(M, [&](std::size_t j) { sys.factors_[j] = coupling_factors(profiles[j], k); });

    sys.V0_.resize(M);
    sys.nu0_.resize(M);
    const cplx div_amplitude = cplx(0.0, k) * dot(incident.amplitude(), incident.direction());
    if (method == AssemblyMethod::spherical_mean) {
        for (std::size_t j = 0; j < M; ++j) {
            const CVec3 e0 = incident(sys.centers_[j]);
            sys.V0_[j] = sys.factors_[j].mean_p * e0;
            sys.nu0_[j] = sys.factors_[j].mean_q * div_amplitude *
                          std::exp(cplx(0.0, k * dot(incident.direction(), sys.centers_[j])));
        }
        return sys;
    }

    sys.table_.resize(M * M);
    parallel_for(M, [&](std::size_t j) {
        const Particle& pj = particles[j];
        const RadialProfile& prof = profiles[j];
        const Vec3 c = pj.center;
        sys.V0_[j] = integrate_ball(
            [&](const Vec3& y) { return prof.value(norm(y - c)) * incident(y); }, c, pj.radius,
            rule);
        sys.nu0_[j] = integrate_ball(
            [&](const Vec3& y) {
                const Vec3 d = y - c;
                const double r = norm(d);
                return (prof.derivative(r) / (k * k + prof.value(r))) * dot(d / r, incident(y));
            },
            c, pj.radius, rule);
        for (std::size_t m = 0; m < M; ++m) {
            sys.table_[j * M + m] =
                pair_by_quadrature(pj, prof, particles[m].center, j == m, k, rule);
        }
    });
    return sys;
}

double contraction_norm(const LasSystem& system)
{
    const std::size_t M = system.size();
    std::vector<double> rows(M);
    parallel_for(M, [&](std::size_t j) {
        double s = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            const PairCoefficients c = system.pair(j, m);
            s += std::abs(c.a) + std::abs(c.d) + norm(c.B) + norm(c.C);
        }
        rows[j] = s;
    });
    return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

const char* to_string(LasSolver solver)
{
    switch (solver) {
    case LasSolver::direct: return "direct";
    case LasSolver::iterative: return "iterative";
    case LasSolver::gmres: return "gmres";
    }
    return "unknown";
}

namespace {

MultiSolution unstack(std::span<const cplx> x, std::size_t M, LasSolver solver)
{
    MultiSolution s;
    s.solver = solver;
    s.V.resize(M);
    s.nu.resize(M);
    for (std::size_t j = 0; j < M; ++j) {
        s.V[j] = {x[3 * j], x[3 * j + 1], x[3 * j + 2]};
        s.nu[j] = x[3 * M + j];
    }
    return s;
}

std::vector<cplx> stack(const MultiSolution& s)
{
    const std::size_t M = s.V.size();
    std::vector<cplx> x(4 * M);
    for (std::size_t j = 0; j < M; ++j) {
        x[3 * j] = s.V[j].x;
        x[3 * j + 1] = s.V[j].y;
        x[3 * j + 2] = s.V[j].z;
        x[3 * M + j] = s.nu[j];
    }
    return x;
}

double max_norm(std::span<const cplx> v)
{
    double m = 0.0;
    for (const cplx& c : v) {
        m = std::max(m, std::abs(c));
    }
    return m;
}

} // namespace

double las_residual(const LasSystem& system, const MultiSolution& solution)
{
    const std::vector<cplx> x = stack(solution);
    const std::vector<cplx> s = system.stacked_source();
    std::vector<cplx> kx(x.size());
    system.apply_coupling(x, kx);
    std::vector<cplx> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        r[i] = x[i] - s[i] - kx[i];
    }
    const double sn = norm2(s);
    return sn > 0.0 ? norm2(r) / sn : norm2(r);
}

MultiSolution solve_las_direct(const LasSystem& system)
{
    const std::size_t n = system.unknowns();
    if (n > kMaxDirectUnknowns) {
        std::ostringstream os;
        os << "direct solve: " << n << " unknowns exceed the dense limit " << kMaxDirectUnknowns
           << "; use the gmres solver";
        throw NumericalError(os.str());
    }
    const std::vector<cplx> s = system.stacked_source();
    if (n == 0) {
        return MultiSolution{};
    }
    const Eigen::MatrixXcd A =
        Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) -
        system.coupling_matrix();
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const double rcond = lu.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(cond <= kMaxCondition)) {
        std::ostringstream os;
        os << "direct solve: system is singular or ill-conditioned (condition estimate " << cond
           << ")";
        throw NumericalError(os.str());
    }
    const Eigen::Map<const Eigen::VectorXcd> b(s.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXcd x = lu.solve(b);
    MultiSolution sol = unstack(std::span<const cplx>(x.data(), n), system.size(), LasSolver::direct);
    sol.condition_estimate = cond;
    sol.residual = las_residual(system, sol);
    sol.residual_history = {sol.residual};
    if (!(sol.residual <= 1e-10)) {
        std::ostringstream os;
        os << "direct solve: relative residual " << sol.residual << " above 1e-10";
        throw NumericalError(os.str());
    }
    return sol;
}

MultiSolution solve_las_iterative(const LasSystem& system, double tolerance, int max_iterations)
{
    const double q = contraction_norm(system);
    if (!(q < 1.0)) {
        std::ostringstream os;
        os << "iterative solve refused: contraction norm " << q << " >= 1";
        throw NumericalError(os.str());
    }
    const std::vector<cplx> s = system.stacked_source();
    const std::size_t n = s.size();
    const double scale = std::max(max_norm(s), std::numeric_limits<double>::min());
    std::vector<cplx> x(n), kx(n);
    std::vector<double> history;
    int it = 0;
    // history[n] is the max-norm residual |source + K x_n - x_n| of iterate n
    // (x_0 = 0), relative to |source|.
    while (true) {
        system.apply_coupling(x, kx);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            kx[i] += s[i];
            diff = std::max(diff, std::abs(kx[i] - x[i]));
        }
        const double rel = diff / scale;
        history.push_back(rel);
        if (rel <= tolerance) {
            break;
        }
        if (it >= max_iterations) {
            std::ostringstream os;
            os << "iterative solve: no convergence after " << it << " iterations; residuals";
            const std::size_t first = history.size() > 5 ? history.size() - 5 : 0;
            for (std::size_t i = first; i < history.size(); ++i) {
                os << ' ' << history[i];
            }
            throw NumericalError(os.str());
        }
        x.swap(kx);
        ++it;
    }
    MultiSolution sol = unstack(x, system.size(), LasSolver::iterative);
    sol.iterations = it;
    sol.residual_history = std::move(history);
    sol.residual = las_residual(system, sol);
    return sol;
}

MultiSolution solve_las_gmres(const LasSystem& system, double tolerance, int max_iterations,
                              int restart)
{
    const std::vector<cplx> s = system.stacked_source();
    std::vector<cplx> kx(s.size());
    const LinearOperator op = [&](std::span<const cplx> x, std::span<cplx> y) {
        system.apply_coupling(x, kx);
        for (std::size_t i = 0; i < x.size(); ++i) {
            y[i] = x[i] - kx[i];
        }
    };
    KrylovResult kr = gmres(op, s, tolerance, max_iterations, restart);
    if (!kr.converged) {
        std::ostringstream os;
        os << "gmres solve: no convergence after " << kr.iterations
           << " iterations (relative residual " << kr.residual << ")";
        throw NumericalError(os.str());
    }
    MultiSolution sol = unstack(kr.x, system.size(), LasSolver::gmres);
    sol.iterations = kr.iterations;
    sol.residual_history = std::move(kr.history);
    sol.residual = las_residual(system, sol);
    return sol;
}

CVec3 eval_field_multi(const Vec3& x, const MultiSolution& solution,
                       std::span<const Particle> particles, const PlaneWave& incident,
                       std::vector<std::string>* warnings)
{
    if (solution.V.size() != particles.size()) {
        throw ValidationError("eval_field_multi: solution and particle count differ");
    }
    const double k = incident.wavenumber();
    CVec3 e = incident(x);
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < particles.size(); ++m) {
        const double d = norm(x - particles[m].center);
        if (d <= particles[m].radius) {
            std::ostringstream os;
            os << "eval_field_multi: point lies inside particle " << m;
            throw ValidationError(os.str());
        }
        closest = std::min(closest, d / particles[m].radius);
        e += green(x, particles[m].center, k) * solution.V[m] +
             grad_x_green(x, particles[m].center, k) * solution.nu[m];
    }
    if (warnings && closest < 10.0) {
        std::ostringstream os;
        os << "field point within " << closest << " radii of a particle (formula assumes d >> a)";
        warnings->push_back(os.str());
    }
    return e;
}

} // namespace smallscat
