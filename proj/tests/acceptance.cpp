// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "smallscat/effective_medium.hpp"
#include "smallscat/multi_scatter.hpp"
#include "smallscat/potential.hpp"
#include "smallscat/single_scatter.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace smallscat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const PlaneWave kWave = make_plane_wave({1, 0, 0}, {0, 0, 1}, 1.0);

Outcome moment_constant()
{
    double worst = 0.0;
    for (cplx g : {cplx(1.0), cplx(30.0), cplx(2.0, 1.0)}) {
        for (double a : {1e-1, 1e-2, 1e-3}) {
            for (double kappa : {0.5, 1.0}) {
                const cplx j = potential_moment_quadrature(RadialProfile(g, kappa, a));
                const cplx c = j / (g * std::pow(a, 3.0 - kappa));
                worst = std::max(worst, std::abs(c - 1.0 / 30.0) * 30.0);
            }
        }
    }
    return {worst < 1e-8, fmt("max relative deviation from 1/30: %.2e (limit 1e-8)", worst)};
}

Outcome angular_identity()
{
    double worst_angle = 0.0, worst_equal = 0.0;
    for (double a : {0.1, 0.01}) {
        const RadialProfile p(cplx(7.0, 1.0), 0.6, a);
        AxisMoment m[3];
        for (int i = 0; i < 3; ++i) {
            m[i] = axis_moment(p, 2.0, i);
            worst_angle = std::max(worst_angle, std::abs(m[i].angular - 4.0 * kPi / 3.0));
        }
        const double s = std::abs(m[0].value);
        worst_equal = std::max({worst_equal, std::abs(m[0].value - m[1].value) / s,
                                std::abs(m[1].value - m[2].value) / s});
    }
    return {worst_angle < 1e-10 && worst_equal < 1e-12,
            fmt("|angular - 4pi/3| = %.2e (limit 1e-10), Y spread %.2e (limit 1e-12)",
                worst_angle, worst_equal)};
}

Outcome log_asymptotics()
{
    // gamma = 100, k = 1, kappa = 1.
    std::string d;
    double last = 1e300;
    bool monotone = true;
    double dev = 0.0;
    for (double a : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        const cplx I = log_moment(RadialProfile(100.0, 1.0, a), 1.0);
        dev = std::abs(I / std::log(a) - 1.0);
        monotone = monotone && dev < last;
        last = dev;
        d += fmt("%s%.3f", d.empty() ? "" : ", ", dev);
    }
    return {monotone && dev < 0.15, "|I/(kappa ln a) - 1| = " + d + " (last < 0.15, decreasing)"};
}

Outcome symmetry_vanishing()
{
    double worst_z = 0.0, worst_t = 0.0;
    for (double a : {1e-1, 1e-2, 1e-3}) {
        for (cplx g : {cplx(5.0), cplx(2.0, 1.0)}) {
            const Particle p = make_particle({0.2, -0.1, 0.3}, a, g, 1.0);
            const double scale = std::abs(g) * a * a * a;
            const cplx z = divergence_moment_quadrature(
                p, [](const Vec3&) { return CVec3{cplx(1.0, 2.0), -3.0, 0.5}; }, 1.0);
            worst_z = std::max(worst_z, std::abs(z) / scale);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    if (i != j) {
                        worst_t = std::max(worst_t,
                                           std::abs(gradient_tensor_moment(RadialProfile::of(p),
                                                                           1.0, i, j)) /
                                               scale);
                    }
                }
            }
        }
    }
    return {worst_z < 1e-10 && worst_t < 1e-10,
            fmt("|Z|/(|gamma|a^3) = %.2e, off-diagonal %.2e (limit 1e-10)", worst_z, worst_t)};
}

Outcome divergence_law_check()
{
    std::string d;
    double dev = 0.0;
    for (double a : {1e-2, 1e-3, 1e-4}) {
        const Particle p = make_particle({0, 0, 0}, a, 5.0, 1.0);
        const cplx z =
            divergence_moment_quadrature(p, [](const Vec3& x) { return CVec3{x.x, 0, 0}; }, 1.0);
        const cplx ratio = z / divergence_law(RadialProfile::of(p), 1.0);
        dev = std::abs(ratio - 1.0);
        d += fmt("%s%.4f", d.empty() ? "" : ", ", std::abs(ratio));
    }
    return {dev < 0.1, "|Z / ((4pi/3) a^3 I(a))| = " + d + " (within 0.1 of 1 at the last a)"};
}

Outcome single_oracle()
{
    // gamma = 1, kappa = 0.5, k = 1, oracle with 12 cells per diameter.
    const std::vector<Vec3> probes{{0.0, 0.7, 0.3}, {0.6, 0.0, 0.0}, {0.0, 0.0, -0.8}};
    std::vector<double> errors;
    for (double a : {0.05, 0.025, 0.0125}) {
        const std::vector<Particle> one{make_particle({0, 0, 0}, a, 1.0, 0.5)};
        const OracleSolution s = oracle_solve(one, kWave, {12, 6, 1e-8});
        const SingleMoments m = solve_single(one[0], kWave);
        double worst = 0.0;
        for (const Vec3& x : probes) {
            const CVec3 eo = s.field_at(x);
            worst = std::max(worst, norm(eval_field_single(x, one[0], m, kWave) - eo) / norm(eo));
        }
        errors.push_back(worst);
    }
    const bool ok = errors[1] < errors[0] && errors[2] < errors[1];
    return {ok, fmt("max relative field error %.2e, %.2e, %.2e (decreasing)", errors[0], errors[1],
                    errors[2])};
}

std::vector<cplx> stacked(const MultiSolution& s)
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

double rel_diff(const MultiSolution& a, const MultiSolution& b)
{
    const auto x = stacked(a), y = stacked(b);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += std::norm(x[i] - y[i]);
        den += std::norm(y[i]);
    }
    return std::sqrt(num / den);
}

Outcome las_cross_solver()
{
    std::vector<std::vector<Particle>> configs;
    for (cplx g : {cplx(0.3, 0.05), cplx(0.2)}) {
        configs.push_back({make_particle({0.0, 0.0, 0.0}, 0.02, g, 1.0),
                           make_particle({0.4, 0.1, 0.0}, 0.02, g, 1.0),
                           make_particle({-0.2, 0.35, 0.25}, 0.02, g, 1.0),
                           make_particle({0.1, -0.3, 0.45}, 0.02, g, 1.0),
                           make_particle({-0.35, -0.2, -0.3}, 0.02, g, 1.0)});
    }
    const DistributionLaw law{Box{}, [](const Vec3&) { return 1.0; }, 1.0};
    configs.push_back(generate_particles(law, 0.1, 1, [](const Vec3&) { return cplx(0.5, 0.1); }));

    bool ok = true;
    std::string d;
    for (const auto& parts : configs) {
        const LasSystem s = assemble_las(parts, kWave);
        const double q = contraction_norm(s);
        if (!(q < 0.9)) {
            ok = false;
            d += fmt("[M=%zu q=%.3f not a contraction] ", parts.size(), q);
            continue;
        }
        const MultiSolution direct = solve_las_direct(s);
        const MultiSolution it = solve_las_iterative(s, 1e-14);
        const double diff = rel_diff(it, direct);
        double ratio = 0.0;
        for (std::size_t n = 1; n < it.residual_history.size(); ++n) {
            if (it.residual_history[n - 1] > 1e-13) {
                ratio = std::max(ratio, it.residual_history[n] / it.residual_history[n - 1]);
            }
        }
        ok = ok && diff < 1e-10 && ratio <= q + 0.05;
        d += fmt("[M=%zu q=%.3f diff %.1e ratio %.3f] ", parts.size(), q, diff, ratio);
    }
    return {ok, d + "(diff < 1e-10, ratio <= q + 0.05)"};
}

Outcome one_body()
{
    double worst = 0.0;
    for (cplx g : {cplx(3.0, 0.5), cplx(30.0), cplx(0.5, 2.0)}) {
        const Particle p = make_particle({0.1, 0.2, 0.3}, 0.02, g, 0.8);
        const SingleMoments sm = solve_single(p, kWave);
        const std::vector<Particle> one{p};
        for (AssemblyMethod method : {AssemblyMethod::spherical_mean, AssemblyMethod::quadrature}) {
            const MultiSolution d = solve_las_direct(assemble_las(one, kWave, BallRule(), method));
            worst = std::max({worst, norm(d.V[0] - sm.V) / norm(sm.V),
                              std::abs(d.nu[0] - sm.nu) / std::max(std::abs(sm.nu), norm(sm.V))});
        }
    }
    return {worst < 1e-10, fmt("max relative moment difference %.2e (limit 1e-10)", worst)};
}

const DistributionLaw kUnitLaw{Box{}, [](const Vec3&) { return 1.0; }, 1.0};

ConvergenceStudy convergence()
{
    ConvergenceOptions o;
    o.a_values = {0.05, 0.025, 0.0125};
    o.probes = {{0.5, 0.5, -0.5}, {0.5, 0.5, 1.5}, {1.5, 0.5, 0.5}, {-0.5, 0.2, 0.7}};
    o.seed = 1;
    o.solver = LasSolver::gmres;
    return convergence_study(kUnitLaw, [](const Vec3&) { return cplx(30.0); }, kWave, o);
}

Outcome effective_convergence(const ConvergenceStudy& s)
{
    std::string d;
    for (const auto& r : s.rows) {
        d += fmt("a=%g M=%zu err %.3e; ", r.a, r.count, r.max_error);
    }
    return {s.decreasing(), d + "(strictly decreasing)"};
}

Outcome volume_fraction(const ConvergenceStudy& s)
{
    double lo = 1e300, hi = 0.0;
    std::string d;
    for (const auto& r : s.rows) {
        const double c = r.volume_fraction / std::pow(r.a, kUnitLaw.kappa);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        d += fmt("%.4f ", r.volume_fraction);
    }
    return {hi <= 2.0 * lo, "volume fractions " + d + fmt("; spread of fraction/a^kappa %.3f (<= 2)", hi / lo)};
}

Outcome lemma3()
{
    // 1/phi(a) is not an integer along this sequence, so the f = 1 sum has a
    // rounding error to shrink.
    const std::vector<double> as{0.035, 0.0175, 0.00875};
    const auto one = lemma3_limit_check([](const Vec3&) { return 1.0; }, kUnitLaw, as);
    const auto sq = lemma3_limit_check([](const Vec3& x) { return x.x * x.x; }, kUnitLaw, as);
    bool ok = std::abs(one[0].reference - 1.0) < 1e-12 &&
              std::abs(sq[0].reference - 1.0 / 3.0) < 1e-12;
    for (std::size_t i = 1; i < as.size(); ++i) {
        ok = ok && one[i].error < one[i - 1].error && sq[i].error < sq[i - 1].error;
    }
    return {ok, fmt("f=1 errors %.2e %.2e %.2e; f=x1^2 errors %.2e %.2e %.2e (decreasing)",
                    one[0].error, one[1].error, one[2].error, sq[0].error, sq[1].error,
                    sq[2].error)};
}

Outcome divergence_claim()
{
    const PlaneWave wave = make_plane_wave({0.8, 0, -0.6}, {0.6, 0, 0.8}, 1.0);
    const ComplexField bump = [](const Vec3& x) {
        const Vec3 d = x - Vec3{0.5, 0.5, 0.5};
        return cplx(5.0 * std::exp(-dot(d, d) / (2 * 0.15 * 0.15)));
    };
    const Box region{{0.25, 0.25, 0.25}, {0.75, 0.75, 0.75}};
    const DivergenceOptions opts{region, 3};
    EffectiveOptions eo;
    eo.cells_per_axis = 16;
    const double floor =
        divergence_diagnostic(
            solve_effective_field([](const Vec3&) { return cplx(0.0); }, wave, Box{}, eo), opts)
            .eta_max;
    const double eta = divergence_diagnostic(solve_effective_field(bump, wave, Box{}, eo), opts).eta_max;
    std::vector<double> res;
    for (int n : {8, 16, 24, 32}) {
        eo.cells_per_axis = n;
        res.push_back(divergence_diagnostic(solve_effective_field(bump, wave, Box{}, eo), opts)
                          .residual_max);
    }
    bool ok = eta > 10.0 * floor;
    for (std::size_t i = 1; i < res.size(); ++i) {
        ok = ok && res[i] < res[i - 1];
    }
    return {ok, fmt("max|div E| %.3e vs floor %.3e; residual %.3f %.3f %.3f %.3f (decreasing)",
                    eta, floor, res[0], res[1], res[2], res[3])};
}

Outcome negative_refraction()
{
    bool ok = true;
    std::string d;
    for (double w : {0.5, 2.0, 3.0}) {
        const NegativeRefraction r =
            negative_refraction_check([](double x) { return cplx(1.0 / (x * x)); }, w);
        ok = ok && r.negative && std::abs(r.value + 1.0 / (w * w)) < 1e-8 / (w * w);
        d += fmt("w=%g value %.10f; ", w, r.value);
    }
    const NegativeRefraction c = negative_refraction_check([](double) { return cplx(1.7); }, 2.0);
    ok = ok && !c.negative;
    return {ok, d + fmt("constant n: negative=%s", c.negative ? "true" : "false")};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / "smallscat_acceptance";
    fs::remove_all(root);
    bool ok = true;
    std::string d;
    for (const char* name : {"single", "multi", "cloud", "effective", "nrcheck", "lemma3"}) {
        const fs::path cfg = fs::path(SMALLSCAT_CONFIGS) / (std::string(name) + ".yaml");
        std::string out[2];
        for (int run = 0; run < 2; ++run) {
            const fs::path dir = root / (std::string(name) + std::to_string(run));
            const std::string cmd = std::string(SMALLSCAT_BIN) + " run --config " + cfg.string() +
                                    " --out " + dir.string() + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                ok = false;
            }
            out[run] = slurp(dir / "report.json");
        }
        const bool same = !out[0].empty() && out[0] == out[1];
        ok = ok && same;
        d += fmt("%s:%s ", name, same ? "identical" : "DIFFERENT");
    }
    return {ok, d};
}

} // namespace

int main()
{
    int failures = 0;
    auto report = [&](int id, const char* title, const std::function<Outcome()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("criterion %2d %s: %s - %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", title,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    };

    report(1, "moment constant", moment_constant);
    report(2, "angular identity", angular_identity);
    report(3, "logarithmic asymptotics", log_asymptotics);
    report(4, "symmetry vanishing", symmetry_vanishing);
    report(5, "divergence-moment law", divergence_law_check);
    report(6, "single-body oracle agreement", single_oracle);
    report(7, "LAS cross-solver agreement", las_cross_solver);
    report(8, "one-body consistency", one_body);

    std::optional<ConvergenceStudy> study;
    std::string study_error;
    try {
        study = convergence();
    } catch (const std::exception& e) {
        study_error = e.what();
    }
    auto with_study = [&](Outcome (*f)(const ConvergenceStudy&)) {
        return [&, f]() -> Outcome {
            if (!study) {
                return {false, "convergence study failed: " + study_error};
            }
            return f(*study);
        };
    };
    report(9, "effective-medium convergence", with_study(effective_convergence));
    report(10, "volume-fraction vanishing", with_study(volume_fraction));
    report(11, "sum-to-integral limit", lemma3);
    report(12, "divergence claim", divergence_claim);
    report(13, "negative-refraction criterion", negative_refraction);
    report(14, "determinism", determinism);

    std::printf("%d of 14 criteria passed\n", 14 - failures);
    return failures == 0 ? 0 : 1;
}
