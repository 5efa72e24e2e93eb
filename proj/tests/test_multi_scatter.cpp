#include "smallscat/multi_scatter.hpp"

#include "smallscat/single_scatter.hpp"

#include <doctest.h>

#include <algorithm>

using namespace smallscat;

namespace {

const PlaneWave kWave = make_plane_wave({1, 0, 0}, {0, 0, 1}, 1.0);

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

std::vector<Particle> sparse_cloud(cplx gamma, double a, double kappa)
{
    return {make_particle({0.0, 0.0, 0.0}, a, gamma, kappa),
            make_particle({0.4, 0.1, 0.0}, a, gamma, kappa),
            make_particle({-0.2, 0.35, 0.25}, a, gamma, kappa),
            make_particle({0.1, -0.3, 0.45}, a, gamma, kappa),
            make_particle({-0.35, -0.2, -0.3}, a, gamma, kappa)};
}

} // namespace

TEST_CASE("one body reduces to the single-body equations")
{
    const Particle p = make_particle({0.1, 0.2, 0.3}, 0.02, cplx(3.0, 0.5), 0.8);
    const SingleMoments sm = solve_single(p, kWave);
    const std::vector<Particle> one{p};

    const LasSystem q = assemble_las(one, kWave, BallRule(), AssemblyMethod::quadrature);
    const PairCoefficients c = q.pair(0, 0);
    CHECK(std::abs(c.a - sm.coeffs.a) < 1e-14 * std::abs(c.a));
    CHECK(norm(c.B - sm.coeffs.A) < 1e-14 * std::abs(c.a));
    CHECK(norm(c.C - sm.coeffs.B) < 1e-14 * std::abs(c.d));
    CHECK(std::abs(c.d - sm.coeffs.b) < 1e-14 * std::abs(c.d));
    const MultiSolution dq = solve_las_direct(q);
    CHECK(norm(dq.V[0] - sm.V) < 1e-10 * norm(sm.V));
    CHECK(std::abs(dq.nu[0] - sm.nu) < 1e-10 * norm(sm.V));

    const LasSystem s = assemble_las(one, kWave);
    const PairCoefficients cs = s.pair(0, 0);
    CHECK(std::abs(cs.a - sm.coeffs.a) < 1e-10 * std::abs(cs.a));
    CHECK(std::abs(cs.d - sm.coeffs.b) < 1e-10 * std::abs(cs.d));
    const MultiSolution ds = solve_las_direct(s);
    CHECK(norm(ds.V[0] - sm.V) < 1e-10 * norm(sm.V));
    CHECK(std::abs(ds.nu[0] - sm.nu) < 1e-10 * norm(sm.V));

    const Vec3 x{1.0, -0.5, 2.0};
    SingleMoments same = sm;
    same.V = ds.V[0];
    same.nu = ds.nu[0];
    CHECK(norm(eval_field_multi(x, ds, one, kWave) - eval_field_single(x, p, same, kWave)) <
          1e-15);
}

TEST_CASE("spherical-mean and quadrature assembly agree")
{
    const auto parts = sparse_cloud(cplx(5.0, 1.0), 0.03, 0.7);
    const LasSystem s = assemble_las(parts, kWave);
    const LasSystem q = assemble_las(parts, kWave, BallRule(), AssemblyMethod::quadrature);
    for (std::size_t j = 0; j < parts.size(); ++j) {
        const double scale_a = std::abs(s.pair(j, j).a), scale_d = std::abs(s.pair(j, j).d);
        for (std::size_t m = 0; m < parts.size(); ++m) {
            const PairCoefficients a = s.pair(j, m), b = q.pair(j, m);
            CHECK(std::abs(a.a - b.a) < 1e-10 * scale_a);
            CHECK(norm(a.B - b.B) < 1e-10 * scale_a);
            CHECK(norm(a.C - b.C) < 1e-10 * scale_d);
            CHECK(std::abs(a.d - b.d) < 1e-10 * scale_d);
        }
        CHECK(norm(s.V0()[j] - q.V0()[j]) < 1e-10 * norm(s.V0()[j]));
        CHECK(std::abs(s.nu0()[j] - q.nu0()[j]) < 1e-10 * norm(s.V0()[j]));
    }
    CHECK(rel_diff(solve_las_direct(s), solve_las_direct(q)) < 1e-9);
}

TEST_CASE("point-kernel limit of the off-diagonal coefficient")
{
    const double a = 0.01, d = 1.0;
    const std::vector<Particle> two{make_particle({0, 0, 0}, a, 2.0, 1.0),
                                    make_particle({d, 0, 0}, a, 2.0, 1.0)};
    const PlaneWave slow = make_plane_wave({1, 0, 0}, {0, 0, 1}, 1e-3);
    const LasSystem s = assemble_las(two, slow);
    const cplx j = potential_moment_analytic(RadialProfile::of(two[0]));
    const cplx point = j / (4.0 * kPi * d);
    CHECK(std::abs(s.pair(0, 1).a - point) < 10.0 * a / d * std::abs(point));
}

TEST_CASE("zero potential gives a zero system")
{
    const auto parts = sparse_cloud(0.0, 0.02, 1.0);
    const LasSystem s = assemble_las(parts, kWave);
    CHECK(contraction_norm(s) == 0.0);
    for (const cplx& v : s.stacked_source()) {
        CHECK(std::abs(v) == 0.0);
    }
    const MultiSolution d = solve_las_direct(s);
    for (const cplx& v : stacked(d)) {
        CHECK(std::abs(v) == 0.0);
    }
    const MultiSolution it = solve_las_iterative(s);
    CHECK(it.iterations == 0);
    CHECK(contraction_norm(assemble_las(std::vector<Particle>{}, kWave)) == 0.0);
}

TEST_CASE("geometry checks")
{
    const std::vector<Particle> overlap{make_particle({0, 0, 0}, 0.1, 1.0, 1.0),
                                        make_particle({0.15, 0, 0}, 0.1, 1.0, 1.0)};
    CHECK_THROWS_AS(assemble_las(overlap, kWave), ValidationError);
    const std::vector<Particle> close{make_particle({0, 0, 0}, 0.1, 1.0, 1.0),
                                      make_particle({0.15, 0, 0}, 0.01, 1.0, 1.0)};
    const LasSystem s = assemble_las(close, kWave);
    CHECK(s.warnings().size() == 1);

    const MultiSolution sol = solve_las_direct(s);
    CHECK_THROWS_AS(eval_field_multi({0.05, 0, 0}, sol, close, kWave), ValidationError);
    std::vector<std::string> w;
    eval_field_multi({0.5, 0, 0}, sol, close, kWave, &w);
    CHECK(w.size() == 1);
}

TEST_CASE("iterative and direct solvers agree")
{
    const auto parts = sparse_cloud(cplx(0.3, 0.05), 0.02, 1.0);
    const LasSystem s = assemble_las(parts, kWave);
    const double q = contraction_norm(s);
    REQUIRE(q < 0.9);
    const MultiSolution d = solve_las_direct(s);
    const MultiSolution it = solve_las_iterative(s, 1e-14);
    CHECK(rel_diff(it, d) < 1e-10);
    CHECK(it.residual < 1e-12);
    CHECK(d.residual < 1e-12);
    for (std::size_t n = 1; n < it.residual_history.size(); ++n) {
        if (it.residual_history[n - 1] > 1e-13) {
            CHECK(it.residual_history[n] <= (q + 0.05) * it.residual_history[n - 1]);
        }
    }
    const MultiSolution g = solve_las_gmres(s, 1e-13);
    CHECK(rel_diff(g, d) < 1e-10);
    CHECK(std::string(to_string(g.solver)) == "gmres");
}

TEST_CASE("iterative solver refuses a non-contraction")
{
    const auto parts = sparse_cloud(30.0, 0.05, 1.0);
    const LasSystem s = assemble_las(parts, kWave);
    CHECK(contraction_norm(s) > 1.0);
    CHECK_THROWS_WITH_AS(solve_las_iterative(s), doctest::Contains("contraction norm"),
                         NumericalError);
    // GMRES still solves it.
    const MultiSolution g = solve_las_gmres(s, 1e-12);
    CHECK(rel_diff(g, solve_las_direct(s)) < 1e-10);
    CHECK(las_residual(s, g) < 1e-11);
}

TEST_CASE("non-convergence reports the residual history")
{
    const auto parts = sparse_cloud(cplx(0.3, 0.05), 0.02, 1.0);
    const LasSystem s = assemble_las(parts, kWave);
    CHECK_THROWS_WITH_AS(solve_las_iterative(s, 1e-30, 2), doctest::Contains("residuals"),
                         NumericalError);
}

TEST_CASE("direct solver size guard")
{
    std::vector<Particle> many;
    const int n = 15;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int l = 0; l < n; ++l) {
                many.push_back(make_particle({i * 0.1, j * 0.1, l * 0.1}, 0.001, 1.0, 1.0));
            }
        }
    }
    const LasSystem s = assemble_las(many, kWave);
    REQUIRE(s.unknowns() > kMaxDirectUnknowns);
    CHECK_THROWS_WITH_AS(solve_las_direct(s), doctest::Contains("gmres"), NumericalError);
}

TEST_CASE("mirror symmetry")
{
    // Mirror x -> -x; the incident wave lies in the mirror plane.
    const PlaneWave w = make_plane_wave({0, 1, 0}, {0, 0, 1}, 1.3);
    const std::vector<Particle> two{make_particle({-0.2, 0.05, 0.1}, 0.03, cplx(4.0, 1.0), 0.9),
                                    make_particle({0.2, 0.05, 0.1}, 0.03, cplx(4.0, 1.0), 0.9)};
    const MultiSolution s = solve_las_direct(assemble_las(two, w));
    const double scale = norm(s.V[0]);
    CHECK(std::abs(s.V[0].x + s.V[1].x) < 1e-10 * scale);
    CHECK(std::abs(s.V[0].y - s.V[1].y) < 1e-10 * scale);
    CHECK(std::abs(s.V[0].z - s.V[1].z) < 1e-10 * scale);
    CHECK(std::abs(s.nu[0] - s.nu[1]) < 1e-10 * (std::abs(s.nu[0]) + scale));
}

TEST_CASE("permutation and linearity")
{
    const PlaneWave w = make_plane_wave({cplx(1, 1), 0, 0}, {0, 0.6, 0.8}, 2.0);
    auto parts = sparse_cloud(cplx(6.0, 0.5), 0.03, 1.0);
    const MultiSolution base = solve_las_direct(assemble_las(parts, w));

    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<Particle> shuffled;
    for (std::size_t i : perm) {
        shuffled.push_back(parts[i]);
    }
    const MultiSolution ps = solve_las_direct(assemble_las(shuffled, w));
    for (std::size_t i = 0; i < perm.size(); ++i) {
        CHECK(norm(ps.V[i] - base.V[perm[i]]) < 1e-12 * norm(base.V[perm[i]]));
        CHECK(std::abs(ps.nu[i] - base.nu[perm[i]]) < 1e-12 * norm(base.V[perm[i]]));
    }

    const cplx c(-0.7, 2.5);
    const MultiSolution sc = solve_las_direct(assemble_las(parts, w.scaled(c)));
    for (std::size_t i = 0; i < parts.size(); ++i) {
        CHECK(norm(sc.V[i] - c * base.V[i]) < 1e-12 * std::abs(c) * norm(base.V[i]));
    }
}

TEST_CASE("separated bodies decouple")
{
    const Particle p = make_particle({0, 0, 0}, 0.02, 5.0, 1.0);
    const SingleMoments alone = solve_single(p, kWave);
    double last = 1e300;
    for (double d : {1.0, 10.0, 100.0}) {
        const std::vector<Particle> two{p, make_particle({d, 0, 0}, 0.02, 5.0, 1.0)};
        const MultiSolution s = solve_las_direct(assemble_las(two, kWave));
        const double gap = norm(s.V[0] - alone.V);
        CHECK(gap < last);
        last = gap;
    }
    CHECK(last < 1e-3 * norm(alone.V));
}

TEST_CASE("two-body oracle")
{
    const std::vector<Particle> two{make_particle({0, 0, 0}, 0.04, 3.0, 0.5),
                                    make_particle({0.3, 0, 0.1}, 0.04, 3.0, 0.5)};
    const OracleSolution o = oracle_solve(two, kWave, {8, 6, 1e-8});
    const MultiSolution s = solve_las_direct(assemble_las(two, kWave));
    for (const Vec3& x : {Vec3{0.1, 0.9, 0.0}, Vec3{-0.8, 0.0, 0.5}}) {
        const CVec3 eo = o.field_at(x);
        CHECK(norm(eval_field_multi(x, s, two, kWave) - eo) < 1e-4 * norm(eo));
    }
}
