#include "smallscat/quadrature.hpp"

#include <doctest.h>

using namespace smallscat;

TEST_CASE("gauss legendre")
{
    for (int n : {1, 2, 5, 16, 40}) {
        const GaussRule g = gauss_legendre(n);
        double s = 0.0;
        for (double w : g.weights) {
            s += w;
        }
        CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
        // exact for degree 2n - 1
        const int deg = 2 * n - 1;
        const double got = integrate_interval(
            [&](double x) { return std::pow(x + 1.0, deg); }, -1.0, 1.0, g);
        CHECK(got == doctest::Approx(std::pow(2.0, deg + 1) / (deg + 1)).epsilon(1e-12));
    }
    const GaussRule g = gauss_legendre(3, 0.0, 2.0);
    CHECK(g.nodes.front() > 0.0);
    CHECK(g.nodes.back() < 2.0);
    CHECK_THROWS_AS(gauss_legendre(0), ValidationError);
}

TEST_CASE("graded rule resolves a boundary layer")
{
    const double eps = 1e-8;
    const double got = integrate_graded([&](double t) { return 1.0 / (1.0 - t + eps); }, 0.0, 1.0);
    CHECK(got == doctest::Approx(std::log((1.0 + eps) / eps)).epsilon(1e-10));
}

TEST_CASE("ball rule basics")
{
    const BallRule rule;
    CHECK(integrate_ball([](const Vec3&) { return 1.0; }, Vec3{}, 1.0, rule) ==
          doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-13));

    double w = 0.0;
    double xx[3] = {0, 0, 0};
    for (std::size_t d = 0; d < rule.directions().size(); ++d) {
        w += rule.direction_weights()[d];
        for (int i = 0; i < 3; ++i) {
            xx[i] += rule.direction_weights()[d] * rule.directions()[d][i] *
                     rule.directions()[d][i];
        }
    }
    CHECK(w == doctest::Approx(4.0 * kPi).epsilon(1e-13));
    for (double v : xx) {
        CHECK(std::abs(v - 4.0 * kPi / 3.0) < 1e-12);
    }

    // |y|^2 over B((1,2,3), 2): 4 pi a^5 / 5 + |c|^2 (4 pi / 3) a^3
    const Vec3 c{1, 2, 3};
    const double got = integrate_ball([](const Vec3& y) { return dot(y, y); }, c, 2.0, rule);
    const double exact = 4.0 * kPi * 32.0 / 5.0 + 14.0 * 4.0 * kPi / 3.0 * 8.0;
    CHECK(got == doctest::Approx(exact).epsilon(1e-13));

    const double inv = integrate_ball([](const Vec3& y) { return 1.0 / (4.0 * kPi * norm(y)); },
                                      Vec3{}, 1.0, rule);
    CHECK(inv == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("odd integrands vanish")
{
    const Vec3 c{0.3, -0.2, 0.1};
    const cplx v = integrate_ball(
        [&](const Vec3& y) {
            const Vec3 d = y - c;
            return cplx(d.x * d.y * d.y, d.z) * std::exp(-dot(d, d));
        },
        c, 0.5, BallRule());
    CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("error estimate bounds the effect of refinement")
{
    auto f = [](const Vec3& y) { return std::exp(cplx(0.0, 3.0 * y.x + y.z)); };
    const BallRule rule(8, 8, 16);
    const auto est = integrate_ball_estimated(f, Vec3{}, 1.0, rule);
    const cplx finer = integrate_ball(f, Vec3{}, 1.0, BallRule(16, 16, 32));
    CHECK(est.error > 0.0);
    CHECK(std::abs(finer - est.value) < est.error);
}

TEST_CASE("singular ball integrals")
{
    const BallRule rule;
    auto one = [](const Vec3&) { return 1.0; };
    const cplx a1 = integrate_ball_singular(one, Vec3{}, Vec3{}, 1.0, 0.0, rule);
    CHECK(std::abs(a1 - 0.5) < 1e-12);
    const cplx a2 = integrate_ball_singular(one, Vec3{}, Vec3{}, 2.0, 0.0, rule);
    CHECK(std::abs(a2 - 2.0) < 1e-12);
    const cplx z = integrate_ball_singular([](const Vec3&) { return 0.0; }, Vec3{}, Vec3{}, 1.0,
                                           1.0, rule);
    CHECK(std::abs(z) == 0.0);

    // Newtonian potential of the uniform unit ball: (3a^2 - |s|^2) / 6 inside,
    // a^3 / (3 |s|) outside.
    const cplx in = integrate_ball_singular(one, Vec3{0.5, 0, 0}, Vec3{}, 1.0, 0.0, rule);
    CHECK(std::abs(in - (3.0 - 0.25) / 6.0) < 1e-10);
    const cplx out = integrate_ball_singular(one, Vec3{3.0, 0, 0}, Vec3{}, 1.0, 0.0, rule);
    CHECK(std::abs(out - 1.0 / 9.0) < 1e-12);

    // With k > 0 at the center: int_0^a exp(ikr) r dr.
    const double k = 2.0;
    const cplx ik(0.0, k);
    const cplx exact = (std::exp(ik) * (1.0 - ik) - 1.0) / (k * k);
    const cplx got = integrate_ball_singular(one, Vec3{}, Vec3{}, 1.0, k, rule);
    CHECK(std::abs(got - exact) < 1e-12);
}

TEST_CASE("recentring guards and non-finite samples")
{
    CHECK_THROWS_AS(integrate_ball_around([](const Vec3&) { return 1.0; }, Vec3{2, 0, 0}, Vec3{},
                                          1.0, BallRule()),
                    ValidationError);
    CHECK_THROWS_AS(integrate_ball([](const Vec3& y) { return y.x > 0.5 ? NAN : 1.0; }, Vec3{},
                                   1.0, BallRule()),
                    NumericalError);
    CHECK_THROWS_WITH_AS(
        integrate_box([](const Vec3&) { return INFINITY; }, Box{}, BoxRule(2)),
        doctest::Contains("non-finite"), NumericalError);
}

TEST_CASE("box integrals")
{
    const BoxRule rule;
    CHECK(integrate_box([](const Vec3&) { return 1.0; }, Box{}, rule) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(integrate_box([](const Vec3& y) { return y.x; }, Box{}, rule) ==
          doctest::Approx(0.5).epsilon(1e-14));
    const Box cube{{0, 0, 0}, {kPi, kPi, kPi}};
    const cplx e = integrate_box([](const Vec3& y) { return std::exp(cplx(0.0, y.x)); }, cube, rule);
    CHECK(std::abs(e - cplx(0.0, 2.0 * kPi * kPi)) < 1e-12);
}

TEST_CASE("pyramid rule for the singular self cell")
{
    // int over [-1/2, 1/2]^3 of 1/(4 pi |y|) = 3 (ln(2 + sqrt 3) - pi/6) / (4 pi)
    const Box cell{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    const double exact = 3.0 * (std::log(2.0 + std::sqrt(3.0)) - kPi / 6.0) / (4.0 * kPi);
    const double got = integrate_box_around(
        [](const Vec3& y) { return 1.0 / (4.0 * kPi * norm(y)); }, cell, Vec3{}, BoxRule(16));
    CHECK(got == doctest::Approx(exact).epsilon(1e-12));
    // Off-center apex: the volume is still exact.
    const double vol = integrate_box_around([](const Vec3&) { return 1.0; }, cell,
                                            Vec3{0.1, -0.3, 0.2}, BoxRule(4));
    CHECK(vol == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(integrate_box_around([](const Vec3&) { return 1.0; }, cell, Vec3{1, 0, 0},
                                         BoxRule(4)),
                    ValidationError);
}
