#include "smallscat/green.hpp"

#include <doctest.h>

using namespace smallscat;

TEST_CASE("kernel values")
{
    CHECK(std::abs(green({1, 0, 0}, {0, 0, 0}, 0.0) - 1.0 / (4.0 * kPi)) < 1e-16);
    const cplx g1 = green({0, 1, 0}, {0, 0, 0}, 1.0);
    CHECK(g1.real() == doctest::Approx(0.042996).epsilon(1e-5));
    CHECK(g1.imag() == doctest::Approx(0.066961).epsilon(1e-5));
    CHECK(std::abs(g1 - std::polar(1.0, 1.0) / (4.0 * kPi)) < 1e-16);
    CHECK(std::abs(green({2, 0, 0}, {0, 0, 0}, 0.0) - 1.0 / (8.0 * kPi)) < 1e-16);
    CHECK_THROWS_AS(green({1, 1, 1}, {1, 1, 1}, 1.0), NumericalError);
    CHECK_THROWS_AS(grad_x_green({1, 1, 1}, {1, 1, 1}, 1.0), NumericalError);
}

TEST_CASE("kernel gradient")
{
    const CVec3 g0 = grad_x_green({1, 0, 0}, {0, 0, 0}, 0.0);
    CHECK(norm(g0 - CVec3{-1.0 / (4.0 * kPi), 0.0, 0.0}) < 1e-16);

    const cplx g = green({1, 0, 0}, {0, 0, 0}, 1.0);
    const CVec3 g1 = grad_x_green({1, 0, 0}, {0, 0, 0}, 1.0);
    CHECK(norm(g1 - CVec3{g * cplx(-1.0, 1.0), 0.0, 0.0}) < 1e-16);

    const Vec3 x{0.3, -0.7, 1.1}, y{-0.2, 0.4, 0.5};
    const double k = 2.5;
    CHECK(norm(grad_x_green(x, y, k) + grad_x_green(y, x, k)) < 1e-15);

    const double h = 1e-5;
    CVec3 fd;
    for (int i = 0; i < 3; ++i) {
        Vec3 d;
        d[i] = h;
        const cplx v = (green(x + d, y, k) - green(x - d, y, k)) / (2 * h);
        (i == 0 ? fd.x : i == 1 ? fd.y : fd.z) = v;
    }
    CHECK(norm(fd - grad_x_green(x, y, k)) < 1e-9);

    const GreenValue both = green_with_gradient(x, y, k);
    CHECK(std::abs(both.g - green(x, y, k)) < 1e-16);
    CHECK(norm(both.grad - grad_x_green(x, y, k)) < 1e-15);
}

TEST_CASE("kernel solves Helmholtz away from the source")
{
    const Vec3 x{0.6, 0.2, -0.4};
    const double k = 1.7;
    double last = 1e300;
    for (double h : {2e-2, 1e-2, 5e-3}) {
        cplx lap{};
        for (int i = 0; i < 3; ++i) {
            Vec3 d;
            d[i] = h;
            lap += (green(x + d, {}, k) - 2.0 * green(x, {}, k) + green(x - d, {}, k)) / (h * h);
        }
        const double res = std::abs(lap + k * k * green(x, {}, k));
        CHECK(res < last);
        last = res;
    }
    CHECK(last < 1e-3);
}

TEST_CASE("radiation condition")
{
    const double k = 1.0;
    const Vec3 beta = Vec3{1, 2, -2} / 3.0;
    double last = 1e300;
    for (double r : {1e2, 1e3, 1e4}) {
        const Vec3 x = r * beta;
        const cplx dr = dot(grad_x_green(x, {0.1, 0.2, 0.0}, k), beta);
        const double defect = r * std::abs(dr - cplx(0.0, k) * green(x, {0.1, 0.2, 0.0}, k));
        CHECK(defect < last);
        last = defect;
    }
}

TEST_CASE("far-field kernel")
{
    const Vec3 x{3.0, 4.0, 0.0};
    CHECK(std::abs(far_field_green(x, {}, 1.0, 0.1) - green(x, {}, 1.0)) < 1e-16);
    CHECK_THROWS_AS(far_field_green({0.1, 0, 0}, {}, 1.0, 0.1), ValidationError);

    // Sweep |x| over a decade; relative error falls like a/|x|.
    const double a = 0.01;
    std::vector<double> errs;
    for (double r : {10.0, 100.0}) {
        double worst = 0.0;
        for (int s = 0; s < 50; ++s) {
            const double th = kPi * s / 49.0;
            const Vec3 y{a * std::sin(th), 0.0, a * std::cos(th)};
            const Vec3 xx{0.0, 0.0, r};
            const double e = std::abs(far_field_green(xx, y, 1.0, a) / green(xx, y, 1.0) - 1.0);
            worst = std::max(worst, e);
        }
        errs.push_back(worst);
    }
    CHECK(errs[0] < 2.0 * 1e-3);
    CHECK(errs[1] < errs[0] / 5.0);

    // Static limit: independent of y.
    CHECK(std::abs(far_field_green({10, 0, 0}, {0.01, 0.0, 0.0}, 0.0, 0.01) -
                   1.0 / (40.0 * kPi)) < 1e-16);
}

TEST_CASE("kernel difference bound")
{
    const double a = 0.01, d = 1.0;
    for (double k : {0.0, 1.0, 10.0}) {
        const double bound = kernel_diff_bound(a, d, k);
        const Vec3 x{d, 0, 0};
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            for (int j = 0; j < 40; ++j) {
                const double th = kPi * (i + 0.5) / 20, ph = 2 * kPi * j / 40;
                const Vec3 y{a * std::sin(th) * std::cos(ph), a * std::sin(th) * std::sin(ph),
                             a * std::cos(th)};
                worst = std::max(worst, std::abs(green(x, y, k) - green(x, {}, k)));
            }
        }
        CHECK(worst <= bound);
    }
    CHECK(kernel_diff_bound(0.01, 1.0, 10.0) == doctest::Approx(kKernelDiffConstant * 0.1));
    CHECK(kernel_diff_bound(1e-6, 1.0, 1.0) < 1e-5);
    CHECK_THROWS_AS(kernel_diff_bound(0.5, 1.0, 1.0), ValidationError);
}

TEST_CASE("stable special functions")
{
    CHECK(sinc(0.0) == 1.0);
    CHECK(sinc(1e-6) == doctest::Approx(1.0 - 1e-12 / 6.0).epsilon(1e-16));
    CHECK(sinc(2.0) == doctest::Approx(std::sin(2.0) / 2.0).epsilon(1e-15));
    CHECK(spherical_j1(0.0) == 0.0);
    CHECK(spherical_j1(1e-6) == doctest::Approx(1e-6 / 3.0).epsilon(1e-12));
    CHECK(spherical_j1(2.0) ==
          doctest::Approx(std::sin(2.0) / 4.0 - std::cos(2.0) / 2.0).epsilon(1e-14));
}
