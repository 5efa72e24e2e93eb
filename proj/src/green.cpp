#include "smallscat/green.hpp"

#include <sstream>

namespace smallscat {

namespace {

double checked_distance(const Vec3& x, const Vec3& y)
{
    const double r = norm(x - y);
    if (!(r >= kCoincidentDistance)) {
        std::ostringstream os;
        os << "green: coincident points (|x-y| = " << r << ")";
        throw NumericalError(os.str());
    }
    return r;
}

} // namespace

cplx green(const Vec3& x, const Vec3& y, double k)
{
    const double r = checked_distance(x, y);
    return std::exp(cplx(0.0, k * r)) / (4.0 * kPi * r);
}

CVec3 grad_x_green(const Vec3& x, const Vec3& y, double k)
{
    const double r = checked_distance(x, y);
    const cplx g = std::exp(cplx(0.0, k * r)) / (4.0 * kPi * r);
    const cplx radial = g * (cplx(0.0, k) - 1.0 / r) / r;
    return radial * (x - y);
}

GreenValue green_with_gradient(const Vec3& x, const Vec3& y, double k)
{
    const double r = checked_distance(x, y);
    const cplx g = std::polar(1.0 / (4.0 * kPi * r), k * r);
    return {g, (g * (cplx(0.0, k) - 1.0 / r) / r) * (x - y)};
}

cplx far_field_green(const Vec3& x, const Vec3& y, double k, double a)
{
    const double r = norm(x);
    if (!(r > 2.0 * a)) {
        throw ValidationError("far_field_green: requires |x| > 2a");
    }
    const Vec3 beta = x / r;
    return std::exp(cplx(0.0, k * r)) / (4.0 * kPi * r) * std::exp(cplx(0.0, -k * dot(beta, y)));
}

double kernel_diff_bound(double a, double d, double k)
{
    if (!(d > 2.0 * a)) {
        throw ValidationError("kernel_diff_bound: requires d > 2a");
    }
    return kKernelDiffConstant * a * std::max(k / d, 1.0 / (d * d));
}

double sinc(double x)
{
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

double spherical_j1(double x)
{
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        return x / 3.0 * (1.0 - x2 / 10.0 + x2 * x2 / 280.0);
    }
    return std::sin(x) / (x * x) - std::cos(x) / x;
}

} // namespace smallscat
