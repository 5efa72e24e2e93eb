#pragma once

// Scalar Helmholtz kernel g(x, y) = exp(ik|x-y|) / (4 pi |x-y|) and the
// identities built on it.

#include "smallscat/core_types.hpp"

namespace smallscat {

/// |x - y| below this is treated as coincident.
inline constexpr double kCoincidentDistance = 1e-14;

/// Calibrated constant in kernel_diff_bound.
inline constexpr double kKernelDiffConstant = 2.0;

/// Throws NumericalError when |x - y| < kCoincidentDistance.
cplx green(const Vec3& x, const Vec3& y, double k);

/// grad_x g(x, y) = g (ik - 1/r) (x - y)/r. Antisymmetric: grad_x g = -grad_y g.
CVec3 grad_x_green(const Vec3& x, const Vec3& y, double k);

struct GreenValue {
    cplx g;
    CVec3 grad; ///< grad_x g
};

/// g and grad_x g sharing one exponential.
GreenValue green_with_gradient(const Vec3& x, const Vec3& y, double k);

/// Far-zone form exp(ik|x|)/(4 pi |x|) exp(-ik beta.y), beta = x/|x|, for
/// |x| >> a >= |y|. Throws ValidationError when |x| <= 2a.
cplx far_field_green(const Vec3& x, const Vec3& y, double k, double a);

/// Upper bound c a max(k/d, 1/d^2) on |g(x,y) - g(x,x_m)| for |y - x_m| <= a,
/// |x - x_m| = d. Throws ValidationError when d <= 2a.
double kernel_diff_bound(double a, double d, double k);

/// sin(x)/x, stable near 0.
double sinc(double x);
/// Spherical Bessel j1(x) = sin(x)/x^2 - cos(x)/x, stable near 0.
double spherical_j1(double x);

} // namespace smallscat
