#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

namespace smallscat {

using cplx = std::complex<double>;

/// Rejected input: a physical or numerical precondition does not hold.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation could not produce a trustworthy result (singular system,
/// non-convergence, NaN in an integrand, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Complex 3-vector. `dot` is the bilinear product (no conjugation), which
/// is what the moment equations use; `norm` is the Hermitian length.
struct CVec3 {
    cplx x{};
    cplx y{};
    cplx z{};

    CVec3() = default;
    CVec3(cplx x_, cplx y_, cplx z_) : x(x_), y(y_), z(z_) {}
    explicit CVec3(const Vec3& v) : x(v.x), y(v.y), z(v.z) {}

    cplx operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    cplx& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    CVec3& operator+=(const CVec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    CVec3& operator-=(const CVec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    CVec3& operator*=(cplx s) { x *= s; y *= s; z *= s; return *this; }

    friend CVec3 operator+(CVec3 a, const CVec3& b) { return a += b; }
    friend CVec3 operator-(CVec3 a, const CVec3& b) { return a -= b; }
    friend CVec3 operator-(const CVec3& a) { return {-a.x, -a.y, -a.z}; }
    friend CVec3 operator*(CVec3 a, cplx s) { return a *= s; }
    friend CVec3 operator*(cplx s, CVec3 a) { return a *= s; }
    friend CVec3 operator*(CVec3 a, double s) { return a *= cplx(s); }
    friend CVec3 operator*(double s, CVec3 a) { return a *= cplx(s); }
    friend CVec3 operator/(CVec3 a, cplx s) { return a *= (1.0 / s); }
    friend bool operator==(const CVec3&, const CVec3&) = default;

    bool finite() const
    {
        return std::isfinite(x.real()) && std::isfinite(x.imag()) && std::isfinite(y.real()) &&
               std::isfinite(y.imag()) && std::isfinite(z.real()) && std::isfinite(z.imag());
    }
};

inline cplx dot(const CVec3& a, const CVec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline cplx dot(const CVec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline cplx dot(const Vec3& a, const CVec3& b) { return dot(b, a); }
inline double norm(const CVec3& a)
{
    return std::sqrt(std::norm(a.x) + std::norm(a.y) + std::norm(a.z));
}
inline CVec3 operator*(cplx s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline CVec3 cross(const Vec3& a, const CVec3& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Absolute tolerance for the unit-direction and transversality checks.
inline constexpr double kPlaneWaveTolerance = 1e-12;

/// Incident field E0(x) = amplitude * exp(i k direction . x).
class PlaneWave {
public:
    /// Throws ValidationError when k <= 0, |direction| != 1 or amplitude . direction != 0.
    static PlaneWave make(const CVec3& amplitude, const Vec3& direction, double k);

    CVec3 operator()(const Vec3& x) const;
    /// Analytic curl of the plane wave at x: i k direction x E0(x).
    CVec3 curl(const Vec3& x) const;

    const CVec3& amplitude() const { return amplitude_; }
    const Vec3& direction() const { return direction_; }
    double wavenumber() const { return k_; }

    /// Same direction and wavenumber with the amplitude multiplied by s.
    PlaneWave scaled(cplx s) const;

private:
    PlaneWave(const CVec3& e, const Vec3& d, double k) : amplitude_(e), direction_(d), k_(k) {}

    CVec3 amplitude_;
    Vec3 direction_;
    double k_ = 1.0;
};

inline PlaneWave make_plane_wave(const CVec3& amplitude, const Vec3& direction, double k)
{
    return PlaneWave::make(amplitude, direction, k);
}

/// Radial shape factor h(t) on [0, 1] of the scatterer potential.
/// The built-in member is h == 1; custom profiles carry a closure and an
/// optional analytic derivative (central differences otherwise).
class RadialShape {
public:
    enum class Kind { constant_one, custom };

    RadialShape() = default;
    static RadialShape constant_one() { return {}; }
    static RadialShape custom(std::function<double(double)> h,
                              std::function<double(double)> dh = {});

    Kind kind() const { return kind_; }
    double value(double t) const;
    double derivative(double t) const;
    /// m(h) = int_0^1 (1-t)^2 h(t) t^2 dt; 1/30 for h == 1.
    double mass_factor() const { return mass_factor_; }

private:
    Kind kind_ = Kind::constant_one;
    std::function<double(double)> h_;
    std::function<double(double)> dh_;
    double mass_factor_ = 1.0 / 30.0;
};

/// Small ball scatterer with the (1-t)^2 h(t) potential profile.
struct Particle {
    Vec3 center;
    double radius = 0.0;
    cplx gamma{};
    double kappa = 1.0;
    RadialShape shape;
};

/// Throws ValidationError unless a > 0, Im gamma >= 0 and 0 < kappa < 3.
Particle make_particle(const Vec3& center, double radius, cplx gamma, double kappa,
                       RadialShape shape = RadialShape::constant_one());
void validate(const Particle& particle);

struct Box {
    Vec3 lo;
    Vec3 hi{1.0, 1.0, 1.0};

    double volume() const { return (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z); }
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return 0.5 * (lo + hi); }
    bool contains(const Vec3& p) const
    {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
               p.z <= hi.z;
    }
};

using ScalarField = std::function<double(const Vec3&)>;
using ComplexField = std::function<cplx(const Vec3&)>;
using VectorField = std::function<CVec3(const Vec3&)>;

/// Host medium: domain, background wavenumber, particle density law.
struct MediumSpec {
    Box domain;
    double k = 1.0;
    double kappa = 1.0;
    ScalarField density;
};

/// Throws ValidationError when k <= 0, the box is degenerate or the density
/// is negative at any of a lattice of sample points.
void validate(const MediumSpec& medium);

inline constexpr double kPi = 3.14159265358979323846;

} // namespace smallscat
