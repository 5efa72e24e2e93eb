#pragma once

// Scattering by one small ball: moment coefficients, closed-form moments,
// far-zone field and magnetic field, plus a brute-force collocation solver
// for the full volume integral equation used as the reference.

#include "smallscat/core_types.hpp"
#include "smallscat/potential.hpp"
#include "smallscat/quadrature.hpp"

#include <span>
#include <string>
#include <vector>

namespace smallscat {

/// Ball integrals of p and q against the kernel centred at the particle:
///   a = int p g(x, x_m),  A = int p grad_x g(x, x_m),
///   B = int q g(x, x_m),  b = int q . grad_x g(x, x_m).
struct SingleCoefficients {
    cplx a{};
    CVec3 A;
    CVec3 B;
    cplx b{};
};

struct SingleMoments {
    CVec3 V;
    cplx nu{};
    SingleCoefficients coeffs;
    CVec3 V0;
    cplx nu0{};
    std::vector<std::string> warnings;
};

/// Denominators below this magnitude are treated as resonant.
inline constexpr double kResonanceThreshold = 1e-12;
/// Formula-validity distance in radii; closer evaluations add a warning.
inline constexpr double kFarZoneRadii = 10.0;

SingleCoefficients single_coefficients(const Particle& particle, double k,
                                       const BallRule& rule = BallRule());

/// Solves the two moment equations for given coefficients and sources.
/// Throws NumericalError when |a| >= 1 or the determinant is below
/// kResonanceThreshold; |b| >= 1 is reported as a warning.
SingleMoments solve_moments(const SingleCoefficients& coeffs, const CVec3& V0, cplx nu0);

/// Coefficients and sources by quadrature, then solve_moments.
SingleMoments solve_single(const Particle& particle, const PlaneWave& incident,
                           const BallRule& rule = BallRule());

/// E0(x) + g(x, x_m) V + grad_x g(x, x_m) nu. Throws ValidationError when
/// |x - x_m| <= 2a; appends a warning below kFarZoneRadii radii.
CVec3 eval_field_single(const Vec3& x, const Particle& particle, const SingleMoments& moments,
                        const PlaneWave& incident, std::vector<std::string>* warnings = nullptr);

/// curl E by central differences with the given step.
CVec3 curl_fd(const VectorField& field, const Vec3& x, double step = 1e-4);

/// H = curl E / (i omega mu).
CVec3 compute_H(const VectorField& field, const Vec3& x, double omega, double mu,
                double step = 1e-4);

struct OracleOptions {
    /// Cells across each particle diameter (at least 8).
    int nodes_across = 12;
    /// Gauss order of the self-cell rule.
    int self_cell_order = 8;
    /// Maximum accepted relative residual of the discrete system.
    double tolerance = 1e-8;
};

/// Collocation solution of E = E0 + int g p E + grad_x int g q.E on cubic
/// cells whose centers fall inside the particles.
struct OracleSolution {
    double k = 1.0;
    PlaneWave incident;
    double cell = 0.0;           ///< edge of the (largest) cell
    std::vector<Vec3> nodes;
    std::vector<double> weights; ///< cell volumes
    std::vector<int> owner;      ///< particle index per node
    std::vector<CVec3> field;    ///< E at the nodes
    std::vector<cplx> p;
    std::vector<CVec3> q;
    double residual = 0.0;

    /// Field at a point outside every cell, from the volume representation.
    CVec3 field_at(const Vec3& x) const;
    /// int p E over particle m.
    CVec3 moment_V(int m) const;
    /// int q . E over particle m.
    cplx moment_nu(int m) const;
};

OracleSolution oracle_solve(std::span<const Particle> particles, const PlaneWave& incident,
                            const OracleOptions& options = {});

} // namespace smallscat
