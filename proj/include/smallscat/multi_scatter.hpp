#pragma once

// Many-body moment system
//   V_j  = V0_j  + sum_m (a_jm V_m + B_jm nu_m)
//   nu_j = nu0_j + sum_m (C_jm . V_m + d_jm nu_m)
// with a_jm = int_{D_j} p g(x, x_m), B_jm = int_{D_j} p grad_x g(x, x_m),
// C_jm = int_{D_j} q g(x, x_m), d_jm = int_{D_j} q . grad_x g(x, x_m).
//
// Unknowns are stacked as (V_1x, V_1y, V_1z, ..., V_Mz, nu_1, ..., nu_M).

#include "smallscat/core_types.hpp"
#include "smallscat/potential.hpp"
#include "smallscat/quadrature.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace smallscat {

/// One-dimensional radial integrals of a ball profile that reduce all ball
/// integrals against the kernel to closed forms. For x_m outside the ball,
/// g(., x_m) solves the Helmholtz equation in the ball, so by the spherical
/// mean-value identities
///   int p g(x, x_m)        = mean_p g(x_j, x_m)
///   int p grad_x g(x, x_m) = mean_p grad_x g(x_j, x_m)
///   int q g(x, x_m)        = mean_q grad_x g(x_j, x_m)
///   int q . grad_x g(x, x_m) = -k^2 mean_q g(x_j, x_m)
/// and for the ball's own center the odd terms vanish, leaving self_a and
/// self_d.
struct CouplingFactors {
    cplx mean_p{}; ///< int_0^a p(r) 4 pi r^2 sin(kr)/(kr) dr
    cplx mean_q{}; ///< int_0^a p'(r)/(k^2+p) 4 pi r^2 j1(kr)/k dr
    cplx self_a{}; ///< int_0^a p(r) exp(ikr) r dr
    cplx self_d{}; ///< int_0^a p'(r)/(k^2+p) exp(ikr)(ikr - 1) dr
};

CouplingFactors coupling_factors(const RadialProfile& profile, double k);

struct PairCoefficients {
    cplx a{};
    CVec3 B;
    CVec3 C;
    cplx d{};
};

enum class AssemblyMethod { spherical_mean, quadrature };

/// Largest dense system (unknowns) the direct solver will factor.
inline constexpr std::size_t kMaxDirectUnknowns = 12000;
/// Condition estimate above which the direct solve is rejected.
inline constexpr double kMaxCondition = 1e12;
/// Pairs closer than this many radii (center distance over a) get a warning.
inline constexpr double kCloseSeparationRadii = 2.0;

class LasSystem {
public:
    std::size_t size() const { return centers_.size(); }
    std::size_t unknowns() const { return 4 * size(); }
    double k() const { return k_; }
    AssemblyMethod method() const { return method_; }
    const std::vector<Vec3>& centers() const { return centers_; }
    const std::vector<CVec3>& V0() const { return V0_; }
    const std::vector<cplx>& nu0() const { return nu0_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    PairCoefficients pair(std::size_t j, std::size_t m) const;

    /// y = K x, where the system reads x = source + K x.
    void apply_coupling(std::span<const cplx> x, std::span<cplx> y) const;
    Eigen::MatrixXcd coupling_matrix() const;
    std::vector<cplx> stacked_source() const;

private:
    friend LasSystem assemble_las(std::span<const Particle>, const PlaneWave&, const BallRule&,
                                  AssemblyMethod);

    double k_ = 1.0;
    AssemblyMethod method_ = AssemblyMethod::spherical_mean;
    std::vector<Vec3> centers_;
    std::vector<CouplingFactors> factors_;
    std::vector<PairCoefficients> table_; ///< row-major M x M, quadrature assembly only
    std::vector<CVec3> V0_;
    std::vector<cplx> nu0_;
    std::vector<std::string> warnings_;
};

/// Throws ValidationError for overlapping balls; records a warning for
/// pairs closer than kCloseSeparationRadii radii (center distance / a).
/// The quadrature method integrates every pair with the ball rule
/// (recentred for j = m) and costs O(M^2) ball integrals.
LasSystem assemble_las(std::span<const Particle> particles, const PlaneWave& incident,
                       const BallRule& rule = BallRule(),
                       AssemblyMethod method = AssemblyMethod::spherical_mean);

/// max_j sum_m (|a_jm| + |d_jm| + |B_jm| + |C_jm|).
double contraction_norm(const LasSystem& system);

enum class LasSolver { direct, iterative, gmres };

struct MultiSolution {
    std::vector<CVec3> V;
    std::vector<cplx> nu;
    LasSolver solver = LasSolver::direct;
    int iterations = 0;
    double residual = 0.0; ///< ||x - source - K x|| / ||source||
    std::vector<double> residual_history;
    double condition_estimate = 0.0;
};

const char* to_string(LasSolver solver);

/// Dense LU of I - K. Throws NumericalError when the system exceeds
/// kMaxDirectUnknowns, the condition estimate exceeds kMaxCondition, or the
/// relative residual is above 1e-10.
MultiSolution solve_las_direct(const LasSystem& system);

/// Fixed-point iteration x <- source + K x. Refuses (NumericalError) when the
/// contraction norm is >= 1 and reports the residual history on
/// non-convergence. Residuals are measured in the max norm.
MultiSolution solve_las_iterative(const LasSystem& system, double tolerance = 1e-12,
                                  int max_iterations = 10000);

/// Matrix-free restarted GMRES on (I - K) x = source.
MultiSolution solve_las_gmres(const LasSystem& system, double tolerance = 1e-12,
                              int max_iterations = 2000, int restart = 80);

/// E0(x) + sum_m [g(x, x_m) V_m + grad_x g(x, x_m) nu_m]. Throws
/// ValidationError when x lies inside a particle; appends a warning when the
/// nearest center is closer than 10 radii.
CVec3 eval_field_multi(const Vec3& x, const MultiSolution& solution,
                       std::span<const Particle> particles, const PlaneWave& incident,
                       std::vector<std::string>* warnings = nullptr);

/// Relative residual of a candidate solution against the system.
double las_residual(const LasSystem& system, const MultiSolution& solution);

} // namespace smallscat
