#pragma once

// The small-particle limit: particle clouds under a counting law, the
// sum-to-integral check, the coefficient C(x) = c1(x) N(x), the scalar
// Lippmann-Schwinger equation E = E0 + int_D g C E, and diagnostics built on
// top of it.

#include "smallscat/core_types.hpp"
#include "smallscat/multi_scatter.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace smallscat {

/// Counting law: a subdomain Delta holds about phi(a)^-1 int_Delta N dx
/// centers, phi(a) = a^(3 - kappa).
struct DistributionLaw {
    Box domain;
    ScalarField density;
    double kappa = 1.0;

    double phi(double a) const { return std::pow(a, 3.0 - kappa); }
};

/// Throws ValidationError unless 0 < kappa <= 1, the box is proper and N >= 0.
void validate(const DistributionLaw& law);

/// Target number of particles per stratification subcube.
inline constexpr double kParticlesPerSubcube = 10.0;
/// Minimum center distance in radii between generated particles.
inline constexpr double kMinCenterSeparation = 2.02;
/// Fraction of the random-packing limit a subcube may be asked to hold.
inline constexpr double kPackingFraction = 0.25;

struct GeneratedCloud {
    std::vector<Particle> particles;
    int subcubes_per_axis = 1;
    double expected_total = 0.0; ///< phi(a)^-1 int_D N dx
};

/// Stratified jittered placement. Subcube counts come from the law and are
/// rounded with largest-remainder apportionment so that the total equals
/// round(expected_total); ties are broken by the seeded stream. Each
/// particle gets gamma = gamma_field(center) (1 when no field is given).
/// Placement is random sequential; crowded subcubes fall back to a jittered
/// random subset of a face-centred lattice. Throws ValidationError naming the
/// subcube when even that lattice has too few sites.
GeneratedCloud generate_cloud(const DistributionLaw& law, double a, std::uint64_t seed,
                              const ComplexField& gamma_field = {},
                              const RadialShape& shape = RadialShape::constant_one());

std::vector<Particle> generate_particles(const DistributionLaw& law, double a, std::uint64_t seed,
                                         const ComplexField& gamma_field = {},
                                         const RadialShape& shape = RadialShape::constant_one());

struct Lemma3Row {
    double a = 0.0;
    std::size_t count = 0;
    double weighted_sum = 0.0; ///< phi(a) sum_m f(x_m)
    double reference = 0.0;    ///< int_D f N dx
    double error = 0.0;        ///< |weighted_sum - reference|
};

std::vector<Lemma3Row> lemma3_limit_check(const ScalarField& f, const DistributionLaw& law,
                                          const std::vector<double>& a_values,
                                          std::uint64_t seed = 1);

/// C(x) = gamma(x) m(h) N(x).
ComplexField coefficient_field(const DistributionLaw& law, const ComplexField& gamma_field,
                               const RadialShape& shape = RadialShape::constant_one());

struct RefractionModel {
    double k = 1.0;
    ComplexField n2;     ///< 1 + C / k^2
    ComplexField K2;     ///< k^2 + C
};

RefractionModel refraction_coefficient(const ComplexField& C, double k);
/// Inverse map C = k^2 (n^2 - 1).
ComplexField coefficient_from_refraction(const ComplexField& n2, double k);

enum class EffectiveSolver { automatic, dense, fft_gmres };

/// Grids up to this many cells use the dense solver under `automatic`.
inline constexpr int kDenseEffectiveCells = 1728;

struct EffectiveOptions {
    int cells_per_axis = 16;
    EffectiveSolver solver = EffectiveSolver::automatic;
    double tolerance = 1e-10;
    int self_cell_order = 16;
    int max_iterations = 1000;
    int restart = 200;
};

/// Midpoint collocation on a uniform n x n x n grid of cells over the domain.
/// Node (i, j, l) sits at index (i n + j) n + l.
struct EffectiveField {
    double k = 1.0;
    PlaneWave incident;
    Box domain;
    int n = 0;
    Vec3 h;
    std::vector<Vec3> nodes;
    std::vector<cplx> C;
    std::vector<CVec3> E;
    std::string solver;
    int iterations = 0;
    double residual = 0.0;

    std::size_t index(int i, int j, int l) const
    {
        return (static_cast<std::size_t>(i) * n + j) * n + l;
    }
    double cell_volume() const { return h.x * h.y * h.z; }
    /// E0(x) + sum_i g(x, y_i) C_i E_i |cell|; returns the node value when x
    /// is a node. Intended for points outside the domain.
    CVec3 at(const Vec3& x) const;
};

/// Each Cartesian component solves the same scalar system
/// u - K diag(C) u = E0_component. Throws NumericalError for a singular
/// discrete system or when the solver misses the tolerance.
EffectiveField solve_effective_field(const ComplexField& C, const PlaneWave& incident,
                                     const Box& domain, const EffectiveOptions& options = {});

struct DivergenceOptions {
    std::optional<Box> region; ///< restrict the statistics; whole domain otherwise
    int margin = 3;            ///< cells skipped next to the domain faces
};

struct DivergenceReport {
    std::vector<cplx> eta;   ///< div E by central differences (0 at skipped nodes)
    std::vector<char> used;  ///< nodes entering the statistics
    double eta_max = 0.0;
    double eta_rms = 0.0;
    /// max and rms of lap eta + (k^2 + C) eta + grad C . E
    double residual_max = 0.0;
    double residual_rms = 0.0;
    std::size_t points = 0;
};

DivergenceReport divergence_diagnostic(const EffectiveField& field,
                                       const DivergenceOptions& options = {});

struct ConvergenceOptions {
    std::vector<double> a_values;
    std::vector<Vec3> probes;
    std::uint64_t seed = 1;
    LasSolver solver = LasSolver::gmres;
    double las_tolerance = 1e-10;
    EffectiveOptions reference{32, EffectiveSolver::fft_gmres, 1e-11, 16, 1000, 200};
    RadialShape shape = RadialShape::constant_one();
};

struct ConvergenceRow {
    double a = 0.0;
    std::size_t count = 0;
    double volume_fraction = 0.0; ///< total particle volume / |D|
    double contraction = 0.0;
    LasSolver solver = LasSolver::gmres;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> probe_errors; ///< |E_multi - E_eff| / |E_eff|
    double max_error = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    std::vector<CVec3> reference;   ///< effective field at the probes
    double reference_residual = 0.0;
    int reference_cells = 0;
    std::vector<std::string> warnings;
    bool decreasing() const;
};

ConvergenceStudy convergence_study(const DistributionLaw& law, const ComplexField& gamma_field,
                                   const PlaneWave& incident, const ConvergenceOptions& options);

using FrequencyFunction = std::function<cplx(double)>;

/// Relative step of the central difference in omega.
inline constexpr double kOmegaRelativeStep = 1e-6;
/// |Im n| above this violates the real-index precondition.
inline constexpr double kRealIndexTolerance = 1e-12;

struct NegativeRefraction {
    bool negative = false;
    double value = 0.0; ///< n + omega dn/domega
    double n = 0.0;
    double dn = 0.0;
};

/// Evaluates n + omega n'(omega), using dn when given and a central
/// difference otherwise. Throws ValidationError when Im n(omega) is not zero.
NegativeRefraction negative_refraction_check(const FrequencyFunction& n, double omega,
                                             const std::function<double(double)>& dn = {});

/// n(omega) = sqrt(1 + C(omega) / k^2) with k = omega / c.
FrequencyFunction index_from_coefficient(const FrequencyFunction& C, double c = 1.0);

} // namespace smallscat
