#pragma once

// Run configuration: a YAML document with a fixed set of sections. Every
// section rejects unknown keys; errors carry file:line:column.

#include "smallscat/effective_medium.hpp"
#include "smallscat/multi_scatter.hpp"
#include "smallscat/single_scatter.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smallscat::cli {

using Json = nlohmann::ordered_json;

enum class Scenario { single, multi, effective, converge, nrcheck, lemma3 };
enum class OutputFormat { json, csv };

const char* to_string(Scenario s);
const char* to_string(OutputFormat f);

/// Built-in position-dependent field:
///   constant       value
///   gaussian-bump  base + amplitude exp(-|x - center|^2 / (2 width^2))
///   polynomial     sum_t coefficient_t x^px y^py z^pz
struct FieldSpec {
    enum class Kind { constant, gaussian_bump, polynomial };
    struct Term {
        cplx coefficient;
        std::array<int, 3> powers{};
    };

    Kind kind = Kind::constant;
    cplx value{1.0};
    cplx base{};
    cplx amplitude{};
    Vec3 center{0.5, 0.5, 0.5};
    double width = 0.1;
    std::vector<Term> terms;

    static FieldSpec constant(cplx v);
    cplx operator()(const Vec3& x) const;
    ComplexField complex_field() const;
    /// Real part; the loader rejects complex coefficients where a real field is required.
    ScalarField real_field() const;
    bool is_real() const;
};

struct WaveSpec {
    CVec3 amplitude{1.0, 0.0, 0.0};
    Vec3 direction{0.0, 0.0, 1.0};
    double k = 1.0;
    std::optional<double> omega; ///< enables H output for the single scenario
    double mu = 1.0;

    PlaneWave wave() const;
};

struct ParticleSpec {
    Vec3 center;
    double radius = 0.05;
    cplx gamma{1.0};
    double kappa = 1.0;

    Particle particle() const;
};

struct LawSpec {
    Box domain;
    FieldSpec density = FieldSpec::constant(1.0);
    double kappa = 1.0;

    DistributionLaw law() const;
};

/// n(omega) = sum_t coefficient_t omega^power_t, directly or through
/// n = sqrt(1 + C(omega) / k^2) when `from_coefficient` (k = omega / c).
struct FrequencySpec {
    struct Term {
        double coefficient = 0.0;
        double power = 0.0;
    };
    bool from_coefficient = false;
    std::vector<Term> terms;
    double c = 1.0;

    FrequencyFunction index() const;
    /// Analytic dn/domega when n is given directly.
    std::function<double(double)> derivative() const;
};

struct NumericsSpec {
    std::array<int, 3> ball_rule{24, 24, 48};
    AssemblyMethod assembly = AssemblyMethod::spherical_mean;
    LasSolver solver = LasSolver::gmres;
    double tolerance = 1e-10;
    int max_iterations = 2000;
    int restart = 80;
    EffectiveOptions grid;
    EffectiveOptions reference{32, EffectiveSolver::fft_gmres, 1e-11, 16, 1000, 200};
    bool oracle = false;
    OracleOptions oracle_options;

    BallRule rule() const { return BallRule(ball_rule[0], ball_rule[1], ball_rule[2]); }
};

struct DivergenceSpec {
    std::optional<Box> region;
    int margin = 3;
};

struct OutputSpec {
    std::string dir = ".";
    OutputFormat format = OutputFormat::json;
    std::string name = "report";
    bool grid = false; ///< effective: also write the full grid table
};

struct RunConfig {
    std::string source;
    Scenario scenario = Scenario::single;
    std::uint64_t seed = 1;
    WaveSpec wave;
    std::vector<ParticleSpec> particles;
    std::optional<double> cloud_radius; ///< multi: generate from law + gamma instead
    LawSpec law;
    FieldSpec gamma = FieldSpec::constant(1.0);
    NumericsSpec numerics;
    std::vector<Vec3> probes;
    std::optional<DivergenceSpec> divergence;
    std::vector<double> a_values;
    FieldSpec function = FieldSpec::constant(1.0);
    FrequencySpec frequency;
    std::vector<double> omegas;
    OutputSpec output;
};

/// Reads and validates a config file. Throws ValidationError with
/// file:line:column for parse errors, unknown keys and violated invariants.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

/// Re-checks the module preconditions of a resolved config (also run by
/// the loaders and after command-line overrides).
void validate(const RunConfig& config);

/// Resolved config with defaults, for the report echo.
Json to_json(const RunConfig& config);

} // namespace smallscat::cli
