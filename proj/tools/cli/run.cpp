#include "run.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

namespace smallscat::cli {

namespace {

using Clock = std::chrono::steady_clock;
using T = Table::Type;

class Phases {
public:
    explicit Phases(Json& timing) : timing_(timing) { timing_["phases"] = Json::object(); }

    template <class F>
    auto operator()(const std::string& name, F&& f)
    {
        const auto t0 = Clock::now();
        struct Record {
            Phases& self;
            const std::string& name;
            Clock::time_point t0;
            ~Record()
            {
                self.timing_["phases"][name] =
                    std::chrono::duration<double>(Clock::now() - t0).count();
            }
        } record{*this, name, t0};
        return f();
    }

private:
    Json& timing_;
};

std::vector<Table::Column> vec_columns(const std::string& prefix)
{
    return {{prefix + "_x", T::complex}, {prefix + "_y", T::complex}, {prefix + "_z", T::complex}};
}

std::vector<Table::Column> point_columns()
{
    return {{"x", T::real}, {"y", T::real}, {"z", T::real}};
}

template <class... Parts>
std::vector<Table::Column> concat(Parts&&... parts)
{
    std::vector<Table::Column> out;
    (out.insert(out.end(), parts.begin(), parts.end()), ...);
    return out;
}

void push(std::vector<Table::Cell>& row, const Vec3& x)
{
    row.insert(row.end(), {x.x, x.y, x.z});
}

void push(std::vector<Table::Cell>& row, const CVec3& v)
{
    row.insert(row.end(), {v.x, v.y, v.z});
}

const char* solver_name(LasSolver s) { return smallscat::to_string(s); }

void append(std::vector<std::string>& out, const std::vector<std::string>& in)
{
    out.insert(out.end(), in.begin(), in.end());
}

MultiSolution solve_las(const LasSystem& las, const NumericsSpec& n)
{
    switch (n.solver) {
    case LasSolver::direct: return solve_las_direct(las);
    case LasSolver::iterative: return solve_las_iterative(las, n.tolerance, n.max_iterations);
    case LasSolver::gmres: break;
    }
    return solve_las_gmres(las, n.tolerance, n.max_iterations, n.restart);
}

void run_single(const RunConfig& c, RunReport& r, Phases& phase)
{
    const PlaneWave wave = c.wave.wave();
    const Particle p = c.particles.front().particle();
    const SingleMoments m = phase("moments", [&] { return solve_single(p, wave, c.numerics.rule()); });
    append(r.warnings, m.warnings);
    r.results["coefficients"] = {{"a", cjson(m.coeffs.a)},
                                 {"A", cjson(m.coeffs.A)},
                                 {"B", cjson(m.coeffs.B)},
                                 {"b", cjson(m.coeffs.b)}};
    r.results["sources"] = {{"V0", cjson(m.V0)}, {"nu0", cjson(m.nu0)}};
    r.results["moments"] = {{"V", cjson(m.V)}, {"nu", cjson(m.nu)}};
    r.results["potential_moment"] = cjson(potential_moment_analytic(RadialProfile::of(p)));

    std::optional<OracleSolution> oracle;
    if (c.numerics.oracle) {
        oracle = phase("oracle", [&] {
            return oracle_solve(std::span<const Particle>(&p, 1), wave, c.numerics.oracle_options);
        });
        r.results["oracle"] = {{"nodes", oracle->nodes.size()},
                               {"residual", oracle->residual},
                               {"V", cjson(oracle->moment_V(0))},
                               {"nu", cjson(oracle->moment_nu(0))}};
    }

    auto cols = concat(point_columns(), std::vector<Table::Column>{{"distance_radii", T::real}},
                       vec_columns("E"), vec_columns("E0"));
    if (c.wave.omega) {
        cols = concat(cols, vec_columns("H"));
    }
    if (oracle) {
        cols = concat(cols, vec_columns("E_oracle"),
                      std::vector<Table::Column>{{"relative_error", T::real}});
    }
    Table probes{"probes", cols, {}};
    phase("probes", [&] {
        for (const Vec3& x : c.probes) {
            std::vector<Table::Cell> row;
            push(row, x);
            row.emplace_back(norm(x - p.center) / p.radius);
            const CVec3 e = eval_field_single(x, p, m, wave, &r.warnings);
            push(row, e);
            push(row, wave(x));
            if (c.wave.omega) {
                const VectorField field = [&](const Vec3& y) {
                    return eval_field_single(y, p, m, wave);
                };
                push(row, compute_H(field, x, *c.wave.omega, c.wave.mu, 1e-4 * p.radius));
            }
            if (oracle) {
                const CVec3 eo = oracle->field_at(x);
                push(row, eo);
                row.emplace_back(norm(e - eo) / norm(eo));
            }
            probes.add_row(std::move(row));
        }
        return 0;
    });
    r.tables.push_back(std::move(probes));
}

void run_multi(const RunConfig& c, RunReport& r, Phases& phase)
{
    const PlaneWave wave = c.wave.wave();
    std::vector<Particle> particles;
    if (c.cloud_radius) {
        particles = phase("generate", [&] {
            return generate_particles(c.law.law(), *c.cloud_radius, c.seed,
                                      c.gamma.complex_field());
        });
    } else {
        for (const auto& p : c.particles) {
            particles.push_back(p.particle());
        }
    }
    if (particles.empty()) {
        throw ValidationError("no particles to scatter from");
    }
    const LasSystem las = phase("assemble", [&] {
        return assemble_las(particles, wave, c.numerics.rule(), c.numerics.assembly);
    });
    append(r.warnings, las.warnings());
    const double q = contraction_norm(las);
    const MultiSolution sol = phase("solve", [&] { return solve_las(las, c.numerics); });

    r.results["count"] = particles.size();
    r.results["contraction_norm"] = q;
    r.results["solver"] = solver_name(sol.solver);
    r.results["iterations"] = sol.iterations;
    r.results["residual"] = sol.residual;
    if (sol.solver == LasSolver::direct) {
        r.results["condition_estimate"] = sol.condition_estimate;
    }

    Table moments{"moments",
                  concat(std::vector<Table::Column>{{"index", T::integer}}, point_columns(),
                         std::vector<Table::Column>{{"radius", T::real}, {"gamma", T::complex}},
                         vec_columns("V"), std::vector<Table::Column>{{"nu", T::complex}}),
                  {}};
    for (std::size_t m = 0; m < particles.size(); ++m) {
        std::vector<Table::Cell> row{static_cast<long long>(m)};
        push(row, particles[m].center);
        row.emplace_back(particles[m].radius);
        row.emplace_back(particles[m].gamma);
        push(row, sol.V[m]);
        row.emplace_back(sol.nu[m]);
        moments.add_row(std::move(row));
    }
    r.tables.push_back(std::move(moments));

    Table history{"residual_history", {{"iteration", T::integer}, {"residual", T::real}}, {}};
    for (std::size_t i = 0; i < sol.residual_history.size(); ++i) {
        history.add_row({static_cast<long long>(i), sol.residual_history[i]});
    }
    r.tables.push_back(std::move(history));

    Table probes{"probes", concat(point_columns(), vec_columns("E"), vec_columns("E0")), {}};
    phase("probes", [&] {
        for (const Vec3& x : c.probes) {
            std::vector<Table::Cell> row;
            push(row, x);
            push(row, eval_field_multi(x, sol, particles, wave, &r.warnings));
            push(row, wave(x));
            probes.add_row(std::move(row));
        }
        return 0;
    });
    r.tables.push_back(std::move(probes));
}

void run_effective(const RunConfig& c, RunReport& r, Phases& phase)
{
    const PlaneWave wave = c.wave.wave();
    const DistributionLaw law = c.law.law();
    const ComplexField C = coefficient_field(law, c.gamma.complex_field());
    const RefractionModel model = refraction_coefficient(C, wave.wavenumber());
    const EffectiveField f =
        phase("solve", [&] { return solve_effective_field(C, wave, law.domain, c.numerics.grid); });
    r.results["cells_per_axis"] = f.n;
    r.results["solver"] = f.solver;
    r.results["iterations"] = f.iterations;
    r.results["residual"] = f.residual;
    r.results["cell_edge"] = vjson(f.h);

    Table probes{"probes",
                 concat(point_columns(), vec_columns("E"), vec_columns("E0"),
                        std::vector<Table::Column>{{"C", T::complex}, {"n2", T::complex}}),
                 {}};
    for (const Vec3& x : c.probes) {
        const bool inside = law.domain.contains(x);
        if (inside) {
            std::ostringstream os;
            os << "probe (" << x.x << ", " << x.y << ", " << x.z
               << ") lies inside the domain; the value is the discrete cell sum";
            r.warnings.push_back(os.str());
        }
        std::vector<Table::Cell> row;
        push(row, x);
        push(row, f.at(x));
        push(row, wave(x));
        row.emplace_back(inside ? C(x) : cplx(0.0));
        row.emplace_back(inside ? model.n2(x) : cplx(1.0));
        probes.add_row(std::move(row));
    }
    r.tables.push_back(std::move(probes));

    if (c.divergence) {
        const DivergenceReport d = phase("divergence", [&] {
            return divergence_diagnostic(f, {c.divergence->region, c.divergence->margin});
        });
        r.results["divergence"] = {{"points", d.points},
                                   {"eta_max", d.eta_max},
                                   {"eta_rms", d.eta_rms},
                                   {"residual_max", d.residual_max},
                                   {"residual_rms", d.residual_rms}};
    }

    if (c.output.grid) {
        Table grid{"grid",
                   concat(std::vector<Table::Column>{{"i", T::integer}, {"j", T::integer},
                                                     {"l", T::integer}},
                          point_columns(), std::vector<Table::Column>{{"C", T::complex}},
                          vec_columns("E")),
                   {}};
        for (int i = 0; i < f.n; ++i) {
            for (int j = 0; j < f.n; ++j) {
                for (int l = 0; l < f.n; ++l) {
                    const std::size_t idx = f.index(i, j, l);
                    std::vector<Table::Cell> row{static_cast<long long>(i),
                                                 static_cast<long long>(j),
                                                 static_cast<long long>(l)};
                    push(row, f.nodes[idx]);
                    row.emplace_back(f.C[idx]);
                    push(row, f.E[idx]);
                    grid.add_row(std::move(row));
                }
            }
        }
        r.tables.push_back(std::move(grid));
    }
}

void run_converge(const RunConfig& c, RunReport& r, Phases& phase)
{
    ConvergenceOptions o;
    o.a_values = c.a_values;
    o.probes = c.probes;
    o.seed = c.seed;
    o.solver = c.numerics.solver;
    o.las_tolerance = c.numerics.tolerance;
    o.reference = c.numerics.reference;
    const ConvergenceStudy s = phase("study", [&] {
        return convergence_study(c.law.law(), c.gamma.complex_field(), c.wave.wave(), o);
    });
    append(r.warnings, s.warnings);
    r.results["decreasing"] = s.decreasing();
    r.results["reference_cells"] = s.reference_cells;
    r.results["reference_residual"] = s.reference_residual;

    Table rows{"convergence",
               {{"a", T::real},
                {"count", T::integer},
                {"volume_fraction", T::real},
                {"contraction_norm", T::real},
                {"solver", T::text},
                {"iterations", T::integer},
                {"residual", T::real},
                {"max_error", T::real}},
               {}};
    Table errors{"probe_errors", {{"a", T::real}, {"probe", T::integer}, {"error", T::real}}, {}};
    for (const auto& row : s.rows) {
        rows.add_row({row.a, static_cast<long long>(row.count), row.volume_fraction,
                      row.contraction, std::string(solver_name(row.solver)),
                      static_cast<long long>(row.iterations), row.residual, row.max_error});
        for (std::size_t p = 0; p < row.probe_errors.size(); ++p) {
            errors.add_row({row.a, static_cast<long long>(p), row.probe_errors[p]});
        }
    }
    Table ref{"reference", concat(point_columns(), vec_columns("E")), {}};
    for (std::size_t p = 0; p < c.probes.size(); ++p) {
        std::vector<Table::Cell> cells;
        push(cells, c.probes[p]);
        push(cells, s.reference[p]);
        ref.add_row(std::move(cells));
    }
    r.tables.push_back(std::move(rows));
    r.tables.push_back(std::move(errors));
    r.tables.push_back(std::move(ref));
}

void run_nrcheck(const RunConfig& c, RunReport& r, Phases& phase)
{
    const FrequencyFunction n = c.frequency.index();
    const auto dn = c.frequency.derivative();
    Table t{"nrcheck",
            {{"omega", T::real},
             {"n", T::real},
             {"dn_domega", T::real},
             {"value", T::real},
             {"negative", T::integer}},
            {}};
    bool any = false;
    phase("check", [&] {
        for (double w : c.omegas) {
            const NegativeRefraction nr = negative_refraction_check(n, w, dn);
            any = any || nr.negative;
            t.add_row({w, nr.n, nr.dn, nr.value, static_cast<long long>(nr.negative)});
        }
        return 0;
    });
    r.results["derivative"] = dn ? "analytic" : "central-difference";
    r.results["any_negative"] = any;
    if (c.omegas.size() == 1) {
        r.results["negative"] = any;
        r.results["value"] = std::get<double>(t.rows[0][3]);
    }
    r.tables.push_back(std::move(t));
}

void run_lemma3(const RunConfig& c, RunReport& r, Phases& phase)
{
    const auto rows = phase("sums", [&] {
        return lemma3_limit_check(c.function.real_field(), c.law.law(), c.a_values, c.seed);
    });
    Table t{"lemma3",
            {{"a", T::real},
             {"count", T::integer},
             {"weighted_sum", T::real},
             {"reference", T::real},
             {"error", T::real}},
            {}};
    bool decreasing = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        t.add_row({row.a, static_cast<long long>(row.count), row.weighted_sum, row.reference,
                   row.error});
        decreasing = decreasing && (i == 0 || row.error < rows[i - 1].error);
    }
    r.results["reference"] = rows.empty() ? 0.0 : rows.front().reference;
    r.results["decreasing"] = decreasing;
    r.tables.push_back(std::move(t));
}

std::string timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

} // namespace

RunReport run(const RunConfig& config)
{
    validate(config);
    RunReport r;
    r.config = to_json(config);
    r.timing["timestamp"] = timestamp();
    Phases phase(r.timing);
    const auto t0 = Clock::now();
    const std::string context = std::string("scenario ") + to_string(config.scenario) + ": ";
    try {
        switch (config.scenario) {
        case Scenario::single: run_single(config, r, phase); break;
        case Scenario::multi: run_multi(config, r, phase); break;
        case Scenario::effective: run_effective(config, r, phase); break;
        case Scenario::converge: run_converge(config, r, phase); break;
        case Scenario::nrcheck: run_nrcheck(config, r, phase); break;
        case Scenario::lemma3: run_lemma3(config, r, phase); break;
        }
    } catch (const ValidationError& e) {
        throw ValidationError(context + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(context + e.what());
    }
    r.timing["total_seconds"] = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

} // namespace smallscat::cli
