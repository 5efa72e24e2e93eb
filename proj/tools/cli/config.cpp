#include "config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace smallscat::cli {

const char* to_string(Scenario s)
{
    switch (s) {
    case Scenario::single: return "single";
    case Scenario::multi: return "multi";
    case Scenario::effective: return "effective";
    case Scenario::converge: return "converge";
    case Scenario::nrcheck: return "nrcheck";
    case Scenario::lemma3: return "lemma3";
    }
    return "?";
}

const char* to_string(OutputFormat f) { return f == OutputFormat::json ? "json" : "csv"; }

namespace {

const char* to_string(AssemblyMethod m)
{
    return m == AssemblyMethod::spherical_mean ? "spherical-mean" : "quadrature";
}

const char* to_string(EffectiveSolver s)
{
    switch (s) {
    case EffectiveSolver::automatic: return "automatic";
    case EffectiveSolver::dense: return "dense";
    case EffectiveSolver::fft_gmres: return "fft-gmres";
    }
    return "?";
}

const char* solver_name(LasSolver s)
{
    switch (s) {
    case LasSolver::direct: return "direct";
    case LasSolver::iterative: return "iterative";
    case LasSolver::gmres: return "gmres";
    }
    return "?";
}

const char* field_kind(FieldSpec::Kind k)
{
    switch (k) {
    case FieldSpec::Kind::constant: return "constant";
    case FieldSpec::Kind::gaussian_bump: return "gaussian-bump";
    case FieldSpec::Kind::polynomial: return "polynomial";
    }
    return "?";
}

} // namespace

FieldSpec FieldSpec::constant(cplx v)
{
    FieldSpec f;
    f.value = v;
    return f;
}

cplx FieldSpec::operator()(const Vec3& x) const
{
    switch (kind) {
    case Kind::constant:
        return value;
    case Kind::gaussian_bump: {
        const Vec3 d = x - center;
        return base + amplitude * std::exp(-dot(d, d) / (2.0 * width * width));
    }
    case Kind::polynomial: {
        cplx s{};
        for (const Term& t : terms) {
            s += t.coefficient * std::pow(x.x, t.powers[0]) * std::pow(x.y, t.powers[1]) *
                 std::pow(x.z, t.powers[2]);
        }
        return s;
    }
    }
    return {};
}

ComplexField FieldSpec::complex_field() const
{
    return [f = *this](const Vec3& x) { return f(x); };
}

ScalarField FieldSpec::real_field() const
{
    return [f = *this](const Vec3& x) { return f(x).real(); };
}

bool FieldSpec::is_real() const
{
    switch (kind) {
    case Kind::constant:
        return value.imag() == 0.0;
    case Kind::gaussian_bump:
        return base.imag() == 0.0 && amplitude.imag() == 0.0;
    case Kind::polynomial:
        return std::all_of(terms.begin(), terms.end(),
                           [](const Term& t) { return t.coefficient.imag() == 0.0; });
    }
    return false;
}

PlaneWave WaveSpec::wave() const
{
    if (omega && !(*omega > 0.0)) {
        throw ValidationError("wave: omega must be positive");
    }
    if (!(mu > 0.0)) {
        throw ValidationError("wave: mu must be positive");
    }
    return make_plane_wave(amplitude, direction, k);
}

Particle ParticleSpec::particle() const { return make_particle(center, radius, gamma, kappa); }

DistributionLaw LawSpec::law() const
{
    if (!(kappa > 0.0 && kappa < 3.0)) {
        throw ValidationError("kappa out of (0,3)");
    }
    if (!density.is_real()) {
        throw ValidationError("law: density must be real");
    }
    DistributionLaw l{domain, density.real_field(), kappa};
    validate(l);
    return l;
}

FrequencyFunction FrequencySpec::index() const
{
    const auto series = [terms = terms](double w) {
        double s = 0.0;
        for (const Term& t : terms) {
            s += t.coefficient * std::pow(w, t.power);
        }
        return cplx(s);
    };
    if (from_coefficient) {
        return index_from_coefficient(series, c);
    }
    return series;
}

std::function<double(double)> FrequencySpec::derivative() const
{
    if (from_coefficient) {
        return {};
    }
    return [terms = terms](double w) {
        double s = 0.0;
        for (const Term& t : terms) {
            if (t.power != 0.0) {
                s += t.coefficient * t.power * std::pow(w, t.power - 1.0);
            }
        }
        return s;
    };
}

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    std::string where(const YAML::Mark& m) const
    {
        std::ostringstream os;
        os << source_ << ':' << m.line + 1 << ':' << m.column + 1;
        return os.str();
    }

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const
    {
        throw ValidationError(where(n.Mark()) + ": " + msg);
    }

    void keys(const YAML::Node& map, const std::set<std::string>& allowed,
              const std::string& section) const
    {
        if (!map.IsMap()) {
            fail(map, section + ": expected a mapping");
        }
        for (const auto& kv : map) {
            const std::string key = kv.first.as<std::string>();
            if (!allowed.count(key)) {
                fail(kv.first, "unknown key '" + key + "' in " + section);
            }
        }
    }

    double real(const YAML::Node& n, const std::string& what) const
    {
        if (!n.IsScalar()) {
            fail(n, what + ": expected a number");
        }
        double v = 0.0;
        if (!YAML::convert<double>::decode(n, v) || !std::isfinite(v)) {
            fail(n, what + ": expected a finite number, got '" + n.Scalar() + "'");
        }
        return v;
    }

    long long integer(const YAML::Node& n, const std::string& what) const
    {
        if (!n.IsScalar()) {
            fail(n, what + ": expected an integer");
        }
        long long v = 0;
        if (!YAML::convert<long long>::decode(n, v)) {
            fail(n, what + ": expected an integer, got '" + n.Scalar() + "'");
        }
        return v;
    }

    int positive_int(const YAML::Node& n, const std::string& what) const
    {
        const long long v = integer(n, what);
        if (v < 1 || v > 1000000) {
            fail(n, what + ": must be a positive integer");
        }
        return static_cast<int>(v);
    }

    double positive(const YAML::Node& n, const std::string& what) const
    {
        const double v = real(n, what);
        if (!(v > 0.0)) {
            fail(n, what + ": must be positive");
        }
        return v;
    }

    bool boolean(const YAML::Node& n, const std::string& what) const
    {
        bool v = false;
        if (!n.IsScalar() || !YAML::convert<bool>::decode(n, v)) {
            fail(n, what + ": expected true or false");
        }
        return v;
    }

    std::string text(const YAML::Node& n, const std::string& what) const
    {
        if (!n.IsScalar()) {
            fail(n, what + ": expected a string");
        }
        return n.Scalar();
    }

    /// number, [re, im] or {re: , im: }
    cplx complex(const YAML::Node& n, const std::string& what) const
    {
        if (n.IsScalar()) {
            return real(n, what);
        }
        if (n.IsSequence()) {
            if (n.size() != 2) {
                fail(n, what + ": complex number as [re, im]");
            }
            return {real(n[0], what + ".re"), real(n[1], what + ".im")};
        }
        if (n.IsMap()) {
            keys(n, {"re", "im"}, what);
            return {n["re"] ? real(n["re"], what + ".re") : 0.0,
                    n["im"] ? real(n["im"], what + ".im") : 0.0};
        }
        fail(n, what + ": expected a complex number");
    }

    std::vector<double> reals(const YAML::Node& n, const std::string& what) const
    {
        if (n.IsScalar()) {
            return {real(n, what)};
        }
        if (!n.IsSequence()) {
            fail(n, what + ": expected a list of numbers");
        }
        std::vector<double> v;
        for (std::size_t i = 0; i < n.size(); ++i) {
            v.push_back(real(n[i], what + "[" + std::to_string(i) + "]"));
        }
        return v;
    }

    Vec3 vec3(const YAML::Node& n, const std::string& what) const
    {
        if (!n.IsSequence() || n.size() != 3) {
            fail(n, what + ": expected [x, y, z]");
        }
        return {real(n[0], what), real(n[1], what), real(n[2], what)};
    }

    CVec3 cvec3(const YAML::Node& n, const std::string& what) const
    {
        if (!n.IsSequence() || n.size() != 3) {
            fail(n, what + ": expected three components");
        }
        return {complex(n[0], what), complex(n[1], what), complex(n[2], what)};
    }

    Box box(const YAML::Node& n, const std::string& what) const
    {
        keys(n, {"lo", "hi"}, what);
        Box b;
        if (n["lo"]) {
            b.lo = vec3(n["lo"], what + ".lo");
        }
        if (n["hi"]) {
            b.hi = vec3(n["hi"], what + ".hi");
        }
        const Vec3 e = b.extent();
        if (!(e.x > 0.0 && e.y > 0.0 && e.z > 0.0)) {
            fail(n, what + ": degenerate box");
        }
        return b;
    }

    FieldSpec field(const YAML::Node& n, const std::string& what, bool real_only) const
    {
        FieldSpec f;
        if (n.IsScalar() || n.IsSequence()) {
            f = FieldSpec::constant(real_only ? cplx(real(n, what)) : complex(n, what));
        } else if (n.IsMap() && !n["type"]) {
            fail(n, what + ": missing 'type' (constant, gaussian-bump or polynomial)");
        } else if (n.IsMap()) {
            const std::string type = text(n["type"], what + ".type");
            auto num = [&](const YAML::Node& v, const std::string& name) {
                return real_only ? cplx(real(v, what + "." + name)) : complex(v, what + "." + name);
            };
            if (type == "constant") {
                keys(n, {"type", "value"}, what);
                if (!n["value"]) {
                    fail(n, what + ": constant field needs 'value'");
                }
                f = FieldSpec::constant(num(n["value"], "value"));
            } else if (type == "gaussian-bump") {
                keys(n, {"type", "base", "amplitude", "center", "width"}, what);
                f.kind = FieldSpec::Kind::gaussian_bump;
                if (n["base"]) {
                    f.base = num(n["base"], "base");
                }
                if (!n["amplitude"] || !n["width"]) {
                    fail(n, what + ": gaussian-bump needs 'amplitude' and 'width'");
                }
                f.amplitude = num(n["amplitude"], "amplitude");
                f.width = positive(n["width"], what + ".width");
                if (n["center"]) {
                    f.center = vec3(n["center"], what + ".center");
                }
            } else if (type == "polynomial") {
                keys(n, {"type", "terms"}, what);
                f.kind = FieldSpec::Kind::polynomial;
                const YAML::Node terms = n["terms"];
                if (!terms || !terms.IsSequence() || terms.size() == 0) {
                    fail(n, what + ": polynomial needs a non-empty 'terms' list");
                }
                for (const auto& t : terms) {
                    keys(t, {"coefficient", "powers"}, what + ".terms");
                    if (!t["coefficient"] || !t["powers"]) {
                        fail(t, what + ": each term needs 'coefficient' and 'powers'");
                    }
                    FieldSpec::Term term;
                    term.coefficient = num(t["coefficient"], "coefficient");
                    const YAML::Node p = t["powers"];
                    if (!p.IsSequence() || p.size() != 3) {
                        fail(p, what + ": powers as [px, py, pz]");
                    }
                    for (int c = 0; c < 3; ++c) {
                        const long long e = integer(p[c], what + ".powers");
                        if (e < 0 || e > 16) {
                            fail(p[c], what + ": powers must be in 0..16");
                        }
                        term.powers[c] = static_cast<int>(e);
                    }
                    f.terms.push_back(term);
                }
            } else {
                fail(n["type"], what + ": unknown field type '" + type + "'");
            }
        } else {
            fail(n, what + ": expected a number or a field mapping");
        }
        return f;
    }

private:
    std::string source_;
};

const std::set<std::string>& scenario_keys(Scenario s)
{
    static const std::set<std::string> single{"scenario", "seed", "wave", "particle", "numerics",
                                              "probes", "output"};
    static const std::set<std::string> multi{"scenario", "seed", "wave", "particles", "cloud",
                                             "law", "gamma", "numerics", "probes", "output"};
    static const std::set<std::string> effective{"scenario", "seed",  "wave",       "law",
                                                 "gamma",    "numerics", "probes", "divergence",
                                                 "output"};
    static const std::set<std::string> converge{"scenario", "seed",   "wave",     "law",   "gamma",
                                                "numerics", "probes", "a_values", "output"};
    static const std::set<std::string> nrcheck{"scenario", "seed", "frequency", "output"};
    static const std::set<std::string> lemma3{"scenario", "seed",     "law",
                                              "function", "a_values", "output"};
    switch (s) {
    case Scenario::single: return single;
    case Scenario::multi: return multi;
    case Scenario::effective: return effective;
    case Scenario::converge: return converge;
    case Scenario::nrcheck: return nrcheck;
    case Scenario::lemma3: return lemma3;
    }
    return single;
}

ParticleSpec read_particle(const Reader& r, const YAML::Node& n, const std::string& what)
{
    r.keys(n, {"center", "radius", "gamma", "kappa", "profile"}, what);
    ParticleSpec p;
    if (n["center"]) {
        p.center = r.vec3(n["center"], what + ".center");
    }
    if (!n["radius"]) {
        r.fail(n, what + ": missing 'radius'");
    }
    p.radius = r.real(n["radius"], what + ".radius");
    if (n["gamma"]) {
        p.gamma = r.complex(n["gamma"], what + ".gamma");
    }
    if (n["kappa"]) {
        p.kappa = r.real(n["kappa"], what + ".kappa");
    }
    if (n["profile"] && r.text(n["profile"], what + ".profile") != "constant") {
        r.fail(n["profile"], what + ": only the 'constant' radial profile is built in");
    }
    try {
        p.particle();
    } catch (const ValidationError& e) {
        r.fail(n, what + ": " + e.what());
    }
    return p;
}

void read_effective_options(const Reader& r, const YAML::Node& n, const std::string& what,
                            EffectiveOptions& o)
{
    r.keys(n, {"cells", "solver", "tolerance", "self_cell_order", "max_iterations", "restart"},
           what);
    if (n["cells"]) {
        o.cells_per_axis = r.positive_int(n["cells"], what + ".cells");
        if (o.cells_per_axis < 2) {
            r.fail(n["cells"], what + ".cells: at least 2");
        }
    }
    if (n["solver"]) {
        const std::string s = r.text(n["solver"], what + ".solver");
        if (s == "automatic") {
            o.solver = EffectiveSolver::automatic;
        } else if (s == "dense") {
            o.solver = EffectiveSolver::dense;
        } else if (s == "fft-gmres") {
            o.solver = EffectiveSolver::fft_gmres;
        } else {
            r.fail(n["solver"], what + ".solver: expected automatic, dense or fft-gmres");
        }
    }
    if (n["tolerance"]) {
        o.tolerance = r.positive(n["tolerance"], what + ".tolerance");
    }
    if (n["self_cell_order"]) {
        o.self_cell_order = r.positive_int(n["self_cell_order"], what + ".self_cell_order");
    }
    if (n["max_iterations"]) {
        o.max_iterations = r.positive_int(n["max_iterations"], what + ".max_iterations");
    }
    if (n["restart"]) {
        o.restart = r.positive_int(n["restart"], what + ".restart");
    }
}

void read_numerics(const Reader& r, const YAML::Node& n, NumericsSpec& s)
{
    r.keys(n,
           {"ball_rule", "assembly", "solver", "tolerance", "max_iterations", "restart", "grid",
            "reference", "oracle"},
           "numerics");
    if (n["ball_rule"]) {
        const YAML::Node b = n["ball_rule"];
        if (!b.IsSequence() || b.size() != 3) {
            r.fail(b, "numerics.ball_rule: expected [radial, polar, azimuthal] orders");
        }
        for (int i = 0; i < 3; ++i) {
            s.ball_rule[i] = r.positive_int(b[i], "numerics.ball_rule");
        }
    }
    if (n["assembly"]) {
        const std::string a = r.text(n["assembly"], "numerics.assembly");
        if (a == "spherical-mean") {
            s.assembly = AssemblyMethod::spherical_mean;
        } else if (a == "quadrature") {
            s.assembly = AssemblyMethod::quadrature;
        } else {
            r.fail(n["assembly"], "numerics.assembly: expected spherical-mean or quadrature");
        }
    }
    if (n["solver"]) {
        const std::string v = r.text(n["solver"], "numerics.solver");
        if (v == "direct") {
            s.solver = LasSolver::direct;
        } else if (v == "iterative") {
            s.solver = LasSolver::iterative;
        } else if (v == "gmres") {
            s.solver = LasSolver::gmres;
        } else {
            r.fail(n["solver"], "numerics.solver: expected direct, iterative or gmres");
        }
    }
    if (n["tolerance"]) {
        s.tolerance = r.positive(n["tolerance"], "numerics.tolerance");
    }
    if (n["max_iterations"]) {
        s.max_iterations = r.positive_int(n["max_iterations"], "numerics.max_iterations");
    }
    if (n["restart"]) {
        s.restart = r.positive_int(n["restart"], "numerics.restart");
    }
    if (n["grid"]) {
        read_effective_options(r, n["grid"], "numerics.grid", s.grid);
    }
    if (n["reference"]) {
        read_effective_options(r, n["reference"], "numerics.reference", s.reference);
    }
    if (n["oracle"]) {
        const YAML::Node o = n["oracle"];
        if (o.IsScalar()) {
            s.oracle = r.boolean(o, "numerics.oracle");
        } else {
            r.keys(o, {"nodes_across", "self_cell_order", "tolerance"}, "numerics.oracle");
            s.oracle = true;
            if (o["nodes_across"]) {
                s.oracle_options.nodes_across =
                    r.positive_int(o["nodes_across"], "numerics.oracle.nodes_across");
                if (s.oracle_options.nodes_across < 8) {
                    r.fail(o["nodes_across"], "numerics.oracle.nodes_across: at least 8");
                }
            }
            if (o["self_cell_order"]) {
                s.oracle_options.self_cell_order =
                    r.positive_int(o["self_cell_order"], "numerics.oracle.self_cell_order");
            }
            if (o["tolerance"]) {
                s.oracle_options.tolerance = r.positive(o["tolerance"], "numerics.oracle.tolerance");
            }
        }
    }
}

void read_frequency(const Reader& r, const YAML::Node& n, RunConfig& c)
{
    r.keys(n, {"omega", "index", "coefficient"}, "frequency");
    if (!n["omega"]) {
        r.fail(n, "frequency: missing 'omega'");
    }
    c.omegas = r.reals(n["omega"], "frequency.omega");
    if (c.omegas.empty()) {
        r.fail(n["omega"], "frequency.omega: at least one frequency");
    }
    for (double w : c.omegas) {
        if (!(w > 0.0)) {
            r.fail(n["omega"], "frequency.omega: frequencies must be positive");
        }
    }
    if (static_cast<bool>(n["index"]) == static_cast<bool>(n["coefficient"])) {
        r.fail(n, "frequency: give exactly one of 'index' or 'coefficient'");
    }
    const bool coeff = static_cast<bool>(n["coefficient"]);
    const YAML::Node f = coeff ? n["coefficient"] : n["index"];
    const std::string what = coeff ? "frequency.coefficient" : "frequency.index";
    r.keys(f, coeff ? std::set<std::string>{"terms", "c"} : std::set<std::string>{"terms"}, what);
    c.frequency.from_coefficient = coeff;
    if (coeff && f["c"]) {
        c.frequency.c = r.positive(f["c"], what + ".c");
    }
    const YAML::Node terms = f["terms"];
    if (!terms || !terms.IsSequence() || terms.size() == 0) {
        r.fail(f, what + ": needs a non-empty 'terms' list of [coefficient, power]");
    }
    for (const auto& t : terms) {
        if (!t.IsSequence() || t.size() != 2) {
            r.fail(t, what + ": each term is [coefficient, power]");
        }
        c.frequency.terms.push_back({r.real(t[0], what), r.real(t[1], what)});
    }
}

void check_gamma(const FieldSpec& gamma, const Box& domain)
{
    constexpr int n = 8;
    const Vec3 e = domain.extent();
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            for (int l = 0; l <= n; ++l) {
                const Vec3 x = domain.lo + Vec3{e.x * i / n, e.y * j / n, e.z * l / n};
                if (!(gamma(x).imag() >= 0.0)) {
                    throw ValidationError("gamma: Im gamma must be non-negative on the domain");
                }
            }
        }
    }
}

std::vector<double> check_a_values(std::vector<double> v)
{
    if (v.empty()) {
        throw ValidationError("a_values: at least one radius");
    }
    for (double a : v) {
        if (!(a > 0.0)) {
            throw ValidationError("a_values: radii must be positive");
        }
    }
    return v;
}

RunConfig parse_node(const YAML::Node& root, const std::string& source)
{
    const Reader r(source);
    if (!root.IsMap()) {
        r.fail(root, "config: expected a mapping at the top level");
    }
    RunConfig c;
    c.source = source;
    if (!root["scenario"]) {
        r.fail(root, "config: missing 'scenario'");
    }
    const std::string sc = r.text(root["scenario"], "scenario");
    const std::pair<const char*, Scenario> names[] = {
        {"single", Scenario::single},     {"multi", Scenario::multi},
        {"effective", Scenario::effective}, {"converge", Scenario::converge},
        {"nrcheck", Scenario::nrcheck},   {"lemma3", Scenario::lemma3}};
    bool found = false;
    for (const auto& [name, s] : names) {
        if (sc == name) {
            c.scenario = s;
            found = true;
        }
    }
    if (!found) {
        r.fail(root["scenario"], "unknown scenario '" + sc +
                                     "' (single, multi, effective, converge, nrcheck, lemma3)");
    }
    r.keys(root, scenario_keys(c.scenario), std::string("scenario ") + sc);

    if (root["seed"]) {
        const long long s = r.integer(root["seed"], "seed");
        if (s < 0) {
            r.fail(root["seed"], "seed: must be non-negative");
        }
        c.seed = static_cast<std::uint64_t>(s);
    }

    if (const YAML::Node w = root["wave"]) {
        r.keys(w, {"amplitude", "direction", "k", "omega", "mu"}, "wave");
        if (w["amplitude"]) {
            c.wave.amplitude = r.cvec3(w["amplitude"], "wave.amplitude");
        }
        if (w["direction"]) {
            c.wave.direction = r.vec3(w["direction"], "wave.direction");
        }
        if (w["k"]) {
            c.wave.k = r.real(w["k"], "wave.k");
        }
        if (w["omega"]) {
            c.wave.omega = r.real(w["omega"], "wave.omega");
        }
        if (w["mu"]) {
            c.wave.mu = r.real(w["mu"], "wave.mu");
        }
        try {
            c.wave.wave();
        } catch (const ValidationError& e) {
            r.fail(w, e.what());
        }
    }

    if (const YAML::Node p = root["particle"]) {
        c.particles.push_back(read_particle(r, p, "particle"));
    } else if (c.scenario == Scenario::single) {
        r.fail(root, "single: missing 'particle'");
    }
    if (const YAML::Node ps = root["particles"]) {
        if (!ps.IsSequence() || ps.size() == 0) {
            r.fail(ps, "particles: expected a non-empty list");
        }
        for (std::size_t i = 0; i < ps.size(); ++i) {
            c.particles.push_back(read_particle(r, ps[i], "particles[" + std::to_string(i) + "]"));
        }
    }
    if (const YAML::Node cl = root["cloud"]) {
        r.keys(cl, {"radius"}, "cloud");
        if (!cl["radius"]) {
            r.fail(cl, "cloud: missing 'radius'");
        }
        c.cloud_radius = r.positive(cl["radius"], "cloud.radius");
        if (!root["law"]) {
            r.fail(cl, "cloud: generating particles needs a 'law' section");
        }
    }
    if (c.scenario == Scenario::multi && c.particles.empty() == !c.cloud_radius) {
        r.fail(root, "multi: give exactly one of 'particles' or 'cloud'");
    }

    if (const YAML::Node l = root["law"]) {
        r.keys(l, {"domain", "density", "kappa"}, "law");
        if (l["domain"]) {
            c.law.domain = r.box(l["domain"], "law.domain");
        }
        if (l["density"]) {
            c.law.density = r.field(l["density"], "law.density", true);
        }
        if (l["kappa"]) {
            c.law.kappa = r.real(l["kappa"], "law.kappa");
        }
        try {
            c.law.law();
        } catch (const ValidationError& e) {
            r.fail(l, e.what());
        }
    }
    if (const YAML::Node g = root["gamma"]) {
        c.gamma = r.field(g, "gamma", false);
        try {
            check_gamma(c.gamma, c.law.domain);
        } catch (const ValidationError& e) {
            r.fail(g, e.what());
        }
    }
    if (const YAML::Node n = root["numerics"]) {
        read_numerics(r, n, c.numerics);
    }
    if (const YAML::Node p = root["probes"]) {
        if (!p.IsSequence()) {
            r.fail(p, "probes: expected a list of [x, y, z]");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            c.probes.push_back(r.vec3(p[i], "probes[" + std::to_string(i) + "]"));
        }
    }
    if (const YAML::Node d = root["divergence"]) {
        DivergenceSpec ds;
        if (!d.IsNull()) {
            r.keys(d, {"region", "margin"}, "divergence");
            if (d["region"]) {
                ds.region = r.box(d["region"], "divergence.region");
            }
            if (d["margin"]) {
                ds.margin = r.positive_int(d["margin"], "divergence.margin");
                if (ds.margin < 2) {
                    r.fail(d["margin"], "divergence.margin: at least 2");
                }
            }
        }
        c.divergence = ds;
    }
    if (const YAML::Node a = root["a_values"]) {
        try {
            c.a_values = check_a_values(r.reals(a, "a_values"));
        } catch (const ValidationError& e) {
            r.fail(a, e.what());
        }
    } else if (c.scenario == Scenario::converge || c.scenario == Scenario::lemma3) {
        r.fail(root, std::string(to_string(c.scenario)) + ": missing 'a_values'");
    }
    if (const YAML::Node f = root["function"]) {
        c.function = r.field(f, "function", true);
    }
    if (const YAML::Node f = root["frequency"]) {
        read_frequency(r, f, c);
    } else if (c.scenario == Scenario::nrcheck) {
        r.fail(root, "nrcheck: missing 'frequency'");
    }
    if (c.scenario == Scenario::converge && c.probes.empty()) {
        r.fail(root, "converge: needs at least one probe");
    }
    if (const YAML::Node o = root["output"]) {
        r.keys(o, {"dir", "format", "name", "grid"}, "output");
        if (o["dir"]) {
            c.output.dir = r.text(o["dir"], "output.dir");
        }
        if (o["format"]) {
            const std::string f = r.text(o["format"], "output.format");
            if (f == "json") {
                c.output.format = OutputFormat::json;
            } else if (f == "csv") {
                c.output.format = OutputFormat::csv;
            } else {
                r.fail(o["format"], "output.format: expected json or csv");
            }
        }
        if (o["name"]) {
            c.output.name = r.text(o["name"], "output.name");
            if (c.output.name.empty() || c.output.name.find('/') != std::string::npos) {
                r.fail(o["name"], "output.name: a plain file stem");
            }
        }
        if (o["grid"]) {
            c.output.grid = r.boolean(o["grid"], "output.grid");
        }
    }
    validate(c);
    return c;
}

} // namespace

void validate(const RunConfig& c)
{
    c.wave.wave();
    for (const auto& p : c.particles) {
        p.particle();
    }
    if (c.scenario == Scenario::single && c.particles.size() != 1) {
        throw ValidationError("single: exactly one particle");
    }
    switch (c.scenario) {
    case Scenario::multi:
        if (c.cloud_radius) {
            c.law.law();
            check_gamma(c.gamma, c.law.domain);
        }
        break;
    case Scenario::effective:
    case Scenario::converge:
        c.law.law();
        check_gamma(c.gamma, c.law.domain);
        break;
    case Scenario::lemma3:
        c.law.law();
        if (!c.function.is_real()) {
            throw ValidationError("function: must be real");
        }
        break;
    default:
        break;
    }
    if (c.scenario == Scenario::converge || c.scenario == Scenario::lemma3) {
        check_a_values(c.a_values);
    }
}

RunConfig parse_config(const std::string& text, const std::string& source)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1
           << ": parse error: " << e.msg;
        throw ValidationError(os.str());
    }
    return parse_node(root, source);
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError(path + ": cannot open config file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

namespace {

Json cj(cplx z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }
Json vj(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }
Json cvj(const CVec3& v) { return Json::array({cj(v.x), cj(v.y), cj(v.z)}); }
Json boxj(const Box& b) { return Json{{"lo", vj(b.lo)}, {"hi", vj(b.hi)}}; }

Json fieldj(const FieldSpec& f)
{
    Json j{{"type", field_kind(f.kind)}};
    switch (f.kind) {
    case FieldSpec::Kind::constant:
        j["value"] = cj(f.value);
        break;
    case FieldSpec::Kind::gaussian_bump:
        j["base"] = cj(f.base);
        j["amplitude"] = cj(f.amplitude);
        j["center"] = vj(f.center);
        j["width"] = f.width;
        break;
    case FieldSpec::Kind::polynomial:
        j["terms"] = Json::array();
        for (const auto& t : f.terms) {
            j["terms"].push_back({{"coefficient", cj(t.coefficient)}, {"powers", t.powers}});
        }
        break;
    }
    return j;
}

Json effj(const EffectiveOptions& o)
{
    return Json{{"cells", o.cells_per_axis},         {"solver", to_string(o.solver)},
                {"tolerance", o.tolerance},          {"self_cell_order", o.self_cell_order},
                {"max_iterations", o.max_iterations}, {"restart", o.restart}};
}

} // namespace

Json to_json(const RunConfig& c)
{
    Json j;
    j["scenario"] = to_string(c.scenario);
    j["seed"] = c.seed;
    const auto& keys = scenario_keys(c.scenario);
    if (keys.count("wave")) {
        Json w{{"amplitude", cvj(c.wave.amplitude)},
               {"direction", vj(c.wave.direction)},
               {"k", c.wave.k}};
        w["omega"] = c.wave.omega ? Json(*c.wave.omega) : Json();
        w["mu"] = c.wave.mu;
        j["wave"] = w;
    }
    if (!c.particles.empty()) {
        Json ps = Json::array();
        for (const auto& p : c.particles) {
            ps.push_back({{"center", vj(p.center)},
                          {"radius", p.radius},
                          {"gamma", cj(p.gamma)},
                          {"kappa", p.kappa},
                          {"profile", "constant"}});
        }
        j["particles"] = ps;
    }
    if (c.cloud_radius) {
        j["cloud"] = {{"radius", *c.cloud_radius}};
    }
    if (keys.count("law") && (c.scenario != Scenario::multi || c.cloud_radius)) {
        j["law"] = {{"domain", boxj(c.law.domain)},
                    {"density", fieldj(c.law.density)},
                    {"kappa", c.law.kappa}};
    }
    if (keys.count("gamma") && (c.scenario != Scenario::multi || c.cloud_radius)) {
        j["gamma"] = fieldj(c.gamma);
    }
    if (keys.count("numerics")) {
        const auto& n = c.numerics;
        Json nj{{"ball_rule", n.ball_rule},
                {"assembly", to_string(n.assembly)},
                {"solver", solver_name(n.solver)},
                {"tolerance", n.tolerance},
                {"max_iterations", n.max_iterations},
                {"restart", n.restart},
                {"grid", effj(n.grid)},
                {"reference", effj(n.reference)}};
        nj["oracle"] = n.oracle ? Json{{"nodes_across", n.oracle_options.nodes_across},
                                       {"self_cell_order", n.oracle_options.self_cell_order},
                                       {"tolerance", n.oracle_options.tolerance}}
                                : Json(false);
        j["numerics"] = nj;
    }
    if (keys.count("probes")) {
        Json ps = Json::array();
        for (const auto& p : c.probes) {
            ps.push_back(vj(p));
        }
        j["probes"] = ps;
    }
    if (c.divergence) {
        j["divergence"] = {{"region", c.divergence->region ? boxj(*c.divergence->region) : Json()},
                           {"margin", c.divergence->margin}};
    }
    if (keys.count("a_values")) {
        j["a_values"] = c.a_values;
    }
    if (keys.count("function")) {
        j["function"] = fieldj(c.function);
    }
    if (keys.count("frequency")) {
        Json terms = Json::array();
        for (const auto& t : c.frequency.terms) {
            terms.push_back(Json::array({t.coefficient, t.power}));
        }
        Json f{{"omega", c.omegas}};
        if (c.frequency.from_coefficient) {
            f["coefficient"] = {{"terms", terms}, {"c", c.frequency.c}};
        } else {
            f["index"] = {{"terms", terms}};
        }
        j["frequency"] = f;
    }
    // The output directory is left out so reports written to different
    // places compare byte for byte.
    j["output"] = {{"format", to_string(c.output.format)},
                   {"name", c.output.name},
                   {"grid", c.output.grid}};
    return j;
}

} // namespace smallscat::cli
