#include "smallscat/effective_medium.hpp"

#include "smallscat/green.hpp"
#include "smallscat/krylov.hpp"
#include "smallscat/parallel.hpp"
#include "smallscat/quadrature.hpp"

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <unordered_map>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace smallscat {

void validate(const DistributionLaw& law)
{
    if (!(law.kappa > 0.0 && law.kappa <= 1.0)) {
        throw ValidationError("distribution law: kappa out of (0,1]");
    }
    validate(MediumSpec{law.domain, 1.0, law.kappa, law.density});
}

namespace {

// Bit-level conversion so the stream is identical across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string subcube_name(int i, int j, int l)
{
    std::ostringstream os;
    os << '(' << i << ',' << j << ',' << l << ')';
    return os.str();
}

Box intersect(const Box& u, const Box& v)
{
    return {{std::max(u.lo.x, v.lo.x), std::max(u.lo.y, v.lo.y), std::max(u.lo.z, v.lo.z)},
            {std::min(u.hi.x, v.hi.x), std::min(u.hi.y, v.hi.y), std::min(u.hi.z, v.hi.z)}};
}

bool proper(const Box& b) { return b.lo.x <= b.hi.x && b.lo.y <= b.hi.y && b.lo.z <= b.hi.z; }

// Bucketed centers for the pairwise separation test.
class SeparationGrid {
public:
    SeparationGrid(const Box& box, double sep) : lo_(box.lo), sep_(sep) {}

    bool clear(const Vec3& x) const
    {
        const auto [i, j, l] = cell(x);
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                for (int dl = -1; dl <= 1; ++dl) {
                    const auto it = buckets_.find(key(i + di, j + dj, l + dl));
                    if (it == buckets_.end()) {
                        continue;
                    }
                    for (const Vec3& y : it->second) {
                        const Vec3 d = x - y;
                        if (!(dot(d, d) > sep_ * sep_)) {
                            return false;
                        }
                    }
                }
            }
        }
        return true;
    }

    void insert(const Vec3& x)
    {
        const auto [i, j, l] = cell(x);
        buckets_[key(i, j, l)].push_back(x);
    }

private:
    std::array<long long, 3> cell(const Vec3& x) const
    {
        return {static_cast<long long>(std::floor((x.x - lo_.x) / sep_)),
                static_cast<long long>(std::floor((x.y - lo_.y) / sep_)),
                static_cast<long long>(std::floor((x.z - lo_.z) / sep_))};
    }
    static std::uint64_t key(long long i, long long j, long long l)
    {
        const auto u = [](long long v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1fffff; };
        return (u(i) << 42) | (u(j) << 21) | u(l);
    }

    Vec3 lo_;
    double sep_;
    std::unordered_map<std::uint64_t, std::vector<Vec3>> buckets_;
};

// Face-centred lattice with conventional cell side s, centred in the box:
// integer points of the half-step grid with even coordinate sum.
std::vector<Vec3> fcc_sites(const Box& box, double s)
{
    const Vec3 ext = box.extent();
    int m[3];
    Vec3 origin;
    for (int c = 0; c < 3; ++c) {
        m[c] = static_cast<int>(std::floor(2.0 * ext[c] / s + 1e-12));
        origin[c] = box.lo[c] + 0.5 * (ext[c] - 0.5 * m[c] * s);
    }
    std::vector<Vec3> sites;
    for (int i = 0; i <= m[0]; ++i) {
        for (int j = 0; j <= m[1]; ++j) {
            for (int l = 0; l <= m[2]; ++l) {
                if ((i + j + l) % 2 == 0) {
                    sites.push_back(origin + Vec3{0.5 * i * s, 0.5 * j * s, 0.5 * l * s});
                }
            }
        }
    }
    return sites;
}

} // namespace

GeneratedCloud generate_cloud(const DistributionLaw& law, double a, std::uint64_t seed,
                              const ComplexField& gamma_field, const RadialShape& shape)
{
    validate(law);
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw ValidationError("generate_particles: radius must be positive");
    }
    const double phi = law.phi(a);
    const Box& D = law.domain;
    const BoxRule rule(6);

    GeneratedCloud cloud;
    cloud.expected_total = integrate_box(law.density, D, rule) / phi;
    const int ns = std::max(
        1, static_cast<int>(std::lround(std::cbrt(cloud.expected_total / kParticlesPerSubcube))));
    cloud.subcubes_per_axis = ns;
    const Vec3 L = D.extent() / ns;
    const std::size_t cells = static_cast<std::size_t>(ns) * ns * ns;

    auto cell_box = [&](std::size_t c) {
        const int i = static_cast<int>(c / (static_cast<std::size_t>(ns) * ns));
        const int j = static_cast<int>((c / ns) % ns);
        const int l = static_cast<int>(c % ns);
        const Vec3 lo{D.lo.x + i * L.x, D.lo.y + j * L.y, D.lo.z + l * L.z};
        return Box{lo, lo + L};
    };

    std::vector<double> exact(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        exact[c] = integrate_box(law.density, cell_box(c), rule) / phi;
    }

    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> tie(cells);
    for (auto& t : tie) {
        t = rng();
    }
    std::vector<long long> count(cells);
    std::vector<long long> frac_key(cells);
    long long assigned = 0;
    for (std::size_t c = 0; c < cells; ++c) {
        const double fl = std::floor(exact[c]);
        count[c] = static_cast<long long>(fl);
        frac_key[c] = std::llround((exact[c] - fl) * 1e9);
        assigned += count[c];
    }
    const long long total = std::llround(std::accumulate(exact.begin(), exact.end(), 0.0));
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (frac_key[x] != frac_key[y]) {
            return frac_key[x] > frac_key[y];
        }
        return tie[x] < tie[y];
    });
    for (long long r = 0; r < total - assigned && r < static_cast<long long>(cells); ++r) {
        ++count[order[static_cast<std::size_t>(r)]];
    }

    // Centers stay in their subcube and at least r0 inside the domain, so
    // neighbouring subcubes share the separation test.
    const double r0 = 0.5 * kMinCenterSeparation * a;
    const double sep = kMinCenterSeparation * a;
    const double excluded = 4.0 / 3.0 * kPi * r0 * r0 * r0;
    const Box inset{D.lo + Vec3{r0, r0, r0}, D.hi - Vec3{r0, r0, r0}};
    auto region = [&](std::size_t c) { return intersect(cell_box(c), inset); };
    auto name = [&](std::size_t c) {
        return subcube_name(static_cast<int>(c / (static_cast<std::size_t>(ns) * ns)),
                            static_cast<int>((c / ns) % ns), static_cast<int>(c % ns));
    };

    std::vector<std::vector<Vec3>> placed(cells);
    bool random_ok = true;
    for (std::size_t c = 0; c < cells && random_ok; ++c) {
        const Box r = region(c);
        random_ok = count[c] == 0 || (proper(r) && static_cast<double>(count[c]) * excluded <=
                                                       kPackingFraction * cell_box(c).volume());
    }
    if (random_ok) {
        // Slots are filled in a shuffled order so no subcube sees its
        // neighbours already packed.
        std::vector<std::size_t> slots;
        for (std::size_t c = 0; c < cells; ++c) {
            slots.insert(slots.end(), static_cast<std::size_t>(count[c]), c);
        }
        for (std::size_t i = slots.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
            std::swap(slots[i - 1], slots[std::min(j, i - 1)]);
        }
        SeparationGrid grid(inset, sep);
        constexpr int max_attempts = 2000;
        for (std::size_t c : slots) {
            const Box r = region(c);
            const Vec3 e = r.extent();
            int attempts = 0;
            for (; attempts < max_attempts; ++attempts) {
                const double ux = uniform01(rng), uy = uniform01(rng), uz = uniform01(rng);
                const Vec3 x{r.lo.x + e.x * ux, r.lo.y + e.y * uy, r.lo.z + e.z * uz};
                if (grid.clear(x)) {
                    grid.insert(x);
                    placed[c].push_back(x);
                    break;
                }
            }
            if (attempts == max_attempts) {
                random_ok = false;
                break;
            }
        }
    }

    if (!random_ok) {
        // Random sequential placement stalled: take a random subset of the
        // coarsest face-centred lattice that gives every subcube enough sites,
        // then jitter each site by at most half the slack over `sep`.
        const double s_min = std::sqrt(2.0) * sep;
        const long long total_count = std::accumulate(count.begin(), count.end(), 0LL);
        double s = std::max(
            s_min, std::cbrt(4.0 * std::max(inset.volume(), 0.0) / std::max(total_count, 1LL)));
        auto bucket = [&](double side) {
            std::vector<std::vector<Vec3>> out(cells);
            if (!proper(inset)) {
                return out;
            }
            for (const Vec3& x : fcc_sites(inset, side)) {
                int idx[3];
                for (int c = 0; c < 3; ++c) {
                    idx[c] = std::clamp(static_cast<int>(std::floor((x[c] - D.lo[c]) / L[c])), 0,
                                        ns - 1);
                }
                out[(static_cast<std::size_t>(idx[0]) * ns + idx[1]) * ns + idx[2]].push_back(x);
            }
            return out;
        };
        std::vector<std::vector<Vec3>> sites;
        for (;;) {
            sites = bucket(s);
            bool enough = true;
            for (std::size_t c = 0; c < cells && enough; ++c) {
                enough = static_cast<long long>(sites[c].size()) >= count[c];
            }
            if (enough) {
                break;
            }
            if (s == s_min) {
                for (std::size_t c = 0; c < cells; ++c) {
                    if (static_cast<long long>(sites[c].size()) < count[c]) {
                        std::ostringstream os;
                        os << "density too high: subcube " << name(c) << " needs " << count[c]
                           << " particles of radius " << a << " but holds at most "
                           << sites[c].size();
                        throw ValidationError(os.str());
                    }
                }
            }
            s = std::max(s_min, 0.97 * s);
        }
        const double slack = 0.49 * (s / std::sqrt(2.0) - sep) / std::sqrt(3.0);
        for (std::size_t c = 0; c < cells; ++c) {
            auto& v = sites[c];
            for (std::size_t i = v.size(); i > 1; --i) {
                const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
                std::swap(v[i - 1], v[std::min(j, i - 1)]);
            }
            v.resize(static_cast<std::size_t>(count[c]));
            const Box r = region(c);
            for (Vec3& x : v) {
                for (int k = 0; k < 3; ++k) {
                    const double lo = std::max(-slack, r.lo[k] - x[k]);
                    const double hi = std::min(slack, r.hi[k] - x[k]);
                    x[k] += lo < hi ? lo + (hi - lo) * uniform01(rng) : 0.0;
                }
            }
            placed[c] = std::move(v);
        }
    }

    for (std::size_t c = 0; c < cells; ++c) {
        for (const Vec3& x : placed[c]) {
            const cplx g = gamma_field ? gamma_field(x) : cplx(1.0);
            cloud.particles.push_back(make_particle(x, a, g, law.kappa, shape));
        }
    }
    return cloud;
}

std::vector<Particle> generate_particles(const DistributionLaw& law, double a, std::uint64_t seed,
                                         const ComplexField& gamma_field, const RadialShape& shape)
{
    return generate_cloud(law, a, seed, gamma_field, shape).particles;
}

std::vector<Lemma3Row> lemma3_limit_check(const ScalarField& f, const DistributionLaw& law,
                                          const std::vector<double>& a_values, std::uint64_t seed)
{
    validate(law);
    const double reference = integrate_box(
        [&](const Vec3& x) { return f(x) * law.density(x); }, law.domain, BoxRule(16));
    std::vector<Lemma3Row> rows;
    for (double a : a_values) {
        const auto particles = generate_particles(law, a, seed);
        double s = 0.0;
        for (const auto& p : particles) {
            s += f(p.center);
        }
        Lemma3Row row;
        row.a = a;
        row.count = particles.size();
        row.weighted_sum = law.phi(a) * s;
        row.reference = reference;
        row.error = std::abs(row.weighted_sum - reference);
        rows.push_back(row);
    }
    return rows;
}

ComplexField coefficient_field(const DistributionLaw& law, const ComplexField& gamma_field,
                               const RadialShape& shape)
{
    validate(law);
    const double m = shape.mass_factor();
    const ScalarField N = law.density;
    return [=](const Vec3& x) { return gamma_field(x) * m * N(x); };
}

RefractionModel refraction_coefficient(const ComplexField& C, double k)
{
    if (!(k > 0.0)) {
        throw ValidationError("refraction: wavenumber must be positive");
    }
    return {k, [=](const Vec3& x) { return 1.0 + C(x) / (k * k); },
            [=](const Vec3& x) { return k * k + C(x); }};
}

ComplexField coefficient_from_refraction(const ComplexField& n2, double k)
{
    if (!(k > 0.0)) {
        throw ValidationError("refraction: wavenumber must be positive");
    }
    return [=](const Vec3& x) { return k * k * (n2(x) - 1.0); };
}

CVec3 EffectiveField::at(const Vec3& x) const
{
    const double tiny = 1e-12 * std::min({h.x, h.y, h.z});
    CVec3 sum;
    const double w = cell_volume();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double r = norm(x - nodes[i]);
        if (r < tiny) {
            return E[i];
        }
        if (C[i] != 0.0) {
            sum += (green(x, nodes[i], k) * C[i] * w) * E[i];
        }
    }
    return incident(x) + sum;
}

namespace {

// Block-Toeplitz convolution with the collocated kernel on an n^3 grid,
// embedded in a (2n)^3 circulant.
class GridConvolution {
public:
    GridConvolution(int n, const Vec3& h, double k, int self_order)
        : n_(n), m_(2 * n), size_(static_cast<std::size_t>(m_) * m_ * m_),
          kernel_(size_), work_(size_)
    {
        auto* w = reinterpret_cast<fftw_complex*>(work_.data());
        forward_ = fftw_plan_dft_3d(m_, m_, m_, w, w, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_3d(m_, m_, m_, w, w, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!forward_ || !backward_) {
            throw NumericalError("effective field: FFT planning failed");
        }
        const double vol = h.x * h.y * h.z;
        const Box cell{-0.5 * h, 0.5 * h};
        self_ = integrate_box_around([&](const Vec3& y) { return green(y, Vec3{}, k); }, cell,
                                    Vec3{}, BoxRule(self_order));
        std::fill(work_.begin(), work_.end(), cplx{});
        for (int i = -(n - 1); i <= n - 1; ++i) {
            for (int j = -(n - 1); j <= n - 1; ++j) {
                for (int l = -(n - 1); l <= n - 1; ++l) {
                    const cplx v = (i == 0 && j == 0 && l == 0)
                                       ? self_
                                       : green(Vec3{i * h.x, j * h.y, l * h.z}, Vec3{}, k) * vol;
                    work_[wrap(i, j, l)] = v;
                }
            }
        }
        fftw_execute(forward_);
        kernel_ = work_;
    }
    ~GridConvolution()
    {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }
    GridConvolution(const GridConvolution&) = delete;
    GridConvolution& operator=(const GridConvolution&) = delete;

    cplx self() const { return self_; }

    /// y = K f for f, y of length n^3.
    void apply(std::span<const cplx> f, std::span<cplx> y)
    {
        std::fill(work_.begin(), work_.end(), cplx{});
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                for (int l = 0; l < n_; ++l) {
                    work_[wrap(i, j, l)] = f[(static_cast<std::size_t>(i) * n_ + j) * n_ + l];
                }
            }
        }
        fftw_execute(forward_);
        for (std::size_t s = 0; s < size_; ++s) {
            work_[s] *= kernel_[s];
        }
        fftw_execute(backward_);
        const double scale = 1.0 / static_cast<double>(size_);
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) {
                for (int l = 0; l < n_; ++l) {
                    y[(static_cast<std::size_t>(i) * n_ + j) * n_ + l] =
                        work_[wrap(i, j, l)] * scale;
                }
            }
        }
    }

private:
    std::size_t wrap(int i, int j, int l) const
    {
        auto w = [&](int v) { return static_cast<std::size_t>((v + m_) % m_); };
        return (w(i) * m_ + w(j)) * m_ + w(l);
    }

    int n_, m_;
    std::size_t size_;
    std::vector<cplx> kernel_;
    std::vector<cplx> work_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
    cplx self_{};
};

} // namespace

EffectiveField solve_effective_field(const ComplexField& C, const PlaneWave& incident,
                                     const Box& domain, const EffectiveOptions& options)
{
    const int n = options.cells_per_axis;
    if (n < 2) {
        throw ValidationError("effective field: need at least 2 cells per axis");
    }
    const Vec3 ext = domain.extent();
    if (!(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0)) {
        throw ValidationError("effective field: degenerate domain box");
    }
    const double k = incident.wavenumber();
    EffectiveField out{.k = k,
                       .incident = incident,
                       .domain = domain,
                       .n = n,
                       .h = ext / n,
                       .nodes = {},
                       .C = {},
                       .E = {},
                       .solver = {},
                       .iterations = 0,
                       .residual = 0.0};
    const std::size_t N = static_cast<std::size_t>(n) * n * n;
    out.nodes.resize(N);
    out.C.resize(N);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int l = 0; l < n; ++l) {
                const std::size_t s = out.index(i, j, l);
                out.nodes[s] = domain.lo + Vec3{(i + 0.5) * out.h.x, (j + 0.5) * out.h.y,
                                                (l + 0.5) * out.h.z};
            }
        }
    }
    parallel_for(N, [&](std::size_t s) {
        const cplx c = C(out.nodes[s]);
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            throw ValidationError("effective field: non-finite C at a grid node");
        }
        out.C[s] = c;
    });

    std::array<std::vector<cplx>, 3> rhs;
    for (auto& r : rhs) {
        r.resize(N);
    }
    for (std::size_t s = 0; s < N; ++s) {
        const CVec3 e0 = incident(out.nodes[s]);
        rhs[0][s] = e0.x;
        rhs[1][s] = e0.y;
        rhs[2][s] = e0.z;
    }

    GridConvolution conv(n, out.h, k, options.self_cell_order);
    std::vector<cplx> tmp(N), ktmp(N);
    const LinearOperator op = [&](std::span<const cplx> u, std::span<cplx> y) {
        for (std::size_t s = 0; s < N; ++s) {
            tmp[s] = out.C[s] * u[s];
        }
        conv.apply(tmp, ktmp);
        for (std::size_t s = 0; s < N; ++s) {
            y[s] = u[s] - ktmp[s];
        }
    };

    EffectiveSolver mode = options.solver;
    if (mode == EffectiveSolver::automatic) {
        mode = static_cast<int>(N) <= kDenseEffectiveCells ? EffectiveSolver::dense
                                                          : EffectiveSolver::fft_gmres;
    }
    std::array<std::vector<cplx>, 3> sol;
    if (mode == EffectiveSolver::dense) {
        if (N > static_cast<std::size_t>(8 * kDenseEffectiveCells)) {
            throw NumericalError("effective field: grid too large for the dense solver");
        }
        const Eigen::Index dim = static_cast<Eigen::Index>(N);
        Eigen::MatrixXcd A(dim, dim);
        const double vol = out.cell_volume();
        parallel_for(N, [&](std::size_t r) {
            for (std::size_t c = 0; c < N; ++c) {
                const cplx kern =
                    r == c ? conv.self() : green(out.nodes[r], out.nodes[c], k) * vol;
                A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    (r == c ? 1.0 : 0.0) - kern * out.C[c];
            }
        });
        const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        const double rcond = lu.rcond();
        if (!(rcond > 1.0 / kMaxCondition)) {
            std::ostringstream os;
            os << "effective field: singular discrete system (rcond " << rcond
               << "); refine the mesh or change C";
            throw NumericalError(os.str());
        }
        for (int c = 0; c < 3; ++c) {
            const Eigen::Map<const Eigen::VectorXcd> b(rhs[c].data(), dim);
            const Eigen::VectorXcd x = lu.solve(b);
            sol[c].assign(x.data(), x.data() + N);
        }
        out.solver = "dense";
    } else {
        for (int c = 0; c < 3; ++c) {
            KrylovResult kr =
                gmres(op, rhs[c], options.tolerance, options.max_iterations, options.restart);
            if (!kr.converged) {
                std::ostringstream os;
                os << "effective field: gmres did not converge for component " << c << " after "
                   << kr.iterations << " iterations (relative residual " << kr.residual << ")";
                throw NumericalError(os.str());
            }
            out.iterations += kr.iterations;
            sol[c] = std::move(kr.x);
        }
        out.solver = "fft_gmres";
    }

    double rnorm = 0.0, bnorm = 0.0;
    std::vector<cplx> y(N);
    for (int c = 0; c < 3; ++c) {
        op(sol[c], y);
        for (std::size_t s = 0; s < N; ++s) {
            rnorm += std::norm(rhs[c][s] - y[s]);
            bnorm += std::norm(rhs[c][s]);
        }
    }
    out.residual = bnorm > 0.0 ? std::sqrt(rnorm / bnorm) : std::sqrt(rnorm);
    if (!(out.residual <= std::max(options.tolerance, 1e-12) * 10.0)) {
        std::ostringstream os;
        os << "effective field: residual " << out.residual << " above tolerance "
           << options.tolerance;
        throw NumericalError(os.str());
    }
    out.E.resize(N);
    for (std::size_t s = 0; s < N; ++s) {
        out.E[s] = {sol[0][s], sol[1][s], sol[2][s]};
    }
    return out;
}

DivergenceReport divergence_diagnostic(const EffectiveField& field,
                                       const DivergenceOptions& options)
{
    const int n = field.n;
    const int m = options.margin;
    if (m < 2 || n - 2 * m < 1) {
        throw ValidationError("divergence diagnostic: margin must be >= 2 and leave interior nodes");
    }
    const std::size_t N = field.nodes.size();
    const Vec3 h = field.h;
    const double k2 = field.k * field.k;
    DivergenceReport rep;
    rep.eta.assign(N, cplx{});
    rep.used.assign(N, 0);

    auto comp = [&](int i, int j, int l, int axis) { return field.E[field.index(i, j, l)][axis]; };
    for (int i = 1; i < n - 1; ++i) {
        for (int j = 1; j < n - 1; ++j) {
            for (int l = 1; l < n - 1; ++l) {
                rep.eta[field.index(i, j, l)] =
                    (comp(i + 1, j, l, 0) - comp(i - 1, j, l, 0)) / (2 * h.x) +
                    (comp(i, j + 1, l, 1) - comp(i, j - 1, l, 1)) / (2 * h.y) +
                    (comp(i, j, l + 1, 2) - comp(i, j, l - 1, 2)) / (2 * h.z);
            }
        }
    }
    auto eta = [&](int i, int j, int l) { return rep.eta[field.index(i, j, l)]; };
    auto C = [&](int i, int j, int l) { return field.C[field.index(i, j, l)]; };

    double eta_sq = 0.0, res_sq = 0.0;
    for (int i = m; i < n - m; ++i) {
        for (int j = m; j < n - m; ++j) {
            for (int l = m; l < n - m; ++l) {
                const std::size_t s = field.index(i, j, l);
                if (options.region && !options.region->contains(field.nodes[s])) {
                    continue;
                }
                const cplx e = eta(i, j, l);
                const cplx lap =
                    (eta(i + 1, j, l) - 2.0 * e + eta(i - 1, j, l)) / (h.x * h.x) +
                    (eta(i, j + 1, l) - 2.0 * e + eta(i, j - 1, l)) / (h.y * h.y) +
                    (eta(i, j, l + 1) - 2.0 * e + eta(i, j, l - 1)) / (h.z * h.z);
                const CVec3 gradC{(C(i + 1, j, l) - C(i - 1, j, l)) / (2 * h.x),
                                  (C(i, j + 1, l) - C(i, j - 1, l)) / (2 * h.y),
                                  (C(i, j, l + 1) - C(i, j, l - 1)) / (2 * h.z)};
                const cplx r = lap + (k2 + C(i, j, l)) * e + dot(gradC, field.E[s]);
                rep.used[s] = 1;
                ++rep.points;
                rep.eta_max = std::max(rep.eta_max, std::abs(e));
                rep.residual_max = std::max(rep.residual_max, std::abs(r));
                eta_sq += std::norm(e);
                res_sq += std::norm(r);
            }
        }
    }
    if (rep.points == 0) {
        throw ValidationError("divergence diagnostic: region holds no interior nodes");
    }
    rep.eta_rms = std::sqrt(eta_sq / static_cast<double>(rep.points));
    rep.residual_rms = std::sqrt(res_sq / static_cast<double>(rep.points));
    return rep;
}

bool ConvergenceStudy::decreasing() const
{
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!(rows[i].max_error < rows[i - 1].max_error)) {
            return false;
        }
    }
    return !rows.empty();
}

namespace {

template <class Error>
[[noreturn]] void rethrow_at(double a, const Error& e)
{
    std::ostringstream os;
    os << "convergence study at a = " << a << ": " << e.what();
    throw Error(os.str());
}

} // namespace

ConvergenceStudy convergence_study(const DistributionLaw& law, const ComplexField& gamma_field,
                                   const PlaneWave& incident, const ConvergenceOptions& options)
{
    validate(law);
    if (options.probes.empty()) {
        throw ValidationError("convergence study: no probe points");
    }
    for (double a : options.a_values) {
        if (!(a > 0.0)) {
            throw ValidationError("convergence study: radii must be positive");
        }
    }
    ConvergenceStudy study;
    for (const Vec3& x : options.probes) {
        if (law.domain.contains(x)) {
            study.warnings.push_back("probe inside the domain; the many-body field is not "
                                     "compared with a limit there");
            break;
        }
    }
    const ComplexField C = coefficient_field(law, gamma_field, options.shape);
    const EffectiveField ref = solve_effective_field(C, incident, law.domain, options.reference);
    study.reference_residual = ref.residual;
    study.reference_cells = ref.n;
    for (const Vec3& x : options.probes) {
        study.reference.push_back(ref.at(x));
    }

    for (double a : options.a_values) {
        try {
            const auto particles =
                generate_particles(law, a, options.seed, gamma_field, options.shape);
            ConvergenceRow row;
            row.a = a;
            row.count = particles.size();
            row.volume_fraction = static_cast<double>(particles.size()) * 4.0 / 3.0 * kPi * a *
                                  a * a / law.domain.volume();
            const LasSystem las = assemble_las(particles, incident, BallRule(4, 4, 8));
            for (const auto& w : las.warnings()) {
                study.warnings.push_back(w);
            }
            row.contraction = contraction_norm(las);
            MultiSolution sol;
            switch (options.solver) {
            case LasSolver::direct: sol = solve_las_direct(las); break;
            case LasSolver::iterative: sol = solve_las_iterative(las, options.las_tolerance); break;
            case LasSolver::gmres: sol = solve_las_gmres(las, options.las_tolerance); break;
            }
            row.solver = sol.solver;
            row.iterations = sol.iterations;
            row.residual = sol.residual;
            for (std::size_t p = 0; p < options.probes.size(); ++p) {
                const CVec3 e = eval_field_multi(options.probes[p], sol, particles, incident);
                const double err = norm(e - study.reference[p]) / norm(study.reference[p]);
                row.probe_errors.push_back(err);
                row.max_error = std::max(row.max_error, err);
            }
            study.rows.push_back(std::move(row));
        } catch (const ValidationError& e) {
            rethrow_at(a, e);
        } catch (const NumericalError& e) {
            rethrow_at(a, e);
        }
    }
    return study;
}

NegativeRefraction negative_refraction_check(const FrequencyFunction& n, double omega,
                                             const std::function<double(double)>& dn)
{
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw ValidationError("negative refraction: omega must be positive");
    }
    const cplx n0 = n(omega);
    if (std::abs(n0.imag()) > kRealIndexTolerance) {
        std::ostringstream os;
        os << "negative refraction: Im n = " << n0.imag()
           << " violates the real-index precondition";
        throw ValidationError(os.str());
    }
    NegativeRefraction out;
    out.n = n0.real();
    if (dn) {
        out.dn = dn(omega);
    } else {
        const double s = kOmegaRelativeStep * omega;
        out.dn = (n(omega + s).real() - n(omega - s).real()) / (2.0 * s);
    }
    out.value = out.n + omega * out.dn;
    out.negative = out.value < 0.0;
    return out;
}

FrequencyFunction index_from_coefficient(const FrequencyFunction& C, double c)
{
    if (!(c > 0.0)) {
        throw ValidationError("index_from_coefficient: wave speed must be positive");
    }
    return [=](double omega) {
        const double k = omega / c;
        return std::sqrt(1.0 + C(omega) / (k * k));
    };
}

} // namespace smallscat
