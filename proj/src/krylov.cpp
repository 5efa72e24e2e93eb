#include "smallscat/krylov.hpp"

#include <cmath>

namespace smallscat {

double norm2(std::span<const cplx> v)
{
    double s = 0.0;
    for (const cplx& c : v) {
        s += std::norm(c);
    }
    return std::sqrt(s);
}

namespace {

cplx inner(std::span<const cplx> a, std::span<const cplx> b)
{
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::conj(a[i]) * b[i];
    }
    return s;
}

} // namespace

KrylovResult gmres(const LinearOperator& apply, std::span<const cplx> b, double tolerance,
                   int max_iterations, int restart)
{
    const std::size_t n = b.size();
    KrylovResult out;
    out.x.assign(n, cplx{});
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        out.converged = true;
        out.history.push_back(0.0);
        return out;
    }
    restart = std::max(1, restart);

    std::vector<cplx> r(b.begin(), b.end());
    std::vector<cplx> w(n);
    double beta = bnorm;
    out.history.push_back(1.0);

    while (out.iterations < max_iterations) {
        const int m = std::min(restart, max_iterations - out.iterations);
        std::vector<std::vector<cplx>> basis;
        basis.reserve(m + 1);
        basis.emplace_back(n);
        for (std::size_t i = 0; i < n; ++i) {
            basis[0][i] = r[i] / beta;
        }
        // Hessenberg columns after rotation, plus rotation coefficients.
        std::vector<std::vector<cplx>> hess(m, std::vector<cplx>(m + 1));
        std::vector<double> cs(m);
        std::vector<cplx> sn(m);
        std::vector<cplx> g(m + 1);
        g[0] = beta;
        int used = 0;
        double rel = beta / bnorm;
        for (int j = 0; j < m; ++j) {
            apply(basis[j], w);
            for (int i = 0; i <= j; ++i) {
                const cplx h = inner(basis[i], w);
                hess[j][i] = h;
                for (std::size_t l = 0; l < n; ++l) {
                    w[l] -= h * basis[i][l];
                }
            }
            const double hnext = norm2(w);
            hess[j][j + 1] = hnext;
            for (int i = 0; i < j; ++i) {
                const cplx t = cs[i] * hess[j][i] + sn[i] * hess[j][i + 1];
                hess[j][i + 1] = -std::conj(sn[i]) * hess[j][i] + cs[i] * hess[j][i + 1];
                hess[j][i] = t;
            }
            const cplx x0 = hess[j][j];
            const double denom = std::sqrt(std::norm(x0) + hnext * hnext);
            if (denom == 0.0) {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else if (std::abs(x0) == 0.0) {
                cs[j] = 0.0;
                sn[j] = 1.0;
            } else {
                cs[j] = std::abs(x0) / denom;
                sn[j] = (x0 / std::abs(x0)) * hnext / denom;
            }
            hess[j][j] = cs[j] * x0 + sn[j] * hnext;
            hess[j][j + 1] = 0.0;
            g[j + 1] = -std::conj(sn[j]) * g[j];
            g[j] = cs[j] * g[j];
            ++used;
            ++out.iterations;
            rel = std::abs(g[j + 1]) / bnorm;
            out.history.push_back(rel);
            if (rel <= tolerance || hnext == 0.0) {
                break;
            }
            basis.emplace_back(n);
            for (std::size_t l = 0; l < n; ++l) {
                basis[j + 1][l] = w[l] / hnext;
            }
        }
        // Back substitution for the least-squares coefficients.
        std::vector<cplx> y(used);
        for (int i = used - 1; i >= 0; --i) {
            cplx s = g[i];
            for (int l = i + 1; l < used; ++l) {
                s -= hess[l][i] * y[l];
            }
            y[i] = s / hess[i][i];
        }
        for (int i = 0; i < used; ++i) {
            for (std::size_t l = 0; l < n; ++l) {
                out.x[l] += y[i] * basis[i][l];
            }
        }
        // True residual for the restart and the final report.
        apply(out.x, w);
        for (std::size_t l = 0; l < n; ++l) {
            r[l] = b[l] - w[l];
        }
        beta = norm2(r);
        out.residual = beta / bnorm;
        if (out.residual <= tolerance) {
            out.converged = true;
            break;
        }
    }
    return out;
}

} // namespace smallscat
