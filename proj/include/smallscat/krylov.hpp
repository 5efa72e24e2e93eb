#pragma once

#include "smallscat/core_types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace smallscat {

/// y = A x for a square complex operator.
using LinearOperator = std::function<void(std::span<const cplx>, std::span<cplx>)>;

struct KrylovResult {
    std::vector<cplx> x;
    int iterations = 0;
    double residual = 0.0; ///< ||b - A x|| / ||b||
    bool converged = false;
    std::vector<double> history;
};

/// Restarted GMRES (modified Gram-Schmidt, Givens rotations) from x = 0.
KrylovResult gmres(const LinearOperator& apply, std::span<const cplx> b, double tolerance,
                   int max_iterations, int restart = 60);

double norm2(std::span<const cplx> v);

} // namespace smallscat
