// Iteration drivers: conjugate gradient and monitored fixed-point sweeps.
#pragma once

#include <functional>
#include <vector>

namespace homog {

struct IterationReport {
    int iterations = 0;
    double final_residual = 0.0;
    std::vector<double> contraction; // per-sweep quotient (fixed point) or residual (CG)
    bool converged = false;
};

// Matrix-free linear operator y = A x on vectors of fixed length.
using LinOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

// Conjugate gradient for symmetric positive definite operators.
// Symmetry is checked on 3 pseudo-random probe pairs before iterating;
// an asymmetric operator raises SolverError{operator_contract}.
// Stops when ||Ax - b|| / ||b|| < tol (absolute floor 1e-14).
// `diag` is an optional Jacobi preconditioner (entries of diag(A)).
std::vector<double> cg_solve(const LinOp& apply, const std::vector<double>& rhs, double tol,
                             int max_iter, IterationReport& report,
                             const std::vector<double>* diag = nullptr,
                             const std::vector<double>* x0 = nullptr);

// Fixed-point driver: x_{k+1} = step(x_k) until the increment norm drops
// below tol * max(||x||, 1e-14). Records the per-sweep contraction quotient
// ||x_{k+1}-x_k|| / ||x_k-x_{k-1}||; a quotient >= 1 for 5 consecutive
// sweeps raises SolverError{contraction}.
std::vector<double> picard_drive(
    const std::function<std::vector<double>(const std::vector<double>&)>& step,
    std::vector<double> init, double tol, int max_sweeps, IterationReport& report);

} // namespace homog
