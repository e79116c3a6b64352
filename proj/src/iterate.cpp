#include "homog/iterate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "homog/errors.hpp"
#include "homog/par.hpp"

namespace homog {

namespace {
constexpr double kAbsFloor = 1e-14;

void check_symmetry(const LinOp& apply, size_t n) {
    std::mt19937_64 rng(0x5eed ^ n);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(n), y(n), ax(n), ay(n);
    for (int probe = 0; probe < 3; ++probe) {
        for (size_t i = 0; i < n; ++i) {
            x[i] = dist(rng);
            y[i] = dist(rng);
        }
        apply(x, ax);
        apply(y, ay);
        const double lhs = par::dot(ax, y);
        const double rhs = par::dot(x, ay);
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
        if (std::abs(lhs - rhs) > 1e-10 * scale)
            throw SolverError(SolverErrorKind::operator_contract,
                              "cg_solve: operator failed the symmetry probe",
                              {lhs, rhs});
    }
}
} // namespace

std::vector<double> cg_solve(const LinOp& apply, const std::vector<double>& rhs, double tol,
                             int max_iter, IterationReport& report,
                             const std::vector<double>* diag, const std::vector<double>* x0) {
    const size_t n = rhs.size();
    check_symmetry(apply, n);

    std::vector<double> x = x0 ? *x0 : std::vector<double>(n, 0.0);
    std::vector<double> r(n), z(n), p(n), ap(n);
    apply(x, ap);
    for (size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];

    auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
        if (diag) {
            for (size_t i = 0; i < n; ++i) out[i] = in[i] / (*diag)[i];
        } else {
            out = in;
        }
    };

    const double bnorm = std::max(par::norm2(rhs), kAbsFloor);
    report = IterationReport{};
    double rnorm = par::norm2(r);
    if (rnorm / bnorm < tol) {
        report.converged = true;
        report.final_residual = rnorm / bnorm;
        return x;
    }

    precond(r, z);
    p = z;
    double rz = par::dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        apply(p, ap);
        const double pap = par::dot(p, ap);
        if (pap <= 0.0)
            throw SolverError(SolverErrorKind::operator_contract,
                              "cg_solve: operator is not positive definite", {pap});
        const double alpha = rz / pap;
        for (size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = par::norm2(r);
        report.iterations = it;
        report.contraction.push_back(rnorm / bnorm);
        if (rnorm / bnorm < tol) {
            report.converged = true;
            report.final_residual = rnorm / bnorm;
            return x;
        }
        precond(r, z);
        const double rz_next = par::dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolverError(SolverErrorKind::linear_solver,
                      "cg_solve: max iterations exceeded", report.contraction);
}

std::vector<double> picard_drive(
    const std::function<std::vector<double>(const std::vector<double>&)>& step,
    std::vector<double> init, double tol, int max_sweeps, IterationReport& report) {
    report = IterationReport{};
    std::vector<double> x = std::move(init);
    double prev_inc = -1.0;
    int bad_streak = 0;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        std::vector<double> next = step(x);
        if (next.size() != x.size())
            throw std::invalid_argument("picard_drive: step changed vector length");
        double inc = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            const double d = next[i] - x[i];
            inc += d * d;
        }
        inc = std::sqrt(inc);
        x = std::move(next);
        report.iterations = sweep;
        if (prev_inc > 0.0) {
            const double q = inc / prev_inc;
            report.contraction.push_back(q);
            bad_streak = q >= 1.0 ? bad_streak + 1 : 0;
            if (bad_streak >= 5)
                throw SolverError(SolverErrorKind::contraction,
                                  "picard_drive: no contraction for 5 consecutive sweeps",
                                  report.contraction);
        }
        prev_inc = inc;
        const double scale = std::max(par::norm2(x), kAbsFloor);
        report.final_residual = inc / scale;
        if (inc <= tol * scale) {
            report.converged = true;
            return x;
        }
    }
    throw SolverError(SolverErrorKind::contraction,
                      "picard_drive: max sweeps exceeded", report.contraction);
}

} // namespace homog
