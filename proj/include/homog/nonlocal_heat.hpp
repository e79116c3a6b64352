// Nonlocal nonlinear heat equation with an oscillating memory kernel:
//   rho(x/e) du/dt - Div a(x/e, t/e, grad u) + (K_e * a0_e(grad u))(x,t) = f
// on (0,1)^N with zero Dirichlet data, plus the cell problems, the
// homogenized coefficients b / b0 / rho_eff, the macroscopic solver and the
// eps-refinement studies.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "homog/algebra.hpp"
#include "homog/grid.hpp"
#include "homog/sigma.hpp"

namespace homog {

// small fixed-size vector for gradients / flux values (N <= 3)
struct VecN {
    int n = 0;
    double v[3] = {0.0, 0.0, 0.0};

    static VecN zero(int n_) {
        VecN x;
        x.n = n_;
        return x;
    }
    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }
    double norm() const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += v[i] * v[i];
        return std::sqrt(s);
    }
};

struct HeatConstants {
    double c0 = 1.0;     // flux Lipschitz constant
    double c1 = 1.0;     // flux monotonicity constant
    double c2 = 1.0;     // growth constant
    double Lambda = 1.0; // density bounds Lambda^-1 <= rho <= Lambda
};

// Oscillating problem data. The flux is radial, a = D(y,tau,|l|) l, which
// covers the shipped coefficient families and gives the lagged-coefficient
// sweep its linear inner problem.
struct HeatCoefficients {
    AlgebraSpec spec_y;
    AlgebraSpec spec_tau;

    std::function<double(const TorusPoint&)> rho;
    std::function<VecN(const TorusPoint& sy, const TorusPoint& st, const VecN& lam)> flux;
    std::function<double(const TorusPoint& sy, const TorusPoint& st, double lam_norm)>
        diffusivity;
    std::function<double(const TorusPoint& sy, const TorusPoint& st, const VecN& lam)> a0;

    bool kernel_zero = true;
    std::function<double(const TorusPoint& sy, double sigma)> kernel_fine; // causal window
    std::function<double(const TorusPoint& sy, const TorusPoint& st)> kernel_torus;
    double kernel_sigma_max = 0.0; // fast-time support of the window
    double kernel_l1 = 0.0;        // sup_y integral of |K(y,.)|
};

struct HeatConfig {
    int dim = 1;
    HeatCoefficients coeff;
    HeatConstants consts;
    std::function<double(const double*)> initial;
    std::function<double(const double*, double)> source; // f(x, t)
    double T = 0.1;
};

// Sampled validation of the structural assumptions; throws ValidationError
// naming the violated condition ("flux monotonicity (c1)", ...).
void validate_heat(const HeatConfig& cfg, unsigned seed = 1, double lambda_max = 4.0);

struct HeatTrajectory {
    std::vector<double> times;  // every accepted step
    std::vector<Field> states;  // nodal values including the boundary
    std::vector<double> l2;     // per-time L2 norms
    double sup_l2sq = 0.0;      // sup_t ||u(t)||^2
    double energy = 0.0;        // integral of ||grad u||^2 dt
    double picard_avg = 0.0;    // mean lagged-coefficient sweeps per step
    int memory_slabs = 1;       // outer fixed-point slabs used
    double max_contraction = 0.0; // worst accepted outer contraction factor
    bool extrapolation_flag = false; // macro: gradient left the lambda table
};

// Implicit Euler; each step solves the monotone elliptic system by a
// lagged-diffusivity sweep with CG inner solves. With a nonzero kernel the
// memory term is handled by an outer fixed-point over time slabs whose
// measured contraction factor must stay below 1/2 (slabs shrink until it
// does). Requires eps/dx >= 8 so the grid resolves the oscillations.
HeatTrajectory solve_fine_heat(const HeatConfig& cfg, double eps, double dx, double dt);

struct CellSolution {
    VecN lambda;
    std::vector<TorusField> v_slices;      // corrector per tau node, zero mean
    std::vector<TorusField> grad_slices;   // nodal gradients, one field per axis per slice
    double residual = 0.0;                  // worst discrete variational residual
    int iterations = 0;
};

// Monotone cell problem per tau slice on the y-torus, damped Jacobian-free
// Newton with CG inner solves, mean-zero normalization.
CellSolution solve_cell(const VecN& lambda, const HeatConfig& cfg, int y_points, int tau_points,
                        double tol = 1e-12);

struct EffectiveCoefficients {
    int dim = 1;
    std::vector<std::vector<double>> knots; // per-axis lambda knots, ascending
    std::vector<VecN> b_table;              // row-major over the knot tensor grid
    std::vector<double> b0_table;
    double rho_eff = 1.0;
    std::vector<CellSolution> cells;        // aligned with the tables
    int y_points = 0, tau_points = 0;

    VecN b(const VecN& lam, bool* extrapolated = nullptr) const;
    double b0(const VecN& lam, bool* extrapolated = nullptr) const;
    // corrector value v(lambda)(y) on slice `slice`, multilinear in lambda,
    // linear in y between torus nodes
    double corrector(const VecN& lam, const TorusPoint& y, int slice) const;
    double corrector_grad(const VecN& lam, const TorusPoint& y, int slice, int axis) const;
};

// Tabulates b, b0 and rho_eff over a tensor lambda grid.
EffectiveCoefficients effective_coefficients(const HeatConfig& cfg,
                                             const std::vector<std::vector<double>>& knots,
                                             int y_points, int tau_points);

// Symmetric lambda box from a constant-coefficient presolve, inflated 1.5x.
std::vector<std::vector<double>> estimate_lambda_knots(const HeatConfig& cfg, double dx,
                                                       double dt, int points_per_axis);

// Macroscopic problem rho_eff du/dt - Div b(grad u) + b0(grad u) = f with
// the same implicit scheme; no memory term (b0 already absorbs the kernel).
HeatTrajectory solve_macro(const HeatConfig& cfg, const EffectiveCoefficients& eff, double dx,
                           double dt);

struct ConvergenceStudy {
    std::vector<double> eps;
    std::vector<double> l2_error;  // ||u_eps - u0||_{L2(Q_T)}
    std::vector<double> energy;
    std::vector<double> picard_avg;
    double u0_norm = 0.0;
    double energy_bound = 0.0; // recorded from the coarsest run
    bool aborted = false;
    std::string abort_reason;
    size_t completed = 0;
};

// Fine solves across the schedule against one macro solve on the common
// grid; aborts at the first failed eps and reports the partial results.
ConvergenceStudy convergence_study(const HeatConfig& cfg, const EffectiveCoefficients& eff,
                                   const std::vector<double>& eps_list, double dx, double dt);

struct CorrectorReport {
    SigmaTestResult gradient;      // weak-Sigma residuals of grad u_eps
    double reconstruction_error = 0.0; // ||u_eps - u0 - eps v(grad u0)(./eps)||
    double plain_error = 0.0;          // ||u_eps - u0||
};

// First-order corrector diagnostics at a fixed eps.
CorrectorReport corrector_check(const HeatConfig& cfg, double eps, const HeatTrajectory& fine,
                                const HeatTrajectory& macro, const EffectiveCoefficients& eff,
                                const std::vector<TestFn>& bank, int time_stride = 8);

// Smooth test field psi(x,t) with gradient, plus an oscillating corrector
// term psi1(x,t) * osc(s_y); used by the flux convergence check.
struct FluxTestField {
    std::function<double(const double* x, double t)> value;
    std::function<VecN(const double* x, double t)> grad;
};
struct FluxCorrector {
    bool present = false;
    std::function<double(const double* x, double t)> macro;
    std::function<VecN(const double* x, double t)> macro_grad;
    std::function<double(const TorusPoint& sy, const TorusPoint& st)> osc;
    std::function<VecN(const TorusPoint& sy, const TorusPoint& st)> osc_grad_y;
};
struct FluxWitness {
    // w_eps(x,t) = macro(x,t) * osc(delta_{x/eps}, delta_{t/eps}) e_axis
    std::function<double(const double* x, double t)> macro;
    std::function<double(const TorusPoint& sy, const TorusPoint& st)> osc;
    int axis = 0;
};

// Checks that the oscillating flux a^eps(., ., grad(psi0 + eps psi1^eps))
// paired against the witness sequence converges to the two-scale pairing.
SigmaTestResult flux_convergence_check(const HeatConfig& cfg, const std::vector<double>& eps_list,
                                       const FluxTestField& psi0, const FluxCorrector& psi1,
                                       const FluxWitness& w, int space_cells, int time_steps,
                                       int y_points, int tau_points, double tol = 5e-2);

void write_effective_csv(const EffectiveCoefficients& eff, const std::string& path);
void write_convergence_csv(const ConvergenceStudy& s, const std::string& path);

} // namespace homog
