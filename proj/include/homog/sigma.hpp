// Sigma-convergence diagnostics: two-scale fields, weak/strong pairings and
// residual studies, translation limits, and the double convolution.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "homog/algebra.hpp"
#include "homog/grid.hpp"

namespace homog {

// Sampled function of (macro point x, torus point s), macro-major storage.
// The macro grid may include a time axis; torus axes follow the AlgebraSpec.
struct TwoScaleField {
    Grid macro;
    AlgebraSpec spec;
    std::vector<int> torus_n;
    std::vector<double> v;

    TwoScaleField() = default;
    TwoScaleField(Grid m, AlgebraSpec s, std::vector<int> tn);

    static TwoScaleField sample(
        const Grid& m, const AlgebraSpec& s, const std::vector<int>& tn,
        const std::function<double(const double* x, const TorusPoint& sp)>& fn);

    size_t torus_size() const;
    size_t macro_size() const { return macro.size(); }
    TorusField torus_slice(size_t macro_idx) const;
    void set_torus_slice(size_t macro_idx, const TorusField& f);

    // Discrete L^p norm: macro quadrature of the per-point torus averages.
    double lp_norm(double p) const;
    bool same_shape(const TwoScaleField& o) const;
};

// Tensor-product test function psi(x, y) = macro(x) * osc(delta_y); the
// torus part is a fixed algebra element given in kernel-group coordinates.
struct TestFn {
    std::string id;
    std::function<double(const double*)> macro;
    std::function<double(const TorusPoint&)> osc;
};

// Default separating bank: B-spline bumps in x times the first torus
// Fourier modes (constant, cos/sin of the lowest frequencies).
std::vector<TestFn> default_test_bank(const AlgebraSpec& spec, const Grid& macro,
                                      int macro_bumps = 8, int torus_modes = 8);

// Cubic B-spline bump centered at c with support radius w (value 0 outside).
double bspline_bump(double t, double c, double w);

struct EpsSequence {
    std::vector<double> eps;   // strictly decreasing, all > 0
    std::vector<Field> fields; // one macro field per eps
    std::string provenance;

    void validate() const;
};

struct SigmaRow {
    double eps;
    std::string psi_id;
    double pairing;
    double limit;
    double residual;
};

struct SigmaTestResult {
    std::vector<SigmaRow> rows;
    std::vector<double> eps;            // schedule, decreasing
    std::vector<double> max_residual;   // per-eps, relative to the bank scale
    std::vector<double> norm_residual;  // per-eps norm gap (strong mode only)
    bool verdict = false;
    double final_residual = 0.0;
};

// eps_k = 2^-k for k in [k_lo, k_hi].
std::vector<double> dyadic_eps_schedule(int k_lo, int k_hi);

// x -> psi(x, x/eps) sampled on the macro grid.
Field trace_sample(const std::function<double(const double* x, const double* y)>& psi,
                   double eps, const Grid& macro);
Field trace_sample(const TestFn& psi, const AlgebraSpec& spec, double eps, const Grid& macro);

// Trapezoid quadrature of u_eps(x) * psi(x, x/eps) over the macro grid.
double weak_sigma_pairing(const Field& u_eps, const TestFn& psi, const AlgebraSpec& spec,
                          double eps);

// Macro x torus double average of u0_hat * psi_hat.
double limit_pairing(const TwoScaleField& u0, const TestFn& psi);

// Residuals of the pairings of `seq` against `u0` over the bank; strong
// mode additionally records the L^p norm gaps. The verdict requires the
// relative residual to decrease across the last three eps values and the
// final residual to be below tol.
SigmaTestResult sigma_residuals(const EpsSequence& seq, const TwoScaleField& u0,
                                const std::vector<TestFn>& bank, bool strong_mode = false,
                                double p = 2.0, double tol = 5e-2);

// Limit of the micro-translated sequence u_eps(. + eps a):
// the torus translation of u0 by delta_a.
TwoScaleField micro_translate_limit(const TwoScaleField& u0, const std::vector<double>& a);

enum class Extension { none, zero, periodic };

// Limit of the macro-translated sequence u_eps(. + a): macro shift by a
// composed with the torus translation by r. The shift must be a grid
// multiple; leaving the domain without an extension rule is a domain error.
TwoScaleField macro_translate_limit(const TwoScaleField& u0, const std::vector<double>& a,
                                    const TorusPoint& r, Extension ext = Extension::none);

// Double convolution (u ** v)(x,s): zero-padded convolution in the macro
// variable and kernel-group convolution in the torus variable. `v0` lives
// on an R^N truncation box; its boundary values must be below 1e-8 of its
// maximum (checked).
TwoScaleField double_convolution(const TwoScaleField& u0, const TwoScaleField& v0);

// Convolution limit study: pairs u_eps * v_eps against the bank and
// compares with limit_pairing(double_convolution(u0, v0), psi). The
// exponents must satisfy 1/p + 1/q = 1 + 1/m.
SigmaTestResult convolution_limit_check(const EpsSequence& u_seq, const EpsSequence& v_seq,
                                        const TwoScaleField& u0, const TwoScaleField& v0,
                                        const std::vector<TestFn>& bank, double p, double q,
                                        double m, double tol = 5e-2);

// Two-scale gradient decomposition check: per-eps weak-Sigma residuals of
// grad u_eps (central differences) against grad u0 + grad_y u1.
SigmaTestResult gradient_decomposition_check(const EpsSequence& u_seq, const Field& u0,
                                             const TwoScaleField& u1,
                                             const std::vector<TestFn>& bank, double tol = 5e-2);

// Lift of a tensor test function to a two-scale field.
TwoScaleField lift_tensor(const TestFn& psi, const Grid& macro, const AlgebraSpec& spec,
                          const std::vector<int>& torus_n);

// Fill max_residual / final_residual / verdict of a partially built result
// (rows and eps set). Used by every residual study.
void finalize_sigma_result(SigmaTestResult& r, double tol);

void write_sigma_csv(const SigmaTestResult& r, const std::string& path);

} // namespace homog
