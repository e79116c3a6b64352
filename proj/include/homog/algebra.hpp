// Computable algebras with mean value whose spectrum kernel is a torus:
// periodic and quasi-periodic trigonometric algebras. The kernel group is
// realized as T^d with coordinatewise addition mod 1, the Haar measure is
// normalized Lebesgue measure, and discrete integrals are grid averages.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "homog/grid.hpp"

namespace homog {

enum class AlgebraKind { periodic, quasi_periodic };

// Declares the computable algebra. `freq` is the d x N frequency matrix
// (row k is the frequency vector of torus coordinate k). For the periodic
// algebra with unit periods freq is the identity and d = N. Rational
// independence of quasi-periodic rows is a user assertion; it cannot be
// checked numerically.
struct AlgebraSpec {
    AlgebraKind kind = AlgebraKind::periodic;
    int space_dim = 1; // N
    int torus_dim = 1; // d = dimension of the kernel group
    std::vector<double> freq;

    static AlgebraSpec periodic(int dims);
    static AlgebraSpec periodic_with_periods(const std::vector<double>& periods);
    static AlgebraSpec quasi_periodic(int space_dim, const std::vector<std::vector<double>>& rows);

    double omega(int k, int i) const { return freq[static_cast<size_t>(k) * space_dim + i]; }
    bool same_torus(const AlgebraSpec& o) const { return torus_dim == o.torus_dim; }
};

// Point of the kernel group T^d; every coordinate lies in [0,1) and the
// group identity is the zero point.
struct TorusPoint {
    static constexpr int max_dim = 4;
    int d = 0;
    double c[max_dim] = {0.0, 0.0, 0.0, 0.0};

    static TorusPoint zero(int d);
};

// Fractional part with exact handling of negative inputs; result in [0,1).
double frac(double y);

// Point evaluation (Dirac trajectory) on the kernel group:
// coordinate k equals frac(omega_k . y).
TorusPoint dirac_point(const double* y, const AlgebraSpec& spec);
TorusPoint dirac_point(double y, const AlgebraSpec& spec); // N = 1 convenience

TorusPoint group_mul(const TorusPoint& s, const TorusPoint& r);
TorusPoint group_inv(const TorusPoint& s);

// Sampled function on the kernel group. Grid sizes are powers of two; the
// discrete mean is the plain average of the samples.
struct TorusField {
    AlgebraSpec spec;
    std::vector<int> n; // one power-of-two size per torus axis
    std::vector<double> v;

    TorusField() = default;
    TorusField(AlgebraSpec s, std::vector<int> sizes);

    static TorusField sample(const AlgebraSpec& s, const std::vector<int>& sizes,
                             const std::function<double(const TorusPoint&)>& fn);

    size_t size() const { return v.size(); }
    double mean() const;
    double lp_norm(double p) const; // beta-average norm
    double sup_norm() const;
    TorusPoint node(const std::vector<int>& idx) const;
    bool same_grid(const TorusField& o) const { return n == o.n && spec.same_torus(o.spec); }
};

// Expanding-ball average record.
struct MeanEstimate {
    double value = 0.0;
    std::vector<double> radii;
    std::vector<double> partial_averages;
    bool converged = false;
};

// Default radius schedule R_j = 10 * 2^j, j = 0..10.
std::vector<double> default_radius_schedule(int levels = 11, double r0 = 10.0);

// Average of f over the balls B_{R_j}; `value` is the last average and
// `converged` is set when the last two averages differ by less than tol.
// Supports N <= 3. samples_per_unit controls the quadrature resolution.
MeanEstimate mean_value(const std::function<double(const double*)>& f, const AlgebraSpec& spec,
                        const std::vector<double>& radii, double tol,
                        int samples_per_unit = 32);

// (mean of |f|^p)^(1/p) over the same schedule.
double besicovitch_seminorm(const std::function<double(const double*)>& f,
                            const AlgebraSpec& spec, double p, const std::vector<double>& radii,
                            double tol, int samples_per_unit = 32);

// Convolution over the kernel group:
// (u * v)(s) = integral of u(r) v(s - r) dbeta(r), beta of total mass 1.
TorusField spectrum_convolve(const TorusField& u, const TorusField& v);

// Derivation along space direction i (0-based, i < N): Fourier multiplier
// 2*pi*i*(m . omega_col_i). Exact for trigonometric polynomials resolved on
// the grid; the top (Nyquist) mode is treated as zero.
TorusField spectral_derivative(const TorusField& u, int axis);

// Translation u(. + r) computed as a phase shift in Fourier space.
TorusField torus_translate(const TorusField& u, const TorusPoint& r);

// Pointwise product with zero-padded dealiasing (spectra embedded in a
// double-size grid before multiplying, then truncated back).
TorusField dealiased_product(const TorusField& u, const TorusField& v);

// True iff every spectral derivative has sup-norm below tol.
bool is_invariant(const TorusField& u, double tol);

// CSV export: header "# torus d=<d> n=<n1,...>" then row-major values.
void write_torus_csv(const TorusField& u, const std::string& path);

} // namespace homog
