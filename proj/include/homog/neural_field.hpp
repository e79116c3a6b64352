// Fine-scale and homogenized solvers for the shifted Wilson-Cowan equation
//   du/dt(x,t) = -u(x+a,t) + (K_eps * f(./eps, u))(x,t)
// together with the comparison harness between the eps-family and the
// two-scale limit equation.
#pragma once

#include <functional>
#include <vector>

#include "homog/algebra.hpp"
#include "homog/grid.hpp"
#include "homog/sigma.hpp"

namespace homog {

struct WilsonCowanConfig {
    AlgebraSpec spec;
    int dim = 1;

    // connectivity kernel K(x, y) = profile(x) * osc(delta_y), nonnegative,
    // profile compactly supported within |x| <= kernel_support
    std::function<double(const double*)> kernel_profile;
    std::function<double(const TorusPoint&)> kernel_osc;
    double kernel_support = 1.0;

    // firing rate f(y, lambda), Caratheodory, Lipschitz in lambda
    std::function<double(const TorusPoint&, double)> firing;
    double k1 = 1.0;          // declared Lipschitz constant
    bool affine_firing = true; // false -> flux hypothesis is a user assertion

    std::vector<double> shift_a;
    std::function<double(const double*)> initial;
    double box_half_width = 4.0;
    double T = 1.0;
};

// Checks the structural assumptions on sampled points: kernel nonnegative
// with trace mass <= 1, firing nonnegative with Lipschitz quotient <= k1.
// Violations raise ValidationError naming the assumption.
void validate_wc(const WilsonCowanConfig& cfg, double eps_ref = 0.25,
                 double lambda_max = 4.0, unsigned seed = 1);

struct FieldTrajectory {
    std::vector<double> times;  // snapshot times
    std::vector<Field> states;  // one field per snapshot
    std::vector<double> norm_times;
    std::vector<double> l1, l2; // per-step norms
    double bound_C = 0.0;       // recorded a-priori constant
    double guard_fraction = 0.0;// largest boundary-band mass fraction seen
};

struct TwoScaleTrajectory {
    std::vector<double> times;
    std::vector<TwoScaleField> states;
    std::vector<double> norm_times;
    std::vector<double> l1, l2;
    double r_snap_distance = 0.0; // distance moved when snapping r to the grid
};

// Heun (RK2) time stepping on the periodic wrap box [-L, L)^N; the spatial
// convolution runs through the FFT, the shift by a through a grid roll
// (a must be a grid multiple). Norm blow-up past 10x the recorded a-priori
// constant raises SolverError{divergence}.
FieldTrajectory solve_fine_wc(const WilsonCowanConfig& cfg, double eps, double dx, double dt,
                              int snap_stride = 8);

// Limit point r of the Dirac trajectory delta_{a/eps} along the schedule.
// The schedule must keep frac(omega a / eps) constant; otherwise the
// observed trajectory is reported in a SolverError{subsequence}.
TorusPoint shift_limit_point(const std::vector<double>& a, const std::vector<double>& eps_schedule,
                             const AlgebraSpec& spec);

// Two-scale evolution on the (x, s) grid:
//   du0/dt(x,t,s) = -u0(x+a,t,s+r) + (K_hat ** f_hat(., u0))(x,t,s),
//   u0(x,0,s) = u0_initial(x) (constant in s).
// r is snapped to the nearest torus grid node (distance recorded).
TwoScaleTrajectory solve_homogenized_wc(const WilsonCowanConfig& cfg, const TorusPoint& r,
                                        double dx, int torus_points, double dt,
                                        int snap_stride = 8);

// Space-time weak-Sigma residuals of the fine solutions against the
// homogenized trajectory. Test functions take macro coordinates (x..., t).
SigmaTestResult compare_wc(const std::vector<double>& eps,
                           const std::vector<FieldTrajectory>& fine,
                           const TwoScaleTrajectory& homog, const AlgebraSpec& spec,
                           const std::vector<TestFn>& bank, double tol = 5e-2);

// Tensor bank over (x, t, y): bumps in x times bumps in t times torus modes.
std::vector<TestFn> space_time_bank(const AlgebraSpec& spec, double box_half_width, double T,
                                    int x_bumps, int t_bumps, int torus_modes);

} // namespace homog
