// Named parametric families used by experiment configs: macro profiles,
// torus oscillations, firing rates, heat fluxes and memory kernels.
// Configs refer to these by name instead of embedding expressions.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "homog/algebra.hpp"
#include "homog/neural_field.hpp"
#include "homog/nonlocal_heat.hpp"

namespace homog::registry {

// Macro profiles f(x) on R^dim.
//   constant [c] ; zero [] ; gaussian [amp, sigma, c1..cdim]
//   bspline  [amp, width, c1..cdim] (product of per-axis bumps)
//   sine_dirichlet [amp, k1..kdim]  (amp * prod sin(k pi x))
std::function<double(const double*)> make_profile(const std::string& name,
                                                  const std::vector<double>& params, int dim);

// Torus oscillations F(s).
//   one [] ; cos [offset, amp, k1..kd] ; sin [offset, amp, k1..kd]
//   (offset + amp * cos/sin(2 pi k . s)) ; cosprod [amp, k1..kd]
//   (amp * prod_j cos(2 pi k_j s_j))
std::function<double(const TorusPoint&)> make_oscillation(const std::string& name,
                                                          const std::vector<double>& params);

// Firing rates f(y, lambda).
//   affine  [g0, g1, mod_amp, mod_freq]:
//       (1 + mod_amp sin(2 pi mod_freq s_0)) (g0 + g1 lambda)
//   sigmoid [rate, theta, beta, mod_amp, mod_freq]:
//       rate (1 + mod_amp sin(2 pi mod_freq s_0)) / (1 + exp(-(l-theta)/beta))
struct FiringFamily {
    std::function<double(const TorusPoint&, double)> fn;
    double k1 = 1.0;
    bool affine = true;
};
FiringFamily make_firing(const std::string& name, const std::vector<double>& params);

// Heat flux families (radial: a = D(y,tau,|l|) l) with structure constants.
//   linear [] with modulations m_y, m_tau: a = m_y(s_y) m_tau(s_tau) l
//   atan  [kappa]: a = m_y m_tau (1 + kappa atan(|l|)/|l|) l
struct FluxFamily {
    std::function<VecN(const TorusPoint&, const TorusPoint&, const VecN&)> flux;
    std::function<double(const TorusPoint&, const TorusPoint&, double)> diffusivity;
};
FluxFamily make_flux(const std::string& name, const std::vector<double>& params,
                     const std::function<double(const TorusPoint&)>& m_y,
                     const std::function<double(const TorusPoint&)>& m_tau);

// Memory-coupling scalar a0(y, tau, lambda).
//   zero [] ; linear_sum [c] with modulations: c m_y m_tau sum(lambda)
std::function<double(const TorusPoint&, const TorusPoint&, const VecN&)> make_a0(
    const std::string& name, const std::vector<double>& params,
    const std::function<double(const TorusPoint&)>& m_y,
    const std::function<double(const TorusPoint&)>& m_tau);

// Memory kernels K(y, sigma) with their torus lifts.
//   none [] ; cos_window [c, ay, atau, sigma_max] (sigma_max a positive
//   integer so the windowed trace restricts the periodic lift):
//       c (1 + ay cos 2 pi s_y) (1 + atau cos 2 pi sigma), 0 <= sigma <= sigma_max
struct KernelFamily {
    bool zero = true;
    std::function<double(const TorusPoint&, double)> fine;
    std::function<double(const TorusPoint&, const TorusPoint&)> torus;
    double sigma_max = 0.0;
    double l1 = 0.0;
};
KernelFamily make_kernel(const std::string& name, const std::vector<double>& params);

} // namespace homog::registry
