#include "homog/registry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "homog/errors.hpp"
#include "homog/sigma.hpp"

namespace homog::registry {

namespace {
constexpr double kPi = std::numbers::pi;

[[noreturn]] void unknown(const std::string& kind, const std::string& name) {
    throw std::invalid_argument("registry: unknown " + kind + " family '" + name + "'");
}

void need(bool ok, const std::string& name, const char* what) {
    if (!ok) throw std::invalid_argument("registry: family '" + name + "' " + what);
}
} // namespace

std::function<double(const double*)> make_profile(const std::string& name,
                                                  const std::vector<double>& params, int dim) {
    if (name == "zero") return [](const double*) { return 0.0; };
    if (name == "constant") {
        need(params.size() == 1, name, "takes [c]");
        const double c = params[0];
        return [c](const double*) { return c; };
    }
    if (name == "gaussian") {
        need(params.size() == 2 + static_cast<size_t>(dim), name, "takes [amp, sigma, c...]");
        const double amp = params[0], sig = params[1];
        std::vector<double> c(params.begin() + 2, params.end());
        return [amp, sig, c, dim](const double* x) {
            double r2 = 0.0;
            for (int k = 0; k < dim; ++k) r2 += (x[k] - c[k]) * (x[k] - c[k]);
            return amp * std::exp(-r2 / (2.0 * sig * sig));
        };
    }
    if (name == "bspline") {
        need(params.size() == 2 + static_cast<size_t>(dim), name, "takes [amp, width, c...]");
        const double amp = params[0], w = params[1];
        std::vector<double> c(params.begin() + 2, params.end());
        return [amp, w, c, dim](const double* x) {
            double v = amp;
            for (int k = 0; k < dim; ++k) v *= bspline_bump(x[k], c[k], w);
            return v;
        };
    }
    if (name == "sine_dirichlet") {
        need(params.size() == 1 + static_cast<size_t>(dim), name, "takes [amp, k...]");
        const double amp = params[0];
        std::vector<double> k(params.begin() + 1, params.end());
        return [amp, k, dim](const double* x) {
            double v = amp;
            for (int j = 0; j < dim; ++j) v *= std::sin(k[j] * kPi * x[j]);
            return v;
        };
    }
    unknown("profile", name);
}

std::function<double(const TorusPoint&)> make_oscillation(const std::string& name,
                                                          const std::vector<double>& params) {
    if (name == "one") return [](const TorusPoint&) { return 1.0; };
    if (name == "cos" || name == "sin") {
        need(params.size() >= 3, name, "takes [offset, amp, k...]");
        const double off = params[0], amp = params[1];
        std::vector<double> k(params.begin() + 2, params.end());
        const bool is_cos = name == "cos";
        return [off, amp, k, is_cos](const TorusPoint& p) {
            double phase = 0.0;
            for (size_t j = 0; j < k.size() && j < static_cast<size_t>(p.d); ++j)
                phase += k[j] * p.c[j];
            const double o = 2.0 * kPi * phase;
            return off + amp * (is_cos ? std::cos(o) : std::sin(o));
        };
    }
    if (name == "cosprod") {
        need(params.size() >= 2, name, "takes [amp, k...]");
        const double amp = params[0];
        std::vector<double> k(params.begin() + 1, params.end());
        return [amp, k](const TorusPoint& p) {
            double v = amp;
            for (size_t j = 0; j < k.size() && j < static_cast<size_t>(p.d); ++j)
                v *= std::cos(2.0 * kPi * k[j] * p.c[j]);
            return v;
        };
    }
    unknown("oscillation", name);
}

FiringFamily make_firing(const std::string& name, const std::vector<double>& params) {
    FiringFamily out;
    if (name == "affine") {
        need(params.size() == 4, name, "takes [g0, g1, mod_amp, mod_freq]");
        const double g0 = params[0], g1 = params[1], ma = params[2], mf = params[3];
        out.fn = [g0, g1, ma, mf](const TorusPoint& p, double lam) {
            return (1.0 + ma * std::sin(2.0 * kPi * mf * p.c[0])) * (g0 + g1 * lam);
        };
        out.k1 = (1.0 + std::abs(ma)) * std::abs(g1);
        out.affine = true;
        return out;
    }
    if (name == "sigmoid") {
        need(params.size() == 5, name, "takes [rate, theta, beta, mod_amp, mod_freq]");
        const double rate = params[0], th = params[1], be = params[2], ma = params[3],
                     mf = params[4];
        need(be > 0.0, name, "needs beta > 0");
        out.fn = [rate, th, be, ma, mf](const TorusPoint& p, double lam) {
            return rate * (1.0 + ma * std::sin(2.0 * kPi * mf * p.c[0])) /
                   (1.0 + std::exp(-(lam - th) / be));
        };
        out.k1 = rate * (1.0 + std::abs(ma)) / (4.0 * be);
        out.affine = false;
        return out;
    }
    unknown("firing", name);
}

FluxFamily make_flux(const std::string& name, const std::vector<double>& params,
                     const std::function<double(const TorusPoint&)>& m_y,
                     const std::function<double(const TorusPoint&)>& m_tau) {
    FluxFamily out;
    auto m = [m_y, m_tau](const TorusPoint& sy, const TorusPoint& st) {
        return m_y(sy) * m_tau(st);
    };
    if (name == "linear") {
        need(params.empty(), name, "takes no parameters");
        out.flux = [m](const TorusPoint& sy, const TorusPoint& st, const VecN& l) {
            VecN a = l;
            const double d = m(sy, st);
            for (int k = 0; k < l.n; ++k) a[k] *= d;
            return a;
        };
        out.diffusivity = [m](const TorusPoint& sy, const TorusPoint& st, double) {
            return m(sy, st);
        };
        return out;
    }
    if (name == "atan") {
        need(params.size() == 1, name, "takes [kappa]");
        const double kappa = params[0];
        need(kappa >= 0.0, name, "needs kappa >= 0");
        auto d_of = [m, kappa](const TorusPoint& sy, const TorusPoint& st, double gn) {
            const double sat = gn < 1e-12 ? 1.0 : std::atan(gn) / gn;
            return m(sy, st) * (1.0 + kappa * sat);
        };
        out.flux = [d_of](const TorusPoint& sy, const TorusPoint& st, const VecN& l) {
            VecN a = l;
            const double d = d_of(sy, st, l.norm());
            for (int k = 0; k < l.n; ++k) a[k] *= d;
            return a;
        };
        out.diffusivity = d_of;
        return out;
    }
    unknown("flux", name);
}

std::function<double(const TorusPoint&, const TorusPoint&, const VecN&)> make_a0(
    const std::string& name, const std::vector<double>& params,
    const std::function<double(const TorusPoint&)>& m_y,
    const std::function<double(const TorusPoint&)>& m_tau) {
    if (name == "zero")
        return [](const TorusPoint&, const TorusPoint&, const VecN&) { return 0.0; };
    if (name == "linear_sum") {
        need(params.size() == 1, name, "takes [c]");
        const double c = params[0];
        return [c, m_y, m_tau](const TorusPoint& sy, const TorusPoint& st, const VecN& l) {
            double s = 0.0;
            for (int k = 0; k < l.n; ++k) s += l[k];
            return c * m_y(sy) * m_tau(st) * s;
        };
    }
    unknown("a0", name);
}

KernelFamily make_kernel(const std::string& name, const std::vector<double>& params) {
    KernelFamily out;
    if (name == "none") {
        need(params.empty(), name, "takes no parameters");
        return out;
    }
    if (name == "cos_window") {
        need(params.size() == 4, name, "takes [c, ay, atau, sigma_max]");
        const double c = params[0], ay = params[1], atau = params[2], smax = params[3];
        need(smax > 0.0 && std::abs(smax - std::lround(smax)) < 1e-12, name,
             "needs an integer sigma_max so the windowed trace restricts the periodic lift");
        need(std::abs(ay) <= 1.0 && std::abs(atau) <= 1.0, name,
             "needs |ay| <= 1 and |atau| <= 1");
        out.zero = false;
        out.sigma_max = smax;
        out.fine = [c, ay, atau, smax](const TorusPoint& sy, double sig) {
            if (sig < 0.0 || sig > smax) return 0.0;
            return c * (1.0 + ay * std::cos(2.0 * kPi * sy.c[0])) *
                   (1.0 + atau * std::cos(2.0 * kPi * sig));
        };
        out.torus = [c, ay, atau](const TorusPoint& sy, const TorusPoint& st) {
            return c * (1.0 + ay * std::cos(2.0 * kPi * sy.c[0])) *
                   (1.0 + atau * std::cos(2.0 * kPi * st.c[0]));
        };
        // sup_y integral of |K(y,.)|: the tau factor is nonnegative for
        // |atau| <= 1 and averages to 1 over the integer window
        out.l1 = std::abs(c) * (1.0 + std::abs(ay)) * smax;
        return out;
    }
    unknown("kernel", name);
}

} // namespace homog::registry
