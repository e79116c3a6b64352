#include "homog/algebra.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "homog/errors.hpp"
#include "homog/fft.hpp"
#include "homog/par.hpp"

namespace homog {

AlgebraSpec AlgebraSpec::periodic(int dims) {
    if (dims < 1) throw std::invalid_argument("AlgebraSpec: dims must be >= 1");
    AlgebraSpec s;
    s.kind = AlgebraKind::periodic;
    s.space_dim = dims;
    s.torus_dim = dims;
    s.freq.assign(static_cast<size_t>(dims) * dims, 0.0);
    for (int k = 0; k < dims; ++k) s.freq[static_cast<size_t>(k) * dims + k] = 1.0;
    return s;
}

AlgebraSpec AlgebraSpec::periodic_with_periods(const std::vector<double>& periods) {
    const int dims = static_cast<int>(periods.size());
    AlgebraSpec s = periodic(dims);
    for (int k = 0; k < dims; ++k) {
        if (periods[k] <= 0.0) throw std::invalid_argument("AlgebraSpec: period must be > 0");
        s.freq[static_cast<size_t>(k) * dims + k] = 1.0 / periods[k];
    }
    return s;
}

AlgebraSpec AlgebraSpec::quasi_periodic(int space_dim,
                                        const std::vector<std::vector<double>>& rows) {
    if (space_dim < 1 || rows.empty())
        throw std::invalid_argument("AlgebraSpec: need space_dim >= 1 and at least one row");
    if (static_cast<int>(rows.size()) > TorusPoint::max_dim)
        throw std::invalid_argument("AlgebraSpec: torus dimension exceeds supported maximum");
    AlgebraSpec s;
    s.kind = AlgebraKind::quasi_periodic;
    s.space_dim = space_dim;
    s.torus_dim = static_cast<int>(rows.size());
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != space_dim)
            throw std::invalid_argument("AlgebraSpec: frequency row has wrong length");
        s.freq.insert(s.freq.end(), r.begin(), r.end());
    }
    return s;
}

TorusPoint TorusPoint::zero(int d) {
    TorusPoint p;
    p.d = d;
    return p;
}

double frac(double y) {
    double r = y - std::floor(y);
    if (r >= 1.0) r = 0.0; // floor rounding at tiny negative inputs
    return r;
}

TorusPoint dirac_point(const double* y, const AlgebraSpec& spec) {
    TorusPoint p;
    p.d = spec.torus_dim;
    for (int k = 0; k < spec.torus_dim; ++k) {
        double acc = 0.0;
        for (int i = 0; i < spec.space_dim; ++i) acc += spec.omega(k, i) * y[i];
        p.c[k] = frac(acc);
    }
    return p;
}

TorusPoint dirac_point(double y, const AlgebraSpec& spec) {
    if (spec.space_dim != 1)
        throw std::invalid_argument("dirac_point: scalar overload needs a 1-d algebra");
    return dirac_point(&y, spec);
}

TorusPoint group_mul(const TorusPoint& s, const TorusPoint& r) {
    if (s.d != r.d) throw std::invalid_argument("group_mul: torus dimension mismatch");
    TorusPoint out;
    out.d = s.d;
    for (int k = 0; k < s.d; ++k) {
        const double t = s.c[k] + r.c[k];
        out.c[k] = t >= 1.0 ? t - 1.0 : t; // exact mod-1 for inputs in [0,1)
    }
    return out;
}

TorusPoint group_inv(const TorusPoint& s) {
    TorusPoint out;
    out.d = s.d;
    for (int k = 0; k < s.d; ++k) out.c[k] = s.c[k] == 0.0 ? 0.0 : 1.0 - s.c[k];
    return out;
}

TorusField::TorusField(AlgebraSpec s, std::vector<int> sizes)
    : spec(std::move(s)), n(std::move(sizes)) {
    if (static_cast<int>(n.size()) != spec.torus_dim)
        throw std::invalid_argument("TorusField: grid rank must equal the torus dimension");
    size_t total = 1;
    for (int d : n) {
        if (!is_pow2(d)) throw std::invalid_argument("TorusField: grid sizes must be powers of two");
        total *= static_cast<size_t>(d);
    }
    v.assign(total, 0.0);
}

TorusField TorusField::sample(const AlgebraSpec& s, const std::vector<int>& sizes,
                              const std::function<double(const TorusPoint&)>& fn) {
    TorusField out(s, sizes);
    for_each_index(out.n, [&](size_t f, const std::vector<int>& idx) {
        TorusPoint p;
        p.d = out.spec.torus_dim;
        for (int k = 0; k < p.d; ++k) p.c[k] = static_cast<double>(idx[k]) / out.n[k];
        out.v[f] = fn(p);
    });
    return out;
}

double TorusField::mean() const {
    const double* p = v.data();
    return par::sum(static_cast<std::ptrdiff_t>(v.size()), [p](std::ptrdiff_t i) { return p[i]; }) /
           static_cast<double>(v.size());
}

double TorusField::lp_norm(double p) const {
    if (p < 1.0) throw std::invalid_argument("TorusField::lp_norm: p must be >= 1");
    const double* d = v.data();
    const double s =
        par::sum(static_cast<std::ptrdiff_t>(v.size()),
                 [d, p](std::ptrdiff_t i) { return std::pow(std::abs(d[i]), p); }) /
        static_cast<double>(v.size());
    return std::pow(s, 1.0 / p);
}

double TorusField::sup_norm() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

TorusPoint TorusField::node(const std::vector<int>& idx) const {
    TorusPoint p;
    p.d = spec.torus_dim;
    for (int k = 0; k < p.d; ++k) p.c[k] = static_cast<double>(idx[k]) / n[k];
    return p;
}

std::vector<double> default_radius_schedule(int levels, double r0) {
    std::vector<double> r(levels);
    for (int j = 0; j < levels; ++j) r[j] = r0 * std::pow(2.0, j);
    return r;
}

namespace {

double ball_average(const std::function<double(const double*)>& f, int dim, double radius,
                    int spu) {
    if (dim == 1) {
        // composite Simpson on [-R, R]
        long m = 2 * std::lround(std::ceil(radius * spu));
        if (m < 4) m = 4;
        const double h = 2.0 * radius / static_cast<double>(m);
        const double s = par::sum(m + 1, [&](std::ptrdiff_t i) {
            const double y = -radius + h * static_cast<double>(i);
            const double val = f(&y);
            if (!std::isfinite(val)) throw std::domain_error("mean_value: non-finite sample");
            double w = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            return w * val;
        });
        return s * h / 3.0 / (2.0 * radius);
    }
    // midpoint grid over the bounding box, mask to the ball
    const double h = 1.0 / spu;
    const long m = std::lround(std::ceil(2.0 * radius / h));
    long total = 1;
    for (int k = 0; k < dim; ++k) total *= m;
    const double r2 = radius * radius;
    const double s = par::sum(total, [&](std::ptrdiff_t flat) {
        double y[3];
        std::ptrdiff_t rem = flat;
        double rad2 = 0.0;
        for (int k = dim - 1; k >= 0; --k) {
            const long i = rem % m;
            rem /= m;
            y[k] = -radius + (static_cast<double>(i) + 0.5) * h;
            rad2 += y[k] * y[k];
        }
        if (rad2 > r2) return 0.0;
        const double val = f(y);
        if (!std::isfinite(val)) throw std::domain_error("mean_value: non-finite sample");
        return val;
    });
    const double cnt = par::sum(total, [&](std::ptrdiff_t flat) {
        double rad2 = 0.0;
        std::ptrdiff_t rem = flat;
        for (int k = dim - 1; k >= 0; --k) {
            const long i = rem % m;
            rem /= m;
            const double yk = -radius + (static_cast<double>(i) + 0.5) * h;
            rad2 += yk * yk;
        }
        return rad2 > r2 ? 0.0 : 1.0;
    });
    if (cnt == 0.0) throw std::invalid_argument("mean_value: radius below grid resolution");
    return s / cnt;
}

} // namespace

MeanEstimate mean_value(const std::function<double(const double*)>& f, const AlgebraSpec& spec,
                        const std::vector<double>& radii, double tol, int samples_per_unit) {
    if (radii.empty()) throw std::invalid_argument("mean_value: empty radius schedule");
    for (size_t j = 1; j < radii.size(); ++j)
        if (radii[j] <= radii[j - 1])
            throw std::invalid_argument("mean_value: radii must be strictly increasing");
    if (spec.space_dim > 3)
        throw std::invalid_argument("mean_value: supported for N <= 3");

    MeanEstimate est;
    est.radii = radii;
    for (double r : radii)
        est.partial_averages.push_back(ball_average(f, spec.space_dim, r, samples_per_unit));
    est.value = est.partial_averages.back();
    const size_t m = est.partial_averages.size();
    est.converged =
        m >= 2 && std::abs(est.partial_averages[m - 1] - est.partial_averages[m - 2]) < tol;
    return est;
}

double besicovitch_seminorm(const std::function<double(const double*)>& f,
                            const AlgebraSpec& spec, double p, const std::vector<double>& radii,
                            double tol, int samples_per_unit) {
    if (p < 1.0) throw std::invalid_argument("besicovitch_seminorm: p must be >= 1");
    auto fp = [&](const double* y) { return std::pow(std::abs(f(y)), p); };
    const MeanEstimate est = mean_value(fp, spec, radii, tol, samples_per_unit);
    return std::pow(est.value, 1.0 / p);
}

TorusField spectrum_convolve(const TorusField& u, const TorusField& v) {
    if (!u.same_grid(v)) throw std::invalid_argument("spectrum_convolve: grid mismatch");
    TorusField out = u;
    out.v = convolve_circular(u.v, v.v, u.n, 1.0 / static_cast<double>(u.size()));
    return out;
}

TorusField spectral_derivative(const TorusField& u, int axis) {
    if (axis < 0 || axis >= u.spec.space_dim)
        throw std::invalid_argument("spectral_derivative: invalid axis");
    auto spec = fft_forward(u.v, u.n);
    const int d = u.spec.torus_dim;
    for_each_index(u.n, [&](size_t f, const std::vector<int>& idx) {
        double freq = 0.0;
        bool nyquist = false;
        for (int k = 0; k < d; ++k) {
            if (idx[k] == u.n[k] / 2 && u.n[k] > 1) nyquist = true;
            freq += static_cast<double>(signed_mode(idx[k], u.n[k])) * u.spec.omega(k, axis);
        }
        if (nyquist) {
            spec[f] = 0.0;
        } else {
            spec[f] *= std::complex<double>(0.0, 2.0 * std::numbers::pi * freq);
        }
    });
    TorusField out = u;
    out.v = fft_backward_real(std::move(spec), u.n);
    return out;
}

TorusField torus_translate(const TorusField& u, const TorusPoint& r) {
    if (r.d != u.spec.torus_dim)
        throw std::invalid_argument("torus_translate: dimension mismatch");
    bool zero_shift = true;
    for (int k = 0; k < r.d; ++k)
        if (r.c[k] != 0.0) zero_shift = false;
    if (zero_shift) return u; // identity, exactly
    auto spec = fft_forward(u.v, u.n);
    for_each_index(u.n, [&](size_t f, const std::vector<int>& idx) {
        double phase = 0.0;
        for (int k = 0; k < u.spec.torus_dim; ++k)
            phase += static_cast<double>(signed_mode(idx[k], u.n[k])) * r.c[k];
        const double ang = 2.0 * std::numbers::pi * phase;
        spec[f] *= std::complex<double>(std::cos(ang), std::sin(ang));
    });
    TorusField out = u;
    out.v = fft_backward_real(std::move(spec), u.n);
    return out;
}

TorusField dealiased_product(const TorusField& u, const TorusField& v) {
    if (!u.same_grid(v)) throw std::invalid_argument("dealiased_product: grid mismatch");
    const int d = u.spec.torus_dim;
    std::vector<int> big(u.n);
    for (int& s : big) s *= 2;
    size_t big_total = 1;
    for (int s : big) big_total *= static_cast<size_t>(s);

    auto upsample = [&](const TorusField& w) {
        auto spec = fft_forward(w.v, w.n);
        std::vector<std::complex<double>> bs(big_total, 0.0);
        for_each_index(w.n, [&](size_t f, const std::vector<int>& idx) {
            size_t g = 0;
            for (int k = 0; k < d; ++k) {
                const int m = signed_mode(idx[k], w.n[k]);
                const int slot = m >= 0 ? m : big[k] + m;
                g = g * static_cast<size_t>(big[k]) + static_cast<size_t>(slot);
            }
            bs[g] = spec[f];
        });
        auto vals = fft_backward_real(std::move(bs), big);
        const double gain = static_cast<double>(big_total) / static_cast<double>(w.size());
        for (double& x : vals) x *= gain;
        return vals;
    };

    auto uu = upsample(u);
    auto vv = upsample(v);
    for (size_t i = 0; i < uu.size(); ++i) uu[i] *= vv[i];

    std::vector<std::complex<double>> ws(uu.begin(), uu.end());
    fft_nd(ws.data(), big, -1);
    TorusField out = u;
    std::vector<std::complex<double>> small(u.size(), 0.0);
    for_each_index(u.n, [&](size_t f, const std::vector<int>& idx) {
        bool nyquist = false;
        size_t g = 0;
        for (int k = 0; k < d; ++k) {
            const int m = signed_mode(idx[k], u.n[k]);
            if (idx[k] == u.n[k] / 2 && u.n[k] > 1) nyquist = true;
            const int slot = m >= 0 ? m : big[k] + m;
            g = g * static_cast<size_t>(big[k]) + static_cast<size_t>(slot);
        }
        small[f] = nyquist ? 0.0 : ws[g] / static_cast<double>(big_total) *
                                       static_cast<double>(u.size());
    });
    out.v = fft_backward_real(std::move(small), u.n);
    return out;
}

bool is_invariant(const TorusField& u, double tol) {
    for (int i = 0; i < u.spec.space_dim; ++i)
        if (spectral_derivative(u, i).sup_norm() >= tol) return false;
    return true;
}

void write_torus_csv(const TorusField& u, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_torus_csv: cannot open " + path);
    std::fprintf(fp, "# torus d=%d n=", u.spec.torus_dim);
    for (size_t k = 0; k < u.n.size(); ++k)
        std::fprintf(fp, "%s%d", k ? "," : "", u.n[k]);
    std::fprintf(fp, "\n");
    for (double x : u.v) std::fprintf(fp, "%.17g\n", x);
    std::fclose(fp);
}

} // namespace homog
