#include "homog/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "homog/fft.hpp"
#include "homog/par.hpp"

namespace homog {

TwoScaleField::TwoScaleField(Grid m, AlgebraSpec s, std::vector<int> tn)
    : macro(std::move(m)), spec(std::move(s)), torus_n(std::move(tn)) {
    size_t ts = 1;
    for (int d : torus_n) {
        if (!is_pow2(d))
            throw std::invalid_argument("TwoScaleField: torus sizes must be powers of two");
        ts *= static_cast<size_t>(d);
    }
    if (static_cast<int>(torus_n.size()) != spec.torus_dim)
        throw std::invalid_argument("TwoScaleField: torus rank mismatch");
    v.assign(macro.size() * ts, 0.0);
}

size_t TwoScaleField::torus_size() const {
    size_t ts = 1;
    for (int d : torus_n) ts *= static_cast<size_t>(d);
    return ts;
}

TwoScaleField TwoScaleField::sample(
    const Grid& m, const AlgebraSpec& s, const std::vector<int>& tn,
    const std::function<double(const double*, const TorusPoint&)>& fn) {
    TwoScaleField out(m, s, tn);
    const size_t ts = out.torus_size();
    const int rank = m.rank();
    std::vector<double> x(rank);
    for_each_index(m.n, [&](size_t mi, const std::vector<int>& midx) {
        for (int k = 0; k < rank; ++k) x[k] = m.coord(k, midx[k]);
        for_each_index(out.torus_n, [&](size_t ti, const std::vector<int>& tidx) {
            TorusPoint p;
            p.d = out.spec.torus_dim;
            for (int k = 0; k < p.d; ++k) p.c[k] = static_cast<double>(tidx[k]) / out.torus_n[k];
            out.v[mi * ts + ti] = fn(x.data(), p);
        });
    });
    return out;
}

TorusField TwoScaleField::torus_slice(size_t macro_idx) const {
    TorusField f(spec, torus_n);
    const size_t ts = f.size();
    std::copy(v.begin() + macro_idx * ts, v.begin() + (macro_idx + 1) * ts, f.v.begin());
    return f;
}

void TwoScaleField::set_torus_slice(size_t macro_idx, const TorusField& f) {
    const size_t ts = f.size();
    std::copy(f.v.begin(), f.v.end(), v.begin() + macro_idx * ts);
}

namespace {

double macro_weight(const Grid& g, const std::vector<int>& idx) {
    double w = 1.0;
    for (int k = 0; k < g.rank(); ++k) {
        double wk = g.h[k];
        if (!g.wrap[k] && (idx[k] == 0 || idx[k] == g.n[k] - 1)) wk *= 0.5;
        w *= wk;
    }
    return w;
}

} // namespace

double TwoScaleField::lp_norm(double p) const {
    if (p < 1.0) throw std::invalid_argument("TwoScaleField::lp_norm: p must be >= 1");
    const size_t ts = torus_size();
    double acc = 0.0;
    for_each_index(macro.n, [&](size_t mi, const std::vector<int>& midx) {
        double cell = 0.0;
        const double* base = v.data() + mi * ts;
        for (size_t t = 0; t < ts; ++t) cell += std::pow(std::abs(base[t]), p);
        acc += macro_weight(macro, midx) * cell / static_cast<double>(ts);
    });
    return std::pow(acc, 1.0 / p);
}

bool TwoScaleField::same_shape(const TwoScaleField& o) const {
    return macro.n == o.macro.n && torus_n == o.torus_n && spec.same_torus(o.spec);
}

double bspline_bump(double t, double c, double w) {
    const double u = 2.0 * std::abs(t - c) / w;
    if (u >= 2.0) return 0.0;
    if (u <= 1.0) return 2.0 / 3.0 - u * u + 0.5 * u * u * u;
    const double s = 2.0 - u;
    return s * s * s / 6.0;
}

std::vector<TestFn> default_test_bank(const AlgebraSpec& spec, const Grid& macro,
                                      int macro_bumps, int torus_modes) {
    std::vector<TestFn> bank;
    // compactly supported macro bumps along axis 0 (constant along the rest);
    // compact support keeps the boundary terms of oscillatory pairings small
    const double lo = macro.origin[0];
    const double len = macro.h[0] * (macro.n[0] - (macro.wrap[0] ? 0 : 1));
    std::vector<std::function<double(const double*)>> bumps;
    for (int j = 0; j < macro_bumps; ++j) {
        const double c = lo + (j + 0.5) * len / macro_bumps;
        const double w = 1.5 * len / macro_bumps;
        bumps.emplace_back([c, w](const double* x) { return bspline_bump(x[0], c, w); });
    }
    // torus modes: constant, then cos/sin of the lowest frequencies per axis
    std::vector<std::pair<std::string, std::function<double(const TorusPoint&)>>> modes;
    modes.emplace_back("1", [](const TorusPoint&) { return 1.0; });
    int axis = 0, k = 1;
    bool use_cos = true;
    while (static_cast<int>(modes.size()) < torus_modes) {
        const int a = axis, kk = k;
        if (use_cos) {
            modes.emplace_back("cos" + std::to_string(kk) + "_s" + std::to_string(a),
                               [a, kk](const TorusPoint& p) {
                                   return std::cos(2.0 * std::numbers::pi * kk * p.c[a]);
                               });
        } else {
            modes.emplace_back("sin" + std::to_string(kk) + "_s" + std::to_string(a),
                               [a, kk](const TorusPoint& p) {
                                   return std::sin(2.0 * std::numbers::pi * kk * p.c[a]);
                               });
            axis = (axis + 1) % spec.torus_dim;
            if (axis == 0) ++k;
        }
        use_cos = !use_cos;
    }
    for (size_t b = 0; b < bumps.size(); ++b) {
        for (size_t m = 0; m < modes.size(); ++m) {
            TestFn f;
            f.id = "phi" + std::to_string(b) + "*" + modes[m].first;
            f.macro = bumps[b];
            f.osc = modes[m].second;
            bank.push_back(std::move(f));
        }
    }
    return bank;
}

void EpsSequence::validate() const {
    if (eps.empty()) throw std::invalid_argument("EpsSequence: empty schedule");
    for (size_t j = 0; j < eps.size(); ++j) {
        if (eps[j] <= 0.0) throw std::invalid_argument("EpsSequence: eps must be positive");
        if (j > 0 && eps[j] >= eps[j - 1])
            throw std::invalid_argument("EpsSequence: eps must be strictly decreasing");
    }
    if (!fields.empty() && fields.size() != eps.size())
        throw std::invalid_argument("EpsSequence: one field per eps required");
}

std::vector<double> dyadic_eps_schedule(int k_lo, int k_hi) {
    std::vector<double> out;
    for (int k = k_lo; k <= k_hi; ++k) out.push_back(std::pow(2.0, -k));
    return out;
}

Field trace_sample(const std::function<double(const double*, const double*)>& psi, double eps,
                   const Grid& macro) {
    if (eps <= 0.0) throw std::invalid_argument("trace_sample: eps must be positive");
    const int rank = macro.rank();
    std::vector<double> y(rank);
    return Field::sample(macro, [&](const double* x) {
        for (int k = 0; k < rank; ++k) y[k] = x[k] / eps;
        return psi(x, y.data());
    });
}

Field trace_sample(const TestFn& psi, const AlgebraSpec& spec, double eps, const Grid& macro) {
    if (eps <= 0.0) throw std::invalid_argument("trace_sample: eps must be positive");
    const int sd = spec.space_dim;
    std::vector<double> y(sd);
    return Field::sample(macro, [&](const double* x) {
        for (int k = 0; k < sd; ++k) y[k] = x[k] / eps;
        return psi.macro(x) * psi.osc(dirac_point(y.data(), spec));
    });
}

double weak_sigma_pairing(const Field& u_eps, const TestFn& psi, const AlgebraSpec& spec,
                          double eps) {
    if (eps <= 0.0) throw std::invalid_argument("weak_sigma_pairing: eps must be positive");
    const Grid& g = u_eps.grid;
    const int sd = spec.space_dim;
    if (g.rank() < sd) throw std::invalid_argument("weak_sigma_pairing: grid rank too small");
    double acc = 0.0;
    std::vector<double> x(g.rank()), y(sd);
    for_each_index(g.n, [&](size_t i, const std::vector<int>& idx) {
        for (int k = 0; k < g.rank(); ++k) x[k] = g.coord(k, idx[k]);
        for (int k = 0; k < sd; ++k) y[k] = x[k] / eps;
        acc += macro_weight(g, idx) * u_eps.v[i] * psi.macro(x.data()) *
               psi.osc(dirac_point(y.data(), spec));
    });
    return acc;
}

double limit_pairing(const TwoScaleField& u0, const TestFn& psi) {
    TorusField oscf = TorusField::sample(u0.spec, u0.torus_n, psi.osc);
    const size_t ts = u0.torus_size();
    double acc = 0.0;
    std::vector<double> x(u0.macro.rank());
    for_each_index(u0.macro.n, [&](size_t mi, const std::vector<int>& midx) {
        for (int k = 0; k < u0.macro.rank(); ++k) x[k] = u0.macro.coord(k, midx[k]);
        const double* base = u0.v.data() + mi * ts;
        double cell = 0.0;
        for (size_t t = 0; t < ts; ++t) cell += base[t] * oscf.v[t];
        acc += macro_weight(u0.macro, midx) * psi.macro(x.data()) * cell /
               static_cast<double>(ts);
    });
    return acc;
}

void finalize_sigma_result(SigmaTestResult& r, double tol) {
    // relative scale: largest limit pairing over the bank (absolute floor)
    double scale = 0.0;
    for (const auto& row : r.rows) scale = std::max(scale, std::abs(row.limit));
    scale = std::max(scale, 1e-12);
    r.max_residual.assign(r.eps.size(), 0.0);
    for (const auto& row : r.rows) {
        const auto it = std::find(r.eps.begin(), r.eps.end(), row.eps);
        const size_t j = static_cast<size_t>(it - r.eps.begin());
        r.max_residual[j] = std::max(r.max_residual[j], std::abs(row.residual) / scale);
    }
    for (size_t j = 0; j < r.norm_residual.size(); ++j)
        r.max_residual[j] = std::max(r.max_residual[j], r.norm_residual[j] / scale);
    r.final_residual = r.max_residual.empty() ? 0.0 : r.max_residual.back();
    bool decreasing = true;
    const size_t n = r.max_residual.size();
    for (size_t j = n >= 3 ? n - 2 : 1; j < n; ++j)
        if (r.max_residual[j] > r.max_residual[j - 1] + 1e-15) decreasing = false;
    r.verdict = decreasing && r.final_residual < tol;
}

SigmaTestResult sigma_residuals(const EpsSequence& seq, const TwoScaleField& u0,
                                const std::vector<TestFn>& bank, bool strong_mode, double p,
                                double tol) {
    seq.validate();
    if (bank.empty()) throw std::invalid_argument("sigma_residuals: empty test bank");
    SigmaTestResult r;
    r.eps = seq.eps;
    std::vector<double> limits(bank.size());
    for (size_t b = 0; b < bank.size(); ++b) limits[b] = limit_pairing(u0, bank[b]);
    const double limit_norm = u0.lp_norm(p);
    for (size_t j = 0; j < seq.eps.size(); ++j) {
        for (size_t b = 0; b < bank.size(); ++b) {
            const double pairing =
                weak_sigma_pairing(seq.fields[j], bank[b], u0.spec, seq.eps[j]);
            r.rows.push_back({seq.eps[j], bank[b].id, pairing, limits[b],
                              std::abs(pairing - limits[b])});
        }
        if (strong_mode) r.norm_residual.push_back(std::abs(lp_norm(seq.fields[j], p) - limit_norm));
    }
    finalize_sigma_result(r, tol);
    return r;
}

TwoScaleField micro_translate_limit(const TwoScaleField& u0, const std::vector<double>& a) {
    if (static_cast<int>(a.size()) != u0.spec.space_dim)
        throw std::invalid_argument("micro_translate_limit: shift rank mismatch");
    const TorusPoint da = dirac_point(a.data(), u0.spec);
    TwoScaleField out = u0;
    const size_t nm = u0.macro_size();
    par::for_each(static_cast<std::ptrdiff_t>(nm), [&](std::ptrdiff_t mi) {
        out.set_torus_slice(static_cast<size_t>(mi),
                            torus_translate(u0.torus_slice(static_cast<size_t>(mi)), da));
    });
    return out;
}

TwoScaleField macro_translate_limit(const TwoScaleField& u0, const std::vector<double>& a,
                                    const TorusPoint& r, Extension ext) {
    const Grid& g = u0.macro;
    if (static_cast<int>(a.size()) != g.rank())
        throw std::invalid_argument("macro_translate_limit: shift rank mismatch");
    std::vector<int> shift(g.rank());
    for (int k = 0; k < g.rank(); ++k) {
        const double s = a[k] / g.h[k];
        shift[k] = static_cast<int>(std::lround(s));
        if (std::abs(s - shift[k]) > 1e-9)
            throw std::invalid_argument("macro_translate_limit: shift must be a grid multiple");
    }
    TwoScaleField out = u0;
    const size_t ts = u0.torus_size();
    for_each_index(g.n, [&](size_t mi, const std::vector<int>& midx) {
        std::vector<int> src(midx);
        bool inside = true;
        for (int k = 0; k < g.rank(); ++k) {
            src[k] += shift[k];
            if (src[k] < 0 || src[k] >= g.n[k]) {
                if (ext == Extension::none)
                    throw std::domain_error(
                        "macro_translate_limit: shift leaves the stored macro domain");
                if (ext == Extension::periodic) {
                    src[k] = ((src[k] % g.n[k]) + g.n[k]) % g.n[k];
                } else {
                    inside = false;
                }
            }
        }
        if (!inside) {
            std::fill(out.v.begin() + mi * ts, out.v.begin() + (mi + 1) * ts, 0.0);
        } else {
            const size_t si = g.flat(src);
            std::copy(u0.v.begin() + si * ts, u0.v.begin() + (si + 1) * ts,
                      out.v.begin() + mi * ts);
        }
    });
    const size_t nm = out.macro_size();
    par::for_each(static_cast<std::ptrdiff_t>(nm), [&](std::ptrdiff_t mi) {
        out.set_torus_slice(static_cast<size_t>(mi),
                            torus_translate(out.torus_slice(static_cast<size_t>(mi)), r));
    });
    return out;
}

namespace {

void check_truncation(const TwoScaleField& f) {
    double maxabs = 0.0;
    for (double x : f.v) maxabs = std::max(maxabs, std::abs(x));
    if (maxabs == 0.0) return;
    const size_t ts = f.torus_size();
    double boundary = 0.0;
    for_each_index(f.macro.n, [&](size_t mi, const std::vector<int>& midx) {
        bool on_boundary = false;
        for (int k = 0; k < f.macro.rank(); ++k)
            if (midx[k] == 0 || midx[k] == f.macro.n[k] - 1) on_boundary = true;
        if (!on_boundary) return;
        const double* base = f.v.data() + mi * ts;
        for (size_t t = 0; t < ts; ++t) boundary = std::max(boundary, std::abs(base[t]));
    });
    if (boundary > 1e-8 * maxabs)
        throw std::invalid_argument(
            "double_convolution: truncation box too small (boundary values above 1e-8 of max)");
}

} // namespace

TwoScaleField double_convolution(const TwoScaleField& u0, const TwoScaleField& v0) {
    if (u0.torus_n != v0.torus_n || !u0.spec.same_torus(v0.spec))
        throw std::invalid_argument("double_convolution: torus grid mismatch");
    const Grid& gu = u0.macro;
    const Grid& gv = v0.macro;
    if (gu.rank() != gv.rank())
        throw std::invalid_argument("double_convolution: macro rank mismatch");
    double hscale = 1.0;
    for (int k = 0; k < gu.rank(); ++k) {
        if (std::abs(gu.h[k] - gv.h[k]) > 1e-12 * gu.h[k])
            throw std::invalid_argument("double_convolution: macro spacing mismatch");
        hscale *= gu.h[k];
    }
    check_truncation(v0);

    const int mrank = gu.rank();
    std::vector<int> mdims_out(mrank), padded(mrank);
    for (int k = 0; k < mrank; ++k) {
        mdims_out[k] = gu.n[k] + gv.n[k] - 1;
        int p = 1;
        while (p < mdims_out[k]) p <<= 1;
        padded[k] = p;
    }
    std::vector<int> all_dims(padded);
    all_dims.insert(all_dims.end(), u0.torus_n.begin(), u0.torus_n.end());
    size_t total = 1;
    for (int d : all_dims) total *= static_cast<size_t>(d);
    const size_t ts = u0.torus_size();

    auto embed = [&](const TwoScaleField& f) {
        std::vector<std::complex<double>> a(total, 0.0);
        for_each_index(f.macro.n, [&](size_t mi, const std::vector<int>& midx) {
            size_t base = 0;
            for (int k = 0; k < mrank; ++k)
                base = base * static_cast<size_t>(padded[k]) + static_cast<size_t>(midx[k]);
            base *= ts;
            const double* src = f.v.data() + mi * ts;
            for (size_t t = 0; t < ts; ++t) a[base + t] = src[t];
        });
        return a;
    };
    auto au = embed(u0);
    auto av = embed(v0);
    fft_nd(au.data(), all_dims, -1);
    fft_nd(av.data(), all_dims, -1);
    for (size_t i = 0; i < total; ++i) au[i] *= av[i];
    fft_nd(au.data(), all_dims, +1);

    std::vector<double> origin(gu.origin);
    for (int k = 0; k < mrank; ++k) origin[k] += gv.origin[k];
    Grid gout(mdims_out, gu.h, origin, std::vector<uint8_t>(mdims_out.size(), 0));
    TwoScaleField out(gout, u0.spec, u0.torus_n);
    const double scale = hscale / (static_cast<double>(total) * static_cast<double>(ts));
    for_each_index(mdims_out, [&](size_t mo, const std::vector<int>& midx) {
        size_t base = 0;
        for (int k = 0; k < mrank; ++k)
            base = base * static_cast<size_t>(padded[k]) + static_cast<size_t>(midx[k]);
        base *= ts;
        double* dst = out.v.data() + mo * ts;
        for (size_t t = 0; t < ts; ++t) dst[t] = au[base + t].real() * scale;
    });
    return out;
}

SigmaTestResult convolution_limit_check(const EpsSequence& u_seq, const EpsSequence& v_seq,
                                        const TwoScaleField& u0, const TwoScaleField& v0,
                                        const std::vector<TestFn>& bank, double p, double q,
                                        double m, double tol) {
    if (std::abs(1.0 / p + 1.0 / q - 1.0 - 1.0 / m) > 1e-12)
        throw std::invalid_argument("convolution_limit_check: exponents must satisfy "
                                    "1/p + 1/q = 1 + 1/m");
    u_seq.validate();
    v_seq.validate();
    if (u_seq.eps != v_seq.eps)
        throw std::invalid_argument("convolution_limit_check: eps schedules differ");
    if (bank.empty()) throw std::invalid_argument("convolution_limit_check: empty test bank");

    const TwoScaleField limit_field = double_convolution(u0, v0);
    SigmaTestResult r;
    r.eps = u_seq.eps;
    std::vector<double> limits(bank.size());
    for (size_t b = 0; b < bank.size(); ++b) limits[b] = limit_pairing(limit_field, bank[b]);
    for (size_t j = 0; j < u_seq.eps.size(); ++j) {
        const Field w = fft_convolve(u_seq.fields[j], v_seq.fields[j], ConvMode::zero_padded);
        for (size_t b = 0; b < bank.size(); ++b) {
            const double pairing = weak_sigma_pairing(w, bank[b], u0.spec, u_seq.eps[j]);
            r.rows.push_back({u_seq.eps[j], bank[b].id, pairing, limits[b],
                              std::abs(pairing - limits[b])});
        }
    }
    finalize_sigma_result(r, tol);
    return r;
}

namespace {

Field central_diff(const Field& u, int axis) {
    Field out(u.grid);
    const Grid& g = u.grid;
    const double inv2h = 1.0 / (2.0 * g.h[axis]);
    for_each_index(g.n, [&](size_t i, const std::vector<int>& idx) {
        std::vector<int> up(idx), dn(idx);
        up[axis] += 1;
        dn[axis] -= 1;
        if (g.wrap[axis]) {
            up[axis] %= g.n[axis];
            dn[axis] = (dn[axis] + g.n[axis]) % g.n[axis];
            out.v[i] = (u.v[g.flat(up)] - u.v[g.flat(dn)]) * inv2h;
        } else if (idx[axis] == 0) {
            std::vector<int> up2(idx);
            up2[axis] += 2;
            out.v[i] = (-3.0 * u.v[i] + 4.0 * u.v[g.flat(up)] - u.v[g.flat(up2)]) * inv2h;
        } else if (idx[axis] == g.n[axis] - 1) {
            std::vector<int> dn2(idx);
            dn2[axis] -= 2;
            out.v[i] = (3.0 * u.v[i] - 4.0 * u.v[g.flat(dn)] + u.v[g.flat(dn2)]) * inv2h;
        } else {
            out.v[i] = (u.v[g.flat(up)] - u.v[g.flat(dn)]) * inv2h;
        }
    });
    return out;
}

} // namespace

SigmaTestResult gradient_decomposition_check(const EpsSequence& u_seq, const Field& u0,
                                             const TwoScaleField& u1,
                                             const std::vector<TestFn>& bank, double tol) {
    u_seq.validate();
    if (bank.empty())
        throw std::invalid_argument("gradient_decomposition_check: empty test bank");
    if (u0.grid.n != u1.macro.n)
        throw std::invalid_argument("gradient_decomposition_check: u0 and u1 macro grids differ");
    const int sd = u1.spec.space_dim;
    SigmaTestResult r;
    r.eps = u_seq.eps;

    // limit per axis: grad u0 (lifted, constant in s) + spectral grad_y u1
    std::vector<TwoScaleField> limits;
    const size_t ts = u1.torus_size();
    for (int ax = 0; ax < sd; ++ax) {
        const Field du0 = central_diff(u0, ax);
        TwoScaleField lim = u1;
        par::for_each(static_cast<std::ptrdiff_t>(u1.macro_size()), [&](std::ptrdiff_t mi) {
            TorusField d1 = spectral_derivative(u1.torus_slice(static_cast<size_t>(mi)), ax);
            for (size_t t = 0; t < ts; ++t)
                lim.v[static_cast<size_t>(mi) * ts + t] = du0.v[static_cast<size_t>(mi)] + d1.v[t];
        });
        limits.push_back(std::move(lim));
    }

    for (size_t j = 0; j < u_seq.eps.size(); ++j) {
        for (int ax = 0; ax < sd; ++ax) {
            const Field du = central_diff(u_seq.fields[j], ax);
            for (const auto& psi : bank) {
                const double pairing = weak_sigma_pairing(du, psi, u1.spec, u_seq.eps[j]);
                const double limit = limit_pairing(limits[ax], psi);
                r.rows.push_back({u_seq.eps[j], psi.id + "/dx" + std::to_string(ax), pairing,
                                  limit, std::abs(pairing - limit)});
            }
        }
    }
    finalize_sigma_result(r, tol);
    return r;
}

TwoScaleField lift_tensor(const TestFn& psi, const Grid& macro, const AlgebraSpec& spec,
                          const std::vector<int>& torus_n) {
    return TwoScaleField::sample(macro, spec, torus_n,
                                 [&](const double* x, const TorusPoint& s) {
                                     return psi.macro(x) * psi.osc(s);
                                 });
}

void write_sigma_csv(const SigmaTestResult& r, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_sigma_csv: cannot open " + path);
    std::fprintf(fp, "# sigma test result\n");
    std::fprintf(fp, "eps,psi_id,pairing,limit,residual\n");
    for (const auto& row : r.rows)
        std::fprintf(fp, "%.17g,%s,%.17g,%.17g,%.17g\n", row.eps, row.psi_id.c_str(),
                     row.pairing, row.limit, row.residual);
    std::fclose(fp);
}

} // namespace homog
