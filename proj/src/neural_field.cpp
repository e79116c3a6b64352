#include "homog/neural_field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "homog/errors.hpp"
#include "homog/fft.hpp"
#include "homog/par.hpp"

namespace homog {

namespace {
constexpr double kPi = std::numbers::pi;

// fixed-kernel circular convolution plan
struct ConvPlan {
    std::vector<int> dims;
    std::vector<std::complex<double>> kspec;
    double scale = 1.0;

    ConvPlan() = default;
    ConvPlan(const std::vector<double>& kernel, std::vector<int> d, double s)
        : dims(std::move(d)), kspec(fft_forward(kernel, dims)), scale(s) {}

    std::vector<double> apply(const std::vector<double>& f) const {
        auto fs = fft_forward(f, dims);
        for (size_t i = 0; i < fs.size(); ++i) fs[i] *= kspec[i];
        auto out = fft_backward_real(std::move(fs), dims);
        for (double& x : out) x *= scale;
        return out;
    }
};

// wrap-box coordinate of index i on an axis of n points: kernel-centered
double centered_coord(int i, int n, double h) {
    return (i <= n / 2 ? i : i - n) * h;
}

std::vector<double> roll(const std::vector<double>& u, const std::vector<int>& dims,
                         const std::vector<int>& shift) {
    std::vector<double> out(u.size());
    for_each_index(dims, [&](size_t f, const std::vector<int>& idx) {
        size_t g = 0;
        for (size_t k = 0; k < dims.size(); ++k) {
            int j = idx[k] + shift[k];
            j = ((j % dims[k]) + dims[k]) % dims[k];
            g = g * static_cast<size_t>(dims[k]) + static_cast<size_t>(j);
        }
        out[f] = u[g];
    });
    return out;
}

} // namespace

void validate_wc(const WilsonCowanConfig& cfg, double eps_ref, double lambda_max,
                 unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ydist(-10.0, 10.0);
    std::uniform_real_distribution<double> ldist(0.0, lambda_max);

    // kernel nonnegativity and trace mass on a quadrature grid
    const double S = cfg.kernel_support;
    const int m = 1 << 12;
    double mass = 0.0;
    if (cfg.dim == 1) {
        const double h = 2.0 * S / m;
        for (int i = 0; i < m; ++i) {
            const double z = -S + (i + 0.5) * h;
            const double zeps = z / eps_ref;
            const double val = cfg.kernel_profile(&z) * cfg.kernel_osc(dirac_point(&zeps, cfg.spec));
            if (val < -1e-12)
                throw ValidationError("kernel nonnegativity",
                                      "connectivity kernel takes negative values");
            mass += val * h;
        }
    } else {
        const int mm = 1 << 8;
        const double h = 2.0 * S / mm;
        for (int i = 0; i < mm; ++i) {
            for (int j = 0; j < mm; ++j) {
                double z[2] = {-S + (i + 0.5) * h, -S + (j + 0.5) * h};
                double zeps[2] = {z[0] / eps_ref, z[1] / eps_ref};
                const double val =
                    cfg.kernel_profile(z) * cfg.kernel_osc(dirac_point(zeps, cfg.spec));
                if (val < -1e-12)
                    throw ValidationError("kernel nonnegativity",
                                          "connectivity kernel takes negative values");
                mass += val * h * h;
            }
        }
    }
    if (mass > 1.0 + 1e-9)
        throw ValidationError("kernel mass",
                              "trace mass of the connectivity kernel exceeds 1");

    // firing nonnegativity and Lipschitz bound on sampled pairs
    for (int t = 0; t < 512; ++t) {
        double y[4];
        for (int k = 0; k < cfg.dim; ++k) y[k] = ydist(rng);
        const TorusPoint p = dirac_point(y, cfg.spec);
        const double l1 = ldist(rng), l2 = ldist(rng);
        const double f1 = cfg.firing(p, l1), f2 = cfg.firing(p, l2);
        if (f1 < -1e-12 || f2 < -1e-12)
            throw ValidationError("firing nonnegativity", "firing rate takes negative values");
        if (std::abs(l1 - l2) > 1e-9 &&
            std::abs(f1 - f2) > cfg.k1 * (1.0 + 1e-9) * std::abs(l1 - l2))
            throw ValidationError("firing Lipschitz bound",
                                  "sampled Lipschitz quotient of the firing rate exceeds k1");
    }
}

FieldTrajectory solve_fine_wc(const WilsonCowanConfig& cfg, double eps, double dx, double dt,
                              int snap_stride) {
    if (eps <= 0.0) throw std::invalid_argument("solve_fine_wc: eps must be positive");
    if (dt > 0.5) throw std::invalid_argument("solve_fine_wc: dt must satisfy dt <= 1/2");
    const double L = cfg.box_half_width;
    const int n = static_cast<int>(std::lround(2.0 * L / dx));
    if (!is_pow2(n))
        throw std::invalid_argument("solve_fine_wc: box must hold a power-of-two grid");
    std::vector<int> dims(static_cast<size_t>(cfg.dim), n);
    std::vector<int> shift(cfg.dim);
    for (int k = 0; k < cfg.dim; ++k) {
        const double s = cfg.shift_a[k] / dx;
        shift[k] = static_cast<int>(std::lround(s));
        if (std::abs(s - shift[k]) > 1e-9)
            throw std::invalid_argument("solve_fine_wc: shift a must be a grid multiple");
    }
    Grid grid = Grid::periodic_box(std::vector<double>(cfg.dim, -L),
                                   std::vector<double>(cfg.dim, 2.0 * L), dims);
    const size_t total = grid.size();
    const double cell = std::pow(dx, cfg.dim);

    // kernel samples, centered at index 0 with wrap
    std::vector<double> kvals(total);
    for_each_index(dims, [&](size_t f, const std::vector<int>& idx) {
        double z[4], zeps[4];
        for (int k = 0; k < cfg.dim; ++k) {
            z[k] = centered_coord(idx[k], n, dx);
            zeps[k] = z[k] / eps;
        }
        kvals[f] = cfg.kernel_profile(z) * cfg.kernel_osc(dirac_point(zeps, cfg.spec));
    });
    ConvPlan plan(kvals, dims, cell);

    // per-node Dirac points of x/eps for the firing argument
    std::vector<TorusPoint> nodes(total);
    for_each_index(dims, [&](size_t f, const std::vector<int>& idx) {
        double y[4];
        for (int k = 0; k < cfg.dim; ++k) y[k] = grid.coord(k, idx[k]) / eps;
        nodes[f] = dirac_point(y, cfg.spec);
    });

    std::vector<double> u(total);
    for_each_index(dims, [&](size_t f, const std::vector<int>& idx) {
        double x[4];
        for (int k = 0; k < cfg.dim; ++k) x[k] = grid.coord(k, idx[k]);
        u[f] = cfg.initial(x);
    });

    auto norm1 = [&](const std::vector<double>& w) {
        return par::sum(static_cast<std::ptrdiff_t>(total),
                        [&](std::ptrdiff_t i) { return std::abs(w[i]); }) *
               cell;
    };
    auto norm2 = [&](const std::vector<double>& w) {
        return std::sqrt(par::sum(static_cast<std::ptrdiff_t>(total),
                                  [&](std::ptrdiff_t i) { return w[i] * w[i]; }) *
                         cell);
    };

    // a-priori constant from the Gronwall envelope of the mild formulation
    std::vector<double> f0(total);
    par::for_each(static_cast<std::ptrdiff_t>(total),
                  [&](std::ptrdiff_t i) { f0[i] = cfg.firing(nodes[i], 0.0); });
    const double n0 = norm1(u) + norm2(u);
    const double m0 = norm1(f0) + norm2(f0);
    const double C = (n0 + cfg.T * m0) * std::exp((1.0 + cfg.k1) * cfg.T);

    auto rhs = [&](const std::vector<double>& w) {
        std::vector<double> fw(total);
        par::for_each(static_cast<std::ptrdiff_t>(total),
                      [&](std::ptrdiff_t i) { fw[i] = cfg.firing(nodes[i], w[i]); });
        auto out = plan.apply(fw);
        auto shifted = roll(w, dims, shift);
        par::for_each(static_cast<std::ptrdiff_t>(total),
                      [&](std::ptrdiff_t i) { out[i] -= shifted[i]; });
        return out;
    };

    const double guard = cfg.kernel_support +
                         std::accumulate(cfg.shift_a.begin(), cfg.shift_a.end(), 0.0,
                                         [](double a, double b) { return a + std::abs(b); }) +
                         cfg.T;
    auto guard_fraction = [&](const std::vector<double>& w, double l1w) {
        if (l1w <= 0.0) return 0.0;
        double band = 0.0;
        for_each_index(dims, [&](size_t f, const std::vector<int>& idx) {
            for (int k = 0; k < cfg.dim; ++k) {
                if (std::abs(grid.coord(k, idx[k])) > L - guard) {
                    band += std::abs(w[f]) * cell;
                    return;
                }
            }
        });
        return band / l1w;
    };

    FieldTrajectory traj;
    traj.bound_C = C;
    const int n_steps = static_cast<int>(std::lround(cfg.T / dt));
    auto record = [&](int step) {
        const double t = step * dt;
        const double l1 = norm1(u), l2 = norm2(u);
        traj.norm_times.push_back(t);
        traj.l1.push_back(l1);
        traj.l2.push_back(l2);
        if (l1 + l2 > 10.0 * C)
            throw SolverError(SolverErrorKind::divergence,
                              "solve_fine_wc: norms exceeded 10x the recorded bound", {l1, l2, C});
        if (step % snap_stride == 0 || step == n_steps) {
            traj.times.push_back(t);
            Field snap(grid);
            snap.v = u;
            traj.states.push_back(std::move(snap));
            traj.guard_fraction = std::max(traj.guard_fraction, guard_fraction(u, l1));
        }
    };
    record(0);
    for (int step = 1; step <= n_steps; ++step) {
        auto k1v = rhs(u);
        std::vector<double> mid(total);
        par::for_each(static_cast<std::ptrdiff_t>(total),
                      [&](std::ptrdiff_t i) { mid[i] = u[i] + dt * k1v[i]; });
        auto k2v = rhs(mid);
        par::for_each(static_cast<std::ptrdiff_t>(total), [&](std::ptrdiff_t i) {
            u[i] += 0.5 * dt * (k1v[i] + k2v[i]);
        });
        record(step);
    }
    return traj;
}

TorusPoint shift_limit_point(const std::vector<double>& a,
                             const std::vector<double>& eps_schedule, const AlgebraSpec& spec) {
    if (eps_schedule.empty())
        throw std::invalid_argument("shift_limit_point: empty schedule");
    std::vector<TorusPoint> pts;
    std::vector<double> flat_history;
    for (double e : eps_schedule) {
        double y[4];
        for (int k = 0; k < spec.space_dim; ++k) y[k] = a[k] / e;
        pts.push_back(dirac_point(y, spec));
        for (int k = 0; k < spec.torus_dim; ++k) flat_history.push_back(pts.back().c[k]);
    }
    for (size_t j = 1; j < pts.size(); ++j) {
        for (int k = 0; k < spec.torus_dim; ++k) {
            double d = std::abs(pts[j].c[k] - pts[0].c[k]);
            d = std::min(d, 1.0 - d); // torus distance
            if (d > 1e-9)
                throw SolverError(SolverErrorKind::subsequence,
                                  "shift_limit_point: fractional parts of a/eps vary along the "
                                  "schedule; no well-defined limit point",
                                  flat_history);
        }
    }
    return pts[0];
}

TwoScaleTrajectory solve_homogenized_wc(const WilsonCowanConfig& cfg, const TorusPoint& r,
                                        double dx, int torus_points, double dt,
                                        int snap_stride) {
    if (dt > 0.5) throw std::invalid_argument("solve_homogenized_wc: dt must satisfy dt <= 1/2");
    if (!is_pow2(torus_points))
        throw std::invalid_argument("solve_homogenized_wc: torus grid must be a power of two");
    const double L = cfg.box_half_width;
    const int n = static_cast<int>(std::lround(2.0 * L / dx));
    if (!is_pow2(n))
        throw std::invalid_argument("solve_homogenized_wc: box must hold a power-of-two grid");
    const int d = cfg.spec.torus_dim;
    std::vector<int> mdims(static_cast<size_t>(cfg.dim), n);
    std::vector<int> tdims(static_cast<size_t>(d), torus_points);
    std::vector<int> all_dims(mdims);
    all_dims.insert(all_dims.end(), tdims.begin(), tdims.end());

    std::vector<int> mshift(cfg.dim);
    for (int k = 0; k < cfg.dim; ++k) {
        const double s = cfg.shift_a[k] / dx;
        mshift[k] = static_cast<int>(std::lround(s));
        if (std::abs(s - mshift[k]) > 1e-9)
            throw std::invalid_argument("solve_homogenized_wc: shift a must be a grid multiple");
    }
    // snap r to the torus grid
    TwoScaleTrajectory traj;
    std::vector<int> tshift(d);
    for (int k = 0; k < d; ++k) {
        const double s = r.c[k] * torus_points;
        tshift[k] = static_cast<int>(std::lround(s)) % torus_points;
        traj.r_snap_distance =
            std::max(traj.r_snap_distance, std::abs(s - std::lround(s)) / torus_points);
    }
    std::vector<int> shift_all(mshift);
    shift_all.insert(shift_all.end(), tshift.begin(), tshift.end());

    Grid mgrid = Grid::periodic_box(std::vector<double>(cfg.dim, -L),
                                    std::vector<double>(cfg.dim, 2.0 * L), mdims);
    size_t total = 1;
    for (int dd : all_dims) total *= static_cast<size_t>(dd);
    const size_t ts = total / mgrid.size();
    const double cell = std::pow(dx, cfg.dim);

    // lifted kernel K_hat(z, s) = profile(z) osc(s), kernel-centered in z
    std::vector<double> kvals(total);
    for_each_index(all_dims, [&](size_t f, const std::vector<int>& idx) {
        double z[4];
        for (int k = 0; k < cfg.dim; ++k) z[k] = centered_coord(idx[k], n, dx);
        TorusPoint p;
        p.d = d;
        for (int k = 0; k < d; ++k) p.c[k] = static_cast<double>(idx[cfg.dim + k]) / torus_points;
        kvals[f] = cfg.kernel_profile(z) * cfg.kernel_osc(p);
    });
    ConvPlan plan(kvals, all_dims, cell / static_cast<double>(ts));

    // torus nodes for the firing argument
    std::vector<TorusPoint> tnodes(ts);
    for_each_index(tdims, [&](size_t f, const std::vector<int>& idx) {
        TorusPoint p;
        p.d = d;
        for (int k = 0; k < d; ++k) p.c[k] = static_cast<double>(idx[k]) / torus_points;
        tnodes[f] = p;
    });

    std::vector<double> u(total);
    for_each_index(mdims, [&](size_t mi, const std::vector<int>& midx) {
        double x[4];
        for (int k = 0; k < cfg.dim; ++k) x[k] = mgrid.coord(k, midx[k]);
        const double u0x = cfg.initial(x);
        for (size_t t = 0; t < ts; ++t) u[mi * ts + t] = u0x;
    });

    auto norm1 = [&](const std::vector<double>& w) {
        return par::sum(static_cast<std::ptrdiff_t>(total),
                        [&](std::ptrdiff_t i) { return std::abs(w[i]); }) *
               cell / static_cast<double>(ts);
    };
    auto norm2 = [&](const std::vector<double>& w) {
        return std::sqrt(par::sum(static_cast<std::ptrdiff_t>(total),
                                  [&](std::ptrdiff_t i) { return w[i] * w[i]; }) *
                         cell / static_cast<double>(ts));
    };

    auto rhs = [&](const std::vector<double>& w) {
        std::vector<double> fw(total);
        par::for_each(static_cast<std::ptrdiff_t>(total), [&](std::ptrdiff_t i) {
            fw[i] = cfg.firing(tnodes[static_cast<size_t>(i) % ts], w[i]);
        });
        auto out = plan.apply(fw);
        auto shifted = roll(w, all_dims, shift_all);
        par::for_each(static_cast<std::ptrdiff_t>(total),
                      [&](std::ptrdiff_t i) { out[i] -= shifted[i]; });
        return out;
    };

    const int n_steps = static_cast<int>(std::lround(cfg.T / dt));
    auto record = [&](int step) {
        const double t = step * dt;
        traj.norm_times.push_back(t);
        traj.l1.push_back(norm1(u));
        traj.l2.push_back(norm2(u));
        if (step % snap_stride == 0 || step == n_steps) {
            traj.times.push_back(t);
            TwoScaleField snap(mgrid, cfg.spec, tdims);
            snap.v = u;
            traj.states.push_back(std::move(snap));
        }
    };
    record(0);
    for (int step = 1; step <= n_steps; ++step) {
        auto k1v = rhs(u);
        std::vector<double> mid(total);
        par::for_each(static_cast<std::ptrdiff_t>(total),
                      [&](std::ptrdiff_t i) { mid[i] = u[i] + dt * k1v[i]; });
        auto k2v = rhs(mid);
        par::for_each(static_cast<std::ptrdiff_t>(total), [&](std::ptrdiff_t i) {
            u[i] += 0.5 * dt * (k1v[i] + k2v[i]);
        });
        record(step);
    }
    return traj;
}

namespace {

// trapezoid weights over snapshot times
std::vector<double> time_weights(const std::vector<double>& t) {
    std::vector<double> w(t.size(), 0.0);
    for (size_t j = 0; j + 1 < t.size(); ++j) {
        const double half = 0.5 * (t[j + 1] - t[j]);
        w[j] += half;
        w[j + 1] += half;
    }
    return w;
}

} // namespace

SigmaTestResult compare_wc(const std::vector<double>& eps,
                           const std::vector<FieldTrajectory>& fine,
                           const TwoScaleTrajectory& homog, const AlgebraSpec& spec,
                           const std::vector<TestFn>& bank, double tol) {
    if (eps.size() != fine.size())
        throw std::invalid_argument("compare_wc: one trajectory per eps required");
    if (bank.empty()) throw std::invalid_argument("compare_wc: empty test bank");
    SigmaTestResult r;
    r.eps = eps;

    // limit pairings over the homogenized trajectory
    const auto tw = time_weights(homog.times);
    std::vector<double> limits(bank.size(), 0.0);
    for (size_t b = 0; b < bank.size(); ++b) {
        TorusField oscf = TorusField::sample(spec, homog.states[0].torus_n, bank[b].osc);
        double acc = 0.0;
        for (size_t j = 0; j < homog.times.size(); ++j) {
            const TwoScaleField& s = homog.states[j];
            const size_t ts = s.torus_size();
            std::vector<double> xt(s.macro.rank() + 1);
            double space = 0.0;
            for_each_index(s.macro.n, [&](size_t mi, const std::vector<int>& midx) {
                double w = 1.0;
                for (int k = 0; k < s.macro.rank(); ++k) {
                    xt[k] = s.macro.coord(k, midx[k]);
                    w *= s.macro.h[k];
                }
                xt[s.macro.rank()] = homog.times[j];
                const double* base = s.v.data() + mi * ts;
                double cellsum = 0.0;
                for (size_t t = 0; t < ts; ++t) cellsum += base[t] * oscf.v[t];
                space += w * bank[b].macro(xt.data()) * cellsum / static_cast<double>(ts);
            });
            acc += tw[j] * space;
        }
        limits[b] = acc;
    }

    for (size_t je = 0; je < eps.size(); ++je) {
        const FieldTrajectory& tr = fine[je];
        if (tr.times.size() != homog.times.size())
            throw std::invalid_argument("compare_wc: snapshot schedules differ");
        const auto twf = time_weights(tr.times);
        for (size_t b = 0; b < bank.size(); ++b) {
            double acc = 0.0;
            for (size_t j = 0; j < tr.times.size(); ++j) {
                const Field& s = tr.states[j];
                const int rank = s.grid.rank();
                std::vector<double> xt(rank + 1);
                double y[4];
                double space = 0.0;
                for_each_index(s.grid.n, [&](size_t i, const std::vector<int>& idx) {
                    double w = 1.0;
                    for (int k = 0; k < rank; ++k) {
                        xt[k] = s.grid.coord(k, idx[k]);
                        y[k] = xt[k] / eps[je];
                        w *= s.grid.h[k];
                    }
                    xt[rank] = tr.times[j];
                    space += w * s.v[i] * bank[b].macro(xt.data()) *
                             bank[b].osc(dirac_point(y, spec));
                });
                acc += twf[j] * space;
            }
            r.rows.push_back({eps[je], bank[b].id, acc, limits[b], std::abs(acc - limits[b])});
        }
    }
    finalize_sigma_result(r, tol);
    return r;
}

std::vector<TestFn> space_time_bank(const AlgebraSpec& spec, double box_half_width, double T,
                                    int x_bumps, int t_bumps, int torus_modes) {
    // space bumps on (-L, L), time bumps on (0, T), torus modes as in the
    // default bank
    Grid dummy = Grid::closed_box({-box_half_width}, {2.0 * box_half_width}, {2});
    auto base = default_test_bank(spec, dummy, x_bumps, torus_modes);
    std::vector<TestFn> bank;
    for (int jt = 0; jt < t_bumps; ++jt) {
        const double ct = (jt + 0.5) * T / t_bumps;
        const double wt = 1.5 * T / t_bumps;
        for (const auto& f : base) {
            TestFn g;
            g.id = f.id + "*t" + std::to_string(jt);
            const auto fmacro = f.macro;
            const int dim = spec.space_dim;
            g.macro = [fmacro, ct, wt, dim](const double* xt) {
                return fmacro(xt) * bspline_bump(xt[dim], ct, wt);
            };
            g.osc = f.osc;
            bank.push_back(std::move(g));
        }
    }
    return bank;
}

} // namespace homog
