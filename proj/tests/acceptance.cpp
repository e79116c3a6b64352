// Acceptance suite: one check per criterion, each printed as a single
// pass/fail line with its measured quantities and runtime budget.
// Exit status = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "homog/algebra.hpp"
#include "homog/errors.hpp"
#include "homog/fft.hpp"
#include "homog/neural_field.hpp"
#include "homog/nonlocal_heat.hpp"
#include "homog/serial_ref.hpp"
#include "homog/sigma.hpp"

using namespace homog;
namespace fs = std::filesystem;

namespace {
constexpr double kPi = std::numbers::pi;
using clk = std::chrono::steady_clock;

int g_failures = 0;

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    clk::time_point t0 = clk::now();
    bool ok = true;
    std::string detail;

    Criterion(int id_, const char* name_, double budget) : id(id_), name(name_), budget_seconds(budget) {}

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
    void finish() {
        const double secs = std::chrono::duration<double>(clk::now() - t0).count();
        if (secs > budget_seconds) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + std::string("over the runtime budget");
        }
        std::printf("[%s] %d. %s (%.1fs/%.0fs%s%s)\n", ok ? "PASS" : "FAIL", id, name, secs,
                    budget_seconds, detail.empty() ? "" : "; ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++g_failures;
    }
};

// random trigonometric polynomial on the 1-torus
struct TrigPoly {
    double c0;
    std::vector<std::array<double, 3>> modes; // k, a, b

    double operator()(const TorusPoint& p) const {
        double s = c0;
        for (const auto& m : modes)
            s += m[1] * std::cos(2.0 * kPi * m[0] * p.c[0]) +
                 m[2] * std::sin(2.0 * kPi * m[0] * p.c[0]);
        return s;
    }
};

TrigPoly random_poly(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_int_distribution<int> kdist(1, 4);
    TrigPoly p;
    p.c0 = amp(rng);
    for (int m = 0; m < 4; ++m)
        p.modes.push_back({static_cast<double>(kdist(rng)), amp(rng), amp(rng)});
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

void criterion1_mean_haar() {
    Criterion c(1, "mean value / Haar identification", 5.0);
    auto spec = AlgebraSpec::periodic(1);
    std::vector<double> radii{10, 20, 40, 80, 160, 320, 640, 1000};

    auto est = mean_value(
        [](const double* y) {
            const double s = std::sin(2.0 * kPi * y[0]);
            return s * s;
        },
        spec, radii, 1e-3);
    c.expect(std::abs(est.value - 0.5) < 1e-3, "mean of sin^2 missed 1/2");

    double worst = 0.0;
    for (unsigned seed = 1; seed <= 5; ++seed) {
        auto poly = random_poly(seed);
        auto lift = TorusField::sample(spec, {256}, [&](const TorusPoint& p) { return poly(p); });
        auto pest = mean_value(
            [&](const double* y) {
                TorusPoint p;
                p.d = 1;
                p.c[0] = frac(y[0]);
                return poly(p);
            },
            spec, radii, 1e-3);
        worst = std::max(worst, std::abs(pest.value - lift.mean()));
    }
    c.expect(worst < 1e-3, "torus average vs expanding averages");
    char buf[64];
    std::snprintf(buf, sizeof buf, "max dev %.2e", worst);
    c.note(buf);
    c.finish();
}

void criterion2_group_convolution() {
    Criterion c(2, "group law / Young inequality / convolution oracle", 10.0);
    auto spec2 = AlgebraSpec::periodic(2);
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<long> grid(0, (1L << 26) - 1);
    bool exact = true;
    for (int t = 0; t < 1000; ++t) {
        double x[2], y[2], xy[2];
        for (int k = 0; k < 2; ++k) {
            x[k] = static_cast<double>(grid(rng)) / static_cast<double>(1L << 26);
            y[k] = static_cast<double>(grid(rng)) / static_cast<double>(1L << 26);
            xy[k] = x[k] + y[k];
        }
        auto lhs = dirac_point(xy, spec2);
        auto rhs = group_mul(dirac_point(x, spec2), dirac_point(y, spec2));
        exact = exact && lhs.c[0] == rhs.c[0] && lhs.c[1] == rhs.c[1];
    }
    c.expect(exact, "homomorphism not exact");

    auto spec = AlgebraSpec::periodic(1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    bool young = true;
    for (int t = 0; t < 100; ++t) {
        TorusField u(spec, {64}), v(spec, {64});
        for (auto& x : u.v) x = dist(rng);
        for (auto& x : v.v) x = dist(rng);
        auto w = spectrum_convolve(u, v);
        young = young && w.lp_norm(1.0) <= u.lp_norm(1.0) * v.lp_norm(1.0) + 1e-12;
        young = young && w.lp_norm(2.0) <= u.lp_norm(2.0) * v.lp_norm(1.0) + 1e-12;
    }
    c.expect(young, "Young inequality violated");

    const int n = 1024;
    auto cosf = TorusField::sample(spec, {n},
                                   [](const TorusPoint& p) { return std::cos(2.0 * kPi * p.c[0]); });
    auto conv = spectrum_convolve(cosf, cosf);
    auto oracle = serial_ref::convolve_circular(cosf.v, cosf.v, {n}, 1.0 / n);
    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
        dev = std::max(dev, std::abs(conv.v[i] - oracle[i]));
        dev = std::max(dev, std::abs(conv.v[i] - 0.5 * std::cos(2.0 * kPi * i / n)));
    }
    c.expect(dev < 1e-12, "cos-mode convolution missed the oracle");
    char buf[64];
    std::snprintf(buf, sizeof buf, "conv dev %.1e", dev);
    c.note(buf);
    c.finish();
}

void criterion3_translations() {
    Criterion c(3, "micro / macro translation limits", 30.0);
    auto spec = AlgebraSpec::periodic(1);
    Grid g = Grid::closed_box({0.0}, {1.0}, {4097});
    TestFn psi;
    psi.id = "sin";
    psi.macro = [](const double*) { return 1.0; };
    psi.osc = [](const TorusPoint& p) { return std::sin(2.0 * kPi * p.c[0]); };
    auto u0 = TwoScaleField::sample(g, spec, {64}, [](const double*, const TorusPoint& p) {
        return std::sin(2.0 * kPi * p.c[0]);
    });

    // micro translation: w_eps(x) = u_eps(x + eps a) = sin(2 pi (x/eps + a))
    const double a = 0.3, eps = 1.0 / 64.0;
    Field w = Field::sample(
        g, [a, eps](const double* x) { return std::sin(2.0 * kPi * (x[0] / eps + a)); });
    auto w0 = micro_translate_limit(u0, {a});
    const double micro_pred = limit_pairing(w0, psi);
    const double micro_closed = 0.5 * std::cos(2.0 * kPi * a);
    const double micro_pair = weak_sigma_pairing(w, psi, spec, eps);
    c.expect(std::abs(micro_pred - micro_closed) < 1e-12, "micro prediction vs closed form");
    c.expect(std::abs(micro_pair - micro_pred) < 1e-2, "micro residual above 1e-2");

    // macro translation: v_eps(x) = u_eps(x + A), schedule with constant
    // fractional parts frac(A/eps) = 1/3
    const double A = 1.0 / 3.0;
    const std::vector<double> schedule{0.25, 0.0625, 0.015625};
    TorusPoint r = shift_limit_point({A}, schedule, spec);
    Field v = Field::sample(g, [A](const double* x) {
        return std::sin(2.0 * kPi * (x[0] + A) / 0.015625);
    });
    auto v0 = macro_translate_limit(u0, {0.0}, r, Extension::periodic); // u0 constant in x
    const double macro_pred = limit_pairing(v0, psi);
    const double macro_closed = 0.5 * std::cos(2.0 * kPi / 3.0);
    const double macro_pair = weak_sigma_pairing(v, psi, spec, 0.015625);
    c.expect(std::abs(macro_pred - macro_closed) < 1e-12, "macro prediction vs closed form");
    c.expect(std::abs(macro_pair - macro_pred) < 1e-2, "macro residual above 1e-2");
    char buf[96];
    std::snprintf(buf, sizeof buf, "micro %.1e, macro %.1e", std::abs(micro_pair - micro_pred),
                  std::abs(macro_pair - macro_pred));
    c.note(buf);
    c.finish();
}

void criterion4_convolution_limit() {
    Criterion c(4, "convolution limit theorem", 120.0);
    auto spec = AlgebraSpec::periodic(1);
    const int n = 2048;
    Grid gu = Grid::closed_box({0.0}, {1.0}, {n + 1});
    Grid gv = Grid::closed_box({-0.5}, {1.0}, {n + 1});
    auto g_fn = [](double x) { return bspline_bump(x, 0.45, 0.3); };
    auto h_fn = [](double x) { return bspline_bump(x, 0.05, 0.25); };

    EpsSequence useq, vseq;
    useq.eps = {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0};
    vseq.eps = useq.eps;
    for (double e : useq.eps) {
        useq.fields.push_back(Field::sample(gu, [&](const double* x) {
            return g_fn(x[0]) * std::sin(2.0 * kPi * x[0] / e);
        }));
        vseq.fields.push_back(Field::sample(gv, [&](const double* x) {
            return h_fn(x[0]) * std::sin(2.0 * kPi * x[0] / e);
        }));
    }
    auto u0 = TwoScaleField::sample(gu, spec, {32}, [&](const double* x, const TorusPoint& p) {
        return g_fn(x[0]) * std::sin(2.0 * kPi * p.c[0]);
    });
    auto v0 = TwoScaleField::sample(gv, spec, {32}, [&](const double* x, const TorusPoint& p) {
        return h_fn(x[0]) * std::sin(2.0 * kPi * p.c[0]);
    });
    Grid gout = Grid::closed_box({-0.5}, {2.0}, {2 * n + 1});
    auto bank = default_test_bank(spec, gout, 4, 5);
    auto res = convolution_limit_check(useq, vseq, u0, v0, bank, 2.0, 1.0, 2.0);
    bool monotone = true;
    for (size_t j = 1; j < res.max_residual.size(); ++j)
        monotone = monotone && res.max_residual[j] < res.max_residual[j - 1];
    c.expect(monotone, "residuals not monotone");
    c.expect(res.final_residual < 5e-2, "final residual above 5e-2");
    char buf[96];
    std::snprintf(buf, sizeof buf, "residuals %.2e > %.2e > %.2e > %.2e", res.max_residual[0],
                  res.max_residual[1], res.max_residual[2], res.max_residual[3]);
    c.note(buf);
    c.finish();
}

void criterion5_wilson_cowan() {
    Criterion c(5, "Wilson-Cowan: decay / bound / homogenization", 300.0);
    // (a) exponential decay of a constant state
    WilsonCowanConfig cfg;
    cfg.spec = AlgebraSpec::periodic(1);
    cfg.dim = 1;
    cfg.kernel_profile = [](const double*) { return 0.0; };
    cfg.kernel_osc = [](const TorusPoint&) { return 1.0; };
    cfg.kernel_support = 0.5;
    cfg.firing = [](const TorusPoint&, double) { return 0.0; };
    cfg.k1 = 1.0;
    cfg.shift_a = {0.5};
    cfg.initial = [](const double*) { return 1.0; };
    cfg.box_half_width = 4.0;
    cfg.T = 1.0;
    auto decay = solve_fine_wc(cfg, 0.25, 1.0 / 32.0, 1e-3, 100);
    double decay_err = 0.0;
    for (size_t j = 0; j < decay.times.size(); ++j) {
        const double expect = std::exp(-decay.times[j]);
        for (double v : decay.states[j].v)
            decay_err = std::max(decay_err, std::abs(v - expect));
    }
    c.expect(decay_err < 1e-6, "decay error above 1e-6");

    // (b)+(c): oscillating affine firing with a = 0
    const double bump_amp = 3.6; // mass 0.9 over support width 0.5
    cfg.kernel_profile = [bump_amp](const double* x) {
        return bump_amp * bspline_bump(x[0], 0.0, 0.5);
    };
    cfg.kernel_osc = [](const TorusPoint& p) {
        return 1.0 + 0.5 * std::sin(2.0 * kPi * p.c[0]);
    };
    cfg.firing = [](const TorusPoint& p, double lam) {
        return (1.0 + 0.5 * std::sin(2.0 * kPi * p.c[0])) * 0.5 * lam;
    };
    cfg.k1 = 0.75;
    cfg.shift_a = {0.0};
    cfg.initial = [](const double* x) { return std::exp(-4.0 * x[0] * x[0]); };
    cfg.T = 0.5;
    validate_wc(cfg, 0.25, 2.0);

    std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125};
    const double dt = 1.0 / 128.0;
    std::vector<FieldTrajectory> fines;
    double bound_C = 0.0;
    bool bound_ok = true;
    for (size_t j = 0; j < eps.size(); ++j) {
        fines.push_back(solve_fine_wc(cfg, eps[j], eps[j] / 16.0, dt, 16));
        if (j == 0) bound_C = fines[0].bound_C;
        for (size_t t = 0; t < fines[j].l1.size(); ++t)
            bound_ok = bound_ok && fines[j].l1[t] + fines[j].l2[t] <= bound_C * (1.0 + 1e-9);
    }
    c.expect(bound_ok, "a-priori bound violated");

    auto homog = solve_homogenized_wc(cfg, TorusPoint::zero(1), 1.0 / 32.0, 32, dt, 16);
    auto bank = space_time_bank(cfg.spec, cfg.box_half_width, cfg.T, 3, 2, 3);
    auto res = compare_wc(eps, fines, homog, cfg.spec, bank);
    bool decreasing = true;
    for (size_t j = 1; j < res.max_residual.size(); ++j)
        decreasing = decreasing && res.max_residual[j] < res.max_residual[j - 1];
    c.expect(decreasing, "sigma residuals not decreasing");
    c.expect(res.final_residual < 5e-2, "final sigma residual above 5e-2");
    char buf[128];
    std::snprintf(buf, sizeof buf, "decay %.1e, C %.3f, residuals %.2e..%.2e", decay_err,
                  bound_C, res.max_residual.front(), res.max_residual.back());
    c.note(buf);
    c.finish();
}

HeatConfig harmonic_cfg() {
    HeatConfig cfg;
    cfg.dim = 1;
    cfg.coeff.spec_y = AlgebraSpec::periodic(1);
    cfg.coeff.spec_tau = AlgebraSpec::periodic(1);
    cfg.coeff.rho = [](const TorusPoint&) { return 1.0; };
    auto m = [](const TorusPoint& sy) { return 2.0 + std::sin(2.0 * kPi * sy.c[0]); };
    cfg.coeff.flux = [m](const TorusPoint& sy, const TorusPoint&, const VecN& l) {
        VecN out = l;
        for (int k = 0; k < l.n; ++k) out[k] *= m(sy);
        return out;
    };
    cfg.coeff.diffusivity = [m](const TorusPoint& sy, const TorusPoint&, double) { return m(sy); };
    cfg.coeff.a0 = [](const TorusPoint&, const TorusPoint&, const VecN&) { return 0.0; };
    cfg.coeff.kernel_zero = true;
    cfg.consts = {3.0, 1.0, 3.0, 2.0};
    cfg.initial = [](const double* x) { return std::sin(kPi * x[0]); };
    cfg.source = [](const double*, double) { return 0.0; };
    cfg.T = 0.1;
    return cfg;
}

void criterion6_cell_effective() {
    Criterion c(6, "cell problem / effective coefficients", 30.0);
    auto cfg = harmonic_cfg();
    cfg.coeff.rho = [](const TorusPoint& p) { return 2.0 + std::cos(2.0 * kPi * p.c[0]); };
    std::vector<std::vector<double>> knots{{-2.0, -1.0, 0.0, 1.0, 2.0}};
    auto eff = effective_coefficients(cfg, knots, 256, 2);

    double slope_dev = 0.0;
    for (size_t j = 0; j < knots[0].size(); ++j)
        slope_dev = std::max(slope_dev,
                             std::abs(eff.b_table[j][0] - std::sqrt(3.0) * knots[0][j]));
    c.expect(slope_dev < 1e-4, "b slope missed sqrt(3) at 1e-4");
    c.expect(std::abs(eff.rho_eff - 2.0) < 1e-13, "rho_eff of 2+cos missed 2");
    c.expect(eff.b_table[2][0] == 0.0, "b(0) not exactly zero");

    bool mono = true, lips = true;
    for (size_t i = 0; i < knots[0].size(); ++i)
        for (size_t j = 0; j < i; ++j) {
            const double dl = knots[0][i] - knots[0][j];
            const double db = eff.b_table[i][0] - eff.b_table[j][0];
            mono = mono && db * dl >= cfg.consts.c1 * 0.95 * dl * dl;
            lips = lips && std::abs(db) <= cfg.consts.c0 * 1.05 * std::abs(dl);
        }
    c.expect(mono, "effective monotonicity violated");
    c.expect(lips, "effective Lipschitz bound violated");

    double cell_res = 0.0;
    for (const auto& cell : eff.cells) cell_res = std::max(cell_res, cell.residual);
    c.expect(cell_res < 1e-10, "cell residual above 1e-10");

    // constant-coefficient case: exact zero corrector
    HeatConfig plain = cfg;
    plain.coeff.flux = [](const TorusPoint&, const TorusPoint&, const VecN& l) { return l; };
    plain.coeff.diffusivity = [](const TorusPoint&, const TorusPoint&, double) { return 1.0; };
    VecN lam = VecN::zero(1);
    lam[0] = 1.3;
    auto cell = solve_cell(lam, plain, 256, 2);
    bool zero = cell.residual < 1e-14;
    for (const auto& s : cell.v_slices)
        for (double v : s.v) zero = zero && v == 0.0;
    c.expect(zero, "constant-coefficient corrector not exactly zero");
    char buf[96];
    std::snprintf(buf, sizeof buf, "slope dev %.1e, cell res %.1e", slope_dev, cell_res);
    c.note(buf);
    c.finish();
}

void criterion7_heat_convergence() {
    Criterion c(7, "homogenization convergence and corrector gain", 600.0);
    auto cfg = harmonic_cfg();
    const double dx = 1.0 / 512.0;
    const double dt = 0.1 / 64.0;
    std::vector<std::vector<double>> knots{{-6.0, -3.0, 0.0, 3.0, 6.0}};
    auto eff = effective_coefficients(cfg, knots, 256, 2);
    std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125};
    auto study = convergence_study(cfg, eff, eps, dx, dt);
    c.expect(!study.aborted && study.completed == eps.size(), "study aborted");
    bool monotone = study.completed == eps.size();
    for (size_t j = 1; j < study.l2_error.size(); ++j)
        monotone = monotone && study.l2_error[j] < study.l2_error[j - 1];
    c.expect(monotone, "errors not monotone");
    const double rel = study.l2_error.empty()
                           ? 1.0
                           : study.l2_error.back() / std::max(study.u0_norm, 1e-300);
    c.expect(rel < 5e-2, "final relative error above 5e-2");

    auto fine = solve_fine_heat(cfg, 0.03125, dx, dt);
    auto macro = solve_macro(cfg, eff, dx, dt);
    Grid unit = Grid::closed_box({0.0}, {1.0}, {513});
    auto bank = default_test_bank(cfg.coeff.spec_y, unit, 3, 3);
    auto rep = corrector_check(cfg, 0.03125, fine, macro, eff, bank, 8);
    const double gain = rep.plain_error / std::max(rep.reconstruction_error, 1e-300);
    c.expect(gain >= 2.0, "corrector reconstruction gain below 2");
    char buf[128];
    std::snprintf(buf, sizeof buf, "errors %.4f..%.4f (rel %.3f), corrector gain %.1fx",
                  study.l2_error.front(), study.l2_error.back(), rel, gain);
    c.note(buf);
    c.finish();
}

void criterion8_memory() {
    Criterion c(8, "memory term: contraction and b0 oracle", 120.0);
    auto cfg = harmonic_cfg();
    cfg.coeff.flux = [](const TorusPoint&, const TorusPoint&, const VecN& l) { return l; };
    cfg.coeff.diffusivity = [](const TorusPoint&, const TorusPoint&, double) { return 1.0; };
    cfg.consts = {1.0, 1.0, 1.5, 1.0};
    cfg.T = 0.125;
    const double kc = 0.5;
    cfg.coeff.kernel_zero = false;
    cfg.coeff.kernel_sigma_max = 1.0;
    cfg.coeff.kernel_fine = [kc](const TorusPoint& sy, double sig) {
        if (sig < 0.0 || sig > 1.0) return 0.0;
        return kc * (1.0 + 0.5 * std::cos(2.0 * kPi * sy.c[0])) *
               (1.0 + std::cos(2.0 * kPi * sig));
    };
    cfg.coeff.kernel_torus = [kc](const TorusPoint& sy, const TorusPoint& st) {
        return kc * (1.0 + 0.5 * std::cos(2.0 * kPi * sy.c[0])) *
               (1.0 + std::cos(2.0 * kPi * st.c[0]));
    };
    cfg.coeff.kernel_l1 = kc * 1.5;
    cfg.coeff.a0 = [](const TorusPoint&, const TorusPoint&, const VecN& l) {
        return 0.5 * l.v[0];
    };
    auto traj = solve_fine_heat(cfg, 0.125, 1.0 / 128.0, 1.0 / 256.0);
    c.expect(traj.max_contraction < 0.5, "contraction monitor reached 1/2");

    std::vector<std::vector<double>> knots{{-1.0, 0.0, 1.0, 2.0}};
    auto eff = effective_coefficients(cfg, knots, 64, 32);
    double dev = 0.0;
    for (size_t j = 0; j < knots[0].size(); ++j)
        dev = std::max(dev, std::abs(eff.b0_table[j] - kc * 0.5 * knots[0][j]));
    c.expect(dev < 1e-6, "b0 table missed mean(K) g(lambda) at 1e-6");
    char buf[96];
    std::snprintf(buf, sizeof buf, "contraction %.3f, b0 dev %.1e", traj.max_contraction, dev);
    c.note(buf);
    c.finish();
}

#ifndef HOMOG_TOOL_PATH
#define HOMOG_TOOL_PATH "./homog"
#endif

void criterion9_determinism_validation() {
    Criterion c(9, "determinism and config validation", 120.0);
    const std::string tool = HOMOG_TOOL_PATH;
    const fs::path base = fs::temp_directory_path() / "homog_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);

    const std::string cfg_path = (base / "study.json").string();
    {
        std::ofstream out(cfg_path);
        out << R"({
  "experiment": "nonlocal-heat",
  "seed": 11,
  "algebra": {"kind": "periodic", "dims": 1},
  "nonlocal_heat": {
    "coefficients": {
      "rho": {"name": "one"},
      "a": {"name": "linear", "m_y": {"name": "sin", "params": [2, 1, 1]}},
      "a0": {"name": "zero"},
      "kernel": {"name": "none"}
    },
    "constants": {"c0": 3.0, "c1": 1.0, "c2": 3.0, "Lambda": 1.0},
    "initial": {"name": "sine_dirichlet", "params": [1, 1]},
    "T": 0.05,
    "eps_list": [0.25, 0.125],
    "grids": {"cells": 256, "dt": 0.003125, "y_points": 128, "tau_points": 2, "lambda_points": 5}
  }
})";
    }
    auto run = [&](const std::string& out_dir) {
        const std::string cmd =
            tool + " run " + cfg_path + " --out " + out_dir + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const std::string out1 = (base / "run1").string(), out2 = (base / "run2").string();
    const int rc1 = run(out1), rc2 = run(out2);
    c.expect(WIFEXITED(rc1) && WEXITSTATUS(rc1) == 0, "first run failed");
    c.expect(WIFEXITED(rc2) && WEXITSTATUS(rc2) == 0, "second run failed");
    bool identical = true;
    for (const char* name : {"convergence.csv", "effective_coefficients.csv",
                             "heat_u0_final.csv"})
        identical = identical && slurp(out1 + "/" + name) == slurp(out2 + "/" + name) &&
                    !slurp(out1 + "/" + name).empty();
    c.expect(identical, "CSV outputs differ between identical runs");

    // a config with c1 <= 0 must be rejected with exit 3 naming monotonicity
    const std::string bad_path = (base / "bad.json").string();
    {
        std::string text = slurp(cfg_path);
        const auto pos = text.find("\"c1\": 1.0");
        text.replace(pos, 9, "\"c1\": 0.0");
        std::ofstream out(bad_path);
        out << text;
    }
    const std::string errfile = (base / "stderr.txt").string();
    const std::string cmd = tool + " run " + bad_path + " --out " + (base / "runbad").string() +
                            " > /dev/null 2> " + errfile;
    const int rcb = std::system(cmd.c_str());
    c.expect(WIFEXITED(rcb) && WEXITSTATUS(rcb) == 3, "invalid config did not exit with 3");
    c.expect(slurp(errfile).find("monotonicity") != std::string::npos,
             "rejection does not name the monotonicity assumption");
    c.finish();
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion1_mean_haar();
    criterion2_group_convolution();
    criterion3_translations();
    criterion4_convolution_limit();
    criterion5_wilson_cowan();
    criterion6_cell_effective();
    criterion7_heat_convergence();
    criterion8_memory();
    criterion9_determinism_validation();
    std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}
