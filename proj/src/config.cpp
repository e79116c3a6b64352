#include "homog/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/neural_field.hpp"
#include "homog/nonlocal_heat.hpp"
#include "homog/registry.hpp"
#include "homog/sigma.hpp"

namespace homog {

namespace {

using nlohmann::json;

const char* kBlockNames[] = {"mean_value",    "sigma_check",  "convolution_check",
                             "wilson_cowan",  "nonlocal_heat", "cell_solve"};

std::string block_of(const std::string& experiment) {
    if (experiment == "mean-value") return "mean_value";
    if (experiment == "sigma-check") return "sigma_check";
    if (experiment == "convolution-check") return "convolution_check";
    if (experiment == "wilson-cowan") return "wilson_cowan";
    if (experiment == "nonlocal-heat") return "nonlocal_heat";
    if (experiment == "cell-solve") return "cell_solve";
    throw ParseError("unknown experiment '" + experiment + "'");
}

AlgebraSpec parse_algebra(const json& root, int default_dims = 1) {
    if (!root.contains("algebra")) return AlgebraSpec::periodic(default_dims);
    const json& a = root.at("algebra");
    const std::string kind = a.at("kind").get<std::string>();
    if (kind == "periodic") return AlgebraSpec::periodic(a.at("dims").get<int>());
    if (kind == "quasiperiodic") {
        std::vector<std::vector<double>> rows;
        for (const auto& r : a.at("frequencies")) rows.push_back(r.get<std::vector<double>>());
        if (rows.empty()) throw ParseError("quasiperiodic algebra needs frequency rows");
        return AlgebraSpec::quasi_periodic(static_cast<int>(rows[0].size()), rows);
    }
    throw ParseError("unknown algebra kind '" + kind + "'");
}

std::function<double(const TorusPoint&)> parse_osc(const json& j) {
    return registry::make_oscillation(j.at("name").get<std::string>(),
                                      j.value("params", std::vector<double>{}));
}

std::function<double(const double*)> parse_profile(const json& j, int dim) {
    return registry::make_profile(j.at("name").get<std::string>(),
                                  j.value("params", std::vector<double>{}), dim);
}

// --- experiment builders ----------------------------------------------------

WilsonCowanConfig build_wc(const json& root) {
    const json& b = root.at("wilson_cowan");
    WilsonCowanConfig cfg;
    cfg.spec = parse_algebra(root);
    cfg.dim = cfg.spec.space_dim;
    const json& kj = b.at("kernel");
    cfg.kernel_profile = parse_profile(kj.at("profile"), cfg.dim);
    cfg.kernel_osc = kj.contains("osc") ? parse_osc(kj.at("osc"))
                                        : registry::make_oscillation("one", {});
    cfg.kernel_support = kj.at("support").get<double>();
    auto firing = registry::make_firing(b.at("firing").at("name").get<std::string>(),
                                        b.at("firing").value("params", std::vector<double>{}));
    cfg.firing = firing.fn;
    cfg.k1 = firing.k1;
    cfg.affine_firing = firing.affine;
    cfg.shift_a = b.value("shift", std::vector<double>(cfg.dim, 0.0));
    cfg.initial = parse_profile(b.at("initial"), cfg.dim);
    cfg.box_half_width = b.at("box").get<double>();
    cfg.T = b.at("T").get<double>();
    return cfg;
}

HeatConfig build_heat(const json& root, const std::string& block) {
    const json& b = root.at(block);
    const json& co = b.at("coefficients");
    HeatConfig cfg;
    cfg.dim = root.contains("algebra") ? root.at("algebra").value("dims", 1) : 1;
    cfg.coeff.spec_y = parse_algebra(root);
    cfg.coeff.spec_tau = AlgebraSpec::periodic(1);
    cfg.coeff.rho = co.contains("rho") ? parse_osc(co.at("rho"))
                                       : registry::make_oscillation("one", {});
    auto m_y = co.at("a").contains("m_y") ? parse_osc(co.at("a").at("m_y"))
                                          : registry::make_oscillation("one", {});
    auto m_tau = co.at("a").contains("m_tau") ? parse_osc(co.at("a").at("m_tau"))
                                              : registry::make_oscillation("one", {});
    auto flux = registry::make_flux(co.at("a").at("name").get<std::string>(),
                                    co.at("a").value("params", std::vector<double>{}), m_y,
                                    m_tau);
    cfg.coeff.flux = flux.flux;
    cfg.coeff.diffusivity = flux.diffusivity;
    if (co.contains("a0")) {
        auto a0_my = co.at("a0").contains("m_y") ? parse_osc(co.at("a0").at("m_y"))
                                                 : registry::make_oscillation("one", {});
        auto a0_mt = co.at("a0").contains("m_tau") ? parse_osc(co.at("a0").at("m_tau"))
                                                   : registry::make_oscillation("one", {});
        cfg.coeff.a0 = registry::make_a0(co.at("a0").at("name").get<std::string>(),
                                         co.at("a0").value("params", std::vector<double>{}),
                                         a0_my, a0_mt);
    } else {
        cfg.coeff.a0 = registry::make_a0("zero", {}, m_y, m_tau);
    }
    auto kern = registry::make_kernel(
        co.contains("kernel") ? co.at("kernel").at("name").get<std::string>() : "none",
        co.contains("kernel") ? co.at("kernel").value("params", std::vector<double>{})
                              : std::vector<double>{});
    cfg.coeff.kernel_zero = kern.zero;
    cfg.coeff.kernel_fine = kern.fine;
    cfg.coeff.kernel_torus = kern.torus;
    cfg.coeff.kernel_sigma_max = kern.sigma_max;
    cfg.coeff.kernel_l1 = kern.l1;
    const json& cs = b.at("constants");
    cfg.consts.c0 = cs.at("c0").get<double>();
    cfg.consts.c1 = cs.at("c1").get<double>();
    cfg.consts.c2 = cs.at("c2").get<double>();
    cfg.consts.Lambda = cs.at("Lambda").get<double>();
    cfg.initial = b.contains("initial") ? parse_profile(b.at("initial"), cfg.dim)
                                        : registry::make_profile("zero", {}, cfg.dim);
    auto srcp = b.contains("source") ? parse_profile(b.at("source"), cfg.dim)
                                     : registry::make_profile("zero", {}, cfg.dim);
    cfg.source = [srcp](const double* x, double) { return srcp(x); };
    cfg.T = b.value("T", 0.1);
    return cfg;
}

// --- drivers -----------------------------------------------------------------

void run_mean_value(const ExperimentConfig& ec, const std::string& out, RunManifest& m) {
    const json& b = ec.root.at("mean_value");
    AlgebraSpec spec = parse_algebra(ec.root);
    auto osc = parse_osc(b.at("function"));
    std::vector<double> radii =
        b.contains("radii") ? b.at("radii").get<std::vector<double>>() : default_radius_schedule();
    const double tol = b.value("tol", 1e-3);
    const int spu = b.value("samples_per_unit", 32);
    const int tp = b.value("torus_points", 256);

    auto f = [&](const double* y) { return osc(dirac_point(y, spec)); };
    MeanEstimate est = mean_value(f, spec, radii, tol, spu);
    const double haar =
        TorusField::sample(spec, std::vector<int>(spec.torus_dim, tp), osc).mean();

    const std::string csv = out + "/mean.csv";
    std::FILE* fp = std::fopen(csv.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + csv);
    std::fprintf(fp, "# mean value study: final=%.17g torus_average=%.17g converged=%d\n",
                 est.value, haar, est.converged ? 1 : 0);
    std::fprintf(fp, "radius,average\n");
    for (size_t j = 0; j < est.radii.size(); ++j)
        std::fprintf(fp, "%.17g,%.17g\n", est.radii[j], est.partial_averages[j]);
    std::fclose(fp);
    m.artifacts.push_back("mean.csv");
    m.add_verdict("mean_converged", est.converged);
    m.add_verdict("haar_identification", std::abs(est.value - haar) < tol);
}

void run_sigma_check(const ExperimentConfig& ec, const std::string& out, RunManifest& m) {
    const json& b = ec.root.at("sigma_check");
    AlgebraSpec spec = parse_algebra(ec.root);
    auto osc = parse_osc(b.at("osc"));
    const int cells = b.value("macro_cells", 4096);
    const int tp = b.value("torus_points", 64);
    const double tol = b.value("tol", 1e-2);
    Grid g = Grid::closed_box({0.0}, {1.0}, {cells + 1});
    auto bank = default_test_bank(spec, g, b.value("bank_bumps", 4), b.value("bank_modes", 5));
    auto u0 = TwoScaleField::sample(g, spec, std::vector<int>(spec.torus_dim, tp),
                                    [&](const double*, const TorusPoint& s) { return osc(s); });

    auto run_block = [&](const char* key, const char* csv_name, bool macro_mode) {
        if (!b.contains(key)) {
            m.verdicts.emplace_back(std::string(key) + "_residual", "skipped");
            return;
        }
        const json& t = b.at(key);
        const std::vector<double> shift = t.at("shift").get<std::vector<double>>();
        EpsSequence seq;
        seq.eps = t.at("eps").get<std::vector<double>>();
        for (double e : seq.eps) {
            seq.fields.push_back(Field::sample(g, [&](const double* x) {
                double y[4];
                for (int k = 0; k < spec.space_dim; ++k)
                    y[k] = macro_mode ? (x[k] + shift[k]) / e : x[k] / e + shift[k];
                return osc(dirac_point(y, spec));
            }));
        }
        seq.provenance = macro_mode ? "macro-translated trace" : "micro-translated trace";
        TwoScaleField limit = macro_mode
                                  ? macro_translate_limit(
                                        u0, std::vector<double>(spec.space_dim, 0.0),
                                        shift_limit_point(shift, seq.eps, spec))
                                  : micro_translate_limit(u0, shift);
        auto res = sigma_residuals(seq, limit, bank, false, 2.0, tol);
        write_sigma_csv(res, out + "/" + csv_name);
        m.artifacts.push_back(csv_name);
        m.add_verdict(std::string(key) + "_residual", res.final_residual < tol);
    };
    run_block("micro", "sigma_micro.csv", false);
    run_block("macro", "sigma_macro.csv", true);
}

void run_convolution_check(const ExperimentConfig& ec, const std::string& out, RunManifest& m) {
    const json& b = ec.root.at("convolution_check");
    AlgebraSpec spec = parse_algebra(ec.root);
    auto osc = parse_osc(b.at("osc"));
    auto gfun = parse_profile(b.at("g"), spec.space_dim);
    auto hfun = parse_profile(b.at("h"), spec.space_dim);
    const int cells = b.value("macro_cells", 1024);
    const int tp = b.value("torus_points", 32);
    const double tol = b.value("tol", 5e-2);
    const double p = b.value("p", 2.0), q = b.value("q", 1.0), mm = b.value("m", 2.0);

    Grid gu = Grid::closed_box({0.0}, {1.0}, {cells + 1});
    Grid gv = Grid::closed_box({-0.5}, {1.0}, {cells + 1});
    EpsSequence useq, vseq;
    useq.eps = b.at("eps").get<std::vector<double>>();
    vseq.eps = useq.eps;
    for (double e : useq.eps) {
        useq.fields.push_back(Field::sample(gu, [&](const double* x) {
            double y = x[0] / e;
            return gfun(x) * osc(dirac_point(&y, spec));
        }));
        vseq.fields.push_back(Field::sample(gv, [&](const double* x) {
            double y = x[0] / e;
            return hfun(x) * osc(dirac_point(&y, spec));
        }));
    }
    std::vector<int> tn(spec.torus_dim, tp);
    auto u0 = TwoScaleField::sample(gu, spec, tn, [&](const double* x, const TorusPoint& s) {
        return gfun(x) * osc(s);
    });
    auto v0 = TwoScaleField::sample(gv, spec, tn, [&](const double* x, const TorusPoint& s) {
        return hfun(x) * osc(s);
    });
    Grid gout = Grid::closed_box({-0.5}, {2.0}, {2 * cells + 1});
    auto bank = default_test_bank(spec, gout, b.value("bank_bumps", 4), b.value("bank_modes", 5));
    auto res = convolution_limit_check(useq, vseq, u0, v0, bank, p, q, mm, tol);
    write_sigma_csv(res, out + "/sigma_conv.csv");
    m.artifacts.push_back("sigma_conv.csv");
    m.add_verdict("convolution_limit", res.verdict);
}

void run_wilson_cowan(const ExperimentConfig& ec, const std::string& out, RunManifest& m) {
    const json& b = ec.root.at("wilson_cowan");
    WilsonCowanConfig cfg = build_wc(ec.root);
    validate_wc(cfg, 0.25, b.value("lambda_max", 4.0), static_cast<unsigned>(ec.seed));

    const std::vector<double> eps = b.at("eps_list").get<std::vector<double>>();
    const json& gr = b.at("grids");
    const int per_eps = gr.value("cells_per_eps", 16);
    const double dt = gr.at("dt").get<double>();
    const int snap = gr.value("snap_stride", 16);
    const int tp = gr.value("torus_points", 32);
    const double dxh = gr.at("dx_homog").get<double>();
    const double tol = b.value("tol", 5e-2);

    TorusPoint r = TorusPoint::zero(cfg.spec.torus_dim);
    bool shifted = false;
    for (double a : cfg.shift_a) shifted = shifted || a != 0.0;
    if (shifted) r = shift_limit_point(cfg.shift_a, eps, cfg.spec);

    std::vector<FieldTrajectory> fines;
    double bound_C = 0.0;
    bool bound_ok = true;
    for (size_t j = 0; j < eps.size(); ++j) {
        const double dx = eps[j] / per_eps;
        fines.push_back(solve_fine_wc(cfg, eps[j], dx, dt, snap));
        if (j == 0) bound_C = fines[0].bound_C;
        for (size_t t = 0; t < fines[j].l1.size(); ++t)
            bound_ok = bound_ok && fines[j].l1[t] + fines[j].l2[t] <= bound_C * (1.0 + 1e-9);
        char name[64];
        std::snprintf(name, sizeof name, "wc_fine_e%zu.csv", j);
        write_field_csv(fines[j].states.back(), out + "/" + name);
        m.artifacts.push_back(name);
    }
    auto homog = solve_homogenized_wc(cfg, r, dxh, tp, dt, snap);
    // export the torus mean of the final two-scale state
    {
        const TwoScaleField& last = homog.states.back();
        Field mean_field(last.macro);
        const size_t ts = last.torus_size();
        for (size_t mi = 0; mi < last.macro_size(); ++mi) {
            double s = 0.0;
            for (size_t t = 0; t < ts; ++t) s += last.v[mi * ts + t];
            mean_field.v[mi] = s / static_cast<double>(ts);
        }
        write_field_csv(mean_field, out + "/wc_homog_final.csv");
        m.artifacts.push_back("wc_homog_final.csv");
    }
    auto bank = space_time_bank(cfg.spec, cfg.box_half_width, cfg.T, b.value("bank_bumps", 3),
                                b.value("bank_t_bumps", 2), b.value("bank_modes", 3));
    auto res = compare_wc(eps, fines, homog, cfg.spec, bank, tol);
    write_sigma_csv(res, out + "/wc_sigma.csv");
    m.artifacts.push_back("wc_sigma.csv");
    m.add_verdict("wc_apriori_bound", bound_ok);
    m.add_verdict("wc_sigma_limit", res.verdict);
}

void run_nonlocal_heat(const ExperimentConfig& ec, const std::string& out, RunManifest& m) {
    const json& b = ec.root.at("nonlocal_heat");
    HeatConfig cfg = build_heat(ec.root, "nonlocal_heat");
    validate_heat(cfg, static_cast<unsigned>(ec.seed), b.value("lambda_max", 4.0));

    const json& gr = b.at("grids");
    const int cells = gr.at("cells").get<int>();
    const double dx = 1.0 / cells;
    const double dt = gr.at("dt").get<double>();
    const int yp = gr.value("y_points", 256);
    const int taup = gr.value("tau_points", 32);
    const int lp = gr.value("lambda_points", 9);
    const double tol = b.value("tol", 5e-2);

    auto knots = estimate_lambda_knots(cfg, dx, dt, lp);
    auto eff = effective_coefficients(cfg, knots, yp, taup);
    write_effective_csv(eff, out + "/effective_coefficients.csv");
    m.artifacts.push_back("effective_coefficients.csv");

    double worst_cell = 0.0;
    for (const auto& c : eff.cells) worst_cell = std::max(worst_cell, c.residual);
    m.add_verdict("cell_residuals", worst_cell < 1e-10);

    bool mono = true, lips = true;
    for (size_t i = 0; i < eff.cells.size(); ++i) {
        for (size_t j = 0; j < i; ++j) {
            VecN li = eff.cells[i].lambda, lj = eff.cells[j].lambda;
            double dot = 0.0, d2 = 0.0, db2 = 0.0;
            for (int k = 0; k < cfg.dim; ++k) {
                const double dl = li[k] - lj[k];
                const double dbk = eff.b_table[i][k] - eff.b_table[j][k];
                dot += dbk * dl;
                d2 += dl * dl;
                db2 += dbk * dbk;
            }
            mono = mono && dot >= cfg.consts.c1 * 0.95 * d2 - 1e-12;
            lips = lips && std::sqrt(db2) <= cfg.consts.c0 * 1.05 * std::sqrt(d2) + 1e-12;
        }
    }
    m.add_verdict("effective_monotonicity", mono);
    m.add_verdict("effective_lipschitz", lips);

    std::vector<double> eps = b.at("eps_list").get<std::vector<double>>();
    auto study = convergence_study(cfg, eff, eps, dx, dt);
    write_convergence_csv(study, out + "/convergence.csv");
    m.artifacts.push_back("convergence.csv");

    // final macro state snapshot
    auto macro = solve_macro(cfg, eff, dx, dt);
    write_field_csv(macro.states.back(), out + "/heat_u0_final.csv");
    m.artifacts.push_back("heat_u0_final.csv");

    bool decreasing = study.completed == eps.size();
    for (size_t j = 1; j < study.l2_error.size(); ++j)
        decreasing = decreasing && study.l2_error[j] < study.l2_error[j - 1];
    bool energy_ok = true;
    for (double e : study.energy) energy_ok = energy_ok && e <= study.energy_bound;
    m.add_verdict("study_complete", !study.aborted && study.completed == eps.size());
    m.add_verdict("errors_decrease", decreasing);
    m.add_verdict("final_relative_error",
                  !study.l2_error.empty() &&
                      study.l2_error.back() < tol * std::max(study.u0_norm, 1e-14));
    m.add_verdict("energy_uniform", energy_ok);

    if (b.value("plot", false)) {
        write_convergence_svg(out + "/convergence.csv", out + "/convergence.svg");
        m.artifacts.push_back("convergence.svg");
    }
}

void run_cell_solve(const ExperimentConfig& ec, const std::string& out, RunManifest& m) {
    const json& b = ec.root.at("cell_solve");
    HeatConfig cfg = build_heat(ec.root, "cell_solve");
    validate_heat(cfg, static_cast<unsigned>(ec.seed), b.value("lambda_max", 4.0));
    const int yp = b.value("y_points", 256);
    const int taup = b.value("tau_points", 8);

    const std::string csv = out + "/cell_corrector.csv";
    std::FILE* fp = std::fopen(csv.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + csv);
    std::fprintf(fp, "# cell correctors, y_points=%d tau_points=%d\n", yp, taup);
    std::fprintf(fp, "lambda,slice,y_index,v\n");
    double worst = 0.0;
    for (const auto& lj : b.at("lambda")) {
        const std::vector<double> lv = lj.get<std::vector<double>>();
        VecN lam = VecN::zero(cfg.dim);
        for (int k = 0; k < cfg.dim && k < static_cast<int>(lv.size()); ++k) lam[k] = lv[k];
        auto cell = solve_cell(lam, cfg, yp, taup);
        worst = std::max(worst, cell.residual);
        for (size_t s = 0; s < cell.v_slices.size(); ++s)
            for (size_t i = 0; i < cell.v_slices[s].v.size(); ++i)
                std::fprintf(fp, "%.17g,%zu,%zu,%.17g\n", lam[0], s, i,
                             cell.v_slices[s].v[i]);
    }
    std::fclose(fp);
    m.artifacts.push_back("cell_corrector.csv");
    m.add_verdict("cell_residuals", worst < 1e-10);
}

} // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg;
    cfg.config_bytes = ss.str();
    try {
        cfg.root = json::parse(cfg.config_bytes);
        cfg.experiment = cfg.root.at("experiment").get<std::string>();
        cfg.seed = cfg.root.value("seed", 1u);
        cfg.output_dir = cfg.root.value("output_dir", std::string("out"));
    } catch (const json::exception& e) {
        throw ParseError(std::string("config parse failure: ") + e.what());
    }
    // exactly one experiment block, and it must match `experiment`
    const std::string want = block_of(cfg.experiment);
    int blocks = 0;
    for (const char* name : kBlockNames)
        if (cfg.root.contains(name)) ++blocks;
    if (blocks != 1 || !cfg.root.contains(want))
        throw ParseError("config must contain exactly the '" + want + "' experiment block");
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    try {
        if (cfg.experiment == "wilson-cowan") {
            const json& b = cfg.root.at("wilson_cowan");
            WilsonCowanConfig wc = build_wc(cfg.root);
            validate_wc(wc, 0.25, b.value("lambda_max", 4.0),
                        static_cast<unsigned>(cfg.seed));
        } else if (cfg.experiment == "nonlocal-heat" || cfg.experiment == "cell-solve") {
            const std::string block = block_of(cfg.experiment);
            HeatConfig hc = build_heat(cfg.root, block);
            validate_heat(hc, static_cast<unsigned>(cfg.seed),
                          cfg.root.at(block).value("lambda_max", 4.0));
        } else {
            // the remaining families validate inside their drivers; here we
            // only check that the registry names resolve
            if (cfg.experiment == "mean-value")
                parse_osc(cfg.root.at("mean_value").at("function"));
            if (cfg.experiment == "sigma-check") parse_osc(cfg.root.at("sigma_check").at("osc"));
            if (cfg.experiment == "convolution-check") {
                parse_osc(cfg.root.at("convolution_check").at("osc"));
                parse_profile(cfg.root.at("convolution_check").at("g"), 1);
                parse_profile(cfg.root.at("convolution_check").at("h"), 1);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config schema failure: ") + e.what());
    }
}

void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, RunManifest& m) {
    m.config_hash = fnv1a_hex(cfg.config_bytes);
    m.version = kToolkitVersion;
    try {
        if (cfg.experiment == "mean-value") {
            run_mean_value(cfg, out_dir, m);
        } else if (cfg.experiment == "sigma-check") {
            run_sigma_check(cfg, out_dir, m);
        } else if (cfg.experiment == "convolution-check") {
            run_convolution_check(cfg, out_dir, m);
        } else if (cfg.experiment == "wilson-cowan") {
            run_wilson_cowan(cfg, out_dir, m);
        } else if (cfg.experiment == "nonlocal-heat") {
            run_nonlocal_heat(cfg, out_dir, m);
        } else if (cfg.experiment == "cell-solve") {
            run_cell_solve(cfg, out_dir, m);
        } else {
            throw ParseError("unknown experiment '" + cfg.experiment + "'");
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config schema failure: ") + e.what());
    }
}

} // namespace homog
