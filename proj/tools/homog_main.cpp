// Experiment runner for the homogenization toolkit.
//
//   homog run <config.json> [--out DIR] [--threads K]
//   homog plot <study.csv> [--out FILE]
//   homog validate <config.json>
//
// Exit codes: 0 success, 1 acceptance verdict failed, 2 parse error,
// 3 validation error (a model assumption is violated), 4 solver error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "CLI11.hpp"

#include "homog/config.hpp"
#include "homog/errors.hpp"
#include "homog/par.hpp"

namespace {

int apply_threads(int cli_threads) {
    // TOOL_THREADS overrides the command-line flag
    if (const char* env = std::getenv("TOOL_THREADS")) {
        const int k = std::atoi(env);
        if (k > 0) {
            homog::par::set_threads(k);
            return k;
        }
    }
    if (cli_threads > 0) homog::par::set_threads(cli_threads);
    return cli_threads;
}

int do_run(const std::string& config_path, std::string out_dir) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    homog::ExperimentConfig cfg = homog::load_config(config_path);
    homog::validate_config(cfg);
    if (out_dir.empty()) out_dir = cfg.output_dir;
    std::filesystem::create_directories(out_dir);

    homog::RunManifest manifest;
    homog::run_experiment(cfg, out_dir, manifest);
    manifest.wall_seconds =
        std::chrono::duration<double>(clock::now() - t0).count();
    homog::write_manifest(manifest, out_dir);

    for (const auto& [name, verdict] : manifest.verdicts)
        std::printf("[%s] %s\n", verdict.c_str(), name.c_str());
    std::printf("artifacts in %s (%zu files)\n", out_dir.c_str(), manifest.artifacts.size());
    return manifest.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical homogenization toolkit"};
    app.require_subcommand(1);

    std::string config_path, csv_path, out_arg;
    int threads = 0;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_arg, "output directory (overrides the config)");
    run->add_option("--threads", threads, "worker threads");

    auto* plot = app.add_subcommand("plot", "render a convergence study as SVG");
    plot->add_option("csv", csv_path, "convergence CSV")->required();
    plot->add_option("--out", out_arg, "output SVG file");

    auto* validate = app.add_subcommand("validate", "parse and validate a config");
    validate->add_option("config", config_path, "experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);
    apply_threads(threads);

    try {
        if (run->parsed()) return do_run(config_path, out_arg);
        if (plot->parsed()) {
            const std::string svg = out_arg.empty()
                                        ? csv_path.substr(0, csv_path.find_last_of('.')) + ".svg"
                                        : out_arg;
            try {
                homog::write_convergence_svg(csv_path, svg);
            } catch (const std::runtime_error& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return 2;
            }
            std::printf("wrote %s\n", svg.c_str());
            return 0;
        }
        if (validate->parsed()) {
            homog::ExperimentConfig cfg = homog::load_config(config_path);
            homog::validate_config(cfg);
            std::printf("config ok: experiment=%s\n", cfg.experiment.c_str());
            return 0;
        }
    } catch (const homog::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const homog::ValidationError& e) {
        std::fprintf(stderr, "validation error (%s): %s\n", e.assumption.c_str(), e.what());
        return 3;
    } catch (const homog::SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
