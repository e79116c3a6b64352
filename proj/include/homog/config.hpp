// Experiment configs: JSON loading, eager validation, and the dispatch of
// the experiment families to the solver modules.
#pragma once

#include <string>

#include "json.hpp"

#include "homog/report.hpp"

namespace homog {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct ExperimentConfig {
    std::string experiment;
    uint64_t seed = 1;
    std::string output_dir = "out";
    std::string config_bytes; // raw file contents, hashed into the manifest
    nlohmann::json root;
};

// Throws ParseError on malformed JSON or schema violations.
ExperimentConfig load_config(const std::string& path);

// Eagerly runs the structural checks of every referenced block; throws
// ValidationError naming the violated assumption.
void validate_config(const ExperimentConfig& cfg);

// Runs the configured experiment, writing artifacts into out_dir and
// recording them (plus verdicts) in the manifest.
void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, RunManifest& m);

} // namespace homog
