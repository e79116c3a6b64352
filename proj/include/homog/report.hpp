// Run artifacts: field CSV export, the run manifest, and the SVG
// convergence plot.
#pragma once

#include <string>
#include <vector>

#include "homog/grid.hpp"

namespace homog {

// "# field n=<n1,...> origin=<o1,...> h=<h1,...>" then row-major values.
void write_field_csv(const Field& f, const std::string& path);

struct RunManifest {
    std::string config_hash;
    std::string version;
    double wall_seconds = 0.0;
    std::vector<std::string> artifacts; // file names relative to output_dir
    std::vector<std::pair<std::string, std::string>> verdicts; // name -> pass|fail|skipped

    void add_verdict(const std::string& name, bool pass) {
        verdicts.emplace_back(name, pass ? "pass" : "fail");
    }
    bool all_pass() const {
        for (const auto& [k, v] : verdicts)
            if (v == "fail") return false;
        return true;
    }
};

// FNV-1a hash of a byte string, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

// Writes manifest.json (listing itself among the artifacts).
void write_manifest(RunManifest& m, const std::string& out_dir);

// Log-log scatter of column 1 against column 0 of a convergence CSV with a
// least-squares slope annotation. Pure-text SVG. Rows must be nonempty and
// the header must carry an eps column first.
void write_convergence_svg(const std::string& csv_path, const std::string& svg_path);

} // namespace homog
