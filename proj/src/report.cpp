#include "homog/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace homog {

void write_field_csv(const Field& f, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_field_csv: cannot open " + path);
    std::fprintf(fp, "# field n=");
    for (size_t k = 0; k < f.grid.n.size(); ++k)
        std::fprintf(fp, "%s%d", k ? "," : "", f.grid.n[k]);
    std::fprintf(fp, " origin=");
    for (size_t k = 0; k < f.grid.origin.size(); ++k)
        std::fprintf(fp, "%s%.17g", k ? "," : "", f.grid.origin[k]);
    std::fprintf(fp, " h=");
    for (size_t k = 0; k < f.grid.h.size(); ++k)
        std::fprintf(fp, "%s%.17g", k ? "," : "", f.grid.h[k]);
    std::fprintf(fp, "\n");
    for (double x : f.v) std::fprintf(fp, "%.17g\n", x);
    std::fclose(fp);
}

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(RunManifest& m, const std::string& out_dir) {
    m.artifacts.push_back("manifest.json");
    std::sort(m.artifacts.begin(), m.artifacts.end());
    m.artifacts.erase(std::unique(m.artifacts.begin(), m.artifacts.end()), m.artifacts.end());
    const std::string path = out_dir + "/manifest.json";
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_manifest: cannot open " + path);
    std::fprintf(fp, "{\n  \"config_hash\": \"%s\",\n  \"version\": \"%s\",\n",
                 m.config_hash.c_str(), m.version.c_str());
    std::fprintf(fp, "  \"wall_seconds\": %.6f,\n  \"artifacts\": [", m.wall_seconds);
    for (size_t i = 0; i < m.artifacts.size(); ++i)
        std::fprintf(fp, "%s\"%s\"", i ? ", " : "", m.artifacts[i].c_str());
    std::fprintf(fp, "],\n  \"verdicts\": {");
    for (size_t i = 0; i < m.verdicts.size(); ++i)
        std::fprintf(fp, "%s\"%s\": \"%s\"", i ? ", " : "", m.verdicts[i].first.c_str(),
                     m.verdicts[i].second.c_str());
    std::fprintf(fp, "}\n}\n");
    std::fclose(fp);
}

namespace {

struct PlotRow {
    double eps;
    double err;
};

std::vector<PlotRow> read_convergence_rows(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("plot: cannot open " + csv_path);
    std::string line;
    bool header_seen = false;
    std::vector<PlotRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("eps,", 0) != 0)
                throw std::runtime_error("plot: csv does not match the convergence schema");
            header_seen = true;
            continue;
        }
        PlotRow r{};
        char* end = nullptr;
        r.eps = std::strtod(line.c_str(), &end);
        if (!end || *end != ',')
            throw std::runtime_error("plot: malformed data row: " + line);
        r.err = std::strtod(end + 1, nullptr);
        if (!(r.eps > 0.0) || !(r.err >= 0.0))
            throw std::runtime_error("plot: non-positive eps or negative error");
        rows.push_back(r);
    }
    if (!header_seen) throw std::runtime_error("plot: missing header row");
    if (rows.empty()) throw std::runtime_error("plot: no data rows");
    return rows;
}

} // namespace

void write_convergence_svg(const std::string& csv_path, const std::string& svg_path) {
    auto rows = read_convergence_rows(csv_path);

    const double W = 480, H = 360, margin = 56;
    double lx_min = 1e300, lx_max = -1e300, ly_min = 1e300, ly_max = -1e300;
    const double err_floor = 1e-300;
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
        const double lx = std::log10(r.eps);
        const double ly = std::log10(std::max(r.err, err_floor));
        pts.emplace_back(lx, ly);
        lx_min = std::min(lx_min, lx);
        lx_max = std::max(lx_max, lx);
        ly_min = std::min(ly_min, ly);
        ly_max = std::max(ly_max, ly);
    }
    if (lx_max - lx_min < 1e-12) {
        lx_min -= 0.5;
        lx_max += 0.5;
    }
    if (ly_max - ly_min < 1e-12) {
        ly_min -= 0.5;
        ly_max += 0.5;
    }
    auto sx = [&](double lx) { return margin + (lx - lx_min) / (lx_max - lx_min) * (W - 2 * margin); };
    auto sy = [&](double ly) { return H - margin - (ly - ly_min) / (ly_max - ly_min) * (H - 2 * margin); };

    // least-squares slope of log err against log eps
    double mx = 0, my = 0;
    for (auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= pts.size();
    my /= pts.size();
    double num = 0, den = 0;
    for (auto& [x, y] : pts) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    const double slope = den > 0 ? num / den : 0.0;

    std::FILE* fp = std::fopen(svg_path.c_str(), "w");
    if (!fp) throw std::runtime_error("plot: cannot open " + svg_path);
    std::fprintf(fp,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                 "viewBox=\"0 0 %.0f %.0f\">\n",
                 W, H, W, H);
    std::fprintf(fp, "<rect width=\"%.0f\" height=\"%.0f\" fill=\"white\"/>\n", W, H);
    std::fprintf(fp,
                 "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                 margin, H - margin, W - margin, H - margin);
    std::fprintf(fp,
                 "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                 margin, margin, margin, H - margin);
    std::fprintf(fp,
                 "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" font-family=\"monospace\">"
                 "log10 eps</text>\n",
                 W / 2 - 30, H - margin / 3);
    std::fprintf(fp,
                 "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" font-family=\"monospace\" "
                 "transform=\"rotate(-90 %.1f %.1f)\">log10 error</text>\n",
                 margin / 3, H / 2, margin / 3, H / 2);
    if (pts.size() >= 2) {
        std::fprintf(fp, "<polyline fill=\"none\" stroke=\"steelblue\" points=\"");
        for (auto& [x, y] : pts) std::fprintf(fp, "%.2f,%.2f ", sx(x), sy(y));
        std::fprintf(fp, "\"/>\n");
    }
    for (auto& [x, y] : pts)
        std::fprintf(fp, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"firebrick\"/>\n", sx(x),
                     sy(y));
    std::fprintf(fp,
                 "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" font-family=\"monospace\">"
                 "slope=%.3f</text>\n",
                 margin + 8, margin + 4, slope);
    std::fprintf(fp, "</svg>\n");
    std::fclose(fp);
}

} // namespace homog
