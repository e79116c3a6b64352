// Uniform rectilinear grids and sampled fields.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace homog {

inline bool is_pow2(int n) { return n >= 1 && (n & (n - 1)) == 0; }

struct Grid {
    std::vector<int> n;          // points per axis (>= 2 unless degenerate axis)
    std::vector<double> h;       // spacing per axis
    std::vector<double> origin;  // coordinate of index 0 per axis
    std::vector<uint8_t> wrap;   // periodic axis flag

    Grid() = default;
    Grid(std::vector<int> n_, std::vector<double> h_, std::vector<double> o_,
         std::vector<uint8_t> w_)
        : n(std::move(n_)), h(std::move(h_)), origin(std::move(o_)), wrap(std::move(w_)) {
        if (n.size() != h.size() || n.size() != origin.size() || n.size() != wrap.size())
            throw std::invalid_argument("Grid: inconsistent axis metadata");
    }

    // Periodic box [o, o+len) with len/n spacing; grid point i at o + i*len/n.
    static Grid periodic_box(const std::vector<double>& o, const std::vector<double>& len,
                             const std::vector<int>& n) {
        std::vector<double> h(n.size());
        for (size_t k = 0; k < n.size(); ++k) h[k] = len[k] / n[k];
        return Grid(n, h, o, std::vector<uint8_t>(n.size(), 1));
    }

    // Closed box [o, o+len] including both endpoints; n = points per axis.
    static Grid closed_box(const std::vector<double>& o, const std::vector<double>& len,
                           const std::vector<int>& n) {
        std::vector<double> h(n.size());
        for (size_t k = 0; k < n.size(); ++k) h[k] = len[k] / (n[k] - 1);
        return Grid(n, h, o, std::vector<uint8_t>(n.size(), 0));
    }

    int rank() const { return static_cast<int>(n.size()); }

    size_t size() const {
        size_t s = 1;
        for (int d : n) s *= static_cast<size_t>(d);
        return s;
    }

    double coord(int axis, int i) const { return origin[axis] + h[axis] * i; }

    bool pow2_axes() const {
        for (int d : n)
            if (!is_pow2(d)) return false;
        return true;
    }

    size_t flat(const std::vector<int>& idx) const {
        size_t f = 0;
        for (size_t k = 0; k < n.size(); ++k) f = f * static_cast<size_t>(n[k]) + idx[k];
        return f;
    }
};

// Visit every multi-index of `dims` in row-major order; body(flat, idx).
void for_each_index(const std::vector<int>& dims,
                    const std::function<void(size_t, const std::vector<int>&)>& body);

struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(Grid g, double fill = 0.0) : grid(std::move(g)), v(grid.size(), fill) {}

    size_t size() const { return v.size(); }
    double& operator[](size_t i) { return v[i]; }
    double operator[](size_t i) const { return v[i]; }

    // Sample fn(x) at every grid point.
    static Field sample(const Grid& g, const std::function<double(const double*)>& fn);
};

// Trapezoid quadrature of a sampled field over its grid (wrap axes use the
// periodic sum, closed axes use half-weight endpoints).
double integrate(const Field& f);

// Discrete L^p norm with quadrature weights: (integral |f|^p)^(1/p).
double lp_norm(const Field& f, double p);

} // namespace homog
