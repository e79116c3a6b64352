#include "homog/grid.hpp"

#include <cmath>

#include "homog/par.hpp"

namespace homog {

void for_each_index(const std::vector<int>& dims,
                    const std::function<void(size_t, const std::vector<int>&)>& body) {
    std::vector<int> idx(dims.size(), 0);
    size_t total = 1;
    for (int d : dims) total *= static_cast<size_t>(d);
    for (size_t f = 0; f < total; ++f) {
        body(f, idx);
        for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
    }
}

Field Field::sample(const Grid& g, const std::function<double(const double*)>& fn) {
    Field out(g);
    const int rank = g.rank();
    std::vector<int> idx(rank);
    std::vector<double> x(rank);
    for_each_index(g.n, [&](size_t f, const std::vector<int>& mi) {
        for (int k = 0; k < rank; ++k) x[k] = g.coord(k, mi[k]);
        out.v[f] = fn(x.data());
    });
    return out;
}

namespace {

// Quadrature weight of one grid point: product of per-axis weights.
double quad_weight(const Grid& g, const std::vector<int>& idx) {
    double w = 1.0;
    for (int k = 0; k < g.rank(); ++k) {
        double wk = g.h[k];
        if (!g.wrap[k] && (idx[k] == 0 || idx[k] == g.n[k] - 1)) wk *= 0.5;
        w *= wk;
    }
    return w;
}

} // namespace

double integrate(const Field& f) {
    double s = 0.0;
    for_each_index(f.grid.n, [&](size_t i, const std::vector<int>& idx) {
        s += quad_weight(f.grid, idx) * f.v[i];
    });
    return s;
}

double lp_norm(const Field& f, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    double s = 0.0;
    for_each_index(f.grid.n, [&](size_t i, const std::vector<int>& idx) {
        s += quad_weight(f.grid, idx) * std::pow(std::abs(f.v[i]), p);
    });
    return std::pow(s, 1.0 / p);
}

} // namespace homog
