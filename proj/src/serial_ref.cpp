#include "homog/serial_ref.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace homog::serial_ref {

std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    std::vector<std::complex<double>> out(n, 0.0);
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> s = 0.0;
        for (size_t m = 0; m < n; ++m) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * m) /
                               static_cast<double>(n);
            s += a[m] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = s;
    }
    return out;
}

std::vector<double> convolve_circular(const std::vector<double>& u, const std::vector<double>& v,
                                      const std::vector<int>& dims, double scale) {
    if (u.size() != v.size()) throw std::invalid_argument("serial convolve: size mismatch");
    const int rank = static_cast<int>(dims.size());
    size_t total = 1;
    for (int d : dims) total *= static_cast<size_t>(d);

    auto decompose = [&](size_t f, std::vector<int>& idx) {
        for (int k = rank - 1; k >= 0; --k) {
            idx[k] = static_cast<int>(f % static_cast<size_t>(dims[k]));
            f /= static_cast<size_t>(dims[k]);
        }
    };
    std::vector<double> out(total, 0.0);
    std::vector<int> si(rank), ri(rank);
    for (size_t s = 0; s < total; ++s) {
        decompose(s, si);
        double acc = 0.0;
        for (size_t r = 0; r < total; ++r) {
            decompose(r, ri);
            size_t f = 0;
            for (int k = 0; k < rank; ++k) {
                int d = si[k] - ri[k];
                if (d < 0) d += dims[k];
                f = f * static_cast<size_t>(dims[k]) + static_cast<size_t>(d);
            }
            acc += u[r] * v[f];
        }
        out[s] = acc * scale;
    }
    return out;
}

std::vector<double> convolve_linear_1d(const std::vector<double>& u,
                                       const std::vector<double>& v, double scale) {
    std::vector<double> out(u.size() + v.size() - 1, 0.0);
    for (size_t i = 0; i < u.size(); ++i)
        for (size_t j = 0; j < v.size(); ++j) out[i + j] += u[i] * v[j] * scale;
    return out;
}

double sum(const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x;
    return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace homog::serial_ref
