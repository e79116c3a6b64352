#include "homog/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "homog/par.hpp"

namespace homog {

void fft_inplace(std::complex<double>* a, int n, int sign) {
    if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> t = w * a[i + k + len / 2];
                a[i + k] = u + t;
                a[i + k + len / 2] = u - t;
                w *= wl;
            }
        }
    }
}

void fft_nd(std::complex<double>* a, const std::vector<int>& dims, int sign) {
    const int rank = static_cast<int>(dims.size());
    size_t total = 1;
    for (int d : dims) total *= static_cast<size_t>(d);
    for (int axis = 0; axis < rank; ++axis) {
        const int n = dims[axis];
        if (n == 1) continue;
        size_t stride = 1;
        for (int k = axis + 1; k < rank; ++k) stride *= static_cast<size_t>(dims[k]);
        const size_t nlines = total / static_cast<size_t>(n);
        par::for_each(static_cast<std::ptrdiff_t>(nlines), [&](std::ptrdiff_t line) {
            // base offset of this line: decompose line over the non-axis dims
            size_t rem = static_cast<size_t>(line);
            const size_t inner = stride;              // count of faster-varying indices
            const size_t in_idx = rem % inner;        // index within the fast block
            const size_t out_idx = rem / inner;       // index over the slower dims
            const size_t base = out_idx * inner * static_cast<size_t>(n) + in_idx;
            std::vector<std::complex<double>> buf(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) buf[i] = a[base + static_cast<size_t>(i) * stride];
            fft_inplace(buf.data(), n, sign);
            for (int i = 0; i < n; ++i) a[base + static_cast<size_t>(i) * stride] = buf[i];
        });
    }
}

std::vector<std::complex<double>> fft_forward(const std::vector<double>& re,
                                              const std::vector<int>& dims) {
    std::vector<std::complex<double>> a(re.begin(), re.end());
    fft_nd(a.data(), dims, -1);
    return a;
}

std::vector<double> fft_backward_real(std::vector<std::complex<double>> spec,
                                      const std::vector<int>& dims) {
    fft_nd(spec.data(), dims, +1);
    size_t total = 1;
    for (int d : dims) total *= static_cast<size_t>(d);
    std::vector<double> out(spec.size());
    const double inv = 1.0 / static_cast<double>(total);
    for (size_t i = 0; i < spec.size(); ++i) out[i] = spec[i].real() * inv;
    return out;
}

std::vector<double> convolve_circular(const std::vector<double>& u, const std::vector<double>& v,
                                      const std::vector<int>& dims, double scale) {
    for (int d : dims)
        if (!is_pow2(d)) throw std::invalid_argument("convolve_circular: non-power-of-two axis");
    if (u.size() != v.size()) throw std::invalid_argument("convolve_circular: size mismatch");
    auto fu = fft_forward(u, dims);
    auto fv = fft_forward(v, dims);
    for (size_t i = 0; i < fu.size(); ++i) fu[i] *= fv[i];
    auto out = fft_backward_real(std::move(fu), dims);
    for (double& x : out) x *= scale;
    return out;
}

std::vector<double> convolve_linear(const std::vector<double>& u, const std::vector<int>& du,
                                    const std::vector<double>& v, const std::vector<int>& dv,
                                    double scale, std::vector<int>& dims_out) {
    if (du.size() != dv.size()) throw std::invalid_argument("convolve_linear: rank mismatch");
    const int rank = static_cast<int>(du.size());
    dims_out.resize(rank);
    std::vector<int> padded(rank);
    for (int k = 0; k < rank; ++k) {
        dims_out[k] = du[k] + dv[k] - 1;
        int p = 1;
        while (p < dims_out[k]) p <<= 1;
        padded[k] = p;
    }
    size_t ptotal = 1;
    for (int p : padded) ptotal *= static_cast<size_t>(p);

    auto embed = [&](const std::vector<double>& src, const std::vector<int>& d) {
        std::vector<std::complex<double>> dst(ptotal, 0.0);
        for_each_index(d, [&](size_t fi, const std::vector<int>& idx) {
            size_t f = 0;
            for (int k = 0; k < rank; ++k) f = f * static_cast<size_t>(padded[k]) + idx[k];
            dst[f] = src[fi];
        });
        return dst;
    };
    auto a = embed(u, du);
    auto b = embed(v, dv);
    fft_nd(a.data(), padded, -1);
    fft_nd(b.data(), padded, -1);
    for (size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
    fft_nd(a.data(), padded, +1);
    const double inv = scale / static_cast<double>(ptotal);
    std::vector<double> out;
    out.reserve(1);
    size_t ototal = 1;
    for (int d : dims_out) ototal *= static_cast<size_t>(d);
    out.resize(ototal);
    for_each_index(dims_out, [&](size_t fo, const std::vector<int>& idx) {
        size_t f = 0;
        for (int k = 0; k < rank; ++k) f = f * static_cast<size_t>(padded[k]) + idx[k];
        out[fo] = a[f].real() * inv;
    });
    return out;
}

Field fft_convolve(const Field& u, const Field& v, ConvMode mode) {
    if (u.grid.rank() != v.grid.rank())
        throw std::invalid_argument("fft_convolve: rank mismatch");
    if (mode == ConvMode::circular) {
        if (u.grid.n != v.grid.n) throw std::invalid_argument("fft_convolve: grid mismatch");
        if (!u.grid.pow2_axes())
            throw std::invalid_argument("fft_convolve: non-power-of-two axis");
        Field out(u.grid);
        out.v = convolve_circular(u.v, v.v, u.grid.n, 1.0 / static_cast<double>(u.size()));
        return out;
    }
    // zero-padded: spacings must agree axis by axis
    double scale = 1.0;
    for (int k = 0; k < u.grid.rank(); ++k) {
        if (std::abs(u.grid.h[k] - v.grid.h[k]) > 1e-12 * std::abs(u.grid.h[k]))
            throw std::invalid_argument("fft_convolve: spacing mismatch");
        scale *= u.grid.h[k];
    }
    std::vector<int> dims_out;
    auto vals = convolve_linear(u.v, u.grid.n, v.v, v.grid.n, scale, dims_out);
    std::vector<double> origin(u.grid.origin);
    for (int k = 0; k < u.grid.rank(); ++k) origin[k] += v.grid.origin[k];
    Grid g(dims_out, u.grid.h, origin, std::vector<uint8_t>(dims_out.size(), 0));
    Field out(g);
    out.v = std::move(vals);
    return out;
}

} // namespace homog
