// Radix-2 FFT on power-of-two grids, plus grid convolutions built on it.
#pragma once

#include <complex>
#include <vector>

#include "homog/grid.hpp"

namespace homog {

// In-place transform of contiguous data, n a power of two.
// sign = -1: forward (e^{-2*pi*i*km/n}), sign = +1: backward, unnormalized.
void fft_inplace(std::complex<double>* a, int n, int sign);

// Transform every axis of a row-major nd array. Unnormalized in both
// directions; a forward/backward round trip multiplies by total size.
void fft_nd(std::complex<double>* a, const std::vector<int>& dims, int sign);

std::vector<std::complex<double>> fft_forward(const std::vector<double>& re,
                                              const std::vector<int>& dims);

// Backward transform divided by total size; imaginary parts are dropped.
std::vector<double> fft_backward_real(std::vector<std::complex<double>> spec,
                                      const std::vector<int>& dims);

// Signed frequency of mode m on an axis of size n (m in [0,n)).
inline int signed_mode(int m, int n) { return m <= n / 2 ? m : m - n; }

// out[s] = scale * sum_r u[r] v[s-r]  (indices mod dims)
std::vector<double> convolve_circular(const std::vector<double>& u, const std::vector<double>& v,
                                      const std::vector<int>& dims, double scale);

// Compact-support convolution: out dims = du + dv - 1 per axis,
// out[s] = scale * sum_{r} u[r] v[s-r] over valid indices.
std::vector<double> convolve_linear(const std::vector<double>& u, const std::vector<int>& du,
                                    const std::vector<double>& v, const std::vector<int>& dv,
                                    double scale, std::vector<int>& dims_out);

enum class ConvMode { circular, zero_padded };

// Grid-level convolution.
//  - circular: identical periodic power-of-two grids; normalized measure
//    (plain average), so convolving with the constant 1 returns the mean.
//  - zero_padded: spacing-weighted quadrature of the compact-support
//    convolution; the output grid spans the support sum.
Field fft_convolve(const Field& u, const Field& v, ConvMode mode);

} // namespace homog
