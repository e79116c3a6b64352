// Serial reference kernels. Plain single-threaded loops with the textbook
// O(n^2) formulas; the test suites check the fast parallel kernels against
// these, and the benchmark target compares their runtimes.
#pragma once

#include <complex>
#include <vector>

namespace homog::serial_ref {

// Direct discrete Fourier transform, e^{-2*pi*i*km/n} convention.
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& a);

// out[s] = scale * sum_r u[r] v[(s-r) mod dims], direct double loop.
std::vector<double> convolve_circular(const std::vector<double>& u, const std::vector<double>& v,
                                      const std::vector<int>& dims, double scale);

// out[s] = scale * sum_r u[r] v[s-r], out size = |u|+|v|-1 (1-d only).
std::vector<double> convolve_linear_1d(const std::vector<double>& u,
                                       const std::vector<double>& v, double scale);

double sum(const std::vector<double>& a);
double dot(const std::vector<double>& a, const std::vector<double>& b);

} // namespace homog::serial_ref
