// Compares the OpenMP kernels against the serial reference implementations:
// correctness (max deviation) and wall time side by side.
//
//   ./bench_kernels [n]
//
// n scales the problem sizes (default 1).

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "homog/fft.hpp"
#include "homog/par.hpp"
#include "homog/serial_ref.hpp"

using namespace homog;
using clk = std::chrono::steady_clock;

namespace {

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

std::vector<double> random_vec(size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

void report(const char* name, double t_par, double t_ser, double maxdiff) {
    std::printf("%-28s  parallel %8.4f s   serial %8.4f s   speedup %5.2fx   maxdiff %.2e\n",
                name, t_par, t_ser, t_ser / t_par, maxdiff);
}

} // namespace

int main(int argc, char** argv) {
    const int scale = argc > 1 ? std::atoi(argv[1]) : 1;
    std::printf("threads: %d\n", par::threads());

    // deterministic reduction vs serial sum
    {
        const size_t n = static_cast<size_t>(scale) * (1 << 24);
        auto v = random_vec(n, 1);
        auto t0 = clk::now();
        double s1 = 0.0;
        for (int rep = 0; rep < 8; ++rep)
            s1 = par::sum(static_cast<std::ptrdiff_t>(n),
                          [&](std::ptrdiff_t i) { return v[i]; });
        const double tp = seconds_since(t0) / 8;
        t0 = clk::now();
        double s2 = 0.0;
        for (int rep = 0; rep < 8; ++rep) s2 = serial_ref::sum(v);
        const double ts = seconds_since(t0) / 8;
        report("reduction (16M doubles)", tp, ts, std::abs(s1 - s2));
    }

    // fft against the direct O(n^2) transform
    {
        const int n = 4096;
        auto re = random_vec(n, 2);
        std::vector<std::complex<double>> a(re.begin(), re.end());
        auto t0 = clk::now();
        std::vector<std::complex<double>> fast;
        for (int rep = 0; rep < 64; ++rep) {
            fast = a;
            fft_inplace(fast.data(), n, -1);
        }
        const double tp = seconds_since(t0) / 64;
        t0 = clk::now();
        auto slow = serial_ref::dft(a);
        const double ts = seconds_since(t0);
        double maxdiff = 0.0;
        for (int i = 0; i < n; ++i) maxdiff = std::max(maxdiff, std::abs(fast[i] - slow[i]));
        report("fft vs direct dft (4096)", tp, ts, maxdiff);
    }

    // 2-d circular convolution: FFT vs direct double loop
    {
        const int n = 64;
        const std::vector<int> dims{n, n};
        auto u = random_vec(static_cast<size_t>(n) * n, 3);
        auto v = random_vec(static_cast<size_t>(n) * n, 4);
        const double sc = 1.0 / (n * n);
        auto t0 = clk::now();
        std::vector<double> fast;
        for (int rep = 0; rep < 32; ++rep) fast = convolve_circular(u, v, dims, sc);
        const double tp = seconds_since(t0) / 32;
        t0 = clk::now();
        auto slow = serial_ref::convolve_circular(u, v, dims, sc);
        const double ts = seconds_since(t0);
        double maxdiff = 0.0;
        for (size_t i = 0; i < fast.size(); ++i)
            maxdiff = std::max(maxdiff, std::abs(fast[i] - slow[i]));
        report("conv 64x64 fft vs direct", tp, ts, maxdiff);
    }

    // multi-line nd fft (parallel over lines) on a large 2-d grid
    {
        const int n = 1024 * scale;
        const std::vector<int> dims{n, 256};
        auto re = random_vec(static_cast<size_t>(n) * 256, 5);
        std::vector<std::complex<double>> a(re.begin(), re.end());
        auto t0 = clk::now();
        auto b = a;
        fft_nd(b.data(), dims, -1);
        fft_nd(b.data(), dims, +1);
        const double tp = seconds_since(t0);
        const double total = static_cast<double>(a.size());
        double maxdiff = 0.0;
        for (size_t i = 0; i < a.size(); ++i)
            maxdiff = std::max(maxdiff, std::abs(b[i] / total - a[i]));
        std::printf("%-28s  round trip %7.4f s                          maxdiff %.2e\n",
                    "nd fft 1024x256", tp, maxdiff);
    }
    return 0;
}
