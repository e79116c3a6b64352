#include "homog/par.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace homog::par {

namespace {
constexpr std::ptrdiff_t kBlock = 1024; // reduction block size, fixed
}

void set_threads(int k) {
#ifdef _OPENMP
    if (k > 0) omp_set_num_threads(k);
#else
    (void)k;
#endif
}

int threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void for_each(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& body) {
    std::exception_ptr err = nullptr;
    std::mutex err_mutex;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
}

double sum(std::ptrdiff_t n, const std::function<double(std::ptrdiff_t)>& body) {
    if (n <= 0) return 0.0;
    const std::ptrdiff_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(static_cast<size_t>(nblocks), 0.0);
    std::exception_ptr err = nullptr;
    std::mutex err_mutex;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        try {
            const std::ptrdiff_t lo = b * kBlock;
            const std::ptrdiff_t hi = std::min(n, lo + kBlock);
            double s = 0.0;
            for (std::ptrdiff_t i = lo; i < hi; ++i) s += body(i);
            partial[static_cast<size_t>(b)] = s;
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    double total = 0.0;
    for (double s : partial) total += s; // fixed block order
    return total;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    const double* pa = a.data();
    const double* pb = b.data();
    return sum(static_cast<std::ptrdiff_t>(a.size()),
               [pa, pb](std::ptrdiff_t i) { return pa[i] * pb[i]; });
}

double norm2(const std::vector<double>& a) {
    const double* pa = a.data();
    return std::sqrt(sum(static_cast<std::ptrdiff_t>(a.size()),
                         [pa](std::ptrdiff_t i) { return pa[i] * pa[i]; }));
}

} // namespace homog::par
