// Parallel loop / reduction helpers. Reductions are deterministic: partial
// sums are formed over fixed-size blocks and combined in block order, so the
// result does not depend on the number of threads.
#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <vector>

namespace homog::par {

void set_threads(int k); // k <= 0 -> leave at runtime default
int threads();

// Parallel for over [0, n). Exceptions thrown by the body are captured and
// rethrown on the calling thread (first one wins).
void for_each(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& body);

// Deterministic sum of body(i) for i in [0, n).
double sum(std::ptrdiff_t n, const std::function<double(std::ptrdiff_t)>& body);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a); // sqrt(sum a_i^2)

} // namespace homog::par
