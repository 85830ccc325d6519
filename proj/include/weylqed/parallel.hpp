// parallel.hpp — deterministic data-parallel reductions

#pragma once

#include <cstddef>
#include <vector>

#include <omp.h>

namespace weylqed::parallel {

/// Caps the worker count used by every momentum-grid loop.
inline void set_jobs(int n) {
    if (n > 0) omp_set_num_threads(n);
}

inline int jobs() { return omp_get_max_threads(); }

/// Sums chunk(i) for i in [0, n_chunks). Each chunk is evaluated by one thread and
/// the partials are added in index order, so the result is bit-identical for any
/// thread count.
template <class T, class Chunk>
T ordered_sum(int n_chunks, Chunk&& chunk, T zero = T{}) {
    std::vector<T> partial(static_cast<std::size_t>(n_chunks), zero);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_chunks; ++i) partial[static_cast<std::size_t>(i)] = chunk(i);
    T total = zero;
    for (const T& p : partial) total += p;
    return total;
}

template <class Body>
void for_each(int n, Body&& body) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) body(i);
}

} // namespace weylqed::parallel
