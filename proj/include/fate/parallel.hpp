#pragma once

// OpenMP helpers. Reductions always split the index range into fixed-size
// chunks and combine chunk partials in index order, so results are bitwise
// independent of the worker count.

#include <algorithm>
#include <array>
#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fate::par {

inline constexpr std::size_t kChunk = 2048;

/// Worker count used by every parallel region. Defaults to FATE_THREADS
/// when set, otherwise to the OpenMP default.
int thread_count();
void set_thread_count(int n);

inline bool in_parallel() {
#ifdef _OPENMP
    return omp_in_parallel() != 0;
#else
    return false;
#endif
}

/// Calls f(i) for i in [0, n). f must only write to per-index state. The
/// exception thrown at the lowest index, if any, is rethrown after the loop.
template <class F>
void for_each_index(std::size_t n, F&& f) {
    std::exception_ptr first;
    std::size_t first_index = n;
#ifdef _OPENMP
    const int nt = in_parallel() ? 1 : thread_count();
    const auto sn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt) if (nt > 1)
    for (long long i = 0; i < sn; ++i) {
        try {
            f(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(fate_for_each_index)
            if (static_cast<std::size_t>(i) < first_index) {
                first_index = static_cast<std::size_t>(i);
                first = std::current_exception();
            }
        }
    }
#else
    for (std::size_t i = 0; i < n; ++i) {
        try {
            f(i);
        } catch (...) {
            if (i < first_index) {
                first_index = i;
                first = std::current_exception();
            }
        }
    }
#endif
    if (first) std::rethrow_exception(first);
}

/// Deterministic sums of K per-index terms: term(i, acc) adds into acc[0..K).
template <std::size_t K, class F>
std::array<double, K> chunked_sums(std::size_t n, F&& term) {
    const std::size_t nchunks = (n + kChunk - 1) / kChunk;
    std::vector<std::array<double, K>> partial(nchunks);
    for_each_index(nchunks, [&](std::size_t c) {
        std::array<double, K> acc{};
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) term(i, acc);
        partial[c] = acc;
    });
    std::array<double, K> total{};
    for (const auto& p : partial)
        for (std::size_t k = 0; k < K; ++k) total[k] += p[k];
    return total;
}

template <class F>
double chunked_sum(std::size_t n, F&& term) {
    return chunked_sums<1>(n, [&](std::size_t i, std::array<double, 1>& acc) { acc[0] += term(i); })[0];
}

}  // namespace fate::par
