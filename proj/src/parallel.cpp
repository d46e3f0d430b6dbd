#include "fate/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace fate::par {

namespace {

int initial_threads() {
    if (const char* env = std::getenv("FATE_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::atomic<int>& threads() {
    static std::atomic<int> n{initial_threads()};
    return n;
}

}  // namespace

int thread_count() { return threads().load(); }

void set_thread_count(int n) { threads().store(n > 0 ? n : initial_threads()); }

}  // namespace fate::par
