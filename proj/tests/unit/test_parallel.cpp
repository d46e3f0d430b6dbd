#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fate/parallel.hpp"
#include "fate/random.hpp"

using namespace fate;

TEST_SUITE("parallel") {
    TEST_CASE("chunked sums do not depend on the worker count") {
        auto term = [](std::size_t i) { return std::sin(static_cast<double>(i)) * 1e-3 + 1.0 / (1.0 + i); };
        par::set_thread_count(1);
        const double one = par::chunked_sum(100000, term);
        par::set_thread_count(4);
        const double four = par::chunked_sum(100000, term);
        par::set_thread_count(0);
        CHECK(one == four);
        double plain = 0;
        for (std::size_t i = 0; i < 100000; ++i) plain += term(i);
        CHECK(one == doctest::Approx(plain).epsilon(1e-12));
    }

    TEST_CASE("for_each_index rethrows the lowest-index exception") {
        std::vector<int> hit(50, 0);
        try {
            par::for_each_index(50, [&](std::size_t i) {
                hit[i] = 1;
                if (i == 7 || i == 31) throw std::runtime_error("boom " + std::to_string(i));
            });
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "boom 7");
        }
        int total = 0;
        for (int h : hit) total += h;
        CHECK(total == 50);
    }

    TEST_CASE("derived seeds are distinct and stable") {
        CHECK(derive_seed(1, 0) == derive_seed(1, 0));
        CHECK(derive_seed(1, 0) != derive_seed(1, 1));
        CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
        CHECK(derive_seed(2, 0) != derive_seed(1, 0));
    }
}
