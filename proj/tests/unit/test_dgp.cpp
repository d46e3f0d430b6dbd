#include <doctest.h>

#include <cmath>
#include <random>

#include "fate/dgp.hpp"
#include "fate/error.hpp"
#include "fate/reference.hpp"
#include "fate/study.hpp"

using namespace fate;

namespace {

struct Moments {
    double n = 0, x1 = 0, x2 = 0, a = 0, y = 0, yy = 0;
};

Moments moments(const StudyDataset& d, int g) {
    Moments m;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.g(i) != g) continue;
        m.n += 1;
        m.x1 += d.x(i, 0);
        m.x2 += d.x(i, 1);
        if (g == 1) {
            m.a += *d.a(i);
            m.y += *d.y(i);
            m.yy += *d.y(i) * *d.y(i);
        }
    }
    m.x1 /= m.n;
    m.x2 /= m.n;
    m.a /= m.n;
    m.y /= m.n;
    m.yy /= m.n;
    return m;
}

}  // namespace

TEST_SUITE("dgp") {
    TEST_CASE("cases and names") {
        for (int k = 1; k <= 20; ++k) CHECK(dgp_case(k).name == "C" + std::to_string(k));
        CHECK(dgp_case("C13").name == "C13");
        CHECK_THROWS_AS(dgp_case(21), ConfigError);
        CHECK_THROWS_AS(dgp_case("D1"), ConfigError);
        CHECK(dgp_case(11).sd0_source == 3);
        CHECK(dgp_case(12).sd1_target == 3);
    }

    TEST_CASE("C1 source share approaches one half") {
        const auto d = dgp_generate(dgp_case(1), 100000, 1).data;
        CHECK(d.q_hat() == doctest::Approx(0.5).epsilon(0.02));
    }

    TEST_CASE("controls-only companions have no treated target units") {
        for (int k : {4, 5, 6, 9, 10, 13, 14, 18, 19, 20}) {
            const auto d = dgp_generate(dgp_case(k), 3000, 2).data;
            for (std::size_t i = 0; i < d.size(); ++i)
                if (d.g(i) == 0) CHECK(*d.a(i) == 0);
        }
    }

    TEST_CASE("a design and its controls-only companion share the source law") {
        const std::size_t n = 200000;
        for (auto [b, c] : {std::pair{1, 4}, std::pair{11, 13}, std::pair{17, 20}}) {
            const auto mb = moments(dgp_generate(dgp_case(b), n, 3).data, 1);
            const auto mc = moments(dgp_generate(dgp_case(c), n, 4).data, 1);
            const auto tb = moments(dgp_generate(dgp_case(b), n, 3).data, 0);
            const auto tc = moments(dgp_generate(dgp_case(c), n, 4).data, 0);
            CHECK(std::abs(mb.a - mc.a) < 0.01);
            CHECK(std::abs(mb.y - mc.y) < 0.06);
            CHECK(std::abs(mb.x1 - mc.x1) < 0.02);
            CHECK(std::abs(tb.x1 - tc.x1) < 0.02);
            CHECK(std::abs(tb.x2 - tc.x2) < 0.02);
        }
    }

    TEST_CASE("generation is deterministic and matches the serial reference") {
        const auto a = dgp_generate(dgp_case(3), 5000, 9);
        const auto b = dgp_generate(dgp_case(3), 5000, 9);
        const auto c = reference::dgp_generate(dgp_case(3), 5000, 9);
        for (std::size_t i = 0; i < 5000; ++i) {
            CHECK(a.data.y(i) == b.data.y(i));
            CHECK(a.data.y(i) == c.data.y(i));
            CHECK(a.data.x(i, 1) == c.data.x(i, 1));
            CHECK(a.y1[i] == c.y1[i]);
        }
        const auto d = dgp_generate(dgp_case(3), 5000, 10);
        CHECK(d.data.y(0) != a.data.y(0));
    }

    TEST_CASE("latent table is consistent with observed outcomes") {
        const auto g = dgp_generate(dgp_case(1), 2000, 2);
        for (std::size_t i = 0; i < 2000; ++i) CHECK(*g.data.y(i) == (*g.data.a(i) ? g.y1[i] : g.y0[i]));
    }

    TEST_CASE("quadrature truths agree with a Monte Carlo integral") {
        for (int k : {1, 3, 8, 16}) {
            const auto spec = dgp_case(k);
            const auto t = true_values(spec);
            // E[(1-G)(Y1-Y0)] / E[1-G] and E[G(Y1-Y0)] / E[G] from latent draws.
            const auto m = mc_integrate(spec,
                                        {[](const Draw& d) { return (1.0 - d.g) * (d.y1 - d.y0); },
                                         [](const Draw& d) { return 1.0 - d.g; },
                                         [](const Draw& d) { return d.g * (d.y1 - d.y0); },
                                         [](const Draw& d) { return (1.0 - d.g) * d.a * (d.y1 - d.y0); },
                                         [](const Draw& d) { return (1.0 - d.g) * d.a; }},
                                        1000000, 77);
            INFO("case C", k);
            CHECK(m.mean[1] == doctest::Approx(1 - t.q).epsilon(0.01));
            CHECK(m.mean[0] / m.mean[1] == doctest::Approx(t.tau).epsilon(0.03));
            CHECK(m.mean[2] / (1 - m.mean[1]) == doctest::Approx(t.beta).epsilon(0.03));
            CHECK(m.mean[3] / m.mean[4] == doctest::Approx(t.tau_att).epsilon(0.03));
        }
    }

    TEST_CASE("Gauss-Hermite rule integrates normal moments") {
        std::vector<double> x, w;
        gauss_hermite(40, x, w);
        double m0 = 0, m2 = 0, m4 = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            m0 += w[i];
            m2 += w[i] * x[i] * x[i];
            m4 += w[i] * std::pow(x[i], 4);
        }
        CHECK(m0 == doctest::Approx(1).epsilon(1e-12));
        CHECK(m2 == doctest::Approx(1).epsilon(1e-10));
        CHECK(m4 == doctest::Approx(3).epsilon(1e-10));
    }

    TEST_CASE("injected drift scales the target means") {
        const auto base = dgp_case(1);
        const auto drifted = with_drift(base, 0.8, 0.5);
        CHECK(drifted.mu(0.3, -0.2, 0, 0) == doctest::Approx(0.8 * base.mu(0.3, -0.2, 0, 1)));
        CHECK(drifted.mu(0.3, -0.2, 1, 0) == doctest::Approx(0.5 * base.mu(0.3, -0.2, 1, 1)));
        CHECK(drifted.mu(0.3, -0.2, 1, 1) == doctest::Approx(base.mu(0.3, -0.2, 1, 1)));
        CHECK(drifted.drift().psi(0, 2.0) == doctest::Approx(1.6));
    }
}
