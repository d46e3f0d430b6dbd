#include <doctest.h>

#include <cmath>

#include "fate/dgp.hpp"
#include "fate/eif.hpp"
#include "fate/error.hpp"
#include "fate/sensitivity.hpp"

using namespace fate;

TEST_SUITE("sensitivity") {
    TEST_CASE("exact drift with tiny noise is recovered") {
        auto spec = with_noise(with_drift(dgp_case(1), 0.8, 0.8), 0.05, 0.05, 0.05, 0.05);
        const auto d = dgp_generate(spec, 4000, 3).data;
        const auto r = epsilon_range(d, {});
        CHECK(r.slope == doctest::Approx(0.8).epsilon(0.01));
        CHECK(r.lo <= 0.8);
        CHECK(r.hi >= 0.8);
        CHECK(r.n_controls > 0);
    }

    TEST_CASE("no drift at large n contains one") {
        const auto d = dgp_generate(dgp_case(1), 20000, 4).data;
        const auto r = epsilon_range(d, {});
        CHECK(r.lo <= 1.0);
        CHECK(r.hi >= 1.0);
        // Bounds sit on the 0.05 lattice.
        CHECK(std::abs(r.lo * 20 - std::round(r.lo * 20)) < 1e-9);
        CHECK(std::abs(r.hi * 20 - std::round(r.hi * 20)) < 1e-9);
    }

    TEST_CASE("range needs target controls") {
        std::vector<SampleRecord> recs{{{0.1, 0.2}, 1, 1.0, 1}, {{0.3, 0.1}, 0, 0.5, 1}, {{0.2, 0.2}, 1, 2.0, 0}};
        CHECK_THROWS_AS(epsilon_range(StudyDataset(recs), {}), RangeUnavailableError);
        std::vector<SampleRecord> bare{{{0.1, 0.2}, 1, 1.0, 1}, {{0.3, 0.1}, 0, 0.5, 1}, {{0.2, 0.2}, {}, {}, 0}};
        CHECK_THROWS_AS(epsilon_range(StudyDataset(bare), {}), RangeUnavailableError);
    }

    TEST_CASE("grids") {
        const auto g = tied_grid(0.5, 1.5, 0.05);
        CHECK(g.size() == 21);
        CHECK(g[10].eps0 == 1.0);
        CHECK(g.back().eps1 == 1.5);
        CHECK(untied_grid(0.8, 1.0, 0.1).size() == 9);
        CHECK_THROWS_AS(tied_grid(1, 0, 0.1), ConfigError);
        CHECK_THROWS_AS(tied_grid(0, 1, 0), ConfigError);
    }

    TEST_CASE("grid point one reproduces the identity estimate bitwise") {
        const auto d = dgp_generate(dgp_case(1), 2000, 5).data;
        NuisanceOptions o;
        const auto r = sensitivity_sweep(d, {Structure::XOnly, Structure::XAYUnconfounded}, tied_grid(0.8, 1.2, 0.1), o);
        const auto surf = cross_fit(d, parse_setting("VI"), o);
        std::size_t one = r.grid.size();
        for (std::size_t g = 0; g < r.grid.size(); ++g)
            if (r.grid[g].eps0 == 1.0 && r.grid[g].eps1 == 1.0) one = g;
        REQUIRE(one < r.grid.size());
        for (std::size_t s = 0; s < 2; ++s) {
            const auto id = estimate(Estimand::Tau, d, make_context(d, SettingSpec{r.structures[s], {}}, surf));
            CHECK(r.reports[one][s].point == id.point);
            CHECK(r.reports[one][s].variance == id.variance);
            CHECK_FALSE(r.reports[one][s].setting.starred());
        }
        for (std::size_t g = 0; g < r.grid.size(); ++g)
            for (const auto& rep : r.reports[g])
                CHECK(rep.setting.drift.label() == DriftSpec::linear(r.grid[g].eps0, r.grid[g].eps1).label());
    }

    TEST_CASE("nuisances are reused across grids") {
        const auto d = dgp_generate(dgp_case(1), 1500, 6).data;
        const auto a = sensitivity_sweep(d, {Structure::XAYUnconfounded}, tied_grid(0.5, 1.5, 0.25), NuisanceOptions{});
        const auto b = sensitivity_sweep(d, {Structure::XAYUnconfounded}, tied_grid(0.9, 1.1, 0.05), NuisanceOptions{});
        CHECK(a.nuisance_checksum == b.nuisance_checksum);
        CHECK(a.reports[0][0].point != a.reports[1][0].point);
    }

    TEST_CASE("setting-I points are collinear in eps and widths move smoothly") {
        const auto d = dgp_generate(dgp_case(1), 2000, 7).data;
        const auto r = sensitivity_sweep(d, {Structure::XOnly, Structure::XAYUnconfounded}, tied_grid(0.6, 1.4, 0.1),
                                         NuisanceOptions{});
        const auto& p = r.reports;
        for (std::size_t g = 2; g < r.grid.size(); ++g) {
            const double s1 = p[g - 1][0].point - p[g - 2][0].point, s2 = p[g][0].point - p[g - 1][0].point;
            CHECK(s1 == doctest::Approx(s2).epsilon(1e-8));
        }
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t g = 1; g < r.grid.size(); ++g) {
                const double w0 = p[g - 1][s].ci_high - p[g - 1][s].ci_low, w1 = p[g][s].ci_high - p[g][s].ci_low;
                CHECK(std::abs(w1 - w0) < 0.5 * w0);
            }
    }

    TEST_CASE("drift recovery on injected data") {
        // With the true drift 0.8 injected, the grid point closest to the
        // truth tau of the drifted design is within one step of 0.8.
        const auto spec = with_drift(dgp_case(1), 0.8, 0.8);
        const double truth = true_values(spec).tau;
        const auto d = dgp_generate(spec, 20000, 8).data;
        const auto r = sensitivity_sweep(d, {Structure::XAYUnconfounded}, tied_grid(0.5, 1.2, 0.05), NuisanceOptions{});
        std::size_t best = 0;
        for (std::size_t g = 0; g < r.grid.size(); ++g)
            if (std::abs(r.reports[g][0].point - truth) < std::abs(r.reports[best][0].point - truth)) best = g;
        CHECK(std::abs(r.grid[best].eps0 - 0.8) <= 0.05 + 1e-9);
    }

    TEST_CASE("CSV output") {
        const auto d = dgp_generate(dgp_case(1), 800, 9).data;
        const auto r = sensitivity_sweep(d, {Structure::XOnly}, tied_grid(0.9, 1.1, 0.1), NuisanceOptions{});
        const auto csv = sweep_csv(r);
        CHECK(csv.rfind("eps0,eps1,setting,estimand,point,ci_low,ci_high\n", 0) == 0);
        CHECK(csv.find("\n1,1,I,tau,") != std::string::npos);
        CHECK(csv.find("\n0.9,0.9,I*,tau,") != std::string::npos);
    }
}
