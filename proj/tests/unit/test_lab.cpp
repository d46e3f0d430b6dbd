#include <doctest.h>

#include <cmath>

#include "fate/bounds.hpp"
#include "fate/error.hpp"
#include "fate/reference.hpp"
#include "fate/study.hpp"

using namespace fate;

TEST_SUITE("lab") {
    TEST_CASE("zero noise and constant effect give a zero bound") {
        const auto spec = zero_noise_constant_cate();
        const auto b = mc_bound(spec, parse_setting("I"), 100000, 1);
        CHECK(b.value == doctest::Approx(0).scale(1));
        CHECK(b.value < 1e-20);
        const auto c = closed_form_bound_I(spec, 100000, 1);
        CHECK(c.value < 1e-20);
    }

    TEST_CASE("closed form and EIF square agree on C1") {
        const auto spec = dgp_case(1);
        const auto truths = true_values(spec);
        const auto m = mc_integrate(spec, {eif_square(spec, truths, BoundRequest{parse_setting("I")}),
                                           closed_form_I_integrand(spec, truths)},
                                    1000000, 5);
        CHECK(std::abs(m.mean[0] - m.mean[1]) < 3 * m.se_of({1, -1}));
    }

    TEST_CASE("bounds are seed invariant up to Monte Carlo error") {
        const auto spec = dgp_case(1);
        const auto a = mc_bound(spec, parse_setting("VI"), 300000, 1);
        const auto b = mc_bound(spec, parse_setting("VI"), 300000, 2);
        CHECK(std::abs(a.value - b.value) < 5 * std::hypot(a.mc_se, b.mc_se));
        CHECK(a.label == "tau:VI");
        CHECK(a.n_mc == 300000);
    }

    TEST_CASE("the closed form is larger when the control arm is noisier") {
        // C11: sigma0 = 3, sigma1 = 1. C12: the reverse. C1 puts more source
        // mass on the treated arm, so the control-variance term carries the
        // larger weight 1 / (1 - e1).
        const auto c11 = closed_form_bound_I(dgp_case(11), 300000, 3);
        const auto c12 = closed_form_bound_I(dgp_case(12), 300000, 3);
        CHECK(c11.value > c12.value + 5 * std::hypot(c11.mc_se, c12.mc_se));
    }

    TEST_CASE("parallel and serial integration agree") {
        const auto spec = dgp_case(2);
        const auto truths = true_values(spec);
        const std::vector<DrawFunction> fs{eif_square(spec, truths, BoundRequest{parse_setting("VI")}),
                                           [](const Draw& d) { return d.x[0]; }};
        const auto a = mc_integrate(spec, fs, 50000, 4);
        const auto b = reference::mc_integrate(spec, fs, 50000, 4);
        CHECK(a.mean[0] == doctest::Approx(b.mean[0]).epsilon(1e-12));
        CHECK(a.cov[0][1] == doctest::Approx(b.cov[0][1]).epsilon(1e-9));
    }

    TEST_CASE("C1 family orderings and identities") {
        const auto r = compare_bounds("C1", 400000, 11);
        for (const auto& c : r.checks) {
            INFO(c.description, " diff ", c.diff, " se ", c.se);
            CHECK(c.holds);
        }
        CHECK(r.find("C1", "tau:I").value > r.find("C1", "tau:VI").value);
        CHECK(r.find("C4", "tau:I").value > r.find("C4", "tau:V").value);
        CHECK_NOTHROW(require_orderings(r));
        CHECK_THROWS_AS(compare_bounds("C99", 1000, 1), ConfigError);
    }

    TEST_CASE("failed checks surface as ordering violations") {
        BoundsReport r;
        OrderingCheck c;
        c.description = "made up";
        c.holds = false;
        r.checks.push_back(c);
        CHECK_THROWS_AS(require_orderings(r), OrderingViolation);
        CHECK(to_json(r)["all_hold"] == false);
        CHECK(bounds_csv(r).find("made up") != std::string::npos);
    }

    TEST_CASE("small studies are reproducible") {
        const auto spec = dgp_case(1);
        const std::vector<StudyItem> items{{parse_setting("I"), Estimand::Tau}, {parse_setting("VI"), Estimand::Tau}};
        const auto a = mc_study(spec, items, 500, 20, {}, 3);
        const auto b = mc_study(spec, items, 500, 20, {}, 3);
        REQUIRE(a.size() == 2);
        CHECK(a[0].points == b[0].points);
        CHECK(a[1].points == b[1].points);
        CHECK(a[0].failures == 0);
        CHECK(a[0].truth == doctest::Approx(true_values(spec).tau));
        CHECK(a[0].cp95 >= 0.0);
        CHECK(a[0].cp95 <= 1.0);
        CHECK_THROWS_AS(mc_study(spec, items, 500, 1, {}, 3), ConfigError);
    }
}
