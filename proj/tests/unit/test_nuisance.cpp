#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fate/dgp.hpp"
#include "fate/error.hpp"
#include "fate/nuisance.hpp"
#include "helpers.hpp"

using namespace fate;

namespace {

double mae(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

TEST_SUITE("nuisance") {
    TEST_CASE("fold assignment is balanced and seeded") {
        const auto f = assign_folds(103, 4, 5);
        std::vector<int> count(4, 0);
        for (int k : f) count[static_cast<std::size_t>(k)]++;
        CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
        CHECK(f == assign_folds(103, 4, 5));
        CHECK(f != assign_folds(103, 4, 6));
        CHECK_THROWS_AS(assign_folds(10, 1, 0), ConfigError);
        CHECK_THROWS_AS(assign_folds(3, 4, 0), ConfigError);
    }

    TEST_CASE("cross-fitted parametric fits track the true surfaces") {
        const auto spec = dgp_case(1);
        const auto gen = dgp_generate(spec, 4000, 21);
        NuisanceOptions o;
        o.cross_fit_parametric = true;
        o.seed = 3;
        const auto fit = cross_fit(gen.data, parse_setting("VI"), o);
        const auto truth = true_nuisance(spec, gen.data);
        CHECK(mae(fit.pi, truth.pi) < 0.05);
        CHECK(mae(fit.e1, truth.e1) < 0.05);
        CHECK(mae(fit.e0, truth.e0) < 0.05);
        // Outcome noise has SD 2, so the mean surfaces carry more estimation error.
        CHECK(mae(fit.mu0, truth.mu0) < 0.15);
        CHECK(mae(fit.mu1, truth.mu1) < 0.15);
        for (int k : fit.fold_id) CHECK((k >= 0 && k < 4));
    }

    TEST_CASE("true surfaces at the origin") {
        const auto p = true_point(dgp_case(1), 0, 0);
        CHECK(p.pi == doctest::Approx(0.5));
        CHECK(p.e1 == doctest::Approx(0.7311).epsilon(1e-4));
        CHECK(p.mu1 - p.mu0 == doctest::Approx(2));
    }

    TEST_CASE("controls-only data gets a structural zero e0") {
        const auto gen = dgp_generate(dgp_case(4), 2000, 2);
        const auto s = cross_fit(gen.data, parse_setting("VI"), {});
        REQUIRE(s.has_e0());
        CHECK(std::all_of(s.e0.begin(), s.e0.end(), [](double v) { return v == 0.0; }));
        CHECK(std::any_of(s.notes.begin(), s.notes.end(),
                          [](const std::string& n) { return n.find("e0 set to 0") != std::string::npos; }));
    }

    TEST_CASE("only the needed nuisances are fitted") {
        const auto gen = dgp_generate(dgp_case(1), 1000, 2);
        const auto s1 = cross_fit(gen.data, parse_setting("I"), {});
        CHECK_FALSE(s1.has_e0());
        CHECK_FALSE(s1.has_ratios());
        const auto s2 = cross_fit(gen.data, parse_setting("VI*", DriftSpec::linear(0.8, 0.8)), {});
        CHECK(s2.has_e0());
        CHECK(s2.has_ratios());
        const auto n = needs_for({parse_setting("I"), parse_setting("V")}, {});
        CHECK(n.e0);
        CHECK_FALSE(n.ratios);
    }

    TEST_CASE("probabilities are clipped") {
        const auto gen = dgp_generate(dgp_case(8), 2000, 4);
        NuisanceOptions o;
        o.clip = 0.05;
        const auto s = cross_fit(gen.data, parse_setting("I"), o);
        CHECK(*std::min_element(s.pi.begin(), s.pi.end()) >= 0.05);
        CHECK(*std::max_element(s.pi.begin(), s.pi.end()) <= 0.95);
        CHECK(s.clip_fraction > 0);
        o.clip = 0.6;
        CHECK_THROWS_AS(cross_fit(gen.data, parse_setting("I"), o), ConfigError);
    }

    TEST_CASE("variance ratio recovers a known noise ratio") {
        // Source SD 2, target SD 1 in both arms: r_a = 4.
        const auto spec = with_noise(dgp_case(1), 2, 2, 1, 1);
        const auto gen = dgp_generate(spec, 6000, 8);
        NuisanceOptions o;
        o.ratios = RatioMode::Estimated;
        const auto s = cross_fit(gen.data, NuisanceNeeds{true, true, false}, o);
        CHECK(mean(s.r0) == doctest::Approx(4).epsilon(0.15));
        CHECK(mean(s.r1) == doctest::Approx(4).epsilon(0.15));
    }

    TEST_CASE("variance ratio needs both arms") {
        const auto gen = dgp_generate(dgp_case(4), 1000, 8);
        NuisanceOptions o;
        const std::vector<double> mu(gen.data.size(), 0.0);
        CHECK_FALSE(fit_variance_ratio(gen.data, mu, 1, o, std::vector<int>(gen.data.size(), 0)).has_value());
        CHECK(fit_variance_ratio(gen.data, mu, 0, o, std::vector<int>(gen.data.size(), 0)).has_value());
    }

    TEST_CASE("starved folds name the subpopulation") {
        // A single treated target record: some training complement has no
        // treated target units, so the target propensity cannot be fitted.
        auto recs = dgp_generate(dgp_case(4), 400, 5).data;
        std::vector<SampleRecord> r;
        bool flipped = false;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            auto rec = recs.owned_record(i);
            if (rec.g == 0 && !flipped) {
                rec.a = 1;
                flipped = true;
            }
            r.push_back(rec);
        }
        const StudyDataset d(r);
        NuisanceOptions o;
        o.cross_fit_parametric = true;
        try {
            cross_fit(d, parse_setting("VI"), o);
            FAIL("expected fold starvation");
        } catch (const FoldStarvationError& e) {
            CHECK(std::string(e.what()).find("target (G=0)") != std::string::npos);
        }
    }

    TEST_CASE("nuisance CSV round trip") {
        const auto gen = dgp_generate(dgp_case(1), 300, 5);
        const auto s = cross_fit(gen.data, parse_setting("VI*", DriftSpec::linear(0.9, 0.9)), {});
        const auto path = testing::temp_path("nuisance.csv");
        write_nuisance_csv(s, path);
        const auto back = read_nuisance_csv(path);
        CHECK(back.checksum() == s.checksum());
        CHECK(back.method == s.method);
        CHECK(back.notes == s.notes);
        const auto plain = cross_fit(gen.data, parse_setting("I"), {});
        const auto back2 = nuisance_from_csv(nuisance_to_csv(plain));
        CHECK_FALSE(back2.has_e0());
        CHECK(back2.checksum() == plain.checksum());
    }
}
