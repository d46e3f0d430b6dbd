#include <doctest.h>

#include <fstream>

#include "fate/dgp.hpp"
#include "fate/error.hpp"
#include "helpers.hpp"

using namespace fate;

namespace {

StudyDataset tiny(bool with_target_ay) {
    std::vector<SampleRecord> r;
    r.push_back({{0.1, 1.0}, 1, 2.0, 1});
    r.push_back({{-0.4, 0.3}, 0, 1.0, 1});
    r.push_back({{0.2, -1.0}, with_target_ay ? std::optional<int>(1) : std::nullopt,
                 with_target_ay ? std::optional<double>(3.0) : std::nullopt, 0});
    r.push_back({{1.2, 0.5}, with_target_ay ? std::optional<int>(0) : std::nullopt,
                 with_target_ay ? std::optional<double>(0.5) : std::nullopt, 0});
    return StudyDataset(r);
}

}  // namespace

TEST_SUITE("data_model") {
    TEST_CASE("CSV round trip is bitwise") {
        const auto d = dgp_generate(dgp_case(1), 1000, 4).data;
        const auto path = testing::temp_path("roundtrip.csv");
        save_csv(d, path);
        const auto back = load_csv(path);
        REQUIRE(back.size() == d.size());
        REQUIRE(back.p() == d.p());
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(back.g(i) == d.g(i));
            CHECK(back.a(i) == d.a(i));
            CHECK(back.y(i) == d.y(i));
            for (std::size_t j = 0; j < d.p(); ++j) CHECK(back.x(i, j) == d.x(i, j));
        }
    }

    TEST_CASE("missing target values round trip as empty cells") {
        const auto d = tiny(false);
        const auto text = to_csv(d);
        CHECK(text.find("0.2,-1,,,0") != std::string::npos);
        const auto back = parse_csv(text);
        CHECK_FALSE(back.a(2).has_value());
        CHECK_FALSE(back.y(3).has_value());
    }

    TEST_CASE("malformed rows report their line number") {
        const std::string text = "x1,a,y,g\n0.1,1,2,1\n0.2,0,abc,0\n";
        try {
            parse_csv(text);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line == 3);
        }
        CHECK_THROWS_AS(parse_csv("x1,a,y,g\n0.1,1,2\n"), SchemaError);
        CHECK_THROWS_AS(parse_csv("x1,a,y\n0.1,1,2\n"), SchemaError);
        CHECK_THROWS_AS(parse_csv("a,y,g\n1,2,1\n"), SchemaError);
        CHECK_THROWS_AS(parse_csv("x1,a,y,g\n0.1,2,2,1\n"), ParseError);
    }

    TEST_CASE("metadata lines before the header are skipped") {
        const auto d = parse_csv("# tool=fate\n# seed=1\nx1,a,y,g\n0.1,1,2,1\n0.3,,,0\n");
        CHECK(d.size() == 2);
        CHECK(d.n_source() == 1);
    }

    TEST_CASE("datasets need both groups") {
        std::vector<SampleRecord> r{{{0.1}, 1, 1.0, 1}, {{0.2}, 0, 2.0, 1}};
        CHECK_THROWS_AS(StudyDataset{r}, DegenerateDatasetError);
        CHECK_THROWS_AS(parse_csv("x1,a,y,g\n0.1,1,2,0\n0.2,0,1,0\n"), DegenerateDatasetError);
    }

    TEST_CASE("source records need a and y") {
        std::vector<SampleRecord> r{{{0.1}, std::nullopt, 1.0, 1}, {{0.2}, 0, 2.0, 0}};
        CHECK_THROWS_AS(StudyDataset{r}, DataError);
    }

    TEST_CASE("structure validation") {
        const auto bare = tiny(false), full = tiny(true);
        CHECK(validate_dataset(bare, parse_setting("I")).empty());
        CHECK_FALSE(validate_dataset(bare, parse_setting("II")).empty());
        CHECK_FALSE(validate_dataset(bare, parse_setting("VI")).empty());
        CHECK(validate_dataset(full, parse_setting("VI")).empty());
        // One treated target record breaks the controls-only structure.
        CHECK_FALSE(validate_dataset(full, parse_setting("V")).empty());
        CHECK_THROWS_AS(require_valid(full, parse_setting("V")), DataError);

        const auto c4 = dgp_generate(dgp_case(4), 2000, 1).data;
        CHECK(validate_dataset(c4, parse_setting("V")).empty());
    }

    TEST_CASE("settings and drift") {
        CHECK(parse_setting("IV").structure == Structure::XAY);
        CHECK(parse_setting("IV").form() == EifForm::I);
        CHECK(parse_setting("V").form() == EifForm::V);
        CHECK(parse_setting("VI").form() == EifForm::VI);
        CHECK_THROWS_AS(parse_setting("VII"), ConfigError);
        CHECK_THROWS_AS(parse_setting("I*"), ConfigError);
        const auto s = parse_setting("VI*", DriftSpec::linear(0.8, 0.9));
        CHECK(s.starred());
        CHECK(s.name() == "VI*");
        CHECK(s.drift.psi(0, 2.0) == doctest::Approx(1.6));
        CHECK(s.drift.m(1, 5.0) == doctest::Approx(0.9));
        CHECK(DriftSpec::linear(1, 1).is_identity());
        CHECK_FALSE(parse_setting("III", DriftSpec::linear(0.8, 0.8)).starred());
    }

    TEST_CASE("schema mapping from JSON") {
        const auto schema_path = testing::temp_path("schema.json");
        {
            std::ofstream f(schema_path);
            f << R"({"x": ["age", "bmi"], "a": "treat", "y": "outcome", "g": "trial"})";
        }
        const auto schema = CsvSchema::from_json_file(schema_path);
        const auto d = parse_csv("trial,age,bmi,treat,outcome\n1,50,21,1,3.5\n0,40,30,,\n", schema);
        CHECK(d.p() == 2);
        CHECK(d.x(0, 0) == 50);
        CHECK(d.x(1, 1) == 30);
        CHECK(*d.y(0) == 3.5);
    }
}
