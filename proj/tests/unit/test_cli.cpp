#include <doctest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "fate/cli.hpp"
#include "helpers.hpp"

using namespace fate;

namespace {

struct Run {
    int status;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "fate");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string mask_timestamp(const std::string& s) {
    return std::regex_replace(s, std::regex("timestamp[^\\n]*"), "timestamp");
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("estimate on generated data") {
        const auto csv = testing::temp_path("cli_c1.csv").string();
        REQUIRE(run({"generate", "-c", "C1", "-n", "800", "--seed", "4", "-o", csv}).status == 0);
        const auto r = run({"estimate", "-i", csv, "-s", "I", "-s", "VI", "-e", "tau"});
        CHECK(r.status == 0);
        CHECK(r.out.find("\"setting\": \"VI\"") != std::string::npos);
        CHECK(r.out.find("\"version\"") != std::string::npos);
        CHECK(r.out.find("\"ag_counts\"") != std::string::npos);
        const auto c = run({"estimate", "-i", csv, "--format", "csv"});
        CHECK(c.status == 0);
        CHECK(c.out.find("# command=estimate") != std::string::npos);
    }

    TEST_CASE("identical runs give identical output apart from the timestamp") {
        const auto csv = testing::temp_path("cli_det.csv").string();
        REQUIRE(run({"generate", "-c", "C2", "-n", "600", "-o", csv}).status == 0);
        const auto o1 = testing::temp_path("det1.json").string(), o2 = testing::temp_path("det2.json").string();
        REQUIRE(run({"estimate", "-i", csv, "-s", "VI", "-o", o1}).status == 0);
        REQUIRE(run({"estimate", "-i", csv, "-s", "VI", "-o", o2}).status == 0);
        CHECK(mask_timestamp(slurp(o1)) == mask_timestamp(slurp(o2)));
        const auto s1 = run({"simulate", "-c", "C1", "-n", "300", "-r", "5"});
        const auto s2 = run({"simulate", "-c", "C1", "-n", "300", "-r", "5"});
        CHECK(s1.status == 0);
        CHECK(mask_timestamp(s1.out) == mask_timestamp(s2.out));
    }

    TEST_CASE("dumped nuisances reproduce the estimate") {
        const auto csv = testing::temp_path("cli_nu.csv").string();
        const auto nu = testing::temp_path("cli_nu_surface.csv").string();
        REQUIRE(run({"generate", "-c", "C1", "-n", "700", "-o", csv}).status == 0);
        const auto a = run({"estimate", "-i", csv, "-s", "VI", "--format", "csv", "--dump-nuisance", nu});
        const auto b = run({"estimate", "-i", csv, "-s", "VI", "--format", "csv", "--nuisance-file", nu});
        REQUIRE(a.status == 0);
        REQUIRE(b.status == 0);
        auto last_line = [](const std::string& s) {
            const auto t = s.substr(0, s.size() - 1);
            return t.substr(t.rfind('\n') + 1);
        };
        CHECK(last_line(a.out) == last_line(b.out));
    }

    TEST_CASE("exit codes") {
        const auto bad = testing::temp_path("cli_single_g.csv");
        {
            std::ofstream f(bad);
            f << "x1,a,y,g\n0.1,1,2,1\n0.2,0,1,1\n";
        }
        const auto r = run({"estimate", "-i", bad.string()});
        CHECK(r.status == 3);
        CHECK(r.err.find("g = 1") != std::string::npos);
        CHECK(run({"estimate", "-i", bad.string(), "-s", "VII"}).status == 2);
        CHECK(run({"estimate"}).status == 2);
        CHECK(run({"frobnicate"}).status == 2);
        CHECK(run({"simulate", "-c", "C42"}).status == 2);
        CHECK(run({"estimate", "-i", "/nonexistent/file.csv"}).status == 3);
        CHECK(run({"--version"}).status == 0);

        const auto c4 = testing::temp_path("cli_c1_for_v.csv").string();
        REQUIRE(run({"generate", "-c", "C1", "-n", "300", "-o", c4}).status == 0);
        CHECK(run({"estimate", "-i", c4, "-s", "V"}).status == 3);
        CHECK(run({"estimate", "-i", c4, "-s", "I*"}).status == 2);
        CHECK(run({"estimate", "-i", c4, "-s", "I*", "--eps0", "0.9", "--eps1", "0.9", "-e", "tau_att"}).status == 2);
    }

    TEST_CASE("bounds and sweep") {
        const auto b = run({"bounds", "-f", "C12", "--n-mc", "200000", "--format", "csv", "--strict"});
        CHECK(b.status == 0);
        CHECK(b.out.find("tau V (C14) vs VI (C12)") != std::string::npos);
        const auto s = run({"sweep", "-c", "C1", "-n", "1500", "--inject-eps", "0.8", "--format", "csv"});
        CHECK(s.status == 0);
        CHECK(s.out.find("# eps_range=") != std::string::npos);
        CHECK(s.out.find("eps0,eps1,setting,estimand,point,ci_low,ci_high") != std::string::npos);
        CHECK(run({"sweep", "-c", "C1", "-s", "VI*"}).status == 2);
    }

    TEST_CASE("study config file") {
        const auto cfg = testing::temp_path("study.json");
        {
            std::ofstream f(cfg);
            f << R"([{"case": "C4", "setting": ["V", "VI"], "n": 400, "reps": 4, "seed": 3}])";
        }
        const auto r = run({"simulate", "--config", cfg.string()});
        CHECK(r.status == 0);
        CHECK(r.out.find("C4,tau_V,400,4") != std::string::npos);
        CHECK(r.out.find("C4,tau_VI,400,4") != std::string::npos);
    }
}
