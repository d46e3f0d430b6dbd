#include "fate/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fate/bootstrap.hpp"
#include "fate/bounds.hpp"
#include "fate/error.hpp"
#include "fate/parallel.hpp"
#include "fate/sensitivity.hpp"
#include "fate/study.hpp"

namespace fate {

namespace {

using json = nlohmann::ordered_json;

struct NuisanceFlags {
    std::string method = "parametric";
    int folds = 4;
    bool cross_fit_parametric = false;
    double clip = 0.01;
    std::string ratios = "auto";
    int trees = 200;
    int min_leaf = 5;
    int mtry = 0;
    double sample_fraction = 0;
    bool honest = false;
    bool pooled_mu = false;

    void attach(CLI::App* app) {
        app->add_option("--method", method, "Nuisance learner: parametric or forest")->capture_default_str();
        app->add_option("--folds", folds, "Cross-fitting folds")->capture_default_str();
        app->add_flag("--cross-fit-parametric", cross_fit_parametric, "Cross-fit the parametric models too");
        app->add_option("--clip", clip, "Clip probabilities to [clip, 1 - clip]")->capture_default_str();
        app->add_option("--ratios", ratios, "Baseline variance ratios: auto, unit or estimated")->capture_default_str();
        app->add_option("--trees", trees, "Trees per forest")->capture_default_str();
        app->add_option("--min-leaf", min_leaf, "Minimum forest leaf size")->capture_default_str();
        app->add_option("--mtry", mtry, "Candidate features per split (0: ceil(p/3) or ceil(sqrt(p)))")
            ->capture_default_str();
        app->add_option("--sample-fraction", sample_fraction,
                        "Per-tree subsample fraction without replacement (0: bootstrap)")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
        app->add_flag("--honest", honest, "Fill forest leaves from a held-out half of each tree's sample");
        app->add_flag("--pooled-mu", pooled_mu, "Pool source and target records in the outcome regressions");
    }

    NuisanceOptions resolve(std::uint64_t seed) const {
        NuisanceOptions o;
        o.method = parse_method(method);
        o.folds = folds;
        o.cross_fit_parametric = cross_fit_parametric;
        o.clip = clip;
        if (ratios == "auto")
            o.ratios = RatioMode::Auto;
        else if (ratios == "unit")
            o.ratios = RatioMode::Unit;
        else if (ratios == "estimated")
            o.ratios = RatioMode::Estimated;
        else
            throw ConfigError("unknown ratio mode '" + ratios + "' (expected auto, unit or estimated)");
        o.forest.n_trees = trees;
        o.forest.min_leaf = min_leaf;
        o.forest.mtry = mtry;
        o.forest.sample_fraction = sample_fraction;
        o.forest.honest = honest;
        o.pooled_mu = pooled_mu;
        o.seed = seed;
        if (o.cross_fitted() && o.folds < 2) throw ConfigError("cross-fitting needs at least 2 folds");
        return o;
    }

    json to_json() const {
        return {{"method", method},         {"folds", folds}, {"cross_fit_parametric", cross_fit_parametric},
                {"clip", clip},             {"ratios", ratios}, {"trees", trees},
                {"min_leaf", min_leaf},     {"mtry", mtry},   {"sample_fraction", sample_fraction},
                {"honest", honest},         {"pooled_mu", pooled_mu}};
    }
};

struct Common {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out_path;
    std::string format = "json";

    void attach(CLI::App* app, bool with_format) {
        app->add_option("--seed", seed, "Base random seed")->capture_default_str();
        app->add_option("--threads", threads, "Worker threads (0: FATE_THREADS or all cores)");
        app->add_option("-o,--out", out_path, "Output file (default: standard output)");
        if (with_format)
            app->add_option("--format", format, "Output format: json or csv")
                ->check(CLI::IsMember({"json", "csv"}))
                ->capture_default_str();
    }
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file " + path);
    f << text;
}

DriftSpec drift_from(double eps0, double eps1) { return DriftSpec::linear(eps0, eps1); }

std::vector<SettingSpec> settings_from(const std::vector<std::string>& names, const DriftSpec& drift) {
    std::vector<SettingSpec> out;
    for (const auto& n : names) out.push_back(parse_setting(n, drift));
    return out;
}

std::vector<Estimand> estimands_from(const std::vector<std::string>& names) {
    std::vector<Estimand> out;
    for (const auto& n : names) out.push_back(parse_estimand(n));
    return out;
}

json ag_table(const StudyDataset& d) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto a = d.a(i);
        counts["a=" + (a ? std::to_string(*a) : std::string("NA")) + ",g=" + std::to_string(d.g(i))]++;
    }
    json j;
    for (const auto& [k, v] : counts) j[k] = v;
    return j;
}

// estimate ------------------------------------------------------------------

struct EstimateCmd {
    Common common;
    NuisanceFlags nuisance;
    std::string input, schema;
    std::vector<std::string> settings{"I"};
    std::vector<std::string> estimands{"tau"};
    double eps0 = 1, eps1 = 1;
    bool known_pi = false;
    std::string dump_nuisance, nuisance_file;
    int bootstrap = 0;

    void attach(CLI::App* app) {
        common.attach(app, true);
        nuisance.attach(app);
        app->add_option("-i,--input", input, "Input CSV")->required();
        app->add_option("--schema", schema, "JSON column mapping {x, a, y, g}");
        app->add_option("-s,--setting", settings, "Settings I..VI or I*..VI* (repeatable)")->capture_default_str();
        app->add_option("-e,--estimand", estimands, "tau, beta, tau_att or beta_att (repeatable)")->capture_default_str();
        app->add_option("--eps0", eps0, "Linear drift on the control mean (starred settings)")->capture_default_str();
        app->add_option("--eps1", eps1, "Linear drift on the treated mean (starred settings)")->capture_default_str();
        app->add_flag("--known-pi", known_pi, "Treat the sampling score as known");
        app->add_option("--dump-nuisance", dump_nuisance, "Write the fitted nuisance surface to this CSV");
        app->add_option("--nuisance-file", nuisance_file, "Use a nuisance surface from this CSV instead of fitting");
        app->add_option("--bootstrap", bootstrap, "Bootstrap replicates for a percentile interval (0: off)");
    }

    json config() const {
        json c{{"input", input},         {"schema", schema},   {"settings", settings}, {"estimands", estimands},
               {"eps0", eps0},           {"eps1", eps1},       {"known_pi", known_pi}, {"nuisance", nuisance.to_json()},
               {"nuisance_file", nuisance_file}, {"bootstrap", bootstrap}};
        return c;
    }

    void run(std::ostream& out) const {
        const auto specs = settings_from(settings, drift_from(eps0, eps1));
        const auto ests = estimands_from(estimands);
        const NuisanceOptions opts = nuisance.resolve(common.seed);
        if (bootstrap != 0 && bootstrap < 100) throw ConfigError("--bootstrap needs at least 100 replicates");
        if (bootstrap != 0 && !nuisance_file.empty())
            throw ConfigError("--bootstrap refits nuisances and cannot be combined with --nuisance-file");
        const StudyDataset d = load_csv(input, schema.empty() ? CsvSchema{} : CsvSchema::from_json_file(schema));
        for (const auto& s : specs) require_valid(d, s);

        NuisanceSurface surface;
        if (!nuisance_file.empty()) {
            surface = read_nuisance_csv(nuisance_file);
            if (surface.size() != d.size())
                throw DataError("nuisance file has " + std::to_string(surface.size()) + " rows, data has " +
                                std::to_string(d.size()));
        } else {
            surface = cross_fit(d, needs_for(specs, opts), opts);
        }
        if (!dump_nuisance.empty()) write_nuisance_csv(surface, dump_nuisance);

        std::vector<EstimateReport> reports;
        for (const auto& s : specs)
            for (auto e : ests) {
                auto rep = estimate(e, d, make_context(d, s, surface, known_pi));
                if (bootstrap > 0)
                    rep.diagnostics.bootstrap =
                        bootstrap_ci(d, EstimationRecipe{s, e, opts, known_pi}, bootstrap, derive_seed(common.seed, 99));
                reports.push_back(std::move(rep));
            }

        const json meta = run_meta("estimate", config(), common.seed);
        if (common.format == "csv") {
            std::string text = csv_meta_lines(meta) + report_csv_header() + "\n";
            for (const auto& r : reports) text += report_csv_row(r) + "\n";
            emit(text, common.out_path, out);
        } else {
            json j;
            j["meta"] = meta;
            j["data"] = {{"n", d.size()}, {"n_source", d.n_source()}, {"n_target", d.size() - d.n_source()},
                         {"ag_counts", ag_table(d)}};
            j["reports"] = json::array();
            for (const auto& r : reports) j["reports"].push_back(to_json(r));
            emit(j.dump(2) + "\n", common.out_path, out);
        }
    }
};

// simulate ------------------------------------------------------------------

struct StudyRow {
    std::string case_id;
    std::vector<std::string> settings;
    std::vector<std::string> estimands;
    std::size_t n, reps;
    std::string method;
    std::uint64_t seed;
};

struct SimulateCmd {
    Common common;
    NuisanceFlags nuisance;
    std::vector<std::string> cases;
    std::vector<std::string> settings{"I"};
    std::vector<std::string> estimands{"tau"};
    std::size_t n = 2000, reps = 1000;
    std::string config_file;

    void attach(CLI::App* app) {
        common.attach(app, false);
        nuisance.attach(app);
        app->add_option("-c,--case", cases, "Simulation cases C1..C20 (repeatable)");
        app->add_option("-s,--setting", settings, "Settings (repeatable)")->capture_default_str();
        app->add_option("-e,--estimand", estimands, "Estimands (repeatable)")->capture_default_str();
        app->add_option("-n,--n", n, "Sample size per replicate")->capture_default_str();
        app->add_option("-r,--reps", reps, "Replicates")->capture_default_str();
        app->add_option("--config", config_file, "Study config JSON: a list of {case, setting, n, reps, method, seed}");
    }

    std::vector<StudyRow> rows() const {
        std::vector<StudyRow> out;
        if (!config_file.empty()) {
            std::ifstream f(config_file);
            if (!f) throw ConfigError("cannot open study config " + config_file);
            json j;
            try {
                j = json::parse(f);
            } catch (const json::exception& e) {
                throw ConfigError("study config " + config_file + ": " + e.what());
            }
            if (j.is_object() && j.contains("studies")) j = j["studies"];
            if (!j.is_array()) throw ConfigError("study config must be a list of studies");
            auto strings = [](const json& v, std::vector<std::string> fallback) {
                if (v.is_null()) return fallback;
                if (v.is_string()) return std::vector<std::string>{v.get<std::string>()};
                return v.get<std::vector<std::string>>();
            };
            try {
                for (const auto& s : j)
                    out.push_back({s.at("case").get<std::string>(), strings(s.value("setting", json()), settings),
                                   strings(s.value("estimand", json()), estimands), s.value("n", n),
                                   s.value("reps", reps), s.value("method", nuisance.method),
                                   s.value("seed", common.seed)});
            } catch (const json::exception& e) {
                throw ConfigError("study config " + config_file + ": " + e.what());
            }
        }
        for (const auto& c : cases) out.push_back({c, settings, estimands, n, reps, nuisance.method, common.seed});
        if (out.empty()) throw ConfigError("simulate needs --case or --config");
        return out;
    }

    void run(std::ostream& out) const {
        const auto studies = rows();
        json cfg{{"studies", json::array()}, {"nuisance", nuisance.to_json()}, {"config_file", config_file}};
        for (const auto& s : studies)
            cfg["studies"].push_back({{"case", s.case_id}, {"settings", s.settings}, {"estimands", s.estimands},
                                      {"n", s.n}, {"reps", s.reps}, {"method", s.method}, {"seed", s.seed}});
        std::string text = csv_meta_lines(run_meta("simulate", cfg, common.seed));
        text += "case,estimator,n,reps,failures,truth,bias,sd,cp95,mean_se\n";
        for (const auto& s : studies) {
            const DgpSpec spec = dgp_case(s.case_id);
            NuisanceFlags nf = nuisance;
            nf.method = s.method;
            const NuisanceOptions opts = nf.resolve(s.seed);
            std::vector<StudyItem> items;
            for (const auto& st : settings_from(s.settings, spec.drift()))
                for (auto e : estimands_from(s.estimands)) items.push_back({st, e});
            for (const auto& m : mc_study(spec, items, s.n, s.reps, opts, s.seed)) {
                std::ostringstream row;
                row << m.case_id << ',' << estimand_name(m.estimand) << '_' << m.setting.name() << ',' << m.n << ','
                    << m.reps << ',' << m.failures << ',' << format_double(m.truth) << ',' << format_double(m.bias)
                    << ',' << format_double(m.sd) << ',' << format_double(m.cp95) << ','
                    << format_double(std::sqrt(m.mean_variance)) << '\n';
                text += row.str();
            }
        }
        emit(text, common.out_path, out);
    }
};

// sweep ---------------------------------------------------------------------

struct SweepCmd {
    Common common;
    NuisanceFlags nuisance;
    std::string input, schema, case_id;
    std::size_t n = 2000;
    double inject = 1;
    std::vector<std::string> settings{"I", "VI"};
    std::string estimand = "tau";
    double lo = 0.5, hi = 1.5, step = 0.05;
    bool untied = false;

    void attach(CLI::App* app) {
        common.attach(app, true);
        nuisance.attach(app);
        app->add_option("-i,--input", input, "Input CSV");
        app->add_option("--schema", schema, "JSON column mapping {x, a, y, g}");
        app->add_option("-c,--case", case_id, "Generate data from this case instead of reading --input");
        app->add_option("-n,--n", n, "Generated sample size")->capture_default_str();
        app->add_option("--inject-eps", inject, "Scale target means of the generated data by this factor")
            ->capture_default_str();
        app->add_option("-s,--setting", settings, "Base settings, unstarred (repeatable)")->capture_default_str();
        app->add_option("-e,--estimand", estimand, "tau or beta")->capture_default_str();
        app->add_option("--eps-lo", lo, "Grid start")->capture_default_str();
        app->add_option("--eps-hi", hi, "Grid end")->capture_default_str();
        app->add_option("--eps-step", step, "Grid spacing")->capture_default_str();
        app->add_flag("--untied", untied, "Vary eps0 and eps1 separately");
    }

    void run(std::ostream& out) const {
        if (input.empty() == case_id.empty()) throw ConfigError("sweep needs exactly one of --input and --case");
        const Estimand est = parse_estimand(estimand);
        if (est == Estimand::TauAtt || est == Estimand::BetaAtt)
            throw ConfigError("ATT estimands are not identified under posterior drift");
        std::vector<Structure> structures;
        for (const auto& s : settings) {
            const SettingSpec spec = parse_setting(s);
            if (spec.starred()) throw ConfigError("sweep takes unstarred base settings; drift comes from the grid");
            structures.push_back(spec.structure);
        }
        const NuisanceOptions opts = nuisance.resolve(common.seed);
        StudyDataset d;
        if (!case_id.empty()) {
            DgpSpec spec = dgp_case(case_id);
            if (inject != 1) spec = with_drift(spec, inject, inject);
            d = dgp_generate(spec, n, common.seed).data;
        } else {
            d = load_csv(input, schema.empty() ? CsvSchema{} : CsvSchema::from_json_file(schema));
        }
        const auto grid = untied ? untied_grid(lo, hi, step) : tied_grid(lo, hi, step);
        SweepResult r = sensitivity_sweep(d, structures, grid, opts, est);
        std::string range_note;
        try {
            r.eps_range = epsilon_range(d, opts);
        } catch (const RangeUnavailableError& e) {
            range_note = e.what();
        }

        json cfg{{"input", input},   {"case", case_id}, {"n", n},         {"inject_eps", inject},
                 {"settings", settings}, {"estimand", estimand}, {"eps_lo", lo}, {"eps_hi", hi},
                 {"eps_step", step}, {"untied", untied}, {"nuisance", nuisance.to_json()}};
        const json meta = run_meta("sweep", cfg, common.seed);
        if (common.format == "csv") {
            std::string text = csv_meta_lines(meta);
            if (r.eps_range)
                text += "# eps_range=" + format_double(r.eps_range->lo) + "," + format_double(r.eps_range->hi) + "\n";
            else
                text += "# eps_range=unavailable (" + range_note + ")\n";
            text += sweep_csv(r);
            emit(text, common.out_path, out);
        } else {
            json j;
            j["meta"] = meta;
            j["sweep"] = to_json(r);
            if (!r.eps_range) j["sweep"]["eps_range_note"] = range_note;
            emit(j.dump(2) + "\n", common.out_path, out);
        }
    }
};

// bounds --------------------------------------------------------------------

struct BoundsCmd {
    Common common;
    std::vector<std::string> families;
    std::size_t n_mc = 1000000;
    bool strict = false;

    void attach(CLI::App* app) {
        common.attach(app, true);
        app->add_option("-f,--family", families, "Bound families (repeatable; default: all)");
        app->add_option("--n-mc", n_mc, "Monte Carlo draws per design")->capture_default_str();
        app->add_flag("--strict", strict, "Exit with status 5 when an ordering or identity check fails");
    }

    void run(std::ostream& out) const {
        const auto fams = families.empty() ? bound_families() : families;
        BoundsReport all;
        for (std::size_t k = 0; k < fams.size(); ++k) {
            auto r = compare_bounds(fams[k], n_mc, derive_seed(common.seed, k));
            all.bounds.insert(all.bounds.end(), r.bounds.begin(), r.bounds.end());
            all.checks.insert(all.checks.end(), r.checks.begin(), r.checks.end());
        }
        json cfg{{"families", fams}, {"n_mc", n_mc}, {"strict", strict}};
        const json meta = run_meta("bounds", cfg, common.seed);
        if (common.format == "csv") {
            emit(csv_meta_lines(meta) + bounds_csv(all), common.out_path, out);
        } else {
            json j;
            j["meta"] = meta;
            j["report"] = to_json(all);
            emit(j.dump(2) + "\n", common.out_path, out);
        }
        if (strict) require_orderings(all);
    }
};

// generate ------------------------------------------------------------------

struct GenerateCmd {
    Common common;
    std::string case_id;
    std::size_t n = 2000;
    double inject = 1;

    void attach(CLI::App* app) {
        common.attach(app, false);
        app->add_option("-c,--case", case_id, "Simulation case C1..C20")->required();
        app->add_option("-n,--n", n, "Sample size")->capture_default_str();
        app->add_option("--inject-eps", inject, "Scale target means by this factor")->capture_default_str();
    }

    void run(std::ostream& out) const {
        DgpSpec spec = dgp_case(case_id);
        if (inject != 1) spec = with_drift(spec, inject, inject);
        const auto gen = dgp_generate(spec, n, common.seed);
        json cfg{{"case", case_id}, {"n", n}, {"inject_eps", inject}};
        emit(csv_meta_lines(run_meta("generate", cfg, common.seed)) + to_csv(gen.data), common.out_path, out);
    }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Target-population treatment effects from a source and a target dataset", "fate"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    EstimateCmd estimate_cmd;
    SimulateCmd simulate_cmd;
    SweepCmd sweep_cmd;
    BoundsCmd bounds_cmd;
    GenerateCmd generate_cmd;
    auto* est = app.add_subcommand("estimate", "Estimate effects from a CSV file");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo study on a simulation case");
    auto* swp = app.add_subcommand("sweep", "Sensitivity sweep over linear drift");
    auto* bnd = app.add_subcommand("bounds", "Efficiency bounds and their orderings");
    auto* gen = app.add_subcommand("generate", "Write a simulated dataset as CSV");
    estimate_cmd.attach(est);
    simulate_cmd.attach(sim);
    sweep_cmd.attach(swp);
    bounds_cmd.attach(bnd);
    generate_cmd.attach(gen);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "fate: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Config);
    }

    auto threads_of = [&]() {
        for (const auto* c : {&estimate_cmd.common, &simulate_cmd.common, &sweep_cmd.common, &bounds_cmd.common,
                              &generate_cmd.common})
            if (c->threads > 0) return c->threads;
        return 0;
    };
    par::set_thread_count(threads_of());

    try {
        if (est->parsed()) estimate_cmd.run(out);
        if (sim->parsed()) simulate_cmd.run(out);
        if (swp->parsed()) sweep_cmd.run(out);
        if (bnd->parsed()) bounds_cmd.run(out);
        if (gen->parsed()) generate_cmd.run(out);
    } catch (const Error& e) {
        err << "fate: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        err << "fate: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Numerical);
    }
    return 0;
}

}  // namespace fate
