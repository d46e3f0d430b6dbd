#include "fate/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fate/error.hpp"
#include "fate/models.hpp"
#include "fate/random.hpp"

namespace fate {

const char* method_name(NuisanceMethod m) { return m == NuisanceMethod::Forest ? "forest" : "parametric"; }

NuisanceMethod parse_method(const std::string& s) {
    if (s == "parametric") return NuisanceMethod::Parametric;
    if (s == "forest") return NuisanceMethod::Forest;
    throw ConfigError("unknown nuisance method '" + s + "' (expected parametric or forest)");
}

NuisancePoint NuisanceSurface::at(std::size_t i) const {
    NuisancePoint p;
    p.pi = pi[i];
    p.e1 = e1[i];
    p.mu0 = mu0[i];
    p.mu1 = mu1[i];
    if (has_e0()) p.e0 = e0[i];
    if (!r0.empty()) p.r0 = r0[i];
    if (!r1.empty()) p.r1 = r1[i];
    return p;
}

std::uint64_t NuisanceSurface::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const void* data, std::size_t bytes) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < bytes; ++k) {
            h ^= b[k];
            h *= 0x100000001b3ULL;
        }
    };
    mix(fold_id.data(), fold_id.size() * sizeof(int));
    for (const auto* v : {&pi, &e0, &e1, &mu0, &mu1, &r0, &r1}) {
        const std::size_t len = v->size();
        mix(&len, sizeof(len));
        mix(v->data(), v->size() * sizeof(double));
    }
    return h;
}

void NuisanceSurface::set_unit_ratios() {
    r0.assign(size(), 1.0);
    r1.assign(size(), 1.0);
}

NuisanceNeeds needs_for(const std::vector<SettingSpec>& settings, const NuisanceOptions& opts) {
    NuisanceNeeds n;
    bool all_vvi = !settings.empty();
    for (const auto& s : settings) {
        if (target_has_a(s.structure)) n.e0 = true;
        if (s.starred() && s.form() != EifForm::I) n.ratios = true;
        if (s.starred() || s.form() == EifForm::I) all_vvi = false;
    }
    if (opts.ratios == RatioMode::Estimated) n.ratios = true;
    n.pooled_mu = opts.pooled_mu && all_vvi;
    return n;
}

std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("cross-fitting needs at least 2 folds");
    if (static_cast<std::size_t>(k) > n) throw ConfigError("more folds than records");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, 0xf01dULL));
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(n);
    for (std::size_t j = 0; j < n; ++j) fold[perm[j]] = static_cast<int>(j % static_cast<std::size_t>(k));
    return fold;
}

namespace {

enum class Kind { Probability, Mean };

enum Slot : std::uint64_t { kPi = 1, kE1, kE0, kMu0, kMu1, kVarSrc0, kVarSrc1, kVarTgt0, kVarTgt1, kMeanTgt0, kMeanTgt1 };

/// Fits one model on `train` and predicts at `pred`.
std::vector<double> fit_predict(const StudyDataset& d, Kind kind, const std::vector<std::size_t>& train,
                                const std::vector<double>& targets, const std::vector<std::size_t>& pred,
                                const NuisanceOptions& opts, std::uint64_t seed) {
    Vector t = Eigen::Map<const Vector>(targets.data(), static_cast<Eigen::Index>(targets.size()));
    std::vector<double> out(pred.size());
    if (opts.method == NuisanceMethod::Parametric) {
        const Matrix dt = design_matrix(d, train);
        if (kind == Kind::Probability) {
            const auto fit = fit_logistic(dt, t);
            for (std::size_t k = 0; k < pred.size(); ++k) out[k] = fit.predict(d.x(pred[k]));
        } else {
            const auto fit = fit_linear(dt, t);
            for (std::size_t k = 0; k < pred.size(); ++k) out[k] = fit.predict(d.x(pred[k]));
        }
    } else {
        if (kind == Kind::Probability) {
            const double s = t.sum();
            if (s <= 0.0 || s >= static_cast<double>(t.size()))
                throw DegenerateLabelsError("classification forest needs both classes in the labels");
        }
        const auto fit = fit_forest(covariate_matrix(d, train), t,
                                    kind == Kind::Probability ? ForestTask::Classification : ForestTask::Regression,
                                    opts.forest, seed);
        for (std::size_t k = 0; k < pred.size(); ++k) out[k] = fit.predict(d.x(pred[k]));
    }
    return out;
}

/// Out-of-fold predictions at every record for a model trained on the
/// subpopulation `rows` (with aligned `targets`). One fold means no cross-fitting.
std::vector<double> out_of_fold(const StudyDataset& d, Kind kind, const std::vector<std::size_t>& rows,
                                const std::vector<double>& targets, const std::vector<int>& fold_id, int folds,
                                const NuisanceOptions& opts, std::uint64_t slot, const std::string& subpop) {
    const std::size_t n = d.size();
    std::vector<double> out(n);
    if (rows.empty()) throw InsufficientDataError("no records in subpopulation " + subpop);
    if (folds <= 1) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        try {
            return fit_predict(d, kind, rows, targets, all, opts, derive_seed(opts.seed, slot, 0));
        } catch (const DataError& e) {
            throw InsufficientDataError("subpopulation " + subpop + ": " + e.what());
        }
    }
    for (int k = 0; k < folds; ++k) {
        std::vector<std::size_t> train, pred;
        std::vector<double> ttrain;
        for (std::size_t r = 0; r < rows.size(); ++r)
            if (fold_id[rows[r]] != k) {
                train.push_back(rows[r]);
                ttrain.push_back(targets[r]);
            }
        for (std::size_t i = 0; i < n; ++i)
            if (fold_id[i] == k) pred.push_back(i);
        if (train.empty())
            throw FoldStarvationError(subpop, "fold " + std::to_string(k) +
                                                  ": training complement has no records in subpopulation " + subpop);
        std::vector<double> p;
        try {
            p = fit_predict(d, kind, train, ttrain, pred, opts, derive_seed(opts.seed, slot, static_cast<std::uint64_t>(k)));
        } catch (const DataError& e) {
            throw FoldStarvationError(subpop, "fold " + std::to_string(k) + ": subpopulation " + subpop +
                                                  " is too small in the training complement (" + e.what() + ")");
        }
        for (std::size_t m = 0; m < pred.size(); ++m) out[pred[m]] = p[m];
    }
    return out;
}

struct Subpop {
    std::vector<std::size_t> rows;
    std::vector<double> targets;
};

template <class Pred, class Target>
Subpop select(const StudyDataset& d, Pred pred, Target target) {
    Subpop s;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (pred(i)) {
            s.rows.push_back(i);
            s.targets.push_back(target(i));
        }
    return s;
}

std::string arm_label(int arm, int g) { return "(A=" + std::to_string(arm) + ", G=" + std::to_string(g) + ")"; }

}  // namespace

std::optional<std::vector<double>> fit_variance_ratio(const StudyDataset& d, const std::vector<double>& mu_hat, int arm,
                                                      const NuisanceOptions& opts, const std::vector<int>& fold_id) {
    const int folds = opts.cross_fitted() ? opts.folds : 1;
    auto in_arm = [&](std::size_t i, int g) { return d.g(i) == g && d.a(i) && *d.a(i) == arm && d.y(i); };
    const auto src = select(d, [&](std::size_t i) { return in_arm(i, 1); },
                            [&](std::size_t i) { return std::pow(*d.y(i) - mu_hat[i], 2); });
    const auto tgt = select(d, [&](std::size_t i) { return in_arm(i, 0); }, [&](std::size_t i) { return *d.y(i); });
    if (src.rows.empty() || tgt.rows.empty()) return std::nullopt;

    const std::uint64_t off = static_cast<std::uint64_t>(arm);
    const auto tgt_mean = out_of_fold(d, Kind::Mean, tgt.rows, tgt.targets, fold_id, folds, opts, kMeanTgt0 + off,
                                      "target arm " + arm_label(arm, 0));
    Subpop tgt_sq = tgt;
    for (std::size_t r = 0; r < tgt.rows.size(); ++r) tgt_sq.targets[r] = std::pow(tgt.targets[r] - tgt_mean[tgt.rows[r]], 2);

    auto v1 = out_of_fold(d, Kind::Mean, src.rows, src.targets, fold_id, folds, opts, kVarSrc0 + off,
                          "source arm " + arm_label(arm, 1));
    auto v0 = out_of_fold(d, Kind::Mean, tgt_sq.rows, tgt_sq.targets, fold_id, folds, opts, kVarTgt0 + off,
                          "target arm " + arm_label(arm, 0));
    if (opts.method == NuisanceMethod::Parametric) {
        // Linear variance fits can go negative; floor them at a fraction of the mean.
        auto floor_at = [](std::vector<double>& v, const std::vector<double>& sq) {
            double m = 0;
            for (double s : sq) m += s;
            m = 0.05 * m / static_cast<double>(sq.size());
            for (auto& x : v) x = std::max(x, m);
        };
        floor_at(v1, src.targets);
        floor_at(v0, tgt_sq.targets);
    }
    std::vector<double> r(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (v1[i] <= 0 && v0[i] <= 0)
            r[i] = 1.0;
        else if (v0[i] <= 0)
            r[i] = opts.ratio_cap;
        else
            r[i] = std::clamp(v1[i] / v0[i], opts.ratio_floor, opts.ratio_cap);
    }
    return r;
}

std::vector<double> fit_arm_mean(const StudyDataset& d, int arm, int g, const NuisanceOptions& opts) {
    const auto sub = select(d, [&](std::size_t i) { return d.g(i) == g && d.a(i) && *d.a(i) == arm && d.y(i); },
                            [&](std::size_t i) { return *d.y(i); });
    const int folds = opts.cross_fitted() ? opts.folds : 1;
    const auto fold_id = folds > 1 ? assign_folds(d.size(), folds, opts.seed) : std::vector<int>(d.size(), 0);
    return out_of_fold(d, Kind::Mean, sub.rows, sub.targets, fold_id, folds, opts,
                       (g == 0 ? kMeanTgt0 : kMu0) + static_cast<std::uint64_t>(arm), arm_label(arm, g));
}

NuisanceSurface cross_fit(const StudyDataset& d, const SettingSpec& s, const NuisanceOptions& opts) {
    require_valid(d, s);
    return cross_fit(d, needs_for({s}, opts), opts);
}

NuisanceSurface cross_fit(const StudyDataset& d, const NuisanceNeeds& needs, const NuisanceOptions& opts) {
    if (!(opts.clip >= 0.0 && opts.clip < 0.5)) throw ConfigError("clip threshold must lie in [0, 0.5)");
    const std::size_t n = d.size();
    NuisanceSurface s;
    s.method = method_name(opts.method);
    int folds = 1;
    if (opts.cross_fitted()) {
        folds = opts.folds;
        s.fold_id = assign_folds(n, folds, opts.seed);
    } else {
        s.fold_id.assign(n, 0);
    }

    const auto all = select(d, [](std::size_t) { return true; }, [&](std::size_t i) { return double(d.g(i)); });
    s.pi = out_of_fold(d, Kind::Probability, all.rows, all.targets, s.fold_id, folds, opts, kPi, "all records (G ~ X)");

    const auto src = select(d, [&](std::size_t i) { return d.g(i) == 1; }, [&](std::size_t i) { return double(*d.a(i)); });
    s.e1 = out_of_fold(d, Kind::Probability, src.rows, src.targets, s.fold_id, folds, opts, kE1, "source (G=1)");

    bool e0_structural = false;
    if (needs.e0) {
        const auto tgt = select(d, [&](std::size_t i) { return d.g(i) == 0 && d.a(i).has_value(); },
                                [&](std::size_t i) { return double(*d.a(i)); });
        if (tgt.rows.empty()) throw DataError("target records carry no treatment values; e0 cannot be fitted");
        double treated = 0;
        for (double v : tgt.targets) treated += v;
        if (treated == 0.0) {
            s.e0.assign(n, 0.0);
            e0_structural = true;
            s.notes.push_back("no treated target records: e0 set to 0");
        } else {
            s.e0 = out_of_fold(d, Kind::Probability, tgt.rows, tgt.targets, s.fold_id, folds, opts, kE0, "target (G=0)");
        }
    }

    for (int arm = 0; arm <= 1; ++arm) {
        auto in_arm = [&](std::size_t i) {
            const bool ok = d.a(i) && *d.a(i) == arm && d.y(i);
            return needs.pooled_mu ? ok : ok && d.g(i) == 1;
        };
        const auto sub = select(d, in_arm, [&](std::size_t i) { return *d.y(i); });
        const std::string label = needs.pooled_mu ? "(A=" + std::to_string(arm) + ", pooled)" : arm_label(arm, 1);
        (arm == 0 ? s.mu0 : s.mu1) =
            out_of_fold(d, Kind::Mean, sub.rows, sub.targets, s.fold_id, folds, opts, arm == 0 ? kMu0 : kMu1, label);
    }
    if (needs.pooled_mu) s.notes.push_back("outcome regressions pooled across source and target");

    if (needs.ratios) {
        if (opts.ratios == RatioMode::Unit) {
            s.set_unit_ratios();
        } else {
            for (int arm = 0; arm <= 1; ++arm) {
                auto r = fit_variance_ratio(d, arm == 0 ? s.mu0 : s.mu1, arm, opts, s.fold_id);
                if (!r) {
                    r = std::vector<double>(n, 1.0);
                    s.notes.push_back("r" + std::to_string(arm) + " baseline ratio set to 1: arm " +
                                      std::to_string(arm) + " missing in one dataset");
                }
                (arm == 0 ? s.r0 : s.r1) = std::move(*r);
            }
        }
    }

    const double lo = opts.clip, hi = 1.0 - opts.clip;
    std::size_t clipped = 0, total = 0;
    auto clip = [&](std::vector<double>& v) {
        for (auto& x : v) {
            const double c = std::clamp(x, lo, hi);
            clipped += c != x;
            x = c;
        }
        total += v.size();
    };
    clip(s.pi);
    clip(s.e1);
    if (s.has_e0() && !e0_structural) clip(s.e0);
    s.clip_fraction = total ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
    return s;
}

std::string nuisance_to_csv(const NuisanceSurface& s) {
    std::string out = "# method=" + s.method + "\n# clip_fraction=" + format_double(s.clip_fraction) + "\n";
    for (const auto& note : s.notes) out += "# note=" + note + "\n";
    out += "fold_id,pi_hat,e0_hat,e1_hat,mu0_hat,mu1_hat,r0_hat,r1_hat\n";
    auto cell = [](const std::vector<double>& v, std::size_t i) { return v.empty() ? std::string() : format_double(v[i]); };
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(s.fold_id[i]) + "," + format_double(s.pi[i]) + "," + cell(s.e0, i) + "," +
               format_double(s.e1[i]) + "," + format_double(s.mu0[i]) + "," + format_double(s.mu1[i]) + "," +
               cell(s.r0, i) + "," + cell(s.r1, i) + "\n";
    }
    return out;
}

void write_nuisance_csv(const NuisanceSurface& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << nuisance_to_csv(s);
}

NuisanceSurface nuisance_from_csv(const std::string& text) {
    NuisanceSurface s;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    std::vector<std::vector<double>*> cols{&s.pi, &s.e0, &s.e1, &s.mu0, &s.mu1, &s.r0, &s.r1};
    std::vector<bool> present(cols.size(), true);
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const auto key = line.substr(2, eq - 2), val = line.substr(eq + 1);
            if (key == "method") s.method = val;
            if (key == "clip_fraction") s.clip_fraction = std::stod(val);
            if (key == "note") s.notes.push_back(val);
            continue;
        }
        if (!header_seen) {
            if (line != "fold_id,pi_hat,e0_hat,e1_hat,mu0_hat,mu1_hat,r0_hat,r1_hat")
                throw ParseError(lineno, "unexpected nuisance header");
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 8) throw ParseError(lineno, "expected 8 fields");
        try {
            s.fold_id.push_back(std::stoi(f[0]));
            for (std::size_t c = 0; c < cols.size(); ++c) {
                const bool has = !f[c + 1].empty();
                if (s.fold_id.size() == 1) present[c] = has;
                if (has != present[c]) throw ParseError(lineno, "column presence changes between rows");
                if (has) cols[c]->push_back(std::stod(f[c + 1]));
            }
        } catch (const std::invalid_argument&) {
            throw ParseError(lineno, "malformed number");
        }
    }
    if (!header_seen || s.fold_id.empty()) throw DataError("nuisance file has no rows");
    if (s.pi.empty() || s.e1.empty() || s.mu0.empty() || s.mu1.empty())
        throw DataError("nuisance file lacks pi_hat, e1_hat, mu0_hat or mu1_hat values");
    return s;
}

NuisanceSurface read_nuisance_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return nuisance_from_csv(ss.str());
}

}  // namespace fate
