#include "fate/bounds.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "fate/error.hpp"

namespace fate {

namespace {

struct Family {
    int base, controls;
    bool drift;
    CheckKind v_vs_vi;
};

const std::map<std::string, Family>& families() {
    static const std::map<std::string, Family> f{
        {"C1", {1, 4, false, CheckKind::Report}},    {"C2", {2, 5, false, CheckKind::Report}},
        {"C3", {3, 6, false, CheckKind::Report}},    {"C7", {7, 9, false, CheckKind::Report}},
        {"C8", {8, 10, false, CheckKind::Report}},   {"C11", {11, 13, false, CheckKind::Less}},
        {"C12", {12, 14, false, CheckKind::Greater}}, {"C16", {16, 19, false, CheckKind::Report}},
        {"C17", {17, 20, false, CheckKind::Report}}, {"drift", {1, 4, true, CheckKind::Report}},
    };
    return f;
}

constexpr double kDriftEps = 0.8;

SettingSpec setting(Structure s, bool drift) {
    SettingSpec out;
    out.structure = s;
    if (drift) out.drift = DriftSpec::linear(kDriftEps, kDriftEps);
    return out;
}

// Difference between the two setting-specific bounds in the fused-unconfounded
// design: the variance inflation of the source-only form.
DrawFunction gain_I_minus_VI_integrand(const DgpSpec& spec, const Truths& t) {
    const double d = 1 - t.q;
    const double s1 = spec.sd(1, 1) * spec.sd(1, 1), s0 = spec.sd(0, 1) * spec.sd(0, 1);
    return [spec, d, s1, s0](const Draw& dr) {
        const double p = spec.pi(dr.x[0], dr.x[1]);
        const double e1 = spec.e(dr.x[0], dr.x[1], 1), e0 = spec.e(dr.x[0], dr.x[1], 0);
        const double e = p * e1 + (1 - p) * e0;
        const double alpha = (1 - p) * e0 / e, gamma = (1 - p) * (1 - e0) / (1 - e);
        return (1 - p) * (1 - p) / (d * d * p) * (alpha * s1 / e1 + gamma * s0 / (1 - e1));
    };
}

// Controls-only bound minus fused-unconfounded bound, both written on the
// scores of the fused design.
DrawFunction gain_V_minus_VI_integrand(const DgpSpec& spec, const Truths& t) {
    const double d = 1 - t.q;
    const double s1 = spec.sd(1, 1) * spec.sd(1, 1), s0 = spec.sd(0, 1) * spec.sd(0, 1);
    return [spec, d, s1, s0](const Draw& dr) {
        const double p = spec.pi(dr.x[0], dr.x[1]);
        const double e1 = spec.e(dr.x[0], dr.x[1], 1), e0 = spec.e(dr.x[0], dr.x[1], 0);
        const double e = p * e1 + (1 - p) * e0;
        const double alpha = (1 - p) * e0 / e, gamma = (1 - p) * e0 / (1 - e);
        return (1 - p) * (1 - p) / (d * d) * (alpha * s1 / (p * e1) - gamma * s0 / (1 - p * e1));
    };
}

struct Batch {
    const DgpSpec* spec;
    Truths truths;
    std::vector<BoundRequest> requests;
    std::vector<DrawFunction> extra;
    std::vector<std::string> extra_labels;
    McIntegral m;

    std::size_t add(const BoundRequest& r) {
        requests.push_back(r);
        return requests.size() - 1;
    }
    std::size_t add(DrawFunction f, std::string label) {
        extra.push_back(std::move(f));
        extra_labels.push_back(std::move(label));
        return 1000 + extra.size() - 1;
    }
    std::size_t index(std::size_t k) const { return k >= 1000 ? requests.size() + (k - 1000) : k; }

    void run(std::size_t n_mc, std::uint64_t seed) {
        std::vector<DrawFunction> fs;
        for (const auto& r : requests) fs.push_back(eif_square(*spec, truths, r));
        for (const auto& f : extra) fs.push_back(f);
        m = mc_integrate(*spec, fs, n_mc, seed);
    }
    double value(std::size_t k) const { return m.mean[index(k)]; }
    double se(std::size_t k) const { return m.se(index(k)); }
    double se_diff(std::size_t a, std::size_t b) const {
        std::vector<double> c(m.mean.size(), 0.0);
        c[index(a)] += 1;
        c[index(b)] -= 1;
        return m.se_of(c);
    }
    double se_diff3(std::size_t a, std::size_t b, std::size_t g) const {
        std::vector<double> c(m.mean.size(), 0.0);
        c[index(a)] += 1;
        c[index(b)] -= 1;
        c[index(g)] -= 1;
        return m.se_of(c);
    }
};

OrderingCheck make_check(const std::string& family, std::string what, CheckKind kind, double lhs, double rhs,
                         double se) {
    OrderingCheck c;
    c.family = family;
    c.description = std::move(what);
    c.kind = kind;
    c.lhs = lhs;
    c.rhs = rhs;
    c.diff = lhs - rhs;
    c.se = se;
    switch (kind) {
        case CheckKind::Greater: c.holds = c.diff > 5 * se; break;
        case CheckKind::Less: c.holds = c.diff < -5 * se; break;
        case CheckKind::Equal: c.holds = std::abs(c.diff) <= 3 * se; break;
        case CheckKind::Report: c.holds = true; break;
    }
    return c;
}

const char* kind_name(CheckKind k) {
    switch (k) {
        case CheckKind::Greater: return "greater";
        case CheckKind::Less: return "less";
        case CheckKind::Equal: return "equal";
        case CheckKind::Report: return "report";
    }
    return "report";
}

}  // namespace

bool BoundsReport::all_hold() const {
    for (const auto& c : checks)
        if (!c.holds) return false;
    return true;
}

const BoundEstimate& BoundsReport::find(const std::string& case_id, const std::string& label) const {
    for (const auto& b : bounds)
        if (b.case_id == case_id && b.label == label) return b;
    throw ConfigError("no bound '" + label + "' for " + case_id);
}

std::vector<std::string> bound_families() {
    std::vector<std::string> out;
    for (const auto& [k, v] : families()) out.push_back(k);
    return out;
}

BoundsReport compare_bounds(const std::string& family, std::size_t n_mc, std::uint64_t seed) {
    const auto it = families().find(family);
    if (it == families().end()) {
        std::string names;
        for (const auto& f : bound_families()) names += (names.empty() ? "" : ", ") + f;
        throw ConfigError("unknown bound family '" + family + "' (expected one of " + names + ")");
    }
    const Family fam = it->second;
    DgpSpec base = dgp_case(fam.base), ctl = dgp_case(fam.controls);
    if (fam.drift) {
        base = with_drift(base, kDriftEps, kDriftEps);
        ctl = with_drift(ctl, kDriftEps, kDriftEps);
    }
    const bool dr = fam.drift;
    const std::string star = dr ? "*" : "";

    Batch B{&base, true_values(base), {}, {}, {}, {}};
    Batch C{&ctl, true_values(ctl), {}, {}, {}, {}};

    const auto bI = B.add({setting(Structure::XOnly, dr), Estimand::Tau});
    const auto bVI = B.add({setting(Structure::XAYUnconfounded, dr), Estimand::Tau});
    const auto bbI = B.add({setting(Structure::XOnly, dr), Estimand::Beta});
    const auto bbVI = B.add({setting(Structure::XAYUnconfounded, dr), Estimand::Beta});
    const auto cI = C.add({setting(Structure::XOnly, dr), Estimand::Tau});
    const auto cV = C.add({setting(Structure::XAYControlsOnly, dr), Estimand::Tau});
    const auto cbI = C.add({setting(Structure::XOnly, dr), Estimand::Beta});
    const auto cbV = C.add({setting(Structure::XAYControlsOnly, dr), Estimand::Beta});

    std::size_t bTO = 0, bKP = 0, bAttII = 0, bAttVI = 0, bAttTO = 0, bbaI = 0, bbaVI = 0, cbaI = 0, cbaV = 0;
    std::size_t gKP = 0, gCF = 0, g2b = 0, g2c = 0, g2a = 0;
    if (!dr) {
        bTO = B.add({setting(Structure::XOnly, false), Estimand::Tau, BoundForm::TargetOnly});
        bKP = B.add({setting(Structure::XOnly, false), Estimand::Tau, BoundForm::KnownPi});
        bAttII = B.add({setting(Structure::XA, false), Estimand::TauAtt});
        bAttVI = B.add({setting(Structure::XAYUnconfounded, false), Estimand::TauAtt});
        bAttTO = B.add({setting(Structure::XOnly, false), Estimand::TauAtt, BoundForm::TargetOnly});
        bbaI = B.add({setting(Structure::XOnly, false), Estimand::BetaAtt});
        bbaVI = B.add({setting(Structure::XAYUnconfounded, false), Estimand::BetaAtt});
        cbaI = C.add({setting(Structure::XOnly, false), Estimand::BetaAtt});
        cbaV = C.add({setting(Structure::XAYControlsOnly, false), Estimand::BetaAtt});
        gKP = B.add(known_pi_gain_integrand(base, B.truths), "gain:known-pi");
        gCF = B.add(closed_form_I_integrand(base, B.truths), "tau:I closed form");
        g2b = B.add(gain_I_minus_VI_integrand(base, B.truths), "gain:I-VI");
        g2c = B.add(gain_V_minus_VI_integrand(base, B.truths), "gain:V-VI");
        g2a = C.add(gain_I_minus_V_integrand(ctl, C.truths), "gain:I-V");
    }

    B.run(n_mc, derive_seed(seed, 0));
    C.run(n_mc, derive_seed(seed, 1));

    BoundsReport out;
    for (const Batch* b : {&B, &C}) {
        for (std::size_t k = 0; k < b->requests.size(); ++k)
            out.bounds.push_back({b->requests[k].label(), b->spec->name, b->value(k), b->se(k), n_mc});
        for (std::size_t k = 0; k < b->extra.size(); ++k)
            out.bounds.push_back({b->extra_labels[k], b->spec->name, b->value(1000 + k), b->se(1000 + k), n_mc});
    }

    auto indep = [](double a, double b) { return std::sqrt(a * a + b * b); };
    auto add = [&](std::string what, CheckKind kind, double lhs, double rhs, double se) {
        out.checks.push_back(make_check(family, std::move(what), kind, lhs, rhs, se));
    };
    const std::string I = "I" + star, V = "V" + star, VI = "VI" + star;

    add("tau " + I + " > " + V + " (" + ctl.name + ")", CheckKind::Greater, C.value(cI), C.value(cV), C.se_diff(cI, cV));
    add("tau " + I + " > " + VI + " (" + base.name + ")", CheckKind::Greater, B.value(bI), B.value(bVI),
        B.se_diff(bI, bVI));
    add("tau " + V + " (" + ctl.name + ") vs " + VI + " (" + base.name + ")", fam.v_vs_vi, C.value(cV), B.value(bVI),
        indep(C.se(cV), B.se(bVI)));
    add("beta " + I + " > " + V + " (" + ctl.name + ")", CheckKind::Greater, C.value(cbI), C.value(cbV),
        C.se_diff(cbI, cbV));
    add("beta " + I + " > " + VI + " (" + base.name + ")", CheckKind::Greater, B.value(bbI), B.value(bbVI),
        B.se_diff(bbI, bbVI));
    if (dr) return out;

    add("tau target-only > VI (" + base.name + ")", CheckKind::Greater, B.value(bTO), B.value(bVI),
        B.se_diff(bTO, bVI));
    add("tau I > I with known pi (" + base.name + ")", CheckKind::Greater, B.value(bI), B.value(bKP),
        B.se_diff(bI, bKP));
    add("tau_att II > VI (" + base.name + ")", CheckKind::Greater, B.value(bAttII), B.value(bAttVI),
        B.se_diff(bAttII, bAttVI));
    add("tau_att target-only > VI (" + base.name + ")", CheckKind::Greater, B.value(bAttTO), B.value(bAttVI),
        B.se_diff(bAttTO, bAttVI));
    add("beta_att I > V (" + ctl.name + ")", CheckKind::Greater, C.value(cbaI), C.value(cbaV), C.se_diff(cbaI, cbaV));
    add("beta_att I > VI (" + base.name + ")", CheckKind::Greater, B.value(bbaI), B.value(bbaVI),
        B.se_diff(bbaI, bbaVI));

    add("tau I closed form (" + base.name + ")", CheckKind::Equal, B.value(bI), B.value(gCF), B.se_diff(bI, gCF));
    add("known-pi gain (" + base.name + ")", CheckKind::Equal, B.value(bI) - B.value(bKP), B.value(gKP),
        B.se_diff3(bI, bKP, gKP));
    add("I - V gain (" + ctl.name + ")", CheckKind::Equal, C.value(cI) - C.value(cV), C.value(g2a),
        C.se_diff3(cI, cV, g2a));
    add("I - VI gain (" + base.name + ")", CheckKind::Equal, B.value(bI) - B.value(bVI), B.value(g2b),
        B.se_diff3(bI, bVI, g2b));
    {
        std::vector<double> coef(B.m.mean.size(), 0.0);
        coef[B.index(bVI)] = -1;
        coef[B.index(g2c)] = -1;
        add("V - VI gain (" + ctl.name + " vs " + base.name + ")", CheckKind::Equal, C.value(cV) - B.value(bVI),
            B.value(g2c), indep(C.se(cV), B.m.se_of(coef)));
    }
    return out;
}

void require_orderings(const BoundsReport& r) {
    std::string failed;
    for (const auto& c : r.checks) {
        if (c.holds) continue;
        std::ostringstream os;
        os << c.description << ": difference " << c.diff << " with se " << c.se;
        failed += (failed.empty() ? "" : "; ") + os.str();
    }
    if (!failed.empty()) throw OrderingViolation("bound ordering violated: " + failed);
}

std::string bounds_csv(const BoundsReport& r) {
    auto quote = [](const std::string& s) { return "\"" + s + "\""; };
    std::ostringstream os;
    os << "record,case_id,label,value,mc_se,n_mc,kind,rhs,diff,se,holds\n";
    for (const auto& b : r.bounds)
        os << "bound," << b.case_id << ',' << quote(b.label) << ',' << format_double(b.value) << ','
           << format_double(b.mc_se) << ',' << b.n_mc << ",,,,,\n";
    for (const auto& c : r.checks)
        os << "check," << c.family << ',' << quote(c.description) << ',' << format_double(c.lhs) << ",,,"
           << kind_name(c.kind) << ',' << format_double(c.rhs) << ',' << format_double(c.diff) << ','
           << format_double(c.se) << ',' << (c.holds ? "true" : "false") << '\n';
    return os.str();
}

nlohmann::ordered_json to_json(const BoundsReport& r) {
    nlohmann::ordered_json j;
    j["bounds"] = nlohmann::ordered_json::array();
    for (const auto& b : r.bounds)
        j["bounds"].push_back(
            {{"case_id", b.case_id}, {"label", b.label}, {"value", b.value}, {"mc_se", b.mc_se}, {"n_mc", b.n_mc}});
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : r.checks)
        j["checks"].push_back({{"family", c.family},
                               {"description", c.description},
                               {"kind", kind_name(c.kind)},
                               {"lhs", c.lhs},
                               {"rhs", c.rhs},
                               {"diff", c.diff},
                               {"se", c.se},
                               {"holds", c.holds}});
    j["all_hold"] = r.all_hold();
    return j;
}

}  // namespace fate
