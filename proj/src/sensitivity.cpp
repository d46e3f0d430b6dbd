#include "fate/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fate/eif.hpp"
#include "fate/error.hpp"
#include "fate/parallel.hpp"

namespace fate {

namespace {

double snap(double v) { return std::round(v * 1e12) / 1e12; }

std::vector<double> axis(double lo, double hi, double step) {
    if (!(step > 0) || !(hi >= lo)) throw ConfigError("grid needs lo <= hi and a positive step");
    const auto k = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> out;
    for (std::size_t i = 0; i <= k; ++i) out.push_back(snap(lo + static_cast<double>(i) * step));
    return out;
}

}  // namespace

EpsilonRange epsilon_range(const StudyDataset& d, const NuisanceOptions& opts, double spread, double step) {
    std::vector<std::size_t> controls;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.g(i) == 0 && d.a(i) && *d.a(i) == 0 && d.y(i)) controls.push_back(i);
    if (controls.empty()) throw RangeUnavailableError("target data has no controls with an observed outcome");
    if (!(step > 0)) throw ConfigError("epsilon range step must be positive");

    std::vector<double> src, tgt;
    try {
        src = fit_arm_mean(d, 0, 1, opts);
        tgt = fit_arm_mean(d, 0, 0, opts);
    } catch (const DataError& e) {
        throw RangeUnavailableError(std::string("cannot fit the control outcome surfaces: ") + e.what());
    }

    double sxx = 0, sxy = 0;
    for (auto i : controls) {
        sxx += src[i] * src[i];
        sxy += src[i] * tgt[i];
    }
    if (!(sxx > 0)) throw RangeUnavailableError("source control fit is identically zero at the target controls");
    EpsilonRange r;
    r.n_controls = controls.size();
    r.slope = sxy / sxx;
    double meat = 0;
    for (auto i : controls) {
        const double e = tgt[i] - r.slope * src[i];
        meat += src[i] * src[i] * e * e;
    }
    r.se = std::sqrt(meat) / sxx;
    r.lo = std::floor((r.slope - spread * r.se) / step + 1e-9) * step;
    r.hi = std::ceil((r.slope + spread * r.se) / step - 1e-9) * step;
    r.lo = snap(r.lo);
    r.hi = snap(r.hi);
    return r;
}

std::vector<GridPoint> tied_grid(double lo, double hi, double step) {
    std::vector<GridPoint> out;
    for (double e : axis(lo, hi, step)) out.push_back({e, e});
    return out;
}

std::vector<GridPoint> untied_grid(double lo, double hi, double step) {
    const auto a = axis(lo, hi, step);
    std::vector<GridPoint> out;
    for (double e0 : a)
        for (double e1 : a) out.push_back({e0, e1});
    return out;
}

SweepResult sensitivity_sweep(const StudyDataset& d, const std::vector<Structure>& structures,
                              std::vector<GridPoint> grid, const NuisanceSurface& surface, Estimand estimand) {
    if (grid.empty()) throw ConfigError("sensitivity grid is empty");
    if (structures.empty()) throw ConfigError("sensitivity sweep needs at least one setting");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    SweepResult out;
    out.grid = grid;
    out.structures = structures;
    out.estimand = estimand;
    out.nuisance_checksum = surface.checksum();
    out.reports.assign(grid.size(), std::vector<EstimateReport>(structures.size()));
    const std::size_t S = structures.size();
    par::for_each_index(grid.size() * S, [&](std::size_t k) {
        const std::size_t g = k / S, s = k % S;
        SettingSpec spec;
        spec.structure = structures[s];
        spec.drift = DriftSpec::linear(grid[g].eps0, grid[g].eps1);
        const auto ctx = make_context(d, spec, surface);
        out.reports[g][s] = estimate(estimand, d, ctx);
    });
    return out;
}

SweepResult sensitivity_sweep(const StudyDataset& d, const std::vector<Structure>& structures,
                              std::vector<GridPoint> grid, const NuisanceOptions& opts, Estimand estimand) {
    std::vector<SettingSpec> settings;
    for (auto s : structures) {
        SettingSpec spec;
        spec.structure = s;
        require_valid(d, spec);
        spec.drift = DriftSpec::linear(0.5, 0.5);
        settings.push_back(spec);
    }
    NuisanceOptions o = opts;
    if (o.ratios == RatioMode::Auto) o.ratios = RatioMode::Unit;
    NuisanceNeeds needs = needs_for(settings, o);
    const NuisanceSurface surface = cross_fit(d, needs, o);
    return sensitivity_sweep(d, structures, std::move(grid), surface, estimand);
}

std::string sweep_csv(const SweepResult& r) {
    std::ostringstream os;
    os << "eps0,eps1,setting,estimand,point,ci_low,ci_high\n";
    for (std::size_t g = 0; g < r.grid.size(); ++g)
        for (const auto& rep : r.reports[g])
            os << format_double(r.grid[g].eps0) << ',' << format_double(r.grid[g].eps1) << ','
               << rep.setting.name() << ',' << estimand_name(rep.estimand) << ',' << format_double(rep.point) << ','
               << format_double(rep.ci_low) << ',' << format_double(rep.ci_high) << '\n';
    return os.str();
}

nlohmann::ordered_json to_json(const SweepResult& r) {
    nlohmann::ordered_json j;
    if (r.eps_range)
        j["eps_range"] = {{"lo", r.eps_range->lo},
                          {"hi", r.eps_range->hi},
                          {"slope", r.eps_range->slope},
                          {"se", r.eps_range->se},
                          {"n_controls", r.eps_range->n_controls}};
    j["nuisance_checksum"] = r.nuisance_checksum;
    j["points"] = nlohmann::ordered_json::array();
    for (std::size_t g = 0; g < r.grid.size(); ++g)
        for (const auto& rep : r.reports[g]) {
            auto e = to_json(rep);
            e["eps0"] = r.grid[g].eps0;
            e["eps1"] = r.grid[g].eps1;
            j["points"].push_back(std::move(e));
        }
    return j;
}

}  // namespace fate
