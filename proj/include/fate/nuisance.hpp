#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fate/data_model.hpp"
#include "fate/forest.hpp"

namespace fate {

enum class NuisanceMethod { Parametric, Forest };

const char* method_name(NuisanceMethod m);
NuisanceMethod parse_method(const std::string& s);

/// How the baseline variance ratios r_a° are obtained.
enum class RatioMode {
    Auto,       // estimated for starred V/VI settings, otherwise not fitted
    Unit,       // r_a° = 1
    Estimated,  // always estimated where both arms exist
};

struct NuisanceOptions {
    NuisanceMethod method = NuisanceMethod::Parametric;
    int folds = 4;
    /// Parametric fits use the whole subpopulation unless this is set.
    bool cross_fit_parametric = false;
    double clip = 0.01;
    double ratio_floor = 0.05;
    double ratio_cap = 20.0;
    bool pooled_mu = false;
    RatioMode ratios = RatioMode::Auto;
    ForestParams forest;
    std::uint64_t seed = 0;

    bool cross_fitted() const { return method == NuisanceMethod::Forest || cross_fit_parametric; }
};

/// Nuisance values at one record.
struct NuisancePoint {
    double pi = 0.5;
    double e0 = 0;
    double e1 = 0.5;
    double mu0 = 0;
    double mu1 = 0;
    double r0 = 1;  // baseline ratios r_a°
    double r1 = 1;
};

/// Per-record out-of-fold nuisance values. Empty e0 / r0 / r1 vectors mean
/// "not fitted" for this structure.
struct NuisanceSurface {
    std::string method;
    std::vector<int> fold_id;
    std::vector<double> pi, e0, e1, mu0, mu1, r0, r1;
    double clip_fraction = 0;
    std::vector<std::string> notes;

    std::size_t size() const { return pi.size(); }
    bool has_e0() const { return !e0.empty(); }
    bool has_ratios() const { return !r0.empty() && !r1.empty(); }
    NuisancePoint at(std::size_t i) const;
    /// FNV-1a over the numeric content; used to show reuse across sweeps.
    std::uint64_t checksum() const;
    void set_unit_ratios();
};

/// Which nuisances a set of settings needs.
struct NuisanceNeeds {
    bool e0 = false;
    bool ratios = false;
    bool pooled_mu = false;
};

NuisanceNeeds needs_for(const std::vector<SettingSpec>& settings, const NuisanceOptions& opts);

/// Seeded shuffle into k folds (fold of position j in the shuffle is j mod k).
std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed);

NuisanceSurface cross_fit(const StudyDataset& d, const SettingSpec& s, const NuisanceOptions& opts);
NuisanceSurface cross_fit(const StudyDataset& d, const NuisanceNeeds& needs, const NuisanceOptions& opts);

/// Baseline ratio r_a° = Var(Y|X,A=a,G=1) / Var(Y|X,A=a,G=0) at every record.
/// mu_hat holds the (out-of-fold) source-arm regression at every record.
/// Returns nullopt when either arm subpopulation is empty.
std::optional<std::vector<double>> fit_variance_ratio(const StudyDataset& d, const std::vector<double>& mu_hat, int arm,
                                                      const NuisanceOptions& opts, const std::vector<int>& fold_id);

/// Regression of y on x within arm (A=arm, G=g), predicted at every record
/// (out of fold when the method cross-fits). Throws InsufficientDataError when
/// the arm has no records with an outcome.
std::vector<double> fit_arm_mean(const StudyDataset& d, int arm, int g, const NuisanceOptions& opts);

void write_nuisance_csv(const NuisanceSurface& s, const std::filesystem::path& path);
std::string nuisance_to_csv(const NuisanceSurface& s);
NuisanceSurface read_nuisance_csv(const std::filesystem::path& path);
NuisanceSurface nuisance_from_csv(const std::string& text);

}  // namespace fate
