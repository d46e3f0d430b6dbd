#pragma once

// Monte Carlo laboratory: replicate studies of the estimators and Monte Carlo
// integration of efficiency bounds with the true nuisances.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fate/dgp.hpp"
#include "fate/estimands.hpp"

namespace fate {

struct StudyItem {
    SettingSpec setting;
    Estimand estimand = Estimand::Tau;
};

struct McSummary {
    std::string case_id;
    SettingSpec setting;
    Estimand estimand = Estimand::Tau;
    std::size_t n = 0, reps = 0, failures = 0;
    double truth = 0;
    double bias = 0, sd = 0, cp95 = 0, mean_variance = 0;
    std::vector<double> points;  // successful replicate estimates, in replicate order
};

/// Replicate r draws data with derive_seed(seed, r), fits the nuisances once
/// for all items and estimates each item. Failing replicates are counted.
std::vector<McSummary> mc_study(const DgpSpec& spec, const std::vector<StudyItem>& items, std::size_t n,
                                std::size_t reps, const NuisanceOptions& opts, std::uint64_t seed);
McSummary mc_study(const DgpSpec& spec, const SettingSpec& setting, std::size_t n, std::size_t reps,
                   const NuisanceOptions& opts, std::uint64_t seed, Estimand estimand = Estimand::Tau);

/// Mean and covariance of several per-draw functions over the same draws.
struct McIntegral {
    std::size_t n = 0;
    std::vector<double> mean;
    std::vector<std::vector<double>> cov;  // covariance of the per-draw values

    double se(std::size_t k) const;
    /// Standard error of sum_k coef[k] * mean[k].
    double se_of(const std::vector<double>& coef) const;
    double combination(const std::vector<double>& coef) const;
};

using DrawFunction = std::function<double(const Draw&)>;

McIntegral mc_integrate(const DgpSpec& spec, const std::vector<DrawFunction>& fs, std::size_t n_mc,
                        std::uint64_t seed);

enum class BoundForm {
    Setting,     // EIF of the requested setting
    TargetOnly,  // EIF that uses the target data alone
    KnownPi,     // tau EIF with the sampling score known
};

struct BoundRequest {
    SettingSpec setting;
    Estimand estimand = Estimand::Tau;
    BoundForm form = BoundForm::Setting;

    std::string label() const;
};

struct BoundEstimate {
    std::string label;
    std::string case_id;
    double value = 0;
    double mc_se = 0;
    std::size_t n_mc = 0;
};

/// phi^2 at a draw with true nuisances and the true parameter.
DrawFunction eif_square(const DgpSpec& spec, const Truths& truths, const BoundRequest& req);

BoundEstimate mc_bound(const DgpSpec& spec, const BoundRequest& req, std::size_t n_mc, std::uint64_t seed);
BoundEstimate mc_bound(const DgpSpec& spec, const SettingSpec& setting, std::size_t n_mc, std::uint64_t seed);

/// Displayed closed form of the setting-I bound: conditional-variance term plus
/// CATE-dispersion term, averaged over X.
DrawFunction closed_form_I_integrand(const DgpSpec& spec, const Truths& truths);
BoundEstimate closed_form_bound_I(const DgpSpec& spec, std::size_t n_mc, std::uint64_t seed);

/// Integrand of the setting-I minus setting-V gain on a controls-only design.
DrawFunction gain_I_minus_V_integrand(const DgpSpec& spec, const Truths& truths);
/// Integrand of the reduction from knowing the sampling score.
DrawFunction known_pi_gain_integrand(const DgpSpec& spec, const Truths& truths);

}  // namespace fate
