#pragma once

// Source-population ATE (beta) and the ATT estimands of both populations,
// plus the end-to-end fit-and-estimate recipe shared by the CLI, bootstrap
// and Monte Carlo code.

#include "fate/eif.hpp"

namespace fate {

/// Settings I-IV (and I*-IV*) share one source-only form; V/VI and their
/// starred versions borrow target information.
EifTerms beta_terms(const EifContext& ctx, const NuisancePoint& n, const RecordView& r);

/// Defined for II, IV (common form) and VI only.
EifTerms tau_att_terms(const EifContext& ctx, const NuisancePoint& n, const RecordView& r);
/// Target-data-only ATT influence function (setting VI with pi = 0).
EifTerms tau_att_terms_target_only(const EifContext& ctx, const NuisancePoint& n, const RecordView& r);

EifTerms beta_att_terms(const EifContext& ctx, const NuisancePoint& n, const RecordView& r);

double eif_beta(const EifContext& ctx, std::size_t i, const RecordView& r, double beta);
double eif_tau_att(const EifContext& ctx, std::size_t i, const RecordView& r, double tau_att);
double eif_beta_att(const EifContext& ctx, std::size_t i, const RecordView& r, double beta_att);

EstimateReport estimate_beta(const StudyDataset& d, const EifContext& ctx);
EstimateReport estimate_tau_att(const StudyDataset& d, const EifContext& ctx);
EstimateReport estimate_beta_att(const StudyDataset& d, const EifContext& ctx);

struct EstimationRecipe {
    SettingSpec setting;
    Estimand estimand = Estimand::Tau;
    NuisanceOptions nuisance;
    bool known_pi = false;
};

/// Validate, fit nuisances, estimate.
EstimateReport run_recipe(const StudyDataset& d, const EstimationRecipe& recipe);

}  // namespace fate
