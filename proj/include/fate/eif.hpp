#pragma once

// Efficient influence functions. Every EIF here is affine in its parameter,
// phi = u - w * theta, so evaluation returns the pair (u, w); the estimator is
// sum(u) / sum(w) and the plug-in variance is mean(phi^2) / n.

#include <cmath>
#include <cstddef>
#include <limits>

#include "fate/data_model.hpp"
#include "fate/nuisance.hpp"
#include "fate/report.hpp"

namespace fate {

struct EifTerms {
    double u = 0;
    double w = 0;

    double at(double theta) const { return u - w * theta; }
};

struct EifContext {
    SettingSpec setting;
    const NuisanceSurface* nuisance = nullptr;
    double q_hat = 0.5;
    /// Treat pi as known: (1 - G) in the CATE term becomes 1 - pi(X).
    bool known_pi = false;
    /// Group means of A (target / source); needed only by the ATT estimands.
    double e0_bar = std::numeric_limits<double>::quiet_NaN();
    double e1_bar = std::numeric_limits<double>::quiet_NaN();
};

/// Context for d with q_hat and the group means of A filled in.
EifContext make_context(const StudyDataset& d, const SettingSpec& s, const NuisanceSurface& nuisance,
                        bool known_pi = false);

/// Composite scores.
inline double e_tilde(const NuisancePoint& n) { return n.e1 * n.pi; }
inline double e_pooled(const NuisancePoint& n) { return n.e0 * (1 - n.pi) + n.e1 * n.pi; }

/// Effective ratio r_a = m_a(mu_a)^2 * r_a°.
double effective_ratio(const DriftSpec& drift, int arm, const NuisancePoint& n);

EifTerms tau_terms(const EifContext& ctx, const NuisancePoint& n, const RecordView& r);
/// The target-data-only EIF (setting VI with pi = 0), used for the target-only bound.
EifTerms tau_terms_target_only(const EifContext& ctx, const NuisancePoint& n, const RecordView& r);

/// phi at record r with nuisances taken from ctx.nuisance row i.
double eif_tau(const EifContext& ctx, std::size_t i, const RecordView& r, double tau);

/// Dispatch over all four estimands.
EifTerms eif_terms(Estimand e, const EifContext& ctx, const NuisancePoint& n, const RecordView& r);

/// Throws ContextIncompleteError / NotIdentifiableError / DataError when the
/// context cannot support the estimand on d.
void check_context(Estimand e, const StudyDataset& d, const EifContext& ctx);

EstimateReport estimate(Estimand e, const StudyDataset& d, const EifContext& ctx, double z = 1.96);
EstimateReport estimate_tau(const StudyDataset& d, const EifContext& ctx);

}  // namespace fate
