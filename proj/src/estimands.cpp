#include "fate/estimands.hpp"

#include "fate/error.hpp"

namespace fate {

namespace {

struct Obs {
    double g, a, y;
};

Obs observe(const RecordView& r, bool target_a, bool target_y) {
    Obs o{static_cast<double>(r.g), 0.0, 0.0};
    const bool src = r.g == 1;
    if (src || target_a) {
        if (!r.a) throw DataError("record lacks the treatment value required by the influence function");
        o.a = *r.a;
    }
    if (src || target_y) {
        if (!r.y) throw DataError("record lacks the outcome required by the influence function");
        o.y = *r.y;
    }
    return o;
}

EifTerms beta_I(double q, const NuisancePoint& n, const Obs& o) {
    EifTerms t;
    if (o.g == 1.0) {
        t.u = (o.a * (o.y - n.mu1) / n.e1 - (1 - o.a) * (o.y - n.mu0) / (1 - n.e1) + n.mu1 - n.mu0) / q;
        t.w = 1.0 / q;
    }
    return t;
}

EifTerms beta_V(double q, const NuisancePoint& n, const Obs& o) {
    EifTerms t;
    t.u = o.g / q * (o.a * (o.y - n.mu1) / n.e1 + n.mu1 - n.mu0) -
          (1 - o.a) * (o.y - n.mu0) * n.pi / (1 - n.pi * n.e1) / q;
    t.w = o.g / q;
    return t;
}

EifTerms beta_VI(double q, const NuisancePoint& n, const Obs& o) {
    const double e = e_pooled(n);
    EifTerms t;
    t.u = (o.a * (o.y - n.mu1) * n.pi / e - (1 - o.a) * (o.y - n.mu0) * n.pi / (1 - e)) / q +
          o.g / q * (n.mu1 - n.mu0);
    t.w = o.g / q;
    return t;
}

EifTerms beta_V_star(double q, const DriftSpec& dr, const NuisancePoint& n, const Obs& o) {
    const double r0 = effective_ratio(dr, 0, n);
    const double pw1 = n.pi * n.e1;
    const double pw0 = n.pi * (1 - n.e1) + (1 - n.pi) * r0;
    EifTerms t;
    if (o.g == 1.0) {
        t.u = n.pi / q * (o.a * (o.y - n.mu1) / pw1 - (1 - o.a) * (o.y - n.mu0) / pw0) + (n.mu1 - n.mu0) / q;
        t.w = 1.0 / q;
    } else {
        // r0 / m0 = m0 * r0°, which stays finite when m0 = 0.
        const double m0 = dr.m(0, n.mu0);
        t.u = -n.pi / q * (1 - o.a) * (o.y - dr.psi(0, n.mu0)) * m0 * n.r0 / pw0;
    }
    return t;
}

EifTerms beta_VI_star(double q, const DriftSpec& dr, const NuisancePoint& n, const Obs& o) {
    const double r0 = effective_ratio(dr, 0, n), r1 = effective_ratio(dr, 1, n);
    const double pw1 = n.pi * n.e1 + (1 - n.pi) * n.e0 * r1;
    const double pw0 = n.pi * (1 - n.e1) + (1 - n.pi) * (1 - n.e0) * r0;
    EifTerms t;
    if (o.g == 1.0) {
        t.u = n.pi / q * (o.a * (o.y - n.mu1) / pw1 - (1 - o.a) * (o.y - n.mu0) / pw0) + (n.mu1 - n.mu0) / q;
        t.w = 1.0 / q;
    } else {
        const double m0 = dr.m(0, n.mu0), m1 = dr.m(1, n.mu1);
        t.u = n.pi / q *
              (o.a * (o.y - dr.psi(1, n.mu1)) * m1 * n.r1 / pw1 - (1 - o.a) * (o.y - dr.psi(0, n.mu0)) * m0 * n.r0 / pw0);
    }
    return t;
}

}  // namespace

EifTerms beta_terms(const EifContext& ctx, const NuisancePoint& n, const RecordView& r) {
    const EifForm form = ctx.setting.form();
    const bool borrow = form != EifForm::I;
    const Obs o = observe(r, borrow, borrow);
    const double q = ctx.q_hat;
    if (!ctx.setting.starred() || form == EifForm::I) {
        switch (form) {
            case EifForm::I: return beta_I(q, n, o);
            case EifForm::V: return beta_V(q, n, o);
            case EifForm::VI: return beta_VI(q, n, o);
        }
    }
    return form == EifForm::V ? beta_V_star(q, ctx.setting.drift, n, o) : beta_VI_star(q, ctx.setting.drift, n, o);
}

EifTerms tau_att_terms(const EifContext& ctx, const NuisancePoint& n, const RecordView& r) {
    const EifForm form = ctx.setting.form();
    const Obs o = observe(r, true, form == EifForm::VI);
    const double k = 1.0 / ((1.0 - ctx.q_hat) * ctx.e0_bar);
    EifTerms t;
    if (form == EifForm::VI) {
        const double e = e_pooled(n);
        t.u = k * (1 - n.pi) * n.e0 * (o.a * (o.y - n.mu1) / e - (1 - o.a) * (o.y - n.mu0) / (1 - e));
    } else if (o.g == 1.0) {
        t.u = k * (o.a * (o.y - n.mu1) / n.e1 - (1 - o.a) * (o.y - n.mu0) / (1 - n.e1)) * (1 - n.pi) * n.e0 / n.pi;
    }
    t.w = k * (1 - o.g) * o.a;
    t.u += t.w * (n.mu1 - n.mu0);
    return t;
}

EifTerms tau_att_terms_target_only(const EifContext& ctx, const NuisancePoint& n, const RecordView& r) {
    EifTerms t;
    if (r.g == 1) return t;
    const Obs o = observe(r, true, true);
    const double d = 1.0 - ctx.q_hat, eb = ctx.e0_bar;
    t.u = (o.a * (o.y - n.mu1) / eb - (1 - o.a) * (o.y - n.mu0) * n.e0 / (eb * (1 - n.e0)) + o.a / eb * (n.mu1 - n.mu0)) / d;
    t.w = o.a / eb / d;
    return t;
}

EifTerms beta_att_terms(const EifContext& ctx, const NuisancePoint& n, const RecordView& r) {
    const EifForm form = ctx.setting.form();
    const bool borrow = form != EifForm::I;
    const Obs o = observe(r, borrow, borrow);
    const double k = 1.0 / (ctx.q_hat * ctx.e1_bar);
    EifTerms t;
    switch (form) {
        case EifForm::I:
            if (o.g == 1.0) t.u = k * (o.a * (o.y - n.mu1) / n.e1 - (1 - o.a) * (o.y - n.mu0) / (1 - n.e1)) * n.e1;
            break;
        case EifForm::V:
            t.u = k * o.g * o.a * (o.y - n.mu1) - k * (1 - o.a) * (o.y - n.mu0) * n.pi * n.e1 / (1 - n.pi * n.e1);
            break;
        case EifForm::VI: {
            const double e = e_pooled(n);
            t.u = k * (o.a * (o.y - n.mu1) / e - (1 - o.a) * (o.y - n.mu0) / (1 - e)) * n.pi * n.e1;
            break;
        }
    }
    t.w = k * o.g * o.a;
    t.u += t.w * (n.mu1 - n.mu0);
    return t;
}

double eif_beta(const EifContext& ctx, std::size_t i, const RecordView& r, double beta) {
    if (!ctx.nuisance) throw ContextIncompleteError("no nuisance surface in context");
    return beta_terms(ctx, ctx.nuisance->at(i), r).at(beta);
}

double eif_tau_att(const EifContext& ctx, std::size_t i, const RecordView& r, double tau_att) {
    if (!ctx.nuisance) throw ContextIncompleteError("no nuisance surface in context");
    return tau_att_terms(ctx, ctx.nuisance->at(i), r).at(tau_att);
}

double eif_beta_att(const EifContext& ctx, std::size_t i, const RecordView& r, double beta_att) {
    if (!ctx.nuisance) throw ContextIncompleteError("no nuisance surface in context");
    return beta_att_terms(ctx, ctx.nuisance->at(i), r).at(beta_att);
}

EstimateReport estimate_beta(const StudyDataset& d, const EifContext& ctx) { return estimate(Estimand::Beta, d, ctx); }
EstimateReport estimate_tau_att(const StudyDataset& d, const EifContext& ctx) {
    return estimate(Estimand::TauAtt, d, ctx);
}
EstimateReport estimate_beta_att(const StudyDataset& d, const EifContext& ctx) {
    return estimate(Estimand::BetaAtt, d, ctx);
}

EstimateReport run_recipe(const StudyDataset& d, const EstimationRecipe& recipe) {
    require_valid(d, recipe.setting);
    const NuisanceSurface s = cross_fit(d, recipe.setting, recipe.nuisance);
    return estimate(recipe.estimand, d, make_context(d, recipe.setting, s, recipe.known_pi));
}

}  // namespace fate
