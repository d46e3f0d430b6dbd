#include "fate/eif.hpp"

#include <vector>

#include "fate/error.hpp"
#include "fate/estimands.hpp"
#include "fate/parallel.hpp"

namespace fate {

EifContext make_context(const StudyDataset& d, const SettingSpec& s, const NuisanceSurface& nuisance, bool known_pi) {
    EifContext ctx;
    ctx.setting = s;
    ctx.nuisance = &nuisance;
    ctx.q_hat = d.q_hat();
    ctx.known_pi = known_pi;
    double a0 = 0, n0 = 0, a1 = 0, n1 = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!d.a(i)) continue;
        if (d.g(i) == 0) {
            a0 += *d.a(i);
            n0 += 1;
        } else {
            a1 += *d.a(i);
            n1 += 1;
        }
    }
    if (n0 > 0) ctx.e0_bar = a0 / n0;
    if (n1 > 0) ctx.e1_bar = a1 / n1;
    return ctx;
}

double effective_ratio(const DriftSpec& drift, int arm, const NuisancePoint& n) {
    const double m = drift.m(arm, arm == 1 ? n.mu1 : n.mu0);
    return m * m * (arm == 1 ? n.r1 : n.r0);
}

namespace {

struct Obs {
    double g, a, y;
};

// Target records may lack a / y in settings I-IV; those terms carry a zero
// indicator and are skipped rather than evaluated.
Obs observe(const RecordView& r, bool need_target_ay) {
    Obs o{static_cast<double>(r.g), 0.0, 0.0};
    if (r.g == 1 || need_target_ay) {
        if (!r.a || !r.y) throw DataError("record lacks a or y required by the influence function");
        o.a = *r.a;
        o.y = *r.y;
    }
    return o;
}

double cate_weight(const EifContext& ctx, const NuisancePoint& n, const Obs& o) {
    const double d = 1.0 - ctx.q_hat;
    return ctx.known_pi ? (1.0 - n.pi) / d : (1.0 - o.g) / d;
}

EifTerms tau_I(const EifContext& ctx, const NuisancePoint& n, const Obs& o) {
    const double d = 1.0 - ctx.q_hat;
    EifTerms t;
    if (o.g == 1.0) {
        const double aug = o.a * (o.y - n.mu1) / n.e1 - (1 - o.a) * (o.y - n.mu0) / (1 - n.e1);
        t.u = aug * (1 - n.pi) / n.pi / d;
    }
    t.w = cate_weight(ctx, n, o);
    t.u += t.w * (n.mu1 - n.mu0);
    return t;
}

EifTerms tau_V(const EifContext& ctx, const NuisancePoint& n, const Obs& o) {
    const double d = 1.0 - ctx.q_hat;
    const double et = e_tilde(n);
    EifTerms t;
    t.u = (1 - n.pi) / d * (o.g * o.a * (o.y - n.mu1) / et - (1 - o.a) * (o.y - n.mu0) / (1 - et));
    t.w = cate_weight(ctx, n, o);
    t.u += t.w * (n.mu1 - n.mu0);
    return t;
}

EifTerms tau_VI(const EifContext& ctx, const NuisancePoint& n, const Obs& o) {
    const double d = 1.0 - ctx.q_hat;
    const double e = e_pooled(n);
    EifTerms t;
    t.u = (1 - n.pi) / d * (o.a * (o.y - n.mu1) / e - (1 - o.a) * (o.y - n.mu0) / (1 - e));
    t.w = cate_weight(ctx, n, o);
    t.u += t.w * (n.mu1 - n.mu0);
    return t;
}

EifTerms tau_I_star(const EifContext& ctx, const NuisancePoint& n, const Obs& o) {
    const DriftSpec& dr = ctx.setting.drift;
    const double d = 1.0 - ctx.q_hat;
    EifTerms t;
    if (o.g == 1.0) {
        const double m1 = dr.m(1, n.mu1), m0 = dr.m(0, n.mu0);
        t.u = (1 - n.pi) / n.pi / d *
              (m1 * o.a * (o.y - n.mu1) / n.e1 - m0 * (1 - o.a) * (o.y - n.mu0) / (1 - n.e1));
    }
    t.w = cate_weight(ctx, n, o);
    t.u += t.w * (dr.psi(1, n.mu1) - dr.psi(0, n.mu0));
    return t;
}

EifTerms tau_V_star(const EifContext& ctx, const NuisancePoint& n, const Obs& o) {
    const DriftSpec& dr = ctx.setting.drift;
    const double d = 1.0 - ctx.q_hat;
    const double r0 = effective_ratio(dr, 0, n);
    const double w0 = n.pi * (1 - n.e1) + (1 - n.pi) * r0;
    const double psi0 = dr.psi(0, n.mu0), psi1 = dr.psi(1, n.mu1);
    EifTerms t;
    if (o.g == 1.0) {
        const double m1 = dr.m(1, n.mu1), m0 = dr.m(0, n.mu0);
        t.u = (1 - n.pi) / d * (m1 * o.a * (o.y - n.mu1) / (n.pi * n.e1) - m0 * (1 - o.a) * (o.y - n.mu0) / w0);
    } else {
        t.u = -(1 - n.pi) / d * r0 * (1 - o.a) * (o.y - psi0) / w0;
    }
    t.w = cate_weight(ctx, n, o);
    t.u += t.w * (psi1 - psi0);
    return t;
}

EifTerms tau_VI_star(const EifContext& ctx, const NuisancePoint& n, const Obs& o) {
    const DriftSpec& dr = ctx.setting.drift;
    const double d = 1.0 - ctx.q_hat;
    const double r0 = effective_ratio(dr, 0, n), r1 = effective_ratio(dr, 1, n);
    const double w1 = n.pi * n.e1 + (1 - n.pi) * n.e0 * r1;
    const double w0 = n.pi * (1 - n.e1) + (1 - n.pi) * (1 - n.e0) * r0;
    const double psi0 = dr.psi(0, n.mu0), psi1 = dr.psi(1, n.mu1);
    EifTerms t;
    if (o.g == 1.0) {
        const double m1 = dr.m(1, n.mu1), m0 = dr.m(0, n.mu0);
        t.u = (1 - n.pi) / d * (m1 * o.a * (o.y - n.mu1) / w1 - m0 * (1 - o.a) * (o.y - n.mu0) / w0);
    } else {
        t.u = (1 - n.pi) / d * (r1 * o.a * (o.y - psi1) / w1 - r0 * (1 - o.a) * (o.y - psi0) / w0);
    }
    t.w = cate_weight(ctx, n, o);
    t.u += t.w * (psi1 - psi0);
    return t;
}

}  // namespace

EifTerms tau_terms(const EifContext& ctx, const NuisancePoint& n, const RecordView& r) {
    const EifForm form = ctx.setting.form();
    const Obs o = observe(r, form != EifForm::I);
    if (!ctx.setting.starred()) {
        switch (form) {
            case EifForm::I: return tau_I(ctx, n, o);
            case EifForm::V: return tau_V(ctx, n, o);
            case EifForm::VI: return tau_VI(ctx, n, o);
        }
    }
    switch (form) {
        case EifForm::I: return tau_I_star(ctx, n, o);
        case EifForm::V: return tau_V_star(ctx, n, o);
        case EifForm::VI: return tau_VI_star(ctx, n, o);
    }
    return {};
}

EifTerms tau_terms_target_only(const EifContext& ctx, const NuisancePoint& n, const RecordView& r) {
    const double d = 1.0 - ctx.q_hat;
    EifTerms t;
    if (r.g == 1) return t;
    const Obs o = observe(r, true);
    t.w = 1.0 / d;
    t.u = (o.a * (o.y - n.mu1) / n.e0 - (1 - o.a) * (o.y - n.mu0) / (1 - n.e0) + n.mu1 - n.mu0) / d;
    return t;
}

double eif_tau(const EifContext& ctx, std::size_t i, const RecordView& r, double tau) {
    if (!ctx.nuisance) throw ContextIncompleteError("no nuisance surface in context");
    return tau_terms(ctx, ctx.nuisance->at(i), r).at(tau);
}

EifTerms eif_terms(Estimand e, const EifContext& ctx, const NuisancePoint& n, const RecordView& r) {
    switch (e) {
        case Estimand::Tau: return tau_terms(ctx, n, r);
        case Estimand::Beta: return beta_terms(ctx, n, r);
        case Estimand::TauAtt: return tau_att_terms(ctx, n, r);
        case Estimand::BetaAtt: return beta_att_terms(ctx, n, r);
    }
    return {};
}

void check_context(Estimand e, const StudyDataset& d, const EifContext& ctx) {
    const auto& s = ctx.setting;
    if (!ctx.nuisance) throw ContextIncompleteError("no nuisance surface in context");
    if (ctx.nuisance->size() != d.size())
        throw ContextIncompleteError("nuisance surface has " + std::to_string(ctx.nuisance->size()) +
                                     " rows but the dataset has " + std::to_string(d.size()));
    if (!(ctx.q_hat > 0 && ctx.q_hat < 1)) throw ContextIncompleteError("q_hat must lie in (0, 1)");
    require_valid(d, s);
    const bool att = e == Estimand::TauAtt || e == Estimand::BetaAtt;
    if (att && s.starred())
        throw NotIdentifiableError("ATT estimands are only available without posterior drift");
    if (e == Estimand::TauAtt && !target_has_a(s.structure))
        throw NotIdentifiableError(std::string("tau_att is not identifiable in setting ") + roman(s.structure));
    if (e == Estimand::TauAtt && s.structure == Structure::XAYControlsOnly)
        throw NotIdentifiableError("tau_att is not identifiable in setting V (no treated target units)");
    const bool need_e0 = s.form() == EifForm::VI || e == Estimand::TauAtt;
    if (need_e0 && !ctx.nuisance->has_e0())
        throw ContextIncompleteError("setting " + s.name() + " needs e0_hat, which the nuisance surface lacks");
    if (s.starred() && s.form() != EifForm::I && !ctx.nuisance->has_ratios())
        throw ContextIncompleteError("setting " + s.name() + " needs variance ratios r0_hat and r1_hat");
    if (e == Estimand::TauAtt && !(ctx.e0_bar > 0 && ctx.e0_bar < 1))
        throw DataError("tau_att needs treated and control units in the target data");
    if (e == Estimand::BetaAtt && !(ctx.e1_bar > 0 && ctx.e1_bar < 1))
        throw DataError("beta_att needs treated and control units in the source data");
}

EstimateReport estimate(Estimand e, const StudyDataset& d, const EifContext& ctx, double z) {
    check_context(e, d, ctx);
    const std::size_t n = d.size();
    std::vector<EifTerms> terms(n);
    const auto sums = par::chunked_sums<2>(n, [&](std::size_t i, std::array<double, 2>& acc) {
        terms[i] = eif_terms(e, ctx, ctx.nuisance->at(i), d.record(i));
        acc[0] += terms[i].u;
        acc[1] += terms[i].w;
    });
    if (!(sums[1] != 0.0) || !std::isfinite(sums[0]))
        throw NumericalError("influence-function normaliser is zero or the sum is not finite");
    const double point = sums[0] / sums[1];
    const auto moments = par::chunked_sums<2>(n, [&](std::size_t i, std::array<double, 2>& acc) {
        const double phi = terms[i].at(point);
        acc[0] += phi;
        acc[1] += phi * phi;
    });
    const double nd = static_cast<double>(n);
    EstimateReport r;
    r.estimand = e;
    r.setting = ctx.setting;
    r.point = point;
    r.variance = moments[1] / nd / nd;
    r.n = n;
    const double half = z * std::sqrt(r.variance);
    r.ci_low = point - half;
    r.ci_high = point + half;
    r.diagnostics.mean_centered_eif = moments[0] / nd;
    r.diagnostics.clip_fraction = ctx.nuisance->clip_fraction;
    r.diagnostics.nuisance_method = ctx.nuisance->method;
    r.diagnostics.notes = ctx.nuisance->notes;
    r.diagnostics.notes.push_back("q estimated by the sample fraction of source records");
    if (ctx.known_pi) r.diagnostics.notes.push_back("sampling score treated as known");
    return r;
}

EstimateReport estimate_tau(const StudyDataset& d, const EifContext& ctx) { return estimate(Estimand::Tau, d, ctx); }

}  // namespace fate
