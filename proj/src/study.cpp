#include "fate/study.hpp"

#include <cmath>
#include <optional>

#include "fate/error.hpp"
#include "fate/parallel.hpp"

namespace fate {

namespace {

struct ItemResult {
    double point, variance;
    bool covers;
};

}  // namespace

std::vector<McSummary> mc_study(const DgpSpec& spec, const std::vector<StudyItem>& items, std::size_t n,
                                std::size_t reps, const NuisanceOptions& opts, std::uint64_t seed) {
    if (reps < 2) throw ConfigError("mc_study needs at least 2 replicates");
    if (items.empty()) throw ConfigError("mc_study needs at least one setting");
    const Truths truths = true_values(spec);
    std::vector<SettingSpec> settings;
    for (const auto& it : items) settings.push_back(it.setting);
    const NuisanceNeeds needs = needs_for(settings, opts);

    std::vector<std::vector<std::optional<ItemResult>>> results(reps, std::vector<std::optional<ItemResult>>(items.size()));
    par::for_each_index(reps, [&](std::size_t r) {
        try {
            const auto gen = dgp_generate(spec, n, derive_seed(seed, r));
            NuisanceOptions o = opts;
            o.seed = derive_seed(seed, r, 7);
            const NuisanceSurface surf = cross_fit(gen.data, needs, o);
            for (std::size_t k = 0; k < items.size(); ++k) {
                try {
                    const auto ctx = make_context(gen.data, items[k].setting, surf);
                    const auto rep = estimate(items[k].estimand, gen.data, ctx);
                    const double truth = truths.value(items[k].estimand);
                    results[r][k] = ItemResult{rep.point, rep.variance, rep.ci_low <= truth && truth <= rep.ci_high};
                } catch (const DataError&) {
                } catch (const NumericalError&) {
                }
            }
        } catch (const DataError&) {
        } catch (const NumericalError&) {
        }
    });

    std::vector<McSummary> out;
    for (std::size_t k = 0; k < items.size(); ++k) {
        McSummary s;
        s.case_id = spec.name;
        s.setting = items[k].setting;
        s.estimand = items[k].estimand;
        s.n = n;
        s.reps = reps;
        s.truth = truths.value(items[k].estimand);
        double sum = 0, var_sum = 0, covered = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            if (!results[r][k]) {
                ++s.failures;
                continue;
            }
            s.points.push_back(results[r][k]->point);
            sum += results[r][k]->point;
            var_sum += results[r][k]->variance;
            covered += results[r][k]->covers;
        }
        const double m = static_cast<double>(s.points.size());
        if (m >= 2) {
            const double mean = sum / m;
            double ss = 0;
            for (double p : s.points) ss += (p - mean) * (p - mean);
            s.bias = mean - s.truth;
            s.sd = std::sqrt(ss / (m - 1));
            s.cp95 = covered / m;
            s.mean_variance = var_sum / m;
        } else {
            s.bias = s.sd = s.cp95 = s.mean_variance = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(std::move(s));
    }
    return out;
}

McSummary mc_study(const DgpSpec& spec, const SettingSpec& setting, std::size_t n, std::size_t reps,
                   const NuisanceOptions& opts, std::uint64_t seed, Estimand estimand) {
    return mc_study(spec, {StudyItem{setting, estimand}}, n, reps, opts, seed).front();
}

double McIntegral::se(std::size_t k) const { return std::sqrt(cov[k][k] / static_cast<double>(n)); }

double McIntegral::se_of(const std::vector<double>& coef) const {
    double v = 0;
    for (std::size_t i = 0; i < coef.size(); ++i)
        for (std::size_t j = 0; j < coef.size(); ++j) v += coef[i] * coef[j] * cov[i][j];
    return std::sqrt(std::max(v, 0.0) / static_cast<double>(n));
}

double McIntegral::combination(const std::vector<double>& coef) const {
    double v = 0;
    for (std::size_t i = 0; i < coef.size(); ++i) v += coef[i] * mean[i];
    return v;
}

McIntegral mc_integrate(const DgpSpec& spec, const std::vector<DrawFunction>& fs, std::size_t n_mc,
                        std::uint64_t seed) {
    if (n_mc < 2) throw ConfigError("Monte Carlo integration needs at least 2 draws");
    const std::size_t K = fs.size();
    const std::size_t chunks = (n_mc + par::kChunk - 1) / par::kChunk;
    // Per chunk: K sums followed by K*K cross products, combined in chunk order.
    std::vector<std::vector<double>> partial(chunks);
    par::for_each_index(chunks, [&](std::size_t c) {
        const std::size_t begin = c * par::kChunk, end = std::min(n_mc, begin + par::kChunk);
        std::vector<Draw> draws;
        draw_chunk(spec, seed, c, end - begin, draws);
        std::vector<double> acc(K + K * K, 0.0), v(K);
        for (const auto& d : draws) {
            for (std::size_t k = 0; k < K; ++k) v[k] = fs[k](d);
            for (std::size_t i = 0; i < K; ++i) {
                acc[i] += v[i];
                for (std::size_t j = 0; j < K; ++j) acc[K + i * K + j] += v[i] * v[j];
            }
        }
        partial[c] = std::move(acc);
    });
    std::vector<double> tot(K + K * K, 0.0);
    for (const auto& p : partial)
        for (std::size_t k = 0; k < tot.size(); ++k) tot[k] += p[k];
    McIntegral out;
    out.n = n_mc;
    const double nd = static_cast<double>(n_mc);
    out.mean.resize(K);
    for (std::size_t k = 0; k < K; ++k) out.mean[k] = tot[k] / nd;
    out.cov.assign(K, std::vector<double>(K));
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            out.cov[i][j] = (tot[K + i * K + j] - nd * out.mean[i] * out.mean[j]) / (nd - 1);
    return out;
}

std::string BoundRequest::label() const {
    std::string s = std::string(estimand_name(estimand)) + ":" + setting.name();
    if (form == BoundForm::TargetOnly) s = std::string(estimand_name(estimand)) + ":target-only";
    if (form == BoundForm::KnownPi) s += "+known-pi";
    return s;
}

DrawFunction eif_square(const DgpSpec& spec, const Truths& truths, const BoundRequest& req) {
    EifContext ctx;
    ctx.setting = req.setting;
    ctx.q_hat = truths.q;
    ctx.e0_bar = truths.e0_bar;
    ctx.e1_bar = truths.e1_bar;
    ctx.known_pi = req.form == BoundForm::KnownPi;
    const double theta = truths.value(req.estimand);
    if (req.form == BoundForm::TargetOnly && req.estimand != Estimand::Tau && req.estimand != Estimand::TauAtt)
        throw ConfigError("target-only bounds exist for tau and tau_att only");
    return [spec, ctx, theta, req](const Draw& d) {
        const RecordView r{std::span<const double>(d.x, 2), d.a, d.y, d.g};
        const NuisancePoint np = true_point(spec, d.x[0], d.x[1]);
        EifTerms t;
        if (req.form == BoundForm::TargetOnly)
            t = req.estimand == Estimand::Tau ? tau_terms_target_only(ctx, np, r) : tau_att_terms_target_only(ctx, np, r);
        else
            t = eif_terms(req.estimand, ctx, np, r);
        const double phi = t.at(theta);
        return phi * phi;
    };
}

BoundEstimate mc_bound(const DgpSpec& spec, const BoundRequest& req, std::size_t n_mc, std::uint64_t seed) {
    const Truths truths = true_values(spec);
    const auto m = mc_integrate(spec, {eif_square(spec, truths, req)}, n_mc, seed);
    return {req.label(), spec.name, m.mean[0], m.se(0), n_mc};
}

BoundEstimate mc_bound(const DgpSpec& spec, const SettingSpec& setting, std::size_t n_mc, std::uint64_t seed) {
    return mc_bound(spec, BoundRequest{setting}, n_mc, seed);
}

DrawFunction closed_form_I_integrand(const DgpSpec& spec, const Truths& truths) {
    const double d = 1 - truths.q, tau = truths.tau;
    const double s1 = spec.sd1_source * spec.sd1_source, s0 = spec.sd0_source * spec.sd0_source;
    return [spec, d, tau, s1, s0](const Draw& dr) {
        const double x1 = dr.x[0], x2 = dr.x[1];
        const double p = spec.pi(x1, x2), e1 = spec.e(x1, x2, 1);
        const double cate = spec.mu(x1, x2, 1, 0) - spec.mu(x1, x2, 0, 0);
        return (1 - p) * (1 - p) / (d * d * p) * (s1 / e1 + s0 / (1 - e1)) + (cate - tau) * (cate - tau) * (1 - p) / (d * d);
    };
}

BoundEstimate closed_form_bound_I(const DgpSpec& spec, std::size_t n_mc, std::uint64_t seed) {
    const Truths truths = true_values(spec);
    const auto m = mc_integrate(spec, {closed_form_I_integrand(spec, truths)}, n_mc, seed);
    return {"tau:I closed form", spec.name, m.mean[0], m.se(0), n_mc};
}

DrawFunction gain_I_minus_V_integrand(const DgpSpec& spec, const Truths& truths) {
    const double d = 1 - truths.q;
    const double s0 = spec.sd0_source * spec.sd0_source;
    return [spec, d, s0](const Draw& dr) {
        const double p = spec.pi(dr.x[0], dr.x[1]), e1 = spec.e(dr.x[0], dr.x[1], 1);
        const double gamma1 = (1 - p) / ((1 - p) + (1 - e1) * p);
        return gamma1 * (1 - p) * (1 - p) * s0 / (d * d * p * (1 - e1));
    };
}

DrawFunction known_pi_gain_integrand(const DgpSpec& spec, const Truths& truths) {
    const double d = 1 - truths.q, tau = truths.tau;
    return [spec, d, tau](const Draw& dr) {
        const double x1 = dr.x[0], x2 = dr.x[1];
        const double p = spec.pi(x1, x2);
        const double c = spec.mu(x1, x2, 1, 0) - spec.mu(x1, x2, 0, 0) - tau;
        return c * c * p * (1 - p) / (d * d);
    };
}

}  // namespace fate
