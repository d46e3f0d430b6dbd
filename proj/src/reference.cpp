#include "fate/reference.hpp"

#include <cmath>

#include "fate/error.hpp"
#include "fate/parallel.hpp"

namespace fate::reference {

EstimateReport estimate(Estimand e, const StudyDataset& d, const EifContext& ctx, double z) {
    check_context(e, d, ctx);
    const std::size_t n = d.size();
    std::vector<EifTerms> terms(n);
    double su = 0, sw = 0;
    for (std::size_t i = 0; i < n; ++i) {
        terms[i] = eif_terms(e, ctx, ctx.nuisance->at(i), d.record(i));
        su += terms[i].u;
        sw += terms[i].w;
    }
    if (!(sw != 0.0) || !std::isfinite(su)) throw NumericalError("influence-function normaliser is zero");
    const double point = su / sw;
    double s1 = 0, s2 = 0;
    for (const auto& t : terms) {
        const double phi = t.at(point);
        s1 += phi;
        s2 += phi * phi;
    }
    const double nd = static_cast<double>(n);
    EstimateReport r;
    r.estimand = e;
    r.setting = ctx.setting;
    r.point = point;
    r.variance = s2 / nd / nd;
    r.n = n;
    r.ci_low = point - z * std::sqrt(r.variance);
    r.ci_high = point + z * std::sqrt(r.variance);
    r.diagnostics.mean_centered_eif = s1 / nd;
    r.diagnostics.clip_fraction = ctx.nuisance->clip_fraction;
    r.diagnostics.nuisance_method = ctx.nuisance->method;
    return r;
}

ForestModelFit fit_forest(const Matrix& X, const Vector& y, ForestTask task, const ForestParams& hp,
                          std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto p = static_cast<std::size_t>(X.cols());
    if (n < 2 * static_cast<std::size_t>(std::max(1, hp.min_leaf)))
        throw InsufficientDataError("forest fit needs more rows");
    std::vector<double> rows(n * p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) rows[i * p + j] = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    const std::vector<double> targets(y.data(), y.data() + n);
    ForestModelFit fit;
    fit.task = task;
    fit.params = hp;
    fit.seed = seed;
    fit.p = p;
    for (int t = 0; t < hp.n_trees; ++t)
        fit.trees.push_back(fit_tree(rows, targets, p, task, hp, derive_seed(seed, static_cast<std::uint64_t>(t))));
    return fit;
}

GeneratedData dgp_generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
    std::vector<SampleRecord> recs;
    GeneratedData out;
    std::vector<Draw> draws;
    for (std::size_t c = 0; c * par::kChunk < n; ++c) {
        draw_chunk(spec, seed, c, std::min(par::kChunk, n - c * par::kChunk), draws);
        for (const auto& d : draws) {
            recs.push_back({{d.x[0], d.x[1]}, d.a, d.y, d.g});
            out.y0.push_back(d.y0);
            out.y1.push_back(d.y1);
            out.pi.push_back(spec.pi(d.x[0], d.x[1]));
            out.e.push_back(spec.e(d.x[0], d.x[1], d.g));
        }
    }
    out.data = StudyDataset(recs);
    return out;
}

McIntegral mc_integrate(const DgpSpec& spec, const std::vector<DrawFunction>& fs, std::size_t n_mc,
                        std::uint64_t seed) {
    const std::size_t K = fs.size();
    std::vector<double> sum(K, 0.0), cross(K * K, 0.0), v(K);
    std::vector<Draw> draws;
    for (std::size_t c = 0; c * par::kChunk < n_mc; ++c) {
        draw_chunk(spec, seed, c, std::min(par::kChunk, n_mc - c * par::kChunk), draws);
        for (const auto& d : draws) {
            for (std::size_t k = 0; k < K; ++k) v[k] = fs[k](d);
            for (std::size_t i = 0; i < K; ++i) {
                sum[i] += v[i];
                for (std::size_t j = 0; j < K; ++j) cross[i * K + j] += v[i] * v[j];
            }
        }
    }
    McIntegral out;
    out.n = n_mc;
    const double nd = static_cast<double>(n_mc);
    for (std::size_t k = 0; k < K; ++k) out.mean.push_back(sum[k] / nd);
    out.cov.assign(K, std::vector<double>(K));
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) out.cov[i][j] = (cross[i * K + j] - nd * out.mean[i] * out.mean[j]) / (nd - 1);
    return out;
}

}  // namespace fate::reference
