// OpenMP kernels against their serial references. Thread count follows
// FATE_THREADS (or the OpenMP default).

#include <benchmark/benchmark.h>

#include <map>

#include "fate/dgp.hpp"
#include "fate/models.hpp"
#include "fate/reference.hpp"
#include "fate/study.hpp"

namespace {

using namespace fate;

const GeneratedData& dataset(std::size_t n) {
    static std::map<std::size_t, GeneratedData> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, dgp_generate(dgp_case(1), n, 11)).first;
    return it->second;
}

EifContext oracle_context(const StudyDataset& d, const NuisanceSurface& s) {
    return make_context(d, parse_setting("VI"), s);
}

void BM_Estimate_Parallel(benchmark::State& st) {
    const auto& g = dataset(static_cast<std::size_t>(st.range(0)));
    const auto surf = true_nuisance(dgp_case(1), g.data);
    const auto ctx = oracle_context(g.data, surf);
    for (auto _ : st) benchmark::DoNotOptimize(estimate(Estimand::Tau, g.data, ctx).point);
}

void BM_Estimate_Serial(benchmark::State& st) {
    const auto& g = dataset(static_cast<std::size_t>(st.range(0)));
    const auto surf = true_nuisance(dgp_case(1), g.data);
    const auto ctx = oracle_context(g.data, surf);
    for (auto _ : st) benchmark::DoNotOptimize(reference::estimate(Estimand::Tau, g.data, ctx).point);
}

template <bool Parallel>
void forest_bench(benchmark::State& st) {
    const auto& g = dataset(2000);
    std::vector<std::size_t> rows(g.data.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const Matrix X = covariate_matrix(g.data, rows);
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = g.y0[i];
    ForestParams hp;
    hp.n_trees = static_cast<int>(st.range(0));
    for (auto _ : st) {
        auto f = Parallel ? fit_forest(X, y, ForestTask::Regression, hp, 5)
                          : reference::fit_forest(X, y, ForestTask::Regression, hp, 5);
        benchmark::DoNotOptimize(f.trees.size());
    }
}

void BM_Forest_Parallel(benchmark::State& st) { forest_bench<true>(st); }
void BM_Forest_Serial(benchmark::State& st) { forest_bench<false>(st); }

template <bool Parallel>
void bound_bench(benchmark::State& st) {
    const auto spec = dgp_case(1);
    const auto truths = true_values(spec);
    const std::vector<DrawFunction> fs{eif_square(spec, truths, BoundRequest{parse_setting("I")}),
                                       eif_square(spec, truths, BoundRequest{parse_setting("VI")})};
    const auto n = static_cast<std::size_t>(st.range(0));
    for (auto _ : st) {
        auto m = Parallel ? mc_integrate(spec, fs, n, 3) : reference::mc_integrate(spec, fs, n, 3);
        benchmark::DoNotOptimize(m.mean[0]);
    }
}

void BM_McBound_Parallel(benchmark::State& st) { bound_bench<true>(st); }
void BM_McBound_Serial(benchmark::State& st) { bound_bench<false>(st); }

void BM_Generate_Parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(dgp_generate(dgp_case(1), static_cast<std::size_t>(st.range(0)), 2).y0[0]);
}
void BM_Generate_Serial(benchmark::State& st) {
    for (auto _ : st)
        benchmark::DoNotOptimize(reference::dgp_generate(dgp_case(1), static_cast<std::size_t>(st.range(0)), 2).y0[0]);
}

}  // namespace

BENCHMARK(BM_Estimate_Parallel)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Estimate_Serial)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forest_Parallel)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forest_Serial)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McBound_Parallel)->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McBound_Serial)->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Generate_Parallel)->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Generate_Serial)->Arg(200000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
