#include "fate/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "fate/error.hpp"
#include "fate/parallel.hpp"
#include "fate/random.hpp"

namespace fate {

namespace {

/// Linear interpolation between order statistics (the usual "type 7" rule).
double quantile(const std::vector<double>& sorted, double prob) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BootstrapInterval bootstrap_ci(const StudyDataset& d, const EstimationRecipe& recipe, int B, std::uint64_t seed,
                               double level) {
    if (B < 100) throw ConfigError("bootstrap needs B >= 100");
    const std::size_t n = d.size();
    std::vector<std::optional<double>> points(static_cast<std::size_t>(B));
    par::for_each_index(points.size(), [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = pick(rng);
        try {
            EstimationRecipe rec = recipe;
            rec.nuisance.seed = derive_seed(recipe.nuisance.seed, b, 1);
            points[b] = run_recipe(d.subset(rows), rec).point;
        } catch (const DataError&) {
        } catch (const NumericalError&) {
        }
    });
    std::vector<double> ok;
    for (const auto& p : points)
        if (p) ok.push_back(*p);
    BootstrapInterval out;
    out.replicates = static_cast<std::size_t>(B);
    out.dropped = out.replicates - ok.size();
    if (static_cast<double>(out.dropped) > 0.1 * B)
        throw BootstrapUnstableError(std::to_string(out.dropped) + " of " + std::to_string(B) +
                                     " bootstrap replicates failed");
    std::sort(ok.begin(), ok.end());
    const double alpha = 1.0 - level;
    out.low = quantile(ok, alpha / 2);
    out.high = quantile(ok, 1 - alpha / 2);
    return out;
}

}  // namespace fate
