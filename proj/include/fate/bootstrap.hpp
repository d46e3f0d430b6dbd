#pragma once

#include <cstdint>

#include "fate/estimands.hpp"

namespace fate {

/// Percentile interval from B record resamples, each refitting nuisances per
/// the recipe. Replicates that fail (fold starvation, one-group draws) are
/// dropped and counted; more than 10% dropped raises BootstrapUnstableError.
BootstrapInterval bootstrap_ci(const StudyDataset& d, const EstimationRecipe& recipe, int B, std::uint64_t seed,
                               double level = 0.95);

}  // namespace fate
