#pragma once

// Serial reference implementations of the parallel kernels. They use plain
// left-to-right loops and exist to cross-check the OpenMP code in tests and
// benchmarks.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fate/dgp.hpp"
#include "fate/eif.hpp"
#include "fate/forest.hpp"
#include "fate/study.hpp"

namespace fate::reference {

EstimateReport estimate(Estimand e, const StudyDataset& d, const EifContext& ctx, double z = 1.96);

/// Trees fitted one after another; bitwise equal to fate::fit_forest.
ForestModelFit fit_forest(const Matrix& X, const Vector& y, ForestTask task, const ForestParams& hp,
                          std::uint64_t seed);

/// Same draws as fate::dgp_generate, generated chunk by chunk in order.
GeneratedData dgp_generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

/// Same draws as fate::mc_integrate, accumulated in one running sum.
McIntegral mc_integrate(const DgpSpec& spec, const std::vector<DrawFunction>& fs, std::size_t n_mc,
                        std::uint64_t seed);

}  // namespace fate::reference
