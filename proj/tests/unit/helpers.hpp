#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "fate/data_model.hpp"
#include "fate/nuisance.hpp"

namespace fate::testing {

inline std::filesystem::path temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "fate_unit_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

/// Nuisance values drawn away from the boundaries.
inline NuisancePoint random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> prob(0.05, 0.95), mean(-3, 3), ratio(0.3, 3);
    NuisancePoint n;
    n.pi = prob(rng);
    n.e0 = prob(rng);
    n.e1 = prob(rng);
    n.mu0 = mean(rng);
    n.mu1 = mean(rng);
    n.r0 = ratio(rng);
    n.r1 = ratio(rng);
    return n;
}

}  // namespace fate::testing
