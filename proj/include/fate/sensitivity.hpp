#pragma once

// Sensitivity analysis over linear posterior drift psi_a(u) = eps_a * u.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fate/data_model.hpp"
#include "fate/nuisance.hpp"
#include "fate/report.hpp"

namespace fate {

struct EpsilonRange {
    double lo = 0, hi = 0;
    double slope = 0, se = 0;  // origin regression slope and its HC0 standard error
    std::size_t n_controls = 0;
};

/// Regresses the target-control outcome fit on the source-control outcome fit
/// (through the origin) at the target controls and returns
/// slope -/+ spread * se, rounded outward to multiples of `step`.
EpsilonRange epsilon_range(const StudyDataset& d, const NuisanceOptions& opts, double spread = 2.0,
                           double step = 0.05);

struct GridPoint {
    double eps0 = 1, eps1 = 1;
    auto operator<=>(const GridPoint&) const = default;
};

/// eps0 = eps1 = lo, lo + step, ..., hi.
std::vector<GridPoint> tied_grid(double lo, double hi, double step);
/// Cartesian product of the two axes.
std::vector<GridPoint> untied_grid(double lo, double hi, double step);

struct SweepResult {
    std::vector<GridPoint> grid;  // sorted lexicographically
    std::vector<Structure> structures;
    Estimand estimand = Estimand::Tau;
    /// reports[g][s]: grid point g, structure s.
    std::vector<std::vector<EstimateReport>> reports;
    std::optional<EpsilonRange> eps_range;
    std::uint64_t nuisance_checksum = 0;
};

/// Fits the nuisances once and estimates every structure at every grid point;
/// only the drift changes between grid points.
SweepResult sensitivity_sweep(const StudyDataset& d, const std::vector<Structure>& structures,
                              std::vector<GridPoint> grid, const NuisanceOptions& opts,
                              Estimand estimand = Estimand::Tau);
/// Same, on a surface fitted by the caller (must carry ratios when any
/// structure is controls-only or unconfounded).
SweepResult sensitivity_sweep(const StudyDataset& d, const std::vector<Structure>& structures,
                              std::vector<GridPoint> grid, const NuisanceSurface& surface,
                              Estimand estimand = Estimand::Tau);

/// Tidy table: eps0, eps1, setting, point, ci_low, ci_high.
std::string sweep_csv(const SweepResult& r);
nlohmann::ordered_json to_json(const SweepResult& r);

}  // namespace fate
