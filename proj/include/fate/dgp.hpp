#pragma once

// Simulation designs with X ~ N(0, I_2): sampling score, group-specific
// propensity, group-specific outcome means and Gaussian noise levels.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fate/data_model.hpp"
#include "fate/nuisance.hpp"
#include "fate/random.hpp"
#include "fate/report.hpp"

namespace fate {

struct DgpSpec {
    std::string name;
    std::function<double(double x1, double x2)> pi;              // P(G=1 | x)
    std::function<double(double x1, double x2, int g)> e;        // P(A=1 | x, g)
    std::function<double(double x1, double x2, int a, int g)> mu; // E[Y(a) | x, g]
    double sd1_source = 2, sd0_source = 2;
    double sd1_target = 2, sd0_target = 2;
    /// Linear drift imposed on target means (1 = none); used to pick matching DriftSpecs.
    double drift_eps0 = 1, drift_eps1 = 1;

    double sd(int a, int g) const { return a == 1 ? (g == 1 ? sd1_source : sd1_target) : (g == 1 ? sd0_source : sd0_target); }
    DriftSpec drift() const { return DriftSpec::linear(drift_eps0, drift_eps1); }
};

/// Cases 1..20 ("C1".."C20").
DgpSpec dgp_case(int id);
DgpSpec dgp_case(const std::string& name);

/// Target means become eps_a times the source means.
DgpSpec with_drift(DgpSpec spec, double eps0, double eps1);
DgpSpec with_noise(DgpSpec spec, double sd1_source, double sd0_source, double sd1_target, double sd0_target);
/// Propensity in the target forced to zero (the controls-only companion).
DgpSpec controls_only(DgpSpec spec);
/// C1 scores, zero noise, Y(1) = 3 + x1, Y(0) = 1 + x1 (CATE = 2 everywhere).
DgpSpec zero_noise_constant_cate();

/// One draw with its latent potential outcomes.
struct Draw {
    double x[2];
    int g, a;
    double y0, y1, y;
};

struct GeneratedData {
    StudyDataset data;
    /// Latent table, for oracle checks only.
    std::vector<double> y0, y1, pi, e;
};

/// Rows are drawn in fixed-size chunks, each from its own derived stream,
/// so the result does not depend on the worker count.
GeneratedData dgp_generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

/// Draws of chunk c (rows c*kChunk ..) from the stream derive_seed(seed, c).
void draw_chunk(const DgpSpec& spec, std::uint64_t seed, std::size_t c, std::size_t count, std::vector<Draw>& out);

/// Calls f(i, draw) for n draws using the same chunked streams as dgp_generate.
void for_each_draw(const DgpSpec& spec, std::size_t n, std::uint64_t seed,
                   const std::function<void(std::size_t, const Draw&)>& f);

/// Closed-form nuisances at every record (r_a° from the noise levels).
NuisanceSurface true_nuisance(const DgpSpec& spec, const StudyDataset& d);
NuisancePoint true_point(const DgpSpec& spec, double x1, double x2);

struct Truths {
    double q = 0;
    double tau = 0, beta = 0, tau_att = 0, beta_att = 0;
    double e0_bar = 0, e1_bar = 0;  // E[e0 | G=0], E[e1 | G=1]

    double value(Estimand e) const;
};

/// Population quantities by tensor-product Gauss-Hermite quadrature.
Truths true_values(const DgpSpec& spec, int nodes = 200);

/// Nodes and weights for E[f(Z)], Z ~ N(0,1) (Golub-Welsch).
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace fate
