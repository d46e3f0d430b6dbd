#include "fate/dgp.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "fate/error.hpp"
#include "fate/models.hpp"
#include "fate/parallel.hpp"

namespace fate {

namespace {

double linear_pi(double x1, double x2) { return expit((x1 + x2) / 2); }
double linear_e(double x1, double x2, int g) { return expit((x1 - x2) / 2 + g); }
double quad_pi(double x1, double x2) { return expit((2 * x1 + 2 * x2 + 2 * x1 * x2 - x1 * x1) / 4); }
double quad_e(double x1, double x2, int g) { return expit((2 * x1 - 2 * x2 + 2 * x1 * x2 - x1 * x1) / 4 + g); }

double linear_mu(double x1, double x2, int a, int) { return a == 1 ? 3 + 2 * x1 + x2 : 1 - 2 * x1 + 3 * x2; }
double c3_mu(double x1, double x2, int a, int) {
    return a == 1 ? 3 + 2 * x1 + x2 + x1 * x1 : 1 - 2 * x1 + 3 * x2 + x1 * x2;
}
double c15_mu(double x1, double x2, int a, int g) {
    return a == 1 ? 3 + 2 * x1 + std::exp(x2) + (1 - g) * x1 / 2 : 1 - 2 * x1 + 3 * x2 + std::log(std::abs(x1));
}
double c16_mu(double x1, double x2, int a, int) {
    return a == 1 ? 3 + 2 * x1 + std::sin(x2) + x1 * x1 : 1 - 2 * x1 + 3 * x2 + x1 * x2;
}

/// Controls-only companions: C4-C6, C9-C10, C13-C14, C18-C20.
int base_case(int id) {
    if (id >= 4 && id <= 6) return id - 3;
    if (id == 9 || id == 10 || id == 13 || id == 14) return id - 2;
    if (id >= 18) return id - 3;
    return id;
}

}  // namespace

DgpSpec dgp_case(int id) {
    if (id < 1 || id > 20) throw ConfigError("unknown case C" + std::to_string(id) + " (expected C1..C20)");
    DgpSpec s;
    s.name = "C" + std::to_string(id);
    s.pi = linear_pi;
    s.e = linear_e;
    s.mu = linear_mu;
    const int base = base_case(id);
    switch (base) {
        case 1: break;
        case 2:
            s.pi = quad_pi;
            s.e = quad_e;
            break;
        case 3: s.mu = c3_mu; break;
        case 7: s.pi = [](double x1, double x2) { return expit((x1 + x2 + 3) / 2); }; break;
        case 8: s.pi = [](double x1, double x2) { return expit((x1 + x2 - 3) / 2); }; break;
        case 11:
            s.sd1_source = s.sd1_target = 1;
            s.sd0_source = s.sd0_target = 3;
            break;
        case 12:
            s.sd1_source = s.sd1_target = 3;
            s.sd0_source = s.sd0_target = 1;
            break;
        case 15:
            s.pi = quad_pi;
            s.e = quad_e;
            s.mu = c15_mu;
            break;
        case 16:
            s.pi = quad_pi;
            s.e = quad_e;
            s.mu = c16_mu;
            break;
        case 17:
            s.pi = quad_pi;
            s.e = quad_e;
            s.mu = c3_mu;
            break;
        default: break;
    }
    if (base != id) {
        s = controls_only(std::move(s));
        s.name = "C" + std::to_string(id);
    }
    return s;
}

DgpSpec dgp_case(const std::string& name) {
    if (name.size() < 2 || (name[0] != 'C' && name[0] != 'c'))
        throw ConfigError("unknown case '" + name + "' (expected C1..C20)");
    int id = 0;
    try {
        std::size_t pos = 0;
        id = std::stoi(name.substr(1), &pos);
        if (pos != name.size() - 1) id = 0;
    } catch (const std::exception&) {
        id = 0;
    }
    return dgp_case(id);
}

DgpSpec with_drift(DgpSpec spec, double eps0, double eps1) {
    auto base = spec.mu;
    spec.mu = [base, eps0, eps1](double x1, double x2, int a, int g) {
        const double m = base(x1, x2, a, 1);
        return g == 1 ? m : (a == 1 ? eps1 : eps0) * m;
    };
    spec.drift_eps0 = eps0;
    spec.drift_eps1 = eps1;
    spec.name += "-drift(" + format_double(eps0) + "," + format_double(eps1) + ")";
    return spec;
}

DgpSpec with_noise(DgpSpec spec, double sd1_source, double sd0_source, double sd1_target, double sd0_target) {
    spec.sd1_source = sd1_source;
    spec.sd0_source = sd0_source;
    spec.sd1_target = sd1_target;
    spec.sd0_target = sd0_target;
    return spec;
}

DgpSpec controls_only(DgpSpec spec) {
    auto base = spec.e;
    spec.e = [base](double x1, double x2, int g) { return g == 0 ? 0.0 : base(x1, x2, g); };
    spec.name += "-controls";
    return spec;
}

DgpSpec zero_noise_constant_cate() {
    DgpSpec s;
    s.name = "zero-noise";
    s.pi = linear_pi;
    s.e = linear_e;
    s.mu = [](double x1, double, int a, int) { return a == 1 ? 3 + x1 : 1 + x1; };
    s.sd1_source = s.sd0_source = s.sd1_target = s.sd0_target = 0;
    return s;
}

namespace {

Draw draw_one(const DgpSpec& spec, Rng& rng, std::normal_distribution<double>& normal,
              std::uniform_real_distribution<double>& unif) {
    Draw d;
    d.x[0] = normal(rng);
    d.x[1] = normal(rng);
    d.g = unif(rng) < spec.pi(d.x[0], d.x[1]) ? 1 : 0;
    d.a = unif(rng) < spec.e(d.x[0], d.x[1], d.g) ? 1 : 0;
    const double z1 = normal(rng), z0 = normal(rng);
    d.y1 = spec.mu(d.x[0], d.x[1], 1, d.g) + spec.sd(1, d.g) * z1;
    d.y0 = spec.mu(d.x[0], d.x[1], 0, d.g) + spec.sd(0, d.g) * z0;
    d.y = d.a == 1 ? d.y1 : d.y0;
    return d;
}

}  // namespace

void draw_chunk(const DgpSpec& spec, std::uint64_t seed, std::size_t c, std::size_t count, std::vector<Draw>& out) {
    Rng rng(derive_seed(seed, c));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    out.resize(count);
    for (auto& d : out) d = draw_one(spec, rng, normal, unif);
}

void for_each_draw(const DgpSpec& spec, std::size_t n, std::uint64_t seed,
                   const std::function<void(std::size_t, const Draw&)>& f) {
    const std::size_t chunks = (n + par::kChunk - 1) / par::kChunk;
    par::for_each_index(chunks, [&](std::size_t c) {
        std::vector<Draw> draws;
        const std::size_t begin = c * par::kChunk, end = std::min(n, begin + par::kChunk);
        draw_chunk(spec, seed, c, end - begin, draws);
        for (std::size_t i = begin; i < end; ++i) f(i, draws[i - begin]);
    });
}

GeneratedData dgp_generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("dgp_generate needs n >= 1");
    std::vector<SampleRecord> recs(n);
    GeneratedData out;
    out.y0.resize(n);
    out.y1.resize(n);
    out.pi.resize(n);
    out.e.resize(n);
    for_each_draw(spec, n, seed, [&](std::size_t i, const Draw& d) {
        recs[i] = {{d.x[0], d.x[1]}, d.a, d.y, d.g};
        out.y0[i] = d.y0;
        out.y1[i] = d.y1;
        out.pi[i] = spec.pi(d.x[0], d.x[1]);
        out.e[i] = spec.e(d.x[0], d.x[1], d.g);
    });
    out.data = StudyDataset(recs);
    return out;
}

NuisancePoint true_point(const DgpSpec& spec, double x1, double x2) {
    NuisancePoint p;
    p.pi = spec.pi(x1, x2);
    p.e0 = spec.e(x1, x2, 0);
    p.e1 = spec.e(x1, x2, 1);
    p.mu0 = spec.mu(x1, x2, 0, 1);
    p.mu1 = spec.mu(x1, x2, 1, 1);
    auto ratio = [&](int a) {
        const double s = spec.sd(a, 1), t = spec.sd(a, 0);
        return t > 0 ? (s * s) / (t * t) : 1.0;
    };
    p.r0 = ratio(0);
    p.r1 = ratio(1);
    return p;
}

NuisanceSurface true_nuisance(const DgpSpec& spec, const StudyDataset& d) {
    NuisanceSurface s;
    s.method = "oracle";
    const std::size_t n = d.size();
    s.fold_id.assign(n, 0);
    for (auto* v : {&s.pi, &s.e0, &s.e1, &s.mu0, &s.mu1, &s.r0, &s.r1}) v->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = true_point(spec, d.x(i, 0), d.x(i, 1));
        s.pi[i] = p.pi;
        s.e0[i] = p.e0;
        s.e1[i] = p.e1;
        s.mu0[i] = p.mu0;
        s.mu1[i] = p.mu1;
        s.r0[i] = p.r0;
        s.r1[i] = p.r1;
    }
    return s;
}

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    // Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes.resize(static_cast<std::size_t>(n));
    weights.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        nodes[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
        const double v = es.eigenvectors()(0, k);
        weights[static_cast<std::size_t>(k)] = v * v;
    }
}

double Truths::value(Estimand e) const {
    switch (e) {
        case Estimand::Tau: return tau;
        case Estimand::Beta: return beta;
        case Estimand::TauAtt: return tau_att;
        case Estimand::BetaAtt: return beta_att;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

Truths true_values(const DgpSpec& spec, int nodes) {
    std::vector<double> z, w;
    gauss_hermite(nodes, z, w);
    // Accumulates E[1], E[pi], E[(1-pi) cate0], E[pi cate1], E[(1-pi) e0],
    // E[(1-pi) e0 cate0], E[pi e1], E[pi e1 cate1].
    double m[8] = {};
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = 0; j < z.size(); ++j) {
            const double x1 = z[i], x2 = z[j], wt = w[i] * w[j];
            if (wt == 0.0) continue;
            const double p = spec.pi(x1, x2), e0 = spec.e(x1, x2, 0), e1 = spec.e(x1, x2, 1);
            const double c0 = spec.mu(x1, x2, 1, 0) - spec.mu(x1, x2, 0, 0);
            const double c1 = spec.mu(x1, x2, 1, 1) - spec.mu(x1, x2, 0, 1);
            m[0] += wt;
            m[1] += wt * p;
            m[2] += wt * (1 - p) * c0;
            m[3] += wt * p * c1;
            m[4] += wt * (1 - p) * e0;
            m[5] += wt * (1 - p) * e0 * c0;
            m[6] += wt * p * e1;
            m[7] += wt * p * e1 * c1;
        }
    }
    Truths t;
    t.q = m[1] / m[0];
    t.tau = m[2] / (m[0] - m[1]);
    t.beta = m[3] / m[1];
    t.tau_att = m[4] > 0 ? m[5] / m[4] : std::numeric_limits<double>::quiet_NaN();
    t.beta_att = m[7] / m[6];
    t.e0_bar = m[4] / (m[0] - m[1]);
    t.e1_bar = m[6] / m[1];
    return t;
}

}  // namespace fate
