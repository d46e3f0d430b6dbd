#include "fate/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fate/error.hpp"
#include "fate/parallel.hpp"
#include "fate/random.hpp"

namespace fate {

int ForestParams::resolved_mtry(std::size_t p, ForestTask task) const {
    if (mtry > 0) return std::min<int>(mtry, static_cast<int>(p));
    const double pd = static_cast<double>(p);
    const double m = task == ForestTask::Regression ? std::ceil(pd / 3.0) : std::ceil(std::sqrt(pd));
    return std::max(1, static_cast<int>(m));
}

double Tree::predict(const double* x) const {
    int k = 0;
    while (nodes[k].feature >= 0) k = x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
    return nodes[k].value;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

double ForestModelFit::predict(std::span<const double> x) const {
    double s = 0;
    for (const auto& t : trees) s += t.predict(x.data());
    return s / static_cast<double>(trees.size());
}

Vector ForestModelFit::predict(const Matrix& X) const {
    Vector out(X.rows());
    std::vector<double> row(p);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) row[j] = X(i, static_cast<Eigen::Index>(j));
        out[i] = predict(row);
    }
    return out;
}

namespace {

struct Frame {
    int node;
    std::size_t lo, hi;
    int depth;
};

}  // namespace

Tree fit_tree(std::span<const double> X, std::span<const double> y, std::size_t p, ForestTask task,
              const ForestParams& hp, std::uint64_t seed) {
    Rng rng(seed);

    // Sample s refers to original row boot[s]. Honest trees grow on the first
    // half of the draw and estimate leaves on the rest.
    std::vector<std::size_t> boot, held_out;
    if (hp.sample_fraction > 0) {
        std::vector<std::size_t> rows(y.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        std::shuffle(rows.begin(), rows.end(), rng);
        const auto m = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(hp.sample_fraction * static_cast<double>(y.size()))));
        boot.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(std::min(m, rows.size())));
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, y.size() - 1);
        boot.resize(y.size());
        for (auto& b : boot) b = pick(rng);
    }
    if (hp.honest && boot.size() >= 2) {
        const std::size_t half = boot.size() / 2;
        held_out.assign(boot.begin() + static_cast<std::ptrdiff_t>(half), boot.end());
        boot.resize(half);
    }
    const std::size_t n = boot.size();
    std::vector<double> ys(n);
    for (std::size_t s = 0; s < n; ++s) ys[s] = y[boot[s]];

    // order[f] lists samples sorted by feature f; every node owns the same
    // [lo, hi) segment in all p lists.
    std::vector<std::vector<std::uint32_t>> order(p, std::vector<std::uint32_t>(n));
    for (std::size_t f = 0; f < p; ++f) {
        auto& o = order[f];
        std::iota(o.begin(), o.end(), 0u);
        std::stable_sort(o.begin(), o.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return X[boot[a] * p + f] < X[boot[b] * p + f]; });
    }

    const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, hp.min_leaf));
    const int mtry = hp.resolved_mtry(p, task);
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::vector<char> goes_left(n);
    std::vector<std::uint32_t> buffer(n);

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<int> parent{-1};
    std::vector<Frame> stack{{0, 0, n, 0}};
    while (!stack.empty()) {
        const Frame fr = stack.back();
        stack.pop_back();
        const std::size_t count = fr.hi - fr.lo;
        double sum = 0, sumsq = 0;
        for (std::size_t k = fr.lo; k < fr.hi; ++k) {
            const double v = ys[order[0][k]];
            sum += v;
            sumsq += v * v;
        }
        tree.nodes[fr.node].value = sum / static_cast<double>(count);
        const double parent_score = sum * sum / static_cast<double>(count);
        const bool pure = sumsq - parent_score <= 1e-12 * std::max(1.0, sumsq);
        if (count < 2 * min_leaf || pure || (hp.max_depth > 0 && fr.depth >= hp.max_depth)) continue;

        // Partial Fisher-Yates for the candidate features.
        for (int m = 0; m < mtry; ++m) {
            std::uniform_int_distribution<std::size_t> u(static_cast<std::size_t>(m), p - 1);
            std::swap(features[static_cast<std::size_t>(m)], features[u(rng)]);
        }

        double best_score = parent_score + 1e-12 * std::abs(parent_score);
        int best_feature = -1;
        std::size_t best_left = 0;
        double best_threshold = 0;
        for (int m = 0; m < mtry; ++m) {
            const std::size_t f = features[static_cast<std::size_t>(m)];
            const auto& o = order[f];
            double left_sum = 0;
            for (std::size_t k = fr.lo; k + 1 < fr.hi; ++k) {
                left_sum += ys[o[k]];
                const std::size_t nl = k + 1 - fr.lo, nr = count - nl;
                if (nl < min_leaf) continue;
                if (nr < min_leaf) break;
                const double xk = X[boot[o[k]] * p + f], xn = X[boot[o[k + 1]] * p + f];
                if (!(xk < xn)) continue;
                const double right_sum = sum - left_sum;
                const double score = left_sum * left_sum / static_cast<double>(nl) +
                                     right_sum * right_sum / static_cast<double>(nr);
                if (score > best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_left = nl;
                    double thr = xk + (xn - xk) / 2.0;
                    if (!(thr < xn)) thr = xk;
                    best_threshold = thr;
                }
            }
        }
        if (best_feature < 0) continue;

        const auto& bo = order[static_cast<std::size_t>(best_feature)];
        for (std::size_t k = fr.lo; k < fr.hi; ++k) goes_left[bo[k]] = k < fr.lo + best_left;
        for (std::size_t f = 0; f < p; ++f) {
            if (static_cast<int>(f) == best_feature) continue;
            auto& o = order[f];
            std::size_t l = fr.lo, r = 0;
            for (std::size_t k = fr.lo; k < fr.hi; ++k) {
                if (goes_left[o[k]])
                    o[l++] = o[k];
                else
                    buffer[r++] = o[k];
            }
            std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(r), o.begin() + static_cast<std::ptrdiff_t>(l));
        }

        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        parent.push_back(fr.node);
        parent.push_back(fr.node);
        auto& node = tree.nodes[fr.node];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = left + 1;
        stack.push_back({left + 1, fr.lo + best_left, fr.hi, fr.depth + 1});
        stack.push_back({left, fr.lo, fr.lo + best_left, fr.depth + 1});
    }
    if (!held_out.empty()) {
        std::vector<double> sum(tree.nodes.size(), 0.0);
        std::vector<std::size_t> count(tree.nodes.size(), 0);
        for (const std::size_t r : held_out) {
            int k = 0;
            for (;;) {
                sum[static_cast<std::size_t>(k)] += y[r];
                ++count[static_cast<std::size_t>(k)];
                const auto& nd = tree.nodes[static_cast<std::size_t>(k)];
                if (nd.feature < 0) break;
                k = X[r * p + static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
            }
        }
        for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
            if (tree.nodes[k].feature >= 0) continue;
            int a = static_cast<int>(k);
            while (a >= 0 && count[static_cast<std::size_t>(a)] == 0) a = parent[static_cast<std::size_t>(a)];
            if (a >= 0) tree.nodes[k].value = sum[static_cast<std::size_t>(a)] / static_cast<double>(count[static_cast<std::size_t>(a)]);
        }
    }
    return tree;
}

ForestModelFit fit_forest(const Matrix& X, const Vector& y, ForestTask task, const ForestParams& hp,
                          std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto p = static_cast<std::size_t>(X.cols());
    if (n < 2 * static_cast<std::size_t>(std::max(1, hp.min_leaf)))
        throw InsufficientDataError("forest fit needs at least " + std::to_string(2 * hp.min_leaf) + " rows, got " +
                                    std::to_string(n));
    if (hp.n_trees < 1) throw ConfigError("forest needs at least one tree");
    std::vector<double> rows(n * p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) rows[i * p + j] = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    std::vector<double> targets(y.data(), y.data() + n);

    ForestModelFit fit;
    fit.task = task;
    fit.params = hp;
    fit.seed = seed;
    fit.p = p;
    fit.trees.resize(static_cast<std::size_t>(hp.n_trees));
    par::for_each_index(fit.trees.size(), [&](std::size_t t) {
        fit.trees[t] = fit_tree(rows, targets, p, task, hp, derive_seed(seed, t));
    });
    return fit;
}

}  // namespace fate
