#pragma once

// Bagged CART ensembles for regression and binary classification.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fate/models.hpp"

namespace fate {

enum class ForestTask { Regression, Classification };

struct ForestParams {
    int n_trees = 200;
    int min_leaf = 5;
    int mtry = 0;       // 0: ceil(p/3) for regression, ceil(sqrt(p)) for classification
    int max_depth = 0;  // 0: unlimited
    /// 0 draws a bootstrap sample of n rows; otherwise each tree sees
    /// floor(sample_fraction * n) rows drawn without replacement.
    double sample_fraction = 0;
    /// Grow on one half of the tree's sample and fill the leaves with the
    /// other half. Leaves left empty take the value of their nearest
    /// populated ancestor.
    bool honest = false;

    int resolved_mtry(std::size_t p, ForestTask task) const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(const double* x) const;
    std::size_t leaf_count() const;
};

struct ForestModelFit {
    std::vector<Tree> trees;
    ForestTask task = ForestTask::Regression;
    ForestParams params;
    std::uint64_t seed = 0;
    std::size_t p = 0;

    double predict(std::span<const double> x) const;
    /// Predictions for every row of a covariate matrix.
    Vector predict(const Matrix& X) const;
};

/// Single tree on a bootstrap draw or subsample of the rows; X is row-major n x p.
/// Splits minimise within-child squared error, which for 0/1 labels is the
/// Gini criterion; leaves hold the in-bag mean.
Tree fit_tree(std::span<const double> X, std::span<const double> y, std::size_t p, ForestTask task,
              const ForestParams& hp, std::uint64_t seed);

/// Trees are grown in parallel; tree t uses derive_seed(seed, t).
ForestModelFit fit_forest(const Matrix& X, const Vector& y, ForestTask task, const ForestParams& hp,
                          std::uint64_t seed);

}  // namespace fate
