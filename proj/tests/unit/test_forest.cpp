#include <doctest.h>

#include <cmath>
#include <random>

#include "fate/error.hpp"
#include "fate/forest.hpp"
#include "fate/parallel.hpp"
#include "fate/reference.hpp"

using namespace fate;

namespace {

void step_data(std::size_t n, Matrix& X, Vector& y, Vector& labels) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    X.resize(static_cast<Eigen::Index>(n), 3);
    y.resize(static_cast<Eigen::Index>(n));
    labels.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (int j = 0; j < 3; ++j) X(i, j) = u(rng);
        y(i) = X(i, 0) > 0.2 ? 3.0 : -1.0;
        labels(i) = X(i, 1) > 0 ? 1.0 : 0.0;
    }
}

}  // namespace

TEST_SUITE("forest") {
    TEST_CASE("mtry defaults") {
        ForestParams hp;
        CHECK(hp.resolved_mtry(2, ForestTask::Regression) == 1);
        CHECK(hp.resolved_mtry(7, ForestTask::Regression) == 3);
        CHECK(hp.resolved_mtry(2, ForestTask::Classification) == 2);
        CHECK(hp.resolved_mtry(10, ForestTask::Classification) == 4);
        hp.mtry = 5;
        CHECK(hp.resolved_mtry(3, ForestTask::Regression) == 3);
    }

    TEST_CASE("a regression forest learns a step") {
        Matrix X;
        Vector y, labels;
        step_data(600, X, y, labels);
        ForestParams hp;
        hp.n_trees = 60;
        const auto f = fit_forest(X, y, ForestTask::Regression, hp, 1);
        const double lo[3] = {-0.5, 0, 0}, hi[3] = {0.7, 0, 0};
        CHECK(f.predict(std::span<const double>(lo, 3)) == doctest::Approx(-1).epsilon(0.15));
        CHECK(f.predict(std::span<const double>(hi, 3)) == doctest::Approx(3).epsilon(0.1));
    }

    TEST_CASE("classification forest returns probabilities") {
        Matrix X;
        Vector y, labels;
        step_data(600, X, y, labels);
        ForestParams hp;
        hp.n_trees = 60;
        const auto f = fit_forest(X, labels, ForestTask::Classification, hp, 2);
        const Vector p = f.predict(X);
        CHECK(p.minCoeff() >= 0.0);
        CHECK(p.maxCoeff() <= 1.0);
        const double pos[3] = {0, 0.6, 0}, neg[3] = {0, -0.6, 0};
        CHECK(f.predict(std::span<const double>(pos, 3)) > 0.8);
        CHECK(f.predict(std::span<const double>(neg, 3)) < 0.2);
    }

    TEST_CASE("leaves respect the minimum size") {
        Matrix X;
        Vector y, labels;
        step_data(400, X, y, labels);
        std::vector<double> rows(static_cast<std::size_t>(X.size()));
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            for (int j = 0; j < 3; ++j) rows[static_cast<std::size_t>(i * 3 + j)] = X(i, j);
        ForestParams hp;
        hp.min_leaf = 20;
        const auto t = fit_tree(rows, std::span<const double>(y.data(), 400), 3, ForestTask::Regression, hp, 5);
        CHECK(t.leaf_count() <= 400 / 20);
        CHECK(t.leaf_count() >= 2);
    }

    TEST_CASE("fits are reproducible and match the serial reference bitwise") {
        Matrix X;
        Vector y, labels;
        step_data(500, X, y, labels);
        ForestParams hp;
        hp.n_trees = 24;
        par::set_thread_count(3);
        const auto a = fit_forest(X, y, ForestTask::Regression, hp, 77);
        par::set_thread_count(0);
        const auto b = reference::fit_forest(X, y, ForestTask::Regression, hp, 77);
        const Vector pa = a.predict(X), pb = b.predict(X);
        CHECK((pa.array() == pb.array()).all());
        const auto c = fit_forest(X, y, ForestTask::Regression, hp, 78);
        CHECK_FALSE((c.predict(X).array() == pa.array()).all());
    }

    TEST_CASE("honest subsampled forests learn a step and match the reference") {
        Matrix X;
        Vector y, labels;
        step_data(800, X, y, labels);
        ForestParams hp;
        hp.n_trees = 40;
        hp.sample_fraction = 0.5;
        hp.honest = true;
        hp.mtry = 3;
        const auto f = fit_forest(X, y, ForestTask::Regression, hp, 9);
        const double lo[3] = {-0.5, 0, 0}, hi[3] = {0.7, 0, 0};
        CHECK(f.predict(std::span<const double>(lo, 3)) == doctest::Approx(-1).epsilon(0.2));
        CHECK(f.predict(std::span<const double>(hi, 3)) == doctest::Approx(3).epsilon(0.1));
        const Vector pf = f.predict(X);
        CHECK(pf.minCoeff() >= y.minCoeff());
        CHECK(pf.maxCoeff() <= y.maxCoeff());
        const auto r = reference::fit_forest(X, y, ForestTask::Regression, hp, 9);
        CHECK((r.predict(X).array() == pf.array()).all());
    }

    TEST_CASE("honest leaves are filled from rows the splits never saw") {
        // With noisy labels and single-row leaves, only a tree that sets its
        // leaf values from its own growing rows reproduces them exactly.
        Matrix X;
        Vector y, labels;
        step_data(300, X, y, labels);
        std::mt19937_64 rng(3);
        std::normal_distribution<double> noise(0, 1);
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise(rng);
        std::vector<double> rows(static_cast<std::size_t>(X.size()));
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            for (int j = 0; j < 3; ++j) rows[static_cast<std::size_t>(i * 3 + j)] = X(i, j);
        ForestParams hp;
        hp.min_leaf = 1;
        hp.sample_fraction = 1.0;
        const auto plain = fit_tree(rows, std::span<const double>(y.data(), 300), 3, ForestTask::Regression, hp, 4);
        hp.honest = true;
        const auto honest = fit_tree(rows, std::span<const double>(y.data(), 300), 3, ForestTask::Regression, hp, 4);
        double plain_err = 0, honest_err = 0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            plain_err += std::abs(plain.predict(&rows[static_cast<std::size_t>(i * 3)]) - y[i]);
            honest_err += std::abs(honest.predict(&rows[static_cast<std::size_t>(i * 3)]) - y[i]);
        }
        CHECK(plain_err < 1e-9);
        CHECK(honest_err > 1.0);
        CHECK(honest.leaf_count() < plain.leaf_count());
    }

    TEST_CASE("tiny inputs are rejected") {
        CHECK_THROWS_AS(fit_forest(Matrix::Zero(6, 2), Vector::Zero(6), ForestTask::Regression, {}, 1),
                        InsufficientDataError);
    }
}
